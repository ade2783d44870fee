// Copyright 2026 The ReOT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "reot/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "reot/errors.hpp"

namespace reot {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string Unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') &&
      s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgument("bad value '" + text + "' for " + key);
  }
  return value;
}

// Shortest text that reads back to the same double.
std::string Format(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

const std::vector<std::string>& ConfigKeys() {
  static const std::vector<std::string> keys = {
      "scenario",         "seed",          "ot.lambda",
      "ot.beta2",         "ot.max_iterations", "ot.tolerance",
      "loss.eta1",        "loss.eta2",     "train.epochs",
      "train.pretrain_epochs", "train.lr", "train.momentum",
      "train.grad_clip",  "model.hidden",  "model.feature",
      "task.k_shared"};
  return keys;
}

void ApplyConfigValue(TaskConfig* c, const std::string& key,
                      const std::string& raw) {
  const std::string v = Unquote(Trim(raw));
  if (key == "scenario") {
    const Scenario s = ParseScenario(v);
    const TaskConfig d = TaskConfig::Defaults(s);
    c->scenario = s;
    c->eta1 = d.eta1;
    c->eta2 = d.eta2;
  } else if (key == "seed") {
    c->seed = ParseNumber<std::uint64_t>(key, v);
  } else if (key == "ot.lambda") {
    c->lambda = ParseNumber<double>(key, v);
  } else if (key == "ot.beta2") {
    c->beta2 = ParseNumber<double>(key, v);
  } else if (key == "ot.max_iterations") {
    c->ot_max_iterations = ParseNumber<int>(key, v);
  } else if (key == "ot.tolerance") {
    c->ot_tolerance = ParseNumber<double>(key, v);
  } else if (key == "loss.eta1") {
    c->eta1 = ParseNumber<double>(key, v);
  } else if (key == "loss.eta2") {
    c->eta2 = ParseNumber<double>(key, v);
  } else if (key == "train.epochs") {
    c->epochs = ParseNumber<int>(key, v);
  } else if (key == "train.pretrain_epochs") {
    c->pretrain_epochs = ParseNumber<int>(key, v);
  } else if (key == "train.lr") {
    c->lr = ParseNumber<double>(key, v);
  } else if (key == "train.momentum") {
    c->momentum = ParseNumber<double>(key, v);
  } else if (key == "train.grad_clip") {
    c->grad_clip = ParseNumber<double>(key, v);
  } else if (key == "model.hidden") {
    c->hidden = ParseNumber<int>(key, v);
  } else if (key == "model.feature") {
    c->feature = ParseNumber<int>(key, v);
  } else if (key == "task.k_shared") {
    c->k_shared = ParseNumber<int>(key, v);
  } else {
    throw InvalidArgument("unknown key '" + key + "'");
  }
}

TaskConfig ParseConfig(const std::string& text, const std::string& source,
                       TaskConfig base) {
  struct Entry {
    std::size_t line;
    std::string key, value;
  };
  std::vector<Entry> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source, number, "expected 'key = value'");
    }
    Entry e{number, Trim(line.substr(0, eq)), Trim(line.substr(eq + 1))};
    if (e.key.empty() || e.value.empty()) {
      throw ParseError(source, number, "expected 'key = value'");
    }
    for (const Entry& prior : entries) {
      if (prior.key == e.key) {
        throw ParseError(source, number, "duplicate key '" + e.key + "'");
      }
    }
    entries.push_back(std::move(e));
  }
  // Scenario first so explicit loss weights win over scenario defaults.
  auto apply = [&](const Entry& e) {
    try {
      ApplyConfigValue(&base, e.key, e.value);
    } catch (const std::invalid_argument& err) {
      throw ParseError(source, e.line, err.what());
    }
  };
  for (const Entry& e : entries) {
    if (e.key == "scenario") apply(e);
  }
  for (const Entry& e : entries) {
    if (e.key != "scenario") apply(e);
  }
  try {
    base.Validate();
  } catch (const std::invalid_argument& err) {
    throw ParseError(source, 0, err.what());
  }
  return base;
}

TaskConfig LoadConfig(const std::string& path, TaskConfig base) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfig(buf.str(), path, std::move(base));
}

std::string ConfigToText(const TaskConfig& c) {
  std::ostringstream out;
  out << "scenario = " << ToString(c.scenario) << '\n'
      << "seed = " << c.seed << '\n'
      << "ot.lambda = " << Format(c.lambda) << '\n'
      << "ot.beta2 = " << Format(c.beta2) << '\n'
      << "ot.max_iterations = " << c.ot_max_iterations << '\n'
      << "ot.tolerance = " << Format(c.ot_tolerance) << '\n'
      << "loss.eta1 = " << Format(c.eta1) << '\n'
      << "loss.eta2 = " << Format(c.eta2) << '\n'
      << "train.epochs = " << c.epochs << '\n'
      << "train.pretrain_epochs = " << c.pretrain_epochs << '\n'
      << "train.lr = " << Format(c.lr) << '\n'
      << "train.momentum = " << Format(c.momentum) << '\n'
      << "train.grad_clip = " << Format(c.grad_clip) << '\n'
      << "model.hidden = " << c.hidden << '\n'
      << "model.feature = " << c.feature << '\n'
      << "task.k_shared = " << c.k_shared << '\n';
  return out.str();
}

}  // namespace reot
