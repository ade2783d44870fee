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

#include "support/fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <unistd.h>
#include <stdexcept>

namespace reot::testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("reot_" + tag + "_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string TempDir::File(const std::string& name) const {
  return (path_ / name).string();
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

SyntheticTask SmallTask(Scenario scenario, std::uint64_t seed,
                        int n_per_class) {
  SynthSpec spec;
  spec.seed = seed;
  spec.n_per_class = n_per_class;
  return Generate(spec, scenario);
}

TaskConfig ShortConfig(Scenario scenario, int epochs, int pretrain_epochs) {
  TaskConfig config = TaskConfig::Defaults(scenario);
  config.epochs = epochs;
  config.pretrain_epochs = pretrain_epochs;
  config.hidden = 16;
  config.feature = 8;
  return config;
}

}  // namespace reot::testing
