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

#include "reot/plan_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "reot/errors.hpp"

namespace reot {

std::string FormatMatrixCsv(const Eigen::MatrixXd& m) {
  std::string out;
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Eigen::MatrixXd ParseMatrixCsv(const std::string& text,
                               const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      std::size_t b = pos, e = comma;
      while (b < e && line[b] == ' ') ++b;
      while (e > b && line[e - 1] == ' ') --e;
      double v = 0.0;
      std::string_view field(line.data() + b, e - b);
      if (field == "inf") {
        v = kInfinite;
      } else {
        auto [ptr, ec] = std::from_chars(field.data(),
                                         field.data() + field.size(), v);
        if (field.empty() || ec != std::errc() ||
            ptr != field.data() + field.size()) {
          throw ParseError(source, number,
                           "bad number '" + std::string(field) + "'");
        }
      }
      row.push_back(v);
      if (comma == line.size()) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(source, number, "ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(source, number, "empty matrix");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

Eigen::MatrixXd LoadMatrixCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseMatrixCsv(buf.str(), path);
}

std::string PlanMetadataJson(const TransportPlan& plan) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["rows"] = plan.rows();
  j["cols"] = plan.cols();
  j["lambda"] = plan.lambda;
  j["beta2"] = plan.beta2;
  j["iterations"] = plan.iterations;
  j["converged"] = plan.converged;
  j["normalization_factor"] = plan.cost_scale;
  j["total_mass"] = plan.total_mass();
  return j.dump(2);
}

void DumpPlan(const TransportPlan& plan, const std::string& stem) {
  std::ofstream csv(stem + ".csv");
  std::ofstream meta(stem + ".json");
  if (!csv || !meta) throw InvalidArgument("cannot write plan to " + stem);
  csv << FormatMatrixCsv(plan.gamma);
  meta << PlanMetadataJson(plan) << '\n';
}

}  // namespace reot
