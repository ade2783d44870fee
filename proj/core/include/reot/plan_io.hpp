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

#ifndef REOT_PLAN_IO_HPP_
#define REOT_PLAN_IO_HPP_

#include <string>

#include <Eigen/Dense>

#include "reot/ot_solver.hpp"

namespace reot {

// Dense CSV, one matrix row per line, values printed round-trip exact.
std::string FormatMatrixCsv(const Eigen::MatrixXd& matrix);
Eigen::MatrixXd ParseMatrixCsv(const std::string& text,
                               const std::string& source);
Eigen::MatrixXd LoadMatrixCsv(const std::string& path);

// Metadata sidecar: lambda, beta2, iterations, converged, cost scale.
std::string PlanMetadataJson(const TransportPlan& plan);

// Writes `<stem>.csv` and `<stem>.json`.
void DumpPlan(const TransportPlan& plan, const std::string& stem);

}  // namespace reot

#endif  // REOT_PLAN_IO_HPP_
