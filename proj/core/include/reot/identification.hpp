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

#ifndef REOT_IDENTIFICATION_HPP_
#define REOT_IDENTIFICATION_HPP_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "reot/ot_solver.hpp"

namespace reot {

// Per-candidate private-class likelihood: 1/m minus the mass a candidate
// column receives. Positive means under-served, i.e. likely private.
struct ScoreVector {
  Eigen::VectorXd scores;
  std::size_t size() const { return static_cast<std::size_t>(scores.size()); }
};

struct IdentificationResult {
  std::vector<std::size_t> shared_idx;     // s < 0
  std::vector<std::size_t> private_idx;    // s > 1/(2m)
  std::vector<std::size_t> undecided_idx;  // 0 <= s <= 1/(2m)
  ScoreVector scores;

  double shared_threshold() const { return 0.0; }
  double private_threshold() const {
    return scores.size() == 0 ? 0.0
                              : 0.5 / static_cast<double>(scores.size());
  }
};

struct ClassMassMatrix {
  Eigen::MatrixXd gamma_prime;  // K x m
  Histogram class_freq;         // over the K classes
};

enum class CandidateSide { kRows, kCols };

// Throws CalibrationError when the plan's total mass is off by more than
// 1e-6.
ScoreVector ComputeScores(const TransportPlan& plan);

// Strict thresholds at 0 and 1/(2m); exact boundary values stay undecided.
IdentificationResult Identify(const ScoreVector& scores);

// Aggregates plan rows by label (labels in [1, num_classes]).
ClassMassMatrix ComputeClassMassMatrix(const TransportPlan& plan,
                                       std::span<const int> row_labels,
                                       int num_classes);

// Splits a plan into the shared-candidate and private-candidate parts.
// `side` names the plan axis indexing the identification candidates.
std::pair<TransportPlan, TransportPlan> SplitPlan(
    const TransportPlan& plan, const IdentificationResult& result,
    CandidateSide side);

}  // namespace reot

#endif  // REOT_IDENTIFICATION_HPP_
