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

#include "reot/identification.hpp"

#include <cmath>
#include <string>

#include "reot/errors.hpp"

namespace reot {

ScoreVector ComputeScores(const TransportPlan& plan) {
  const double mass = plan.total_mass();
  if (!(std::abs(mass - 1.0) <= 1e-6)) {
    throw CalibrationError("plan total mass is " + std::to_string(mass) +
                           "; scores need a unit-mass plan");
  }
  const auto m = plan.gamma.cols();
  ScoreVector out;
  out.scores = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m)) -
               plan.gamma.colwise().sum().transpose();
  return out;
}

IdentificationResult Identify(const ScoreVector& scores) {
  IdentificationResult result;
  result.scores = scores;
  const double upper = result.private_threshold();
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double s = scores.scores(static_cast<Eigen::Index>(j));
    if (s < 0.0) {
      result.shared_idx.push_back(j);
    } else if (s > upper) {
      result.private_idx.push_back(j);
    } else {
      result.undecided_idx.push_back(j);
    }
  }
  return result;
}

ClassMassMatrix ComputeClassMassMatrix(const TransportPlan& plan,
                                       std::span<const int> row_labels,
                                       int num_classes) {
  if (row_labels.size() != plan.rows()) {
    throw InvalidArgument("one label per plan row is required");
  }
  if (num_classes <= 0) throw InvalidArgument("num_classes must be positive");
  Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(num_classes, plan.gamma.cols());
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(num_classes);
  for (std::size_t i = 0; i < row_labels.size(); ++i) {
    const int y = row_labels[i];
    if (y < 1 || y > num_classes) {
      throw InvalidArgument("row " + std::to_string(i) + " has label " +
                            std::to_string(y) + " outside [1, " +
                            std::to_string(num_classes) + "]");
    }
    const auto r = static_cast<Eigen::Index>(i);
    agg.row(y - 1) += plan.gamma.row(r);
    freq(y - 1) += plan.row_marginal[i];
  }
  return {std::move(agg), Histogram(std::move(freq))};
}

std::pair<TransportPlan, TransportPlan> SplitPlan(
    const TransportPlan& plan, const IdentificationResult& result,
    CandidateSide side) {
  TransportPlan shr = plan;
  TransportPlan prv = plan;
  shr.gamma.setZero();
  prv.gamma.setZero();
  const auto extent = side == CandidateSide::kCols ? plan.gamma.cols()
                                                   : plan.gamma.rows();
  auto copy_line = [&](Eigen::MatrixXd& dst, std::size_t idx) {
    const auto k = static_cast<Eigen::Index>(idx);
    if (k >= extent) throw InvalidArgument("candidate index out of range");
    if (side == CandidateSide::kCols) {
      dst.col(k) = plan.gamma.col(k);
    } else {
      dst.row(k) = plan.gamma.row(k);
    }
  };
  for (std::size_t j : result.shared_idx) copy_line(shr.gamma, j);
  for (std::size_t j : result.private_idx) copy_line(prv.gamma, j);
  return {std::move(shr), std::move(prv)};
}

}  // namespace reot
