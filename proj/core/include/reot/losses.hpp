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

#ifndef REOT_LOSSES_HPP_
#define REOT_LOSSES_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "reot/adapt_model.hpp"

namespace reot {

// Mean cross-entropy of h(z) against 1-based labels, with the classifier
// gradients accumulated and d(loss)/dz returned.
struct HeadLoss {
  double value = 0.0;
  GradientBuffer grads;
  Batch grad_features;
};
HeadLoss CrossEntropyHead(const AdaptModel& model, const Batch& z,
                          std::span<const int> labels);

struct LossValue {
  double value = 0.0;
  GradientBuffer grads;
};

// Classification risk over D_s ∪ D^prv: source samples with their labels
// plus identified private targets with `pseudo_label` (= K+1).
LossValue LossCls(const AdaptModel& model, const Batch& source_x,
                  std::span<const int> source_y, const Batch& private_x,
                  int pseudo_label);

// <G_shr, C^Z> - <G_prv, C^Z> with C^Z the squared Euclidean distance;
// plans are constants.
struct TransferLoss {
  double value = 0.0;
  double align = 0.0;       // <G_shr, C^Z>
  double separation = 0.0;  // <G_prv, C^Z>
  Batch grad_source;
  Batch grad_target;
};
TransferLoss LossRt(const Batch& source_z, const Batch& target_z,
                    const Eigen::MatrixXd& gamma_shr,
                    const Eigen::MatrixXd& gamma_prv);

// Mass-normalized weighted mean of target features per source row.
// Zero-mass rows map to the zero vector and are flagged excluded.
struct BarycenterMap {
  Batch mapped;
  Eigen::VectorXd row_mass;
  std::vector<bool> excluded;
};
BarycenterMap ComputeBarycenterMap(const Eigen::MatrixXd& gamma,
                                   const Batch& target_z);

// Mean cross-entropy of h(barycenter_i) against the source labels over the
// non-excluded rows. Gradients flow into h and into the target features.
struct BarycenterLoss {
  double value = 0.0;
  GradientBuffer grads;
  Batch grad_target;
  std::size_t used_rows = 0;
};
BarycenterLoss LossBr(const AdaptModel& model, const Eigen::MatrixXd& gamma,
                      const Batch& target_z, std::span<const int> source_y);

struct LossReport {
  double l_cls = 0.0;
  double l_rt = 0.0;
  double l_rt_align = 0.0;
  double l_rt_sep = 0.0;
  double l_br = 0.0;
  double total = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
};

// total = l_cls + eta1 * l_rt + eta2 * l_br. Throws on negative weights.
LossReport Combine(double l_cls, const TransferLoss& rt, double l_br,
                   double eta1, double eta2);
GradientBuffer CombineGradients(const GradientBuffer& cls,
                                const GradientBuffer& rt,
                                const GradientBuffer& br, double eta1,
                                double eta2);

// Everything one training step needs. Plans are source x target.
struct ObjectiveInputs {
  const Batch& source_x;
  std::span<const int> source_y;
  const Batch& target_x;
  // Target rows that join the classification risk with `pseudo_label`.
  std::span<const std::size_t> pseudo_private_target;
  int pseudo_label = 0;
  const Eigen::MatrixXd& gamma;
  const Eigen::MatrixXd& gamma_shr;
  const Eigen::MatrixXd& gamma_prv;
  double eta1 = 1.0;
  double eta2 = 1.0;
};

struct ObjectiveResult {
  LossReport report;
  GradientBuffer grads;
};

// Fused evaluation: upstream feature gradients of all three losses are
// accumulated first, then back-propagated once per domain.
ObjectiveResult EvaluateObjective(const AdaptModel& model,
                                  const ObjectiveInputs& in);

// Per-loss full-model gradients (each unweighted), for auditing the fused
// path.
struct SeparateGradients {
  LossReport report;
  GradientBuffer cls;
  GradientBuffer rt;
  GradientBuffer br;
};
SeparateGradients EvaluateLossesSeparately(const AdaptModel& model,
                                           const ObjectiveInputs& in);

}  // namespace reot

#endif  // REOT_LOSSES_HPP_
