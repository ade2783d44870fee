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

#ifndef REOT_OT_SOLVER_HPP_
#define REOT_OT_SOLVER_HPP_

#include <cstddef>
#include <limits>

#include <Eigen/Dense>

namespace reot {

inline constexpr double kInfinite = std::numeric_limits<double>::infinity();

// Probability vector: non-negative weights summing to one.
class Histogram {
 public:
  Histogram() = default;

  // Throws InvalidArgument unless all weights are >= 0 and sum to 1 within
  // 1e-12.
  explicit Histogram(Eigen::VectorXd weights);

  static Histogram Uniform(std::size_t n);

  const Eigen::VectorXd& weights() const { return weights_; }
  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
  double operator[](std::size_t i) const { return weights_(static_cast<Eigen::Index>(i)); }

 private:
  Eigen::VectorXd weights_;
};

// true = pass, false = blocked (infinite effective cost).
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct CostSpec {
  Eigen::MatrixXd cost;
  Mask mask;
  double lambda = 0.05;
  double beta1 = kInfinite;
  double beta2 = 0.05;
  // Divide finite (unblocked) costs by their maximum before solving so the
  // regularization weights are scale-free.
  bool normalize = true;

  // All-pass mask of the cost's shape.
  static CostSpec Unmasked(Eigen::MatrixXd cost, double lambda, double beta2);
};

struct SolverOptions {
  int max_iterations = 2000;
  // Sup-norm change of the log-scaling vectors.
  double tolerance = 1e-9;
};

struct TransportPlan {
  Eigen::MatrixXd gamma;
  Histogram row_marginal;
  Histogram col_marginal_target;
  bool converged = false;
  int iterations = 0;
  double lambda = 0.0;
  double beta2 = 0.0;
  // Factor the unblocked costs were divided by (1 when not normalized).
  double cost_scale = 1.0;

  std::size_t rows() const { return static_cast<std::size_t>(gamma.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(gamma.cols()); }
  double total_mass() const { return gamma.sum(); }
  TransportPlan transposed() const;
};

// Validates shapes/values and returns the cost the solver actually uses:
// normalized when spec.normalize, blocked entries left untouched (callers
// must consult the mask). The scale factor is written to *scale if given.
Eigen::MatrixXd EffectiveCost(const CostSpec& spec, double* scale = nullptr);

// Classical entropic OT: both marginals hard. The mask must be all-pass.
// Non-convergence is reported through TransportPlan::converged.
TransportPlan SolveEntropicOt(const Histogram& p, const Histogram& q,
                              const CostSpec& spec,
                              const SolverOptions& options = {});

// Masked OT with a hard row marginal (beta1 = infinity) and a KL-relaxed
// column marginal. Log-domain generalized Sinkhorn; blocked entries carry
// kernel value exactly 0. Throws InfeasibleRow when a row with positive mass
// has no unblocked entry.
TransportPlan SolveMaskedSemiRelaxed(const Histogram& p, const Histogram& q,
                                     const CostSpec& spec,
                                     const SolverOptions& options = {});

// Objective value of gamma under spec (effective cost): <G,C> + lambda *
// sum G log G, plus beta2 * KL(G^T 1 || q) when beta2 is finite. Blocked
// entries must be zero, otherwise +infinity is returned.
double MotObjective(const Eigen::MatrixXd& gamma, const Histogram& q,
                    const CostSpec& spec);

struct BruteForceParams {
  int max_newton_iterations = 200;
  double tolerance = 1e-15;
  // Perturbation size of the local-optimality certificate.
  double certificate_step = 1e-3;
};

inline constexpr std::size_t kBruteForceMaxEntries = 16;

// Independent reference minimizer for tiny instances (n*m <= 16). Solves the
// primal problem directly with a feasible-start Newton method on the
// unblocked entries. beta2 = infinity means both marginals hard. Throws
// Refused for larger instances.
TransportPlan BruteForceMot(const Histogram& p, const Histogram& q,
                            const CostSpec& spec,
                            const BruteForceParams& params = {});

// Checks that no feasible perturbation of size `step` (mass moved within a
// row, or around a 2x2 cycle when both marginals are hard) lowers the
// objective by more than `slack`.
bool IsLocallyOptimal(const Eigen::MatrixXd& gamma, const Histogram& q,
                      const CostSpec& spec, double step, double slack = 0.0);

}  // namespace reot

#endif  // REOT_OT_SOLVER_HPP_
