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

#include "reot/ot_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "reot/errors.hpp"

namespace reot {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void CheckMarginals(const Histogram& p, const Histogram& q,
                    const CostSpec& spec) {
  if (p.size() != static_cast<std::size_t>(spec.cost.rows()) ||
      q.size() != static_cast<std::size_t>(spec.cost.cols())) {
    throw InvalidArgument("marginals are " + std::to_string(p.size()) + "x" +
                          std::to_string(q.size()) + " but cost is " +
                          std::to_string(spec.cost.rows()) + "x" +
                          std::to_string(spec.cost.cols()));
  }
}

double SafeLog(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

// Shared log-domain scaling loop. `exponent` is 1 for a hard column marginal
// and beta2 / (beta2 + lambda) for the KL-relaxed one.
TransportPlan RunScaling(const Histogram& p, const Histogram& q,
                         const CostSpec& spec, double exponent,
                         const SolverOptions& options) {
  double scale = 1.0;
  const Eigen::MatrixXd cost = EffectiveCost(spec, &scale);
  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  const double lambda = spec.lambda;

  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.weights()(i) > 0.0 && !spec.mask.row(i).any()) {
      throw InfeasibleRow(static_cast<std::size_t>(i));
    }
  }

  // Dual potentials in log-scaling units: u = exp(f), v = exp(g).
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd log_p(n), log_q(m);
  for (Eigen::Index i = 0; i < n; ++i) log_p(i) = SafeLog(p.weights()(i));
  for (Eigen::Index j = 0; j < m; ++j) log_q(j) = SafeLog(q.weights()(j));

  // Row-major copy of cost / lambda for cache-friendly row sweeps.
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor scaled_cost = cost / lambda;
  const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      pass = spec.mask;

  std::vector<double> col_max(static_cast<std::size_t>(m));
  std::vector<double> col_acc(static_cast<std::size_t>(m));

  auto update_rows = [&]() {
    double change = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double next = kNegInf;
      if (log_p(i) != kNegInf) {
        double mx = kNegInf;
        for (Eigen::Index j = 0; j < m; ++j) {
          if (pass(i, j)) mx = std::max(mx, g(j) - scaled_cost(i, j));
        }
        double acc = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
          if (pass(i, j)) acc += std::exp(g(j) - scaled_cost(i, j) - mx);
        }
        next = log_p(i) - (mx + std::log(acc));
      }
      if (std::isfinite(next) && std::isfinite(f(i))) {
        change = std::max(change, std::abs(next - f(i)));
      } else if (next != f(i)) {
        change = kInfinite;
      }
      f(i) = next;
    }
    return change;
  };

  auto update_cols = [&]() {
    std::fill(col_max.begin(), col_max.end(), kNegInf);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (f(i) == kNegInf) continue;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (pass(i, j)) {
          col_max[j] = std::max(col_max[j], f(i) - scaled_cost(i, j));
        }
      }
    }
    std::fill(col_acc.begin(), col_acc.end(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (f(i) == kNegInf) continue;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (pass(i, j)) {
          col_acc[j] += std::exp(f(i) - scaled_cost(i, j) - col_max[j]);
        }
      }
    }
    double change = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      double next = 0.0;
      // Empty effective column: scaling 1, the column receives zero mass.
      if (col_max[j] != kNegInf) {
        next = exponent * (log_q(j) - (col_max[j] + std::log(col_acc[j])));
      }
      if (std::isfinite(next) && std::isfinite(g(j))) {
        change = std::max(change, std::abs(next - g(j)));
      } else if (next != g(j)) {
        change = kInfinite;
      }
      g(j) = next;
    }
    return change;
  };

  TransportPlan plan;
  update_rows();
  int iter = 0;
  bool converged = false;
  while (iter < options.max_iterations) {
    ++iter;
    const double dg = update_cols();
    const double df = update_rows();
    if (std::max(dg, df) < options.tolerance) {
      converged = true;
      break;
    }
  }

  plan.gamma = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (f(i) == kNegInf) continue;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (pass(i, j)) plan.gamma(i, j) = std::exp(f(i) + g(j) - scaled_cost(i, j));
    }
    // Rescale so the hard row marginal holds to rounding; a single pass entry
    // then carries exactly p_i.
    const double sum = plan.gamma.row(i).sum();
    if (sum > 0.0) {
      for (Eigen::Index j = 0; j < m; ++j) {
        plan.gamma(i, j) = plan.gamma(i, j) / sum * p.weights()(i);
      }
    }
  }
  plan.row_marginal = p;
  plan.col_marginal_target = q;
  plan.converged = converged;
  plan.iterations = iter;
  plan.lambda = lambda;
  plan.beta2 = exponent == 1.0 ? kInfinite : spec.beta2;
  plan.cost_scale = scale;
  return plan;
}

}  // namespace

Histogram::Histogram(Eigen::VectorXd weights) : weights_(std::move(weights)) {
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!(weights_(i) >= 0.0) || !std::isfinite(weights_(i))) {
      throw InvalidArgument("histogram entry " + std::to_string(i) +
                            " is negative or not finite");
    }
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-12) {
    throw InvalidArgument("histogram weights sum to " +
                          std::to_string(weights_.sum()) + ", expected 1");
  }
}

Histogram Histogram::Uniform(std::size_t n) {
  if (n == 0) throw InvalidArgument("uniform histogram needs n > 0");
  return Histogram(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n),
                                             1.0 / static_cast<double>(n)));
}

CostSpec CostSpec::Unmasked(Eigen::MatrixXd cost, double lambda, double beta2) {
  CostSpec spec;
  spec.mask = Mask::Constant(cost.rows(), cost.cols(), true);
  spec.cost = std::move(cost);
  spec.lambda = lambda;
  spec.beta2 = beta2;
  return spec;
}

TransportPlan TransportPlan::transposed() const {
  TransportPlan t = *this;
  t.gamma = gamma.transpose();
  t.row_marginal = col_marginal_target;
  t.col_marginal_target = row_marginal;
  return t;
}

Eigen::MatrixXd EffectiveCost(const CostSpec& spec, double* scale) {
  if (spec.mask.rows() != spec.cost.rows() ||
      spec.mask.cols() != spec.cost.cols()) {
    throw InvalidArgument("mask shape does not match cost shape");
  }
  if (!(spec.lambda > 0.0) || !std::isfinite(spec.lambda)) {
    throw InvalidArgument("lambda must be a positive finite number");
  }
  if (!(spec.beta2 >= 0.0)) {
    throw InvalidArgument("beta2 must be non-negative");
  }
  if (!(spec.beta1 >= 0.0)) {
    throw InvalidArgument("beta1 must be non-negative");
  }
  double max_cost = 0.0;
  for (Eigen::Index i = 0; i < spec.cost.rows(); ++i) {
    for (Eigen::Index j = 0; j < spec.cost.cols(); ++j) {
      const double c = spec.cost(i, j);
      if (!std::isfinite(c) || c < 0.0) {
        throw InvalidArgument("cost entry (" + std::to_string(i) + "," +
                              std::to_string(j) +
                              ") is negative or not finite");
      }
      if (spec.mask(i, j)) max_cost = std::max(max_cost, c);
    }
  }
  const double s = (spec.normalize && max_cost > 0.0) ? max_cost : 1.0;
  if (scale != nullptr) *scale = s;
  return spec.cost / s;
}

TransportPlan SolveEntropicOt(const Histogram& p, const Histogram& q,
                              const CostSpec& spec,
                              const SolverOptions& options) {
  CheckMarginals(p, q, spec);
  if (!spec.mask.all()) {
    throw InvalidArgument("entropic OT requires an all-pass mask");
  }
  return RunScaling(p, q, spec, 1.0, options);
}

TransportPlan SolveMaskedSemiRelaxed(const Histogram& p, const Histogram& q,
                                     const CostSpec& spec,
                                     const SolverOptions& options) {
  CheckMarginals(p, q, spec);
  if (spec.beta1 != kInfinite) {
    throw InvalidArgument("semi-relaxed solver requires beta1 = infinity");
  }
  const double exponent = spec.beta2 == kInfinite
                              ? 1.0
                              : spec.beta2 / (spec.beta2 + spec.lambda);
  return RunScaling(p, q, spec, exponent, options);
}

double MotObjective(const Eigen::MatrixXd& gamma, const Histogram& q,
                    const CostSpec& spec) {
  const Eigen::MatrixXd cost = EffectiveCost(spec, nullptr);
  double value = 0.0;
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      const double x = gamma(i, j);
      if (x == 0.0) continue;
      if (!spec.mask(i, j) || x < 0.0) return kInfinite;
      value += x * cost(i, j) + spec.lambda * x * std::log(x);
    }
  }
  if (spec.beta2 != kInfinite) {
    double kl = 0.0;
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      const double a = gamma.col(j).sum();
      if (a == 0.0) continue;
      const double qj = q.weights()(j);
      if (qj == 0.0) return kInfinite;
      kl += a * std::log(a / qj);
    }
    value += spec.beta2 * kl;
  }
  return value;
}

}  // namespace reot
