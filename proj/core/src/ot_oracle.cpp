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

#include <cmath>
#include <string>
#include <vector>

#include "reot/errors.hpp"
#include "reot/ot_solver.hpp"

// Reference minimizer for tiny instances. Works on the primal problem with a
// feasible-start equality-constrained Newton method, so it shares nothing
// with the scaling iterations beyond the problem definition.

namespace reot {
namespace {

struct Entry {
  Eigen::Index row;
  Eigen::Index col;
  double cost;
};

struct Problem {
  std::vector<Entry> entries;
  Eigen::MatrixXd constraints;  // A
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  double lambda = 0.0;
  double beta2 = 0.0;  // infinity: hard column marginal
  Eigen::VectorXd q;
};

double Objective(const Problem& pb, const Eigen::VectorXd& x) {
  double value = 0.0;
  Eigen::VectorXd col_mass = Eigen::VectorXd::Zero(pb.cols);
  for (std::size_t k = 0; k < pb.entries.size(); ++k) {
    const double v = x(static_cast<Eigen::Index>(k));
    if (v < 0.0) return kInfinite;
    if (v > 0.0) value += pb.entries[k].cost * v + pb.lambda * v * std::log(v);
    col_mass(pb.entries[k].col) += v;
  }
  if (pb.beta2 != kInfinite) {
    for (Eigen::Index j = 0; j < pb.cols; ++j) {
      if (col_mass(j) > 0.0) {
        value += pb.beta2 * col_mass(j) * std::log(col_mass(j) / pb.q(j));
      }
    }
  }
  return value;
}

void GradientAndHessian(const Problem& pb, const Eigen::VectorXd& x,
                        Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
  const auto k = static_cast<Eigen::Index>(pb.entries.size());
  Eigen::VectorXd col_mass = Eigen::VectorXd::Zero(pb.cols);
  for (Eigen::Index a = 0; a < k; ++a) col_mass(pb.entries[a].col) += x(a);
  grad->resize(k);
  hess->setZero(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    (*grad)(a) = pb.entries[a].cost + pb.lambda * (std::log(x(a)) + 1.0);
    (*hess)(a, a) = pb.lambda / x(a);
    if (pb.beta2 != kInfinite) {
      const Eigen::Index j = pb.entries[a].col;
      (*grad)(a) += pb.beta2 * (std::log(col_mass(j) / pb.q(j)) + 1.0);
      for (Eigen::Index b = 0; b < k; ++b) {
        if (pb.entries[b].col == j) (*hess)(a, b) += pb.beta2 / col_mass(j);
      }
    }
  }
}

}  // namespace

TransportPlan BruteForceMot(const Histogram& p, const Histogram& q,
                            const CostSpec& spec,
                            const BruteForceParams& params) {
  const Eigen::Index n = spec.cost.rows();
  const Eigen::Index m = spec.cost.cols();
  if (static_cast<std::size_t>(n * m) > kBruteForceMaxEntries) {
    throw Refused("brute-force oracle accepts at most " +
                  std::to_string(kBruteForceMaxEntries) + " entries, got " +
                  std::to_string(n * m));
  }
  if (p.size() != static_cast<std::size_t>(n) ||
      q.size() != static_cast<std::size_t>(m)) {
    throw InvalidArgument("marginal sizes do not match the cost matrix");
  }
  if (spec.beta1 != kInfinite) {
    throw Refused("brute-force oracle supports only a hard row marginal");
  }
  double scale = 1.0;
  const Eigen::MatrixXd cost = EffectiveCost(spec, &scale);
  const bool hard_cols = spec.beta2 == kInfinite;
  if (hard_cols && !spec.mask.all()) {
    throw Refused("brute-force oracle needs an all-pass mask for hard columns");
  }

  Problem pb;
  pb.rows = n;
  pb.cols = m;
  pb.lambda = spec.lambda;
  pb.beta2 = spec.beta2;
  pb.q = q.weights();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p[static_cast<std::size_t>(i)] == 0.0) continue;
    bool any = false;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!spec.mask(i, j)) continue;
      if (hard_cols && q[static_cast<std::size_t>(j)] == 0.0) continue;
      pb.entries.push_back({i, j, cost(i, j)});
      any = true;
    }
    if (!any) throw InfeasibleRow(static_cast<std::size_t>(i));
  }
  const auto k = static_cast<Eigen::Index>(pb.entries.size());

  // Constraint rows: one per positive-mass row, plus all but the last
  // positive-mass column when both marginals are hard (that one is implied).
  std::vector<std::pair<bool, Eigen::Index>> cons;  // (is_row, index)
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p[static_cast<std::size_t>(i)] > 0.0) cons.push_back({true, i});
  }
  if (hard_cols) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (q[static_cast<std::size_t>(j)] > 0.0) cols.push_back(j);
    }
    for (std::size_t c = 0; c + 1 < cols.size(); ++c) cons.push_back({false, cols[c]});
  }
  const auto num_cons = static_cast<Eigen::Index>(cons.size());
  pb.constraints.setZero(num_cons, k);
  for (Eigen::Index c = 0; c < num_cons; ++c) {
    for (Eigen::Index a = 0; a < k; ++a) {
      const Entry& e = pb.entries[static_cast<std::size_t>(a)];
      if (cons[c].first ? e.row == cons[c].second : e.col == cons[c].second) {
        pb.constraints(c, a) = 1.0;
      }
    }
  }

  // Strictly positive feasible start.
  Eigen::VectorXd x(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const Entry& e = pb.entries[static_cast<std::size_t>(a)];
    const double pi = p[static_cast<std::size_t>(e.row)];
    if (hard_cols) {
      x(a) = pi * q[static_cast<std::size_t>(e.col)];
    } else {
      x(a) = pi / static_cast<double>(spec.mask.row(e.row).count());
    }
  }

  bool converged = false;
  int iter = 0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  Eigen::MatrixXd kkt(k + num_cons, k + num_cons);
  Eigen::VectorXd rhs(k + num_cons);
  for (; iter < params.max_newton_iterations; ++iter) {
    GradientAndHessian(pb, x, &grad, &hess);
    kkt.setZero();
    kkt.topLeftCorner(k, k) = hess;
    kkt.topRightCorner(k, num_cons) = pb.constraints.transpose();
    kkt.bottomLeftCorner(num_cons, k) = pb.constraints;
    rhs.setZero();
    rhs.head(k) = -grad;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    const Eigen::VectorXd dx = sol.head(k);
    const double decrement = dx.dot(hess * dx);
    if (decrement / 2.0 <= params.tolerance) {
      converged = true;
      break;
    }
    double t = 1.0;
    while ((x + t * dx).minCoeff() <= 0.0) t *= 0.5;
    const double f0 = Objective(pb, x);
    const double slope = grad.dot(dx);
    int backtracks = 0;
    while (Objective(pb, x + t * dx) > f0 + 0.25 * t * slope && backtracks < 60) {
      t *= 0.5;
      ++backtracks;
    }
    if (backtracks == 60) {
      // Objective is flat to rounding: take the last step and stop.
      converged = true;
      break;
    }
    x += t * dx;
  }

  TransportPlan plan;
  plan.gamma = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index a = 0; a < k; ++a) {
    const Entry& e = pb.entries[static_cast<std::size_t>(a)];
    plan.gamma(e.row, e.col) = x(a);
  }
  plan.row_marginal = p;
  plan.col_marginal_target = q;
  plan.converged = converged;
  plan.iterations = iter;
  plan.lambda = spec.lambda;
  plan.beta2 = spec.beta2;
  plan.cost_scale = scale;
  return plan;
}

bool IsLocallyOptimal(const Eigen::MatrixXd& gamma, const Histogram& q,
                      const CostSpec& spec, double step, double slack) {
  const double base = MotObjective(gamma, q, spec);
  const Eigen::Index n = gamma.rows();
  const Eigen::Index m = gamma.cols();
  Eigen::MatrixXd trial = gamma;
  auto worse = [&](const Eigen::MatrixXd& g) {
    return MotObjective(g, q, spec) < base - slack;
  };
  if (spec.beta2 != kInfinite) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        if (!spec.mask(i, j) || gamma(i, j) <= 0.0) continue;
        const double delta = std::min(step, gamma(i, j));
        for (Eigen::Index l = 0; l < m; ++l) {
          if (l == j || !spec.mask(i, l)) continue;
          trial(i, j) -= delta;
          trial(i, l) += delta;
          const bool bad = worse(trial);
          trial(i, j) = gamma(i, j);
          trial(i, l) = gamma(i, l);
          if (bad) return false;
        }
      }
    }
    return true;
  }
  // Both marginals hard: move mass around 2x2 cycles.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == i) continue;
      for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index l = 0; l < m; ++l) {
          if (l == j) continue;
          if (!spec.mask(i, j) || !spec.mask(i, l) || !spec.mask(r, j) ||
              !spec.mask(r, l)) {
            continue;
          }
          const double delta = std::min({step, gamma(i, j), gamma(r, l)});
          if (delta <= 0.0) continue;
          trial(i, j) -= delta;
          trial(r, l) -= delta;
          trial(i, l) += delta;
          trial(r, j) += delta;
          const bool bad = worse(trial);
          trial(i, j) = gamma(i, j);
          trial(r, l) = gamma(r, l);
          trial(i, l) = gamma(i, l);
          trial(r, j) = gamma(r, j);
          if (bad) return false;
        }
      }
    }
  }
  return true;
}

}  // namespace reot
