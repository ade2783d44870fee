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

#include "support/oracles.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace reot::testing {

Eigen::MatrixXd NormalizeCost(const Eigen::MatrixXd& cost, const Mask& mask) {
  double top = 0.0;
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    for (Eigen::Index j = 0; j < cost.cols(); ++j) {
      if (mask(i, j)) top = std::max(top, cost(i, j));
    }
  }
  return top > 0.0 ? Eigen::MatrixXd(cost / top) : cost;
}

double ReferenceObjective(const Eigen::MatrixXd& gamma, const Eigen::VectorXd& q,
                          const Eigen::MatrixXd& cost, const Mask& mask,
                          double lambda, double beta2) {
  double value = 0.0;
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      const double g = gamma(i, j);
      if (!mask(i, j)) {
        if (g != 0.0) return std::numeric_limits<double>::infinity();
        continue;
      }
      if (g > 0.0) value += g * cost(i, j) + lambda * g * std::log(g);
    }
  }
  if (std::isfinite(beta2)) {
    const Eigen::VectorXd a = gamma.colwise().sum();
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      if (a(j) > 0.0) value += beta2 * a(j) * std::log(a(j) / q(j));
    }
  }
  return value;
}

Eigen::MatrixXd ProjectedGradientMot(const Eigen::VectorXd& p,
                                     const Eigen::VectorXd& q,
                                     const Eigen::MatrixXd& cost,
                                     const Mask& mask, double lambda,
                                     double beta2, int iterations) {
  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  std::vector<std::pair<Eigen::Index, Eigen::Index>> free;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (mask(i, j)) free.emplace_back(i, j);
    }
  }
  const auto k = static_cast<Eigen::Index>(free.size());
  const bool hard_cols = !std::isfinite(beta2);
  const Eigen::Index c = hard_cols ? n + m : n;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(c, k);
  for (Eigen::Index e = 0; e < k; ++e) {
    a(free[e].first, e) = 1.0;
    if (hard_cols) a(n + free[e].second, e) = 1.0;
  }
  // Orthogonal projector onto the null space of A (pseudo-inverse handles
  // the redundant row/column sum constraint).
  const Eigen::MatrixXd proj =
      Eigen::MatrixXd::Identity(k, k) -
      a.completeOrthogonalDecomposition().pseudoInverse() * a;

  // Interior start: proportional fill.
  Eigen::VectorXd x(k);
  if (hard_cols) {
    for (Eigen::Index e = 0; e < k; ++e) x(e) = p(free[e].first) * q(free[e].second);
  } else {
    Eigen::VectorXd count = Eigen::VectorXd::Zero(n);
    for (const auto& f : free) count(f.first) += 1.0;
    for (Eigen::Index e = 0; e < k; ++e) {
      x(e) = p(free[e].first) / count(free[e].first);
    }
  }
  auto to_matrix = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, m);
    for (Eigen::Index e = 0; e < k; ++e) g(free[e].first, free[e].second) = v(e);
    return g;
  };
  auto objective = [&](const Eigen::VectorXd& v) {
    for (Eigen::Index e = 0; e < k; ++e) {
      if (v(e) <= 0.0) return std::numeric_limits<double>::infinity();
    }
    return ReferenceObjective(to_matrix(v), q, cost, mask, lambda, beta2);
  };
  double f = objective(x);
  double step = 1e-2;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd grad(k);
    const Eigen::VectorXd col = to_matrix(x).colwise().sum();
    for (Eigen::Index e = 0; e < k; ++e) {
      const auto [i, j] = free[e];
      grad(e) = cost(i, j) + lambda * (std::log(x(e)) + 1.0);
      if (!hard_cols) grad(e) += beta2 * (std::log(col(j) / q(j)) + 1.0);
    }
    const Eigen::VectorXd dir = -(proj * grad);
    if (dir.norm() < 1e-14) break;
    step = std::min(step * 2.0, 1.0);
    bool moved = false;
    while (step > 1e-20) {
      const Eigen::VectorXd trial = x + step * dir;
      const double ft = objective(trial);
      if (ft <= f - 1e-4 * step * dir.squaredNorm()) {
        x = trial;
        f = ft;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  if (hard_cols) return to_matrix(x);

  // Euclidean steps stall next to tiny entries; finish with exponentiated
  // gradient steps, which keep each row on its scaled simplex.
  double eta = 1.0 / (lambda + beta2);
  for (int it = 0; it < iterations && eta > 1e-12; ++it) {
    const Eigen::VectorXd col = to_matrix(x).colwise().sum();
    Eigen::VectorXd trial(k);
    for (Eigen::Index e = 0; e < k; ++e) {
      const auto [i, j] = free[e];
      const double grad = cost(i, j) + lambda * (std::log(x(e)) + 1.0) +
                          beta2 * (std::log(col(j) / q(j)) + 1.0);
      trial(e) = std::log(x(e)) - eta * grad;
    }
    Eigen::VectorXd row_max = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    for (Eigen::Index e = 0; e < k; ++e) {
      row_max(free[e].first) = std::max(row_max(free[e].first), trial(e));
    }
    Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(n);
    for (Eigen::Index e = 0; e < k; ++e) {
      trial(e) = std::exp(trial(e) - row_max(free[e].first));
      row_sum(free[e].first) += trial(e);
    }
    for (Eigen::Index e = 0; e < k; ++e) {
      trial(e) *= p(free[e].first) / row_sum(free[e].first);
    }
    const double ft = objective(trial);
    if (ft < f) {
      const double gain = f - ft;
      x = trial;
      f = ft;
      if (gain < 1e-17) break;
    } else {
      eta *= 0.5;
    }
  }
  return to_matrix(x);
}

double CentralDifference(const std::function<double(double)>& f, double x,
                         double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double RelativeError(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

Eigen::VectorXd BarycenterByDescent(const Eigen::VectorXd& weights,
                                    const Eigen::MatrixXd& points,
                                    int iterations) {
  const Eigen::Index d = points.cols();
  auto f = [&](const Eigen::VectorXd& z) {
    double v = 0.0;
    for (Eigen::Index j = 0; j < points.rows(); ++j) {
      v += weights(j) * (z - points.row(j).transpose()).squaredNorm();
    }
    return v;
  };
  Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
  const double step = 0.1 / std::max(weights.sum(), 1e-300);
  const double h = 1e-5;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd g(d);
    for (Eigen::Index c = 0; c < d; ++c) {
      Eigen::VectorXd up = z, dn = z;
      up(c) += h;
      dn(c) -= h;
      g(c) = (f(up) - f(dn)) / (2.0 * h);
    }
    z -= step * g;
    if (g.norm() < 1e-13) break;
  }
  return z;
}

Eigen::VectorXd RandomSimplex(std::mt19937_64* rng, int n) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = u(*rng);
  v /= v.sum();
  return v;
}

RandomInstance MakeRandomInstance(std::uint64_t seed, int n, int m,
                                  double lambda, double beta2,
                                  double block_probability) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd cost(n, m);
  Mask mask(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      cost(i, j) = 0.1 + 2.0 * u(rng);
      mask(i, j) = u(rng) >= block_probability;
    }
    if (!mask.row(i).any()) {
      mask(i, std::uniform_int_distribution<int>(0, m - 1)(rng)) = true;
    }
  }
  const Eigen::VectorXd p = RandomSimplex(&rng, n);
  const Eigen::VectorXd q = RandomSimplex(&rng, m);
  RandomInstance out{Histogram(p), Histogram(q), CostSpec{}};
  out.spec.cost = cost;
  out.spec.mask = mask;
  out.spec.lambda = lambda;
  out.spec.beta1 = kInfinite;
  out.spec.beta2 = beta2;
  return out;
}

}  // namespace reot::testing
