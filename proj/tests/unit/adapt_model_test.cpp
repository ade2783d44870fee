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

#include "reot/adapt_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "reot/errors.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace reot {
namespace {

const ModelDims kDims{5, 7, 4, 3};

Batch RandomBatch(std::uint64_t seed, int n, int d) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Batch x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g(rng);
  return x;
}

// Loop-based re-implementation of g and h.
Batch NaiveFeatures(const ModelParams& p, const Batch& x) {
  Batch z(x.rows(), p.w2.rows());
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    std::vector<double> h(static_cast<std::size_t>(p.w1.rows()));
    for (Eigen::Index a = 0; a < p.w1.rows(); ++a) {
      double v = p.b1(a);
      for (Eigen::Index b = 0; b < p.w1.cols(); ++b) v += p.w1(a, b) * x(s, b);
      h[static_cast<std::size_t>(a)] = v > 0.0 ? v : 0.0;
    }
    for (Eigen::Index a = 0; a < p.w2.rows(); ++a) {
      double v = p.b2(a);
      for (Eigen::Index b = 0; b < p.w2.cols(); ++b) {
        v += p.w2(a, b) * h[static_cast<std::size_t>(b)];
      }
      z(s, a) = v;
    }
  }
  return z;
}

Batch NaiveProbabilities(const ModelParams& p, const Batch& z) {
  Batch out(z.rows(), p.w3.rows());
  for (Eigen::Index s = 0; s < z.rows(); ++s) {
    std::vector<double> logit(static_cast<std::size_t>(p.w3.rows()));
    double top = -1e300;
    for (Eigen::Index a = 0; a < p.w3.rows(); ++a) {
      double v = p.b3(a);
      for (Eigen::Index b = 0; b < p.w3.cols(); ++b) v += p.w3(a, b) * z(s, b);
      logit[static_cast<std::size_t>(a)] = v;
      top = std::max(top, v);
    }
    double total = 0.0;
    for (double& v : logit) total += (v = std::exp(v - top));
    for (Eigen::Index a = 0; a < p.w3.rows(); ++a) {
      out(s, a) = logit[static_cast<std::size_t>(a)] / total;
    }
  }
  return out;
}

TEST(AdaptModelTest, ParameterCountMatchesDims) {
  const AdaptModel m = AdaptModel::Initialize(kDims, 1);
  EXPECT_EQ(m.ParameterCount(), 7u * 5 + 7 + 4u * 7 + 4 + 3u * 4 + 3);
  const AdaptModel big = AdaptModel::Initialize({2048, 1024, 256, 11}, 1);
  EXPECT_EQ(big.ParameterCount(),
            1024u * 2048 + 1024 + 256u * 1024 + 256 + 11u * 256 + 11);
}

TEST(AdaptModelTest, InitializationIsSeededAndBounded) {
  const AdaptModel a = AdaptModel::Initialize(kDims, 42);
  const AdaptModel b = AdaptModel::Initialize(kDims, 42);
  const AdaptModel c = AdaptModel::Initialize(kDims, 43);
  EXPECT_EQ(a.params.Flatten(), b.params.Flatten());
  EXPECT_NE(a.params.Flatten(), c.params.Flatten());
  EXPECT_LE(a.params.w1.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(5.0));
  EXPECT_LE(a.params.w2.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(7.0));
}

TEST(AdaptModelTest, RejectsInvalidDims) {
  EXPECT_THROW(AdaptModel::Initialize({0, 4, 4, 2}, 1), InvalidArgument);
  EXPECT_THROW(AdaptModel::Initialize({3, 4, 4, 1}, 1), InvalidArgument);
}

TEST(ForwardTest, ZeroModelGivesZeroFeatures) {
  AdaptModel m;
  m.dims = kDims;
  m.params = ModelParams::Zeros(kDims);
  const Batch z = ForwardFeatures(m, RandomBatch(1, 4, 5));
  EXPECT_EQ(z.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ForwardTest, IdentityToyAppliesRectifier) {
  AdaptModel m;
  m.dims = {1, 1, 1, 2};
  m.params = ModelParams::Zeros(m.dims);
  m.params.w1(0, 0) = 1.0;
  m.params.w2(0, 0) = 1.0;
  Batch x(3, 1);
  x << -2.0, 0.0, 3.5;
  const Batch z = ForwardFeatures(m, x);
  EXPECT_EQ(z(0), 0.0);
  EXPECT_EQ(z(1), 0.0);
  EXPECT_EQ(z(2), 3.5);
}

TEST(ForwardTest, MatchesNaiveImplementation) {
  const AdaptModel m = AdaptModel::Initialize(kDims, 9);
  const Batch x = RandomBatch(2, 6, 5);
  const Batch z = ForwardFeatures(m, x);
  EXPECT_LT((z - NaiveFeatures(m.params, x)).cwiseAbs().maxCoeff(), 1e-12);
  const Batch p = ForwardClassify(m, z);
  EXPECT_LT((p - NaiveProbabilities(m.params, z)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ForwardTest, RejectsDimensionMismatch) {
  const AdaptModel m = AdaptModel::Initialize(kDims, 9);
  EXPECT_THROW(ForwardFeatures(m, RandomBatch(1, 2, 4)), InvalidArgument);
  EXPECT_THROW(ForwardClassify(m, RandomBatch(1, 2, 5)), InvalidArgument);
}

TEST(ClassifyTest, ZeroLogitsAreUniform) {
  const Batch p = Softmax(Batch::Zero(2, 4));
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(p(i), 0.25);
}

TEST(ClassifyTest, SaturatedLogit) {
  Batch logits = Batch::Zero(1, 3);
  logits(0, 1) = 50.0;
  const Batch p = Softmax(logits);
  EXPECT_GT(p(0, 1), 1.0 - 1e-9);
}

TEST(ClassifyTest, RowsSumToOneEvenForExtremeLogits) {
  Batch logits = RandomBatch(5, 20, 6) * 400.0;
  const Batch p = Softmax(logits);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-9);
    EXPECT_GE(p.row(i).minCoeff(), 0.0);
  }
  EXPECT_TRUE(LogSoftmax(logits).allFinite());
}

TEST(ClassifyTest, PredictLabelsBreaksTiesLow) {
  Batch p(2, 3);
  p << 0.4, 0.4, 0.2, 0.1, 0.2, 0.7;
  EXPECT_EQ(PredictLabels(p), (std::vector<int>{1, 3}));
}

TEST(BackwardTest, ZeroUpstreamGivesZeroBuffer) {
  const AdaptModel m = AdaptModel::Initialize(kDims, 3);
  FeatureCache cache;
  const Batch x = RandomBatch(3, 4, 5);
  const Batch z = ForwardFeatures(m, x, &cache);
  const GradientBuffer g = Backward(m, cache, z, Batch::Zero(4, 4), Batch::Zero(4, 3));
  EXPECT_EQ(g.Norm(), 0.0);
}

TEST(BackwardTest, SingleParameterQuadratic) {
  AdaptModel m;
  m.dims = {1, 1, 1, 2};
  m.params = ModelParams::Zeros(m.dims);
  m.params.b2(0) = 0.7;
  const double target = -0.4;
  FeatureCache cache;
  const Batch z = ForwardFeatures(m, Batch::Ones(1, 1), &cache);
  Batch upstream(1, 1);
  upstream(0, 0) = 2.0 * (z(0, 0) - target);
  GradientBuffer g = GradientBuffer::ZerosLike(m);
  BackwardFeatures(m, cache, upstream, &g);
  EXPECT_DOUBLE_EQ(g.grads.b2(0), 2.0 * (0.7 - target));
}

TEST(BackwardTest, MissingCacheIsRejected) {
  const AdaptModel m = AdaptModel::Initialize(kDims, 3);
  GradientBuffer g = GradientBuffer::ZerosLike(m);
  EXPECT_THROW(BackwardFeatures(m, FeatureCache{}, Batch::Zero(2, 4), &g),
               InvalidArgument);
}

// Scalar loss depending on both features and logits: sum(A .* z) +
// sum(B .* logits(z)).
TEST(BackwardTest, MatchesFiniteDifferences) {
  AdaptModel m = AdaptModel::Initialize(kDims, 17);
  const Batch x = RandomBatch(4, 12, 5);
  const Batch a = RandomBatch(5, 12, 4);
  const Batch b = RandomBatch(6, 12, 3);
  auto loss = [&](const AdaptModel& model) {
    const Batch z = ForwardFeatures(model, x);
    return (a.array() * z.array()).sum() +
           (b.array() * ForwardLogits(model, z).array()).sum();
  };
  FeatureCache cache;
  const Batch z = ForwardFeatures(m, x, &cache);
  const GradientBuffer g = Backward(m, cache, z, a, b);
  const Eigen::VectorXd analytic = g.grads.Flatten();
  Eigen::VectorXd theta = m.params.Flatten();
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<Eigen::Index> pick(0, theta.size() - 1);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index k = pick(rng);
    const double numeric = testing::CentralDifference(
        [&](double v) {
          Eigen::VectorXd th = theta;
          th(k) = v;
          AdaptModel probe = m;
          probe.params.Unflatten(th);
          return loss(probe);
        },
        theta(k), 1e-5);
    EXPECT_LT(testing::RelativeError(analytic(k), numeric), 1e-4) << "param " << k;
  }
}

TEST(SgdTest, ZeroGradientLeavesModelUnchanged) {
  AdaptModel m = AdaptModel::Initialize(kDims, 2);
  const Eigen::VectorXd before = m.params.Flatten();
  SgdState s = SgdState::ZerosLike(m);
  SgdStep(&m, GradientBuffer::ZerosLike(m), {}, &s);
  EXPECT_EQ(m.params.Flatten(), before);
}

TEST(SgdTest, PlainStepSubtractsGradient) {
  AdaptModel m = AdaptModel::Initialize(kDims, 2);
  const Eigen::VectorXd before = m.params.Flatten();
  GradientBuffer g = GradientBuffer::ZerosLike(m);
  Eigen::VectorXd gv = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(m.ParameterCount()), -0.01, 0.01);
  g.grads.Unflatten(gv);
  SgdState s = SgdState::ZerosLike(m);
  SgdStep(&m, g, {1.0, 0.0, 1e9}, &s);
  EXPECT_LT((m.params.Flatten() - (before - gv)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SgdTest, MomentumRecurrence) {
  AdaptModel m = AdaptModel::Initialize(kDims, 2);
  GradientBuffer g = GradientBuffer::ZerosLike(m);
  g.grads.b3.setConstant(0.1);
  SgdState s = SgdState::ZerosLike(m);
  const SgdOptions opt{0.5, 0.9, 100.0};
  const Eigen::VectorXd p0 = m.params.Flatten();
  SgdStep(&m, g, opt, &s);
  const Eigen::VectorXd p1 = m.params.Flatten();
  SgdStep(&m, g, opt, &s);
  const Eigen::VectorXd p2 = m.params.Flatten();
  EXPECT_NEAR((p2 - p1).norm() / (p1 - p0).norm(), 1.9, 1e-12);
}

TEST(SgdTest, GlobalNormClipping) {
  AdaptModel m = AdaptModel::Initialize(kDims, 2);
  GradientBuffer g = GradientBuffer::ZerosLike(m);
  g.grads.w1.setConstant(10.0);
  SgdState s = SgdState::ZerosLike(m);
  const Eigen::VectorXd before = m.params.Flatten();
  SgdStep(&m, g, {1.0, 0.0, 5.0}, &s);
  EXPECT_NEAR((before - m.params.Flatten()).norm(), 5.0, 1e-12);
}

TEST(SgdTest, NonFiniteGradientRefused) {
  AdaptModel m = AdaptModel::Initialize(kDims, 2);
  GradientBuffer g = GradientBuffer::ZerosLike(m);
  g.grads.b1(0) = std::numeric_limits<double>::quiet_NaN();
  SgdState s = SgdState::ZerosLike(m);
  EXPECT_FALSE(g.AllFinite());
  EXPECT_THROW(SgdStep(&m, g, {}, &s), Refused);
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  const AdaptModel m = AdaptModel::Initialize(kDims, 123);
  const AdaptModel back = ModelFromJson(ModelToJson(m));
  EXPECT_EQ(back.dims, m.dims);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.params.Flatten(), m.params.Flatten());
  testing::TempDir dir("ckpt");
  SaveModel(m, dir.File("m.json"));
  EXPECT_EQ(LoadModel(dir.File("m.json")).params.Flatten(), m.params.Flatten());
}

TEST(CheckpointTest, MalformedInputRejected) {
  EXPECT_THROW(ModelFromJson("not json"), InvalidArgument);
  EXPECT_THROW(ModelFromJson(R"({"schema_version": 99})"), InvalidArgument);
  EXPECT_THROW(ModelFromJson(R"({"schema_version": 1, "dims": {}})"),
               InvalidArgument);
  EXPECT_THROW(LoadModel("/nonexistent/model.json"), InvalidArgument);
}

}  // namespace
}  // namespace reot
