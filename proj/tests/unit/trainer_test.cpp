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

#include "reot/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "json.hpp"
#include "reot/errors.hpp"
#include "support/fixtures.hpp"

namespace reot {
namespace {

using testing::ShortConfig;
using testing::SmallTask;
using testing::TempDir;

std::string Snapshot(const TrainResult& r) {
  std::string out = TrainStateToJson(r.state);
  for (const EpochRecord& rec : r.log) out += EpochRecordToJson(rec);
  return out;
}

AdaptModel Pretrained(const SyntheticTask& task, const TaskConfig& config) {
  AdaptModel m = AdaptModel::Initialize(
      {task.source.dim(), config.hidden, config.feature, task.num_source_classes + 1},
      config.seed);
  Pretrain(&m, task.source, config.pretrain_epochs, config.sgd());
  return m;
}

TEST(PretrainTest, ZeroEpochsLeavesModelUnchanged) {
  const SyntheticTask task = SmallTask(Scenario::kOsda, 3);
  AdaptModel m = AdaptModel::Initialize({task.source.dim(), 16, 8, 5}, 1);
  const Eigen::VectorXd before = m.params.Flatten();
  Pretrain(&m, task.source, 0, {});
  EXPECT_EQ(m.params.Flatten(), before);
}

TEST(PretrainTest, SeparableToyReachesHighSourceAccuracy) {
  Batch x(40, 2);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) {
    const double side = i < 20 ? -1.0 : 1.0;
    x(i, 0) = side * (1.0 + 0.05 * (i % 7));
    x(i, 1) = 0.1 * ((i * 37) % 11) - 0.5;
    y[static_cast<std::size_t>(i)] = i < 20 ? 1 : 2;
  }
  LabeledFeatureSet source{x, y, std::nullopt, Domain::kSource};
  AdaptModel m = AdaptModel::Initialize({2, 64, 16, 3}, 1);
  Pretrain(&m, source, 100, {});
  const std::vector<int> pred = Predict(m, x);
  int right = 0;
  for (int i = 0; i < 40; ++i) right += pred[static_cast<std::size_t>(i)] == y[static_cast<std::size_t>(i)];
  EXPECT_GE(right / 40.0, 0.99);
}

TEST(PretrainTest, Deterministic) {
  const SyntheticTask task = SmallTask(Scenario::kOsda, 3);
  const TaskConfig c = ShortConfig(Scenario::kOsda, 0, 15);
  EXPECT_EQ(Pretrained(task, c).params.Flatten(), Pretrained(task, c).params.Flatten());
}

TEST(TrainTest, ZeroEpochsReturnsPretrainedModel) {
  const SyntheticTask task = SmallTask(Scenario::kOsda, 2);
  const TaskConfig c = ShortConfig(Scenario::kOsda, 0, 15);
  const TrainResult r = Train(task.source, task.target, c);
  EXPECT_TRUE(r.log.empty());
  EXPECT_EQ(r.state.epoch, 0);
  EXPECT_EQ(r.state.model.params.Flatten(), Pretrained(task, c).params.Flatten());
}

TEST(TrainTest, LogHasOneRecordPerEpochWithConservedMass) {
  for (Scenario s : {Scenario::kOsda, Scenario::kPda}) {
    const SyntheticTask task = SmallTask(s, 4);
    int calls = 0;
    TrainOptions opts;
    opts.on_epoch = [&](const EpochRecord&) { ++calls; };
    const TrainResult r = Train(task.source, task.target, ShortConfig(s, 6), opts);
    ASSERT_EQ(r.log.size(), 6u);
    EXPECT_EQ(calls, 6);
    for (std::size_t e = 0; e < r.log.size(); ++e) {
      const EpochRecord& rec = r.log[e];
      EXPECT_EQ(rec.epoch, static_cast<int>(e) + 1);
      ASSERT_FALSE(rec.aborted);
      EXPECT_NEAR(rec.plan_mass, 1.0, 1e-9);
      ASSERT_TRUE(rec.eval.has_value());
      ASSERT_TRUE(rec.bound.has_value());
      EXPECT_TRUE(std::isfinite(rec.losses.total));
      const std::size_t candidates =
          s == Scenario::kOsda ? task.target.size() : task.source.size();
      EXPECT_EQ(rec.n_shared + rec.n_private + rec.n_undecided, candidates);
    }
  }
}

TEST(TrainTest, FullRunIsDeterministic) {
  const SyntheticTask task = SmallTask(Scenario::kPda, 5);
  const TaskConfig c = ShortConfig(Scenario::kPda, 5);
  EXPECT_EQ(Snapshot(Train(task.source, task.target, c)),
            Snapshot(Train(task.source, task.target, c)));
}

TEST(TrainTest, ResumeFromCheckpointIsBitIdentical) {
  const SyntheticTask task = SmallTask(Scenario::kOsda, 6);
  const TaskConfig c = ShortConfig(Scenario::kOsda, 8);
  const TrainResult full = Train(task.source, task.target, c);

  TempDir dir("resume");
  TrainOptions first;
  first.checkpoint_path = dir.File("state.json");
  first.checkpoint_every = 3;
  first.stop_after_epoch = 3;
  const TrainResult head = Train(task.source, task.target, c, first);
  ASSERT_EQ(head.log.size(), 3u);

  TrainOptions second;
  second.resume = LoadTrainState(dir.File("state.json"));
  const TrainResult tail = Train(task.source, task.target, c, second);
  ASSERT_EQ(tail.log.size(), 5u);
  EXPECT_EQ(TrainStateToJson(tail.state), TrainStateToJson(full.state));
  for (std::size_t e = 0; e < 5; ++e) {
    EXPECT_EQ(EpochRecordToJson(tail.log[e]), EpochRecordToJson(full.log[e + 3]));
  }
}

TEST(TrainTest, ResumeRejectsMismatchedModel) {
  const SyntheticTask task = SmallTask(Scenario::kOsda, 6);
  TrainOptions opts;
  opts.resume = TrainState{};
  opts.resume->model = AdaptModel::Initialize({3, 4, 2, 5}, 1);
  EXPECT_THROW(Train(task.source, task.target, ShortConfig(Scenario::kOsda, 1), opts),
               InvalidArgument);
}

TEST(TrainEpochTest, NoSharedLabelsAbortsAndLeavesModelUnchanged) {
  const SyntheticTask task = SmallTask(Scenario::kOsda, 2);
  const TaskConfig c = ShortConfig(Scenario::kOsda, 1);
  TrainState state;
  state.model = Pretrained(task, c);
  // Every target sample is predicted into the private class.
  state.model.params.b3(4) = 1e4;
  state.optimizer = SgdState::ZerosLike(state.model);
  const Eigen::VectorXd before = state.model.params.Flatten();
  const EpochRecord rec = TrainEpoch(&state, task.source, task.target, c);
  EXPECT_TRUE(rec.aborted);
  EXPECT_FALSE(rec.diagnostic.empty());
  EXPECT_EQ(rec.n_excluded_rows, task.source.size());
  EXPECT_EQ(state.model.params.Flatten(), before);
  EXPECT_EQ(state.epoch, 1);
  EXPECT_EQ(nlohmann::json::parse(EpochRecordToJson(rec)).at("aborted"), true);
}

TEST(TrainEpochTest, ZeroWeightsReduceToSupervisedStep) {
  const SyntheticTask task = SmallTask(Scenario::kOsda, 8);
  TaskConfig c = ShortConfig(Scenario::kOsda, 1);
  c.eta1 = 0.0;
  c.eta2 = 0.0;
  TrainState state;
  state.model = Pretrained(task, c);
  state.optimizer = SgdState::ZerosLike(state.model);

  AdaptModel expected = state.model;
  SgdState opt = SgdState::ZerosLike(expected);
  const Batch zs = ForwardFeatures(expected, task.source.features);
  const Batch zt = ForwardFeatures(expected, task.target.features);
  const TransferPlans plans = BuildTransferPlans(
      zs, *task.source.true_labels, zt, Predict(expected, task.target.features), c);
  Batch priv(static_cast<Eigen::Index>(plans.pseudo_private_target.size()),
             task.target.dim());
  for (std::size_t r = 0; r < plans.pseudo_private_target.size(); ++r) {
    priv.row(static_cast<Eigen::Index>(r)) = task.target.features.row(
        static_cast<Eigen::Index>(plans.pseudo_private_target[r]));
  }
  const LossValue cls =
      LossCls(expected, task.source.features, *task.source.true_labels, priv, 5);
  SgdStep(&expected, cls.grads, c.sgd(), &opt);

  const EpochRecord rec = TrainEpoch(&state, task.source, task.target, c);
  ASSERT_FALSE(rec.aborted);
  EXPECT_NEAR(rec.losses.total, cls.value, 1e-12);
  EXPECT_LT((state.model.params.Flatten() - expected.params.Flatten()).lpNorm<Eigen::Infinity>(),
            1e-12);
}

// PDA on a task whose source and target features coincide uses the OSDA path
// of the mirrored task; the plan only differs by a transpose.
TEST(TransferPlansTest, PdaPlanIsTransposedMirroredOsdaPlan) {
  const SyntheticTask task = SmallTask(Scenario::kPda, 9);
  const Batch& z = task.source.features;
  const std::vector<int>& y = *task.source.true_labels;
  std::vector<int> pred(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) pred[i] = y[i] > 4 ? 1 + static_cast<int>(i % 4) : y[i];

  TaskConfig pda = TaskConfig::Defaults(Scenario::kPda);
  TaskConfig osda = TaskConfig::Defaults(Scenario::kOsda);
  const TransferPlans p = BuildTransferPlans(z, y, z, pred, pda);
  const TransferPlans o = BuildTransferPlans(z, pred, z, y, osda);
  ASSERT_FALSE(p.step.aborted);
  ASSERT_FALSE(o.step.aborted);
  EXPECT_LT((p.gamma - o.gamma.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((p.gamma_shr - o.gamma_shr.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((p.gamma_prv - o.gamma_prv.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(p.step.identification.private_idx, o.step.identification.private_idx);
  EXPECT_TRUE(p.pseudo_private_target.empty());
}

TEST(TransferPlansTest, SplitSupportsAreDisjoint) {
  const SyntheticTask task = SmallTask(Scenario::kOsda, 10);
  const TaskConfig c = TaskConfig::Defaults(Scenario::kOsda);
  const AdaptModel m = Pretrained(task, ShortConfig(Scenario::kOsda, 0, 30));
  const TransferPlans plans = BuildTransferPlans(
      ForwardFeatures(m, task.source.features), *task.source.true_labels,
      ForwardFeatures(m, task.target.features), Predict(m, task.target.features), c);
  ASSERT_FALSE(plans.step.aborted);
  for (Eigen::Index j = 0; j < plans.gamma.cols(); ++j) {
    EXPECT_FALSE(plans.gamma_shr.col(j).sum() > 0.0 && plans.gamma_prv.col(j).sum() > 0.0);
  }
  EXPECT_EQ(plans.gamma_br, plans.gamma);
  const std::set<std::size_t> prv(plans.pseudo_private_target.begin(),
                                  plans.pseudo_private_target.end());
  for (std::size_t j : plans.step.identification.shared_idx) EXPECT_EQ(prv.count(j), 0u);
}

TEST(TransferPlansTest, PdaBarycenterPlanDropsPrivateSourceRows) {
  const SyntheticTask task = SmallTask(Scenario::kPda, 11);
  const Batch& zs = task.source.features;
  const Batch& zt = task.target.features;
  const TransferPlans p = BuildTransferPlans(zs, *task.source.true_labels, zt,
                                             *task.target.true_labels,
                                             TaskConfig::Defaults(Scenario::kPda));
  ASSERT_FALSE(p.step.aborted);
  EXPECT_EQ(p.gamma_br + p.gamma_prv, p.gamma);
  for (std::size_t i : p.step.identification.private_idx) {
    EXPECT_EQ(p.gamma_br.row(static_cast<Eigen::Index>(i)).sum(), 0.0);
  }
}

TEST(IdentifyPrivateTest, RowsWithoutPartnerAreExcluded) {
  Batch z1(3, 1), z2(2, 1);
  z1 << 0.0, 1.0, 5.0;
  z2 << 0.1, 0.9;
  const std::vector<int> y1 = {1, 2, 3};
  const std::vector<int> y2 = {1, 2};
  const IdentificationStep s = IdentifyPrivate(z1, y1, z2, y2, TaskConfig{});
  ASSERT_FALSE(s.aborted);
  EXPECT_EQ(s.excluded_rows, (std::vector<std::size_t>{2}));
  EXPECT_EQ(s.plan.gamma.row(2).sum(), 0.0);
  EXPECT_NEAR(s.plan.gamma.row(0).sum(), 0.5, 1e-12);
  EXPECT_NEAR(s.plan.total_mass(), 1.0, 1e-9);
}

TEST(IdentifyPrivateTest, NoOverlapAborts) {
  Batch z(2, 1);
  z << 0.0, 1.0;
  const IdentificationStep s =
      IdentifyPrivate(z, std::vector<int>{1, 1}, z, std::vector<int>{2, 2}, TaskConfig{});
  EXPECT_TRUE(s.aborted);
  EXPECT_EQ(s.excluded_rows.size(), 2u);
  EXPECT_THROW(IdentifyPrivate(z, std::vector<int>{1}, z, std::vector<int>{1, 1}, TaskConfig{}),
               InvalidArgument);
}

TEST(LayoutTest, InfersSharedClassCount) {
  const SyntheticTask osda = SmallTask(Scenario::kOsda, 1);
  TaskLayout l = ResolveLayout(osda.source, osda.target, TaskConfig{});
  EXPECT_EQ(l.k_shared, 4);
  EXPECT_EQ(l.classes, 5);
  EXPECT_EQ(l.pseudo_label, 5);
  const SyntheticTask pda = SmallTask(Scenario::kPda, 1);
  l = ResolveLayout(pda.source, pda.target, TaskConfig::Defaults(Scenario::kPda));
  EXPECT_EQ(l.k_shared, 4);
  EXPECT_EQ(l.num_source_classes, 6);
  EXPECT_EQ(l.classes, 7);
}

TEST(LayoutTest, RejectsInconsistentTasks) {
  SyntheticTask pda = SmallTask(Scenario::kPda, 1);
  pda.target.true_labels.reset();
  EXPECT_THROW(ResolveLayout(pda.source, pda.target, TaskConfig::Defaults(Scenario::kPda)),
               InvalidArgument);
  TaskConfig with_k = TaskConfig::Defaults(Scenario::kPda);
  with_k.k_shared = 4;
  EXPECT_NO_THROW(ResolveLayout(pda.source, pda.target, with_k));
  with_k.k_shared = 6;
  EXPECT_THROW(ResolveLayout(pda.source, pda.target, with_k), InvalidArgument);

  const SyntheticTask osda = SmallTask(Scenario::kOsda, 1);
  TaskConfig bad_osda;
  bad_osda.k_shared = 3;
  EXPECT_THROW(ResolveLayout(osda.source, osda.target, bad_osda), InvalidArgument);
  LabeledFeatureSet unlabeled = osda.source;
  unlabeled.true_labels.reset();
  EXPECT_THROW(ResolveLayout(unlabeled, osda.target, TaskConfig{}), InvalidArgument);
}

TEST(TrainStateTest, JsonRoundTripAndErrors) {
  const SyntheticTask task = SmallTask(Scenario::kOsda, 12);
  const TrainResult r = Train(task.source, task.target, ShortConfig(Scenario::kOsda, 2));
  const std::string text = TrainStateToJson(r.state);
  const TrainState back = TrainStateFromJson(text);
  EXPECT_EQ(TrainStateToJson(back), text);
  EXPECT_EQ(back.epoch, 2);
  EXPECT_EQ(nlohmann::json::parse(text).at("schema_version"), 1);
  EXPECT_THROW(TrainStateFromJson("{}"), InvalidArgument);
  EXPECT_THROW(TrainStateFromJson("not json"), InvalidArgument);
  TempDir dir("state");
  EXPECT_THROW(LoadTrainState(dir.File("absent.json")), std::exception);
}

TEST(EndToEndTest, SevenOsdaImprovesOverTraining) {
  const SyntheticTask task = Generate(SynthSpec{}, Scenario::kOsda);
  const TrainResult r = Train(task.source, task.target, TaskConfig{});
  ASSERT_EQ(r.log.size(), 200u);
  EXPECT_GE(r.log.back().eval->h, r.log.front().eval->h);
  for (const EpochRecord& rec : r.log) {
    EXPECT_LE(rec.bound->eps_t, rec.bound->bound_value + 0.02) << rec.epoch;
  }
}

}  // namespace
}  // namespace reot
