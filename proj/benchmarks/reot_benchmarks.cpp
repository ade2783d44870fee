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

#include <benchmark/benchmark.h>

#include <random>

#include "reot/data_gen.hpp"
#include "reot/losses.hpp"
#include "reot/ot_solver.hpp"
#include "reot/trainer.hpp"

namespace reot {
namespace {

CostSpec RandomSpec(Eigen::Index n, Eigen::Index m, int classes) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CostSpec spec;
  spec.cost.resize(n, m);
  spec.mask.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      spec.cost(i, j) = u(rng);
      spec.mask(i, j) = (i % classes) == (j % classes);
    }
  }
  return spec;
}

void BM_SemiRelaxed(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const CostSpec spec = RandomSpec(n, n + n / 2, 4);
  const Histogram p = Histogram::Uniform(static_cast<std::size_t>(n));
  const Histogram q = Histogram::Uniform(static_cast<std::size_t>(n + n / 2));
  int iterations = 0;
  for (auto _ : state) {
    const TransportPlan plan = SolveMaskedSemiRelaxed(p, q, spec);
    iterations = plan.iterations;
    benchmark::DoNotOptimize(plan.gamma.data());
  }
  state.counters["scaling_iterations"] = iterations;
}
BENCHMARK(BM_SemiRelaxed)->Arg(50)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_Entropic(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  CostSpec spec = RandomSpec(n, n, 1);
  spec.lambda = 0.1;
  const Histogram p = Histogram::Uniform(static_cast<std::size_t>(n));
  for (auto _ : state) {
    benchmark::DoNotOptimize(SolveEntropicOt(p, p, spec).gamma.data());
  }
}
BENCHMARK(BM_Entropic)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Objective(benchmark::State& state) {
  const SyntheticTask task = Generate(SynthSpec{}, Scenario::kOsda);
  const TaskConfig config;
  const AdaptModel model = AdaptModel::Initialize(
      {task.source.dim(), config.hidden, config.feature, task.num_source_classes + 1}, 1);
  const Batch zs = ForwardFeatures(model, task.source.features);
  const Batch zt = ForwardFeatures(model, task.target.features);
  const TransferPlans plans = BuildTransferPlans(
      zs, *task.source.true_labels, zt, Predict(model, task.target.features), config);
  const ObjectiveInputs in{task.source.features, *task.source.true_labels,
                           task.target.features, plans.pseudo_private_target,
                           task.k_shared + 1,     plans.gamma_br,
                           plans.gamma_shr,       plans.gamma_prv,
                           config.eta1,           config.eta2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(EvaluateObjective(model, in).report.total);
  }
}
BENCHMARK(BM_Objective)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  const Scenario scenario = state.range(0) == 0 ? Scenario::kOsda : Scenario::kPda;
  const SyntheticTask task = Generate(SynthSpec{}, scenario);
  TaskConfig config = TaskConfig::Defaults(scenario);
  config.epochs = 0;
  config.pretrain_epochs = 20;
  TrainState base = Train(task.source, task.target, config).state;
  for (auto _ : state) {
    state.PauseTiming();
    TrainState s = base;
    state.ResumeTiming();
    benchmark::DoNotOptimize(TrainEpoch(&s, task.source, task.target, config).losses.total);
  }
  state.SetLabel(ToString(scenario));
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace reot

BENCHMARK_MAIN();
