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

#ifndef REOT_TRAINER_HPP_
#define REOT_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reot/adapt_model.hpp"
#include "reot/data_gen.hpp"
#include "reot/identification.hpp"
#include "reot/losses.hpp"
#include "reot/metrics.hpp"
#include "reot/ot_solver.hpp"

namespace reot {

struct TaskConfig {
  Scenario scenario = Scenario::kOsda;
  double lambda = 0.1;
  double beta2 = 0.08;
  double eta1 = 1.0;
  double eta2 = 1.0;
  int epochs = 200;
  int pretrain_epochs = 100;
  double lr = 1e-2;
  double momentum = 0.9;
  double grad_clip = 5.0;
  std::uint64_t seed = 1;
  int hidden = 64;
  int feature = 16;
  // Number of shared classes; 0 infers it (OSDA: |Y_s|; PDA: largest
  // ground-truth target label, when available).
  int k_shared = 0;
  int ot_max_iterations = 2000;
  double ot_tolerance = 1e-9;

  // Scenario defaults for the loss weights: (1, 1) for OSDA, (0.3, 3.5) for
  // PDA.
  static TaskConfig Defaults(Scenario scenario);
  void Validate() const;
  SgdOptions sgd() const { return {lr, momentum, grad_clip}; }
};

// Result of the role-agnostic identification step X1 -> X2.
struct IdentificationStep {
  TransportPlan plan;  // X1 x X2, excluded rows carry zero mass
  IdentificationResult identification;
  std::vector<std::size_t> excluded_rows;
  bool aborted = false;
  std::string diagnostic;
};

// Builds the label mask, drops X1 rows without an unmasked partner (the
// remaining rows share the unit mass uniformly), solves the semi-relaxed
// masked plan on squared Euclidean feature costs and identifies candidates
// in X2. OSDA and PDA both run through here with their roles assigned.
IdentificationStep IdentifyPrivate(const Batch& z1, std::span<const int> y1,
                                   const Batch& z2, std::span<const int> y2,
                                   const TaskConfig& config);

// Plans for the loss step, oriented source x target.
struct TransferPlans {
  IdentificationStep step;
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd gamma_shr;
  Eigen::MatrixXd gamma_prv;
  // Plan fed to the barycenter loss: gamma for OSDA, gamma without the
  // identified-private source rows for PDA.
  Eigen::MatrixXd gamma_br;
  // Target indices receiving the private pseudo label (OSDA only).
  std::vector<std::size_t> pseudo_private_target;
};

// Role assignment per scenario. OSDA: X1 = source (true labels),
// X2 = target (predicted). PDA: X1 = target (predicted), X2 = source (true),
// and the solved plan is transposed back to source x target.
TransferPlans BuildTransferPlans(const Batch& source_z,
                                 std::span<const int> source_y,
                                 const Batch& target_z,
                                 std::span<const int> target_pred,
                                 const TaskConfig& config);

struct TrainState {
  AdaptModel model;
  SgdState optimizer;
  int epoch = 0;
  TransportPlan last_plan;
  IdentificationResult last_identification;
  std::vector<std::size_t> excluded_rows;
};

struct EpochRecord {
  int epoch = 0;
  bool aborted = false;
  std::string diagnostic;
  LossReport losses;
  std::size_t n_shared = 0;
  std::size_t n_private = 0;
  std::size_t n_undecided = 0;
  std::size_t n_excluded_rows = 0;
  int ot_iterations = 0;
  bool ot_converged = false;
  double plan_mass = 0.0;
  std::optional<EvalReport> eval;
  std::optional<BoundReport> bound;
};

// Everything derived from the data once per run.
struct TaskLayout {
  int k_shared = 0;
  int num_source_classes = 0;  // |Y_s|
  int classes = 0;             // |Y_s| + 1
  int pseudo_label = 0;        // k_shared + 1
};
TaskLayout ResolveLayout(const LabeledFeatureSet& source,
                         const LabeledFeatureSet& target,
                         const TaskConfig& config);

// Supervised steps on the source set only. A fresh optimizer state is used
// and discarded.
void Pretrain(AdaptModel* model, const LabeledFeatureSet& source, int epochs,
              const SgdOptions& options);

// One full-batch iteration: predict, solve, identify, step. Evaluation is
// attached when the target carries ground truth.
EpochRecord TrainEpoch(TrainState* state, const LabeledFeatureSet& source,
                       const LabeledFeatureSet& target,
                       const TaskConfig& config);

struct TrainOptions {
  // Called after each epoch (log sinks, progress).
  std::function<void(const EpochRecord&)> on_epoch;
  // Inspection hooks around each epoch; the state is read-only.
  std::function<void(const TrainState&)> before_epoch;
  std::function<void(const TrainState&, const EpochRecord&)> after_epoch;
  // Checkpoint written every `checkpoint_every` epochs when path is set.
  std::string checkpoint_path;
  int checkpoint_every = 0;
  // Resume from a saved state; pretraining is skipped.
  std::optional<TrainState> resume;
  // Stop after this epoch (simulated interruption); 0 = run to the end.
  int stop_after_epoch = 0;
};

struct TrainResult {
  TrainState state;
  std::vector<EpochRecord> log;
};

TrainResult Train(const LabeledFeatureSet& source,
                  const LabeledFeatureSet& target, const TaskConfig& config,
                  const TrainOptions& options = {});

// Predicted labels of h∘g on a feature set.
std::vector<int> Predict(const AdaptModel& model, const Batch& x);

std::string EpochRecordToJson(const EpochRecord& record);
std::string TrainStateToJson(const TrainState& state);
TrainState TrainStateFromJson(const std::string& text);
void SaveTrainState(const TrainState& state, const std::string& path);
TrainState LoadTrainState(const std::string& path);

}  // namespace reot

#endif  // REOT_TRAINER_HPP_
