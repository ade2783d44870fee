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

#include <algorithm>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "json.hpp"
#include "reot/errors.hpp"

namespace reot {
namespace {

constexpr int kStateSchema = 1;

Eigen::MatrixXd SquaredDistances(const Batch& a, const Batch& b) {
  // |a|^2 + |b|^2 - 2ab, clamped; exact pairwise loop keeps zeros exact.
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
    }
  }
  return d;
}

const std::vector<int>& RequireLabels(const LabeledFeatureSet& set,
                                      const char* what) {
  if (!set.true_labels) {
    throw InvalidArgument(std::string(what) + " set has no labels");
  }
  return *set.true_labels;
}

nlohmann::json FlatParams(const ModelParams& p) {
  const Eigen::VectorXd flat = p.Flatten();
  return std::vector<double>(flat.data(), flat.data() + flat.size());
}

}  // namespace

TaskConfig TaskConfig::Defaults(Scenario scenario) {
  TaskConfig c;
  c.scenario = scenario;
  if (scenario == Scenario::kPda) {
    c.eta1 = 0.3;
    c.eta2 = 3.5;
  }
  return c;
}

void TaskConfig::Validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw InvalidArgument(std::string(name) + " must be positive");
  };
  positive(lambda, "ot.lambda");
  positive(beta2, "ot.beta2");
  positive(lr, "train.lr");
  positive(grad_clip, "train.grad_clip");
  positive(ot_tolerance, "ot.tolerance");
  if (!(eta1 >= 0.0) || !(eta2 >= 0.0)) {
    throw InvalidArgument("loss.eta1 and loss.eta2 must be non-negative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw InvalidArgument("train.momentum must be in [0, 1)");
  }
  if (epochs < 0 || pretrain_epochs < 0) {
    throw InvalidArgument("epoch counts must be non-negative");
  }
  if (hidden <= 0 || feature <= 0) {
    throw InvalidArgument("model dimensions must be positive");
  }
  if (k_shared < 0) throw InvalidArgument("task.k_shared must be >= 0");
  if (ot_max_iterations <= 0) {
    throw InvalidArgument("ot.max_iterations must be positive");
  }
}

IdentificationStep IdentifyPrivate(const Batch& z1, std::span<const int> y1,
                                   const Batch& z2, std::span<const int> y2,
                                   const TaskConfig& config) {
  const Eigen::Index n = z1.rows();
  const Eigen::Index m = z2.rows();
  if (static_cast<Eigen::Index>(y1.size()) != n ||
      static_cast<Eigen::Index>(y2.size()) != m) {
    throw InvalidArgument("one label per sample is required");
  }
  IdentificationStep step;
  CostSpec spec;
  spec.cost = SquaredDistances(z1, z2);
  spec.mask.resize(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      spec.mask(i, j) = y1[static_cast<std::size_t>(i)] ==
                        y2[static_cast<std::size_t>(j)];
    }
  }
  spec.lambda = config.lambda;
  spec.beta1 = kInfinite;
  spec.beta2 = config.beta2;

  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  std::size_t kept = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (spec.mask.row(i).any()) {
      ++kept;
    } else {
      step.excluded_rows.push_back(static_cast<std::size_t>(i));
    }
  }
  if (kept == 0) {
    step.aborted = true;
    step.diagnostic =
        "no X1 row shares a label with any X2 sample; epoch skipped";
    return step;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (spec.mask.row(i).any()) p(i) = 1.0 / static_cast<double>(kept);
  }
  // Re-normalize so the histogram check sees an exact unit sum.
  p /= p.sum();
  SolverOptions options;
  options.max_iterations = config.ot_max_iterations;
  options.tolerance = config.ot_tolerance;
  step.plan = SolveMaskedSemiRelaxed(Histogram(std::move(p)),
                                     Histogram::Uniform(static_cast<std::size_t>(m)),
                                     spec, options);
  step.identification = Identify(ComputeScores(step.plan));
  return step;
}

TransferPlans BuildTransferPlans(const Batch& source_z,
                                 std::span<const int> source_y,
                                 const Batch& target_z,
                                 std::span<const int> target_pred,
                                 const TaskConfig& config) {
  TransferPlans out;
  if (config.scenario == Scenario::kOsda) {
    out.step = IdentifyPrivate(source_z, source_y, target_z, target_pred, config);
    if (out.step.aborted) return out;
    out.gamma = out.step.plan.gamma;
    auto [shr, prv] = SplitPlan(out.step.plan, out.step.identification,
                                CandidateSide::kCols);
    out.gamma_shr = std::move(shr.gamma);
    out.gamma_prv = std::move(prv.gamma);
    out.pseudo_private_target = out.step.identification.private_idx;
    out.gamma_br = out.gamma;
  } else {
    out.step = IdentifyPrivate(target_z, target_pred, source_z, source_y, config);
    if (out.step.aborted) return out;
    // Plan maps target -> source; transpose so it maps source -> target.
    const TransportPlan forward = out.step.plan.transposed();
    out.gamma = forward.gamma;
    auto [shr, prv] = SplitPlan(forward, out.step.identification,
                                CandidateSide::kRows);
    out.gamma_shr = std::move(shr.gamma);
    out.gamma_prv = std::move(prv.gamma);
    // Transposed rows are the relaxed side, so identified-private source rows
    // only hold stray mass from mispredicted targets. Their mass-normalized
    // barycenter would pull those targets toward the private label.
    out.gamma_br = out.gamma - out.gamma_prv;
  }
  return out;
}

TaskLayout ResolveLayout(const LabeledFeatureSet& source,
                         const LabeledFeatureSet& target,
                         const TaskConfig& config) {
  const auto& ys = RequireLabels(source, "source");
  if (ys.empty()) throw InvalidArgument("source set is empty");
  if (target.size() == 0) throw InvalidArgument("target set is empty");
  if (source.dim() != target.dim()) {
    throw InvalidArgument("source and target feature dimensions differ");
  }
  TaskLayout layout;
  layout.num_source_classes = *std::max_element(ys.begin(), ys.end());
  layout.classes = layout.num_source_classes + 1;
  if (config.k_shared > 0) {
    layout.k_shared = config.k_shared;
  } else if (config.scenario == Scenario::kOsda) {
    layout.k_shared = layout.num_source_classes;
  } else if (target.true_labels && !target.true_labels->empty()) {
    layout.k_shared = *std::max_element(target.true_labels->begin(),
                                        target.true_labels->end());
  } else {
    throw InvalidArgument(
        "PDA without target ground truth needs task.k_shared in the config");
  }
  if (config.scenario == Scenario::kOsda &&
      layout.k_shared != layout.num_source_classes) {
    throw InvalidArgument("in OSDA every source class is shared");
  }
  if (config.scenario == Scenario::kPda &&
      layout.k_shared >= layout.num_source_classes) {
    throw InvalidArgument("PDA needs source-private classes beyond k_shared");
  }
  layout.pseudo_label = layout.k_shared + 1;
  return layout;
}

std::vector<int> Predict(const AdaptModel& model, const Batch& x) {
  return PredictLabels(ForwardClassify(model, ForwardFeatures(model, x)));
}

void Pretrain(AdaptModel* model, const LabeledFeatureSet& source, int epochs,
              const SgdOptions& options) {
  const auto& ys = RequireLabels(source, "source");
  SgdState opt = SgdState::ZerosLike(*model);
  const Batch empty(0, model->dims.input);
  for (int e = 0; e < epochs; ++e) {
    LossValue loss = LossCls(*model, source.features, ys, empty, 1);
    SgdStep(model, loss.grads, options, &opt);
  }
}

EpochRecord TrainEpoch(TrainState* state, const LabeledFeatureSet& source,
                       const LabeledFeatureSet& target,
                       const TaskConfig& config) {
  const TaskLayout layout = ResolveLayout(source, target, config);
  const auto& ys = *source.true_labels;
  AdaptModel& model = state->model;

  EpochRecord rec;
  rec.epoch = state->epoch + 1;

  const Batch zs = ForwardFeatures(model, source.features);
  const Batch zt = ForwardFeatures(model, target.features);
  const std::vector<int> target_pred =
      PredictLabels(ForwardClassify(model, zt));

  TransferPlans plans =
      BuildTransferPlans(zs, ys, zt, target_pred, config);
  rec.n_excluded_rows = plans.step.excluded_rows.size();
  if (plans.step.aborted) {
    rec.aborted = true;
    rec.diagnostic = plans.step.diagnostic;
    state->epoch = rec.epoch;
    return rec;
  }
  const IdentificationResult& ident = plans.step.identification;
  rec.n_shared = ident.shared_idx.size();
  rec.n_private = ident.private_idx.size();
  rec.n_undecided = ident.undecided_idx.size();
  rec.ot_iterations = plans.step.plan.iterations;
  rec.ot_converged = plans.step.plan.converged;
  rec.plan_mass = plans.step.plan.total_mass();

  const ObjectiveInputs inputs{source.features,
                               ys,
                               target.features,
                               plans.pseudo_private_target,
                               layout.pseudo_label,
                               plans.gamma_br,
                               plans.gamma_shr,
                               plans.gamma_prv,
                               config.eta1,
                               config.eta2};
  ObjectiveResult obj = EvaluateObjective(model, inputs);
  SgdStep(&model, obj.grads, config.sgd(), &state->optimizer);
  rec.losses = obj.report;

  state->epoch = rec.epoch;
  state->last_plan = std::move(plans.step.plan);
  state->last_identification = ident;
  state->excluded_rows = plans.step.excluded_rows;

  if (target.true_labels) {
    const auto& yt = *target.true_labels;
    const std::vector<int> pred_t = Predict(model, target.features);
    const std::vector<int> pred_s = Predict(model, source.features);
    EvalReport eval = config.scenario == Scenario::kOsda
                          ? EvalOsda(pred_t, yt, layout.k_shared)
                          : EvalPda(pred_t, yt);
    // Candidates live in X2: target for OSDA, source for PDA.
    const std::vector<int>& cand_truth =
        config.scenario == Scenario::kOsda ? yt : ys;
    std::unique_ptr<bool[]> is_private(new bool[cand_truth.size()]);
    for (std::size_t j = 0; j < cand_truth.size(); ++j) {
      is_private[j] = cand_truth[j] > layout.k_shared;
    }
    const IdentMetrics im = ComputeIdentMetrics(
        state->last_identification,
        std::span<const bool>(is_private.get(), cand_truth.size()));
    eval.ident_ratio = im.ident_ratio;
    eval.false_pos_rate = im.false_pos_rate;
    rec.eval = std::move(eval);
    rec.bound = ComputeBoundTerms(pred_s, ys, pred_t, yt, layout.k_shared);
  }
  return rec;
}

TrainResult Train(const LabeledFeatureSet& source,
                  const LabeledFeatureSet& target, const TaskConfig& config,
                  const TrainOptions& options) {
  config.Validate();
  const TaskLayout layout = ResolveLayout(source, target, config);
  TrainResult result;
  if (options.resume) {
    result.state = *options.resume;
    if (result.state.model.dims.input != source.dim() ||
        result.state.model.dims.classes != layout.classes) {
      throw InvalidArgument("resumed model does not match the task");
    }
  } else {
    ModelDims dims{source.dim(), config.hidden, config.feature, layout.classes};
    result.state.model = AdaptModel::Initialize(dims, config.seed);
    Pretrain(&result.state.model, source, config.pretrain_epochs, config.sgd());
    result.state.optimizer = SgdState::ZerosLike(result.state.model);
  }
  while (result.state.epoch < config.epochs) {
    if (options.before_epoch) options.before_epoch(result.state);
    EpochRecord rec = TrainEpoch(&result.state, source, target, config);
    if (options.after_epoch) options.after_epoch(result.state, rec);
    if (options.on_epoch) options.on_epoch(rec);
    result.log.push_back(std::move(rec));
    if (!options.checkpoint_path.empty() && options.checkpoint_every > 0 &&
        result.state.epoch % options.checkpoint_every == 0) {
      SaveTrainState(result.state, options.checkpoint_path);
    }
    if (options.stop_after_epoch > 0 &&
        result.state.epoch >= options.stop_after_epoch) {
      break;
    }
  }
  return result;
}

std::string EpochRecordToJson(const EpochRecord& r) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  j["aborted"] = r.aborted;
  if (r.aborted) j["diagnostic"] = r.diagnostic;
  j["l_cls"] = r.losses.l_cls;
  j["l_rt"] = r.losses.l_rt;
  j["l_rt_align"] = r.losses.l_rt_align;
  j["l_rt_sep"] = r.losses.l_rt_sep;
  j["l_br"] = r.losses.l_br;
  j["total"] = r.losses.total;
  j["n_shared"] = r.n_shared;
  j["n_private"] = r.n_private;
  j["n_undecided"] = r.n_undecided;
  j["n_excluded_rows"] = r.n_excluded_rows;
  j["ot_iterations"] = r.ot_iterations;
  j["ot_converged"] = r.ot_converged;
  j["plan_mass"] = r.plan_mass;
  if (r.eval) j["eval"] = nlohmann::json::parse(EvalReportToJson(*r.eval));
  if (r.bound) j["bound"] = nlohmann::json::parse(BoundReportToJson(*r.bound));
  return j.dump();
}

std::string TrainStateToJson(const TrainState& state) {
  nlohmann::json j;
  j["schema_version"] = kStateSchema;
  j["epoch"] = state.epoch;
  j["model"] = nlohmann::json::parse(ModelToJson(state.model));
  j["velocity"] = FlatParams(state.optimizer.velocity);
  j["excluded_rows"] = state.excluded_rows;
  j["last_private_idx"] = state.last_identification.private_idx;
  j["last_shared_idx"] = state.last_identification.shared_idx;
  return j.dump();
}

TrainState TrainStateFromJson(const std::string& text) {
  TrainState state;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("schema_version").get<int>() != kStateSchema) {
      throw InvalidArgument("unsupported training state schema");
    }
    state.epoch = j.at("epoch").get<int>();
    state.model = ModelFromJson(j.at("model").dump());
    state.optimizer = SgdState::ZerosLike(state.model);
    const auto v = j.at("velocity").get<std::vector<double>>();
    state.optimizer.velocity.Unflatten(Eigen::Map<const Eigen::VectorXd>(
        v.data(), static_cast<Eigen::Index>(v.size())));
    state.excluded_rows = j.at("excluded_rows").get<std::vector<std::size_t>>();
    state.last_identification.private_idx =
        j.at("last_private_idx").get<std::vector<std::size_t>>();
    state.last_identification.shared_idx =
        j.at("last_shared_idx").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed training state: ") + e.what());
  }
  return state;
}

void SaveTrainState(const TrainState& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write checkpoint " + path);
  out << TrainStateToJson(state) << '\n';
}

TrainState LoadTrainState(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read checkpoint " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return TrainStateFromJson(buf.str());
}

}  // namespace reot
