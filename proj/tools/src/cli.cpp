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

#include "reot_cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "reot/config.hpp"
#include "reot/data_gen.hpp"
#include "reot/errors.hpp"
#include "reot/identification.hpp"
#include "reot/metrics.hpp"
#include "reot/ot_solver.hpp"
#include "reot/plan_io.hpp"
#include "reot/trainer.hpp"

namespace reot::cli {
namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << text;
}

// One integer label per line; blank lines and '#' comments are skipped.
std::vector<int> ReadLabels(const std::string& path) {
  std::istringstream in(ReadText(path));
  std::vector<int> labels;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty()) continue;
    int y = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), y);
    if (ec != std::errc() || ptr != line.data() + line.size() || y < 1) {
      throw ParseError(path, number, "expected a positive integer label, got '" + line + "'");
    }
    labels.push_back(y);
  }
  if (labels.empty()) throw ParseError(path, number, "file has no labels");
  return labels;
}

std::string FormatLabels(const std::vector<int>& labels) {
  std::string out;
  for (int y : labels) out += std::to_string(y) + '\n';
  return out;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Flags that map onto config keys. Values stay strings so they go through
// the same parser as the config file.
struct ConfigFlag {
  const char* flag;
  const char* key;
  const char* type;
  const char* help;
  std::string value;
  CLI::Option* option = nullptr;
};

std::map<std::string, std::string> DefaultValues() {
  std::map<std::string, std::string> out;
  std::istringstream in(ConfigToText(TaskConfig::Defaults(Scenario::kOsda)));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  const TaskConfig pda = TaskConfig::Defaults(Scenario::kPda);
  out["loss.eta1"] += " (osda), " + FormatDouble(pda.eta1) + " (pda)";
  out["loss.eta2"] += " (osda), " + FormatDouble(pda.eta2) + " (pda)";
  out["task.k_shared"] += " (infer)";
  return out;
}

std::vector<ConfigFlag> TrainFlags() {
  return {
      {"--scenario", "scenario", "TEXT", "osda or pda; resets the loss weights", {}},
      {"--seed", "seed", "UINT", "Initialization seed", {}},
      {"--lambda", "ot.lambda", "FLOAT", "Entropy weight of the masked plan", {}},
      {"--beta2", "ot.beta2", "FLOAT", "Column-marginal KL weight", {}},
      {"--ot-max-iterations", "ot.max_iterations", "INT", "Scaling iteration cap", {}},
      {"--ot-tolerance", "ot.tolerance", "FLOAT", "Scaling convergence tolerance", {}},
      {"--eta1", "loss.eta1", "FLOAT", "Reliable-transfer loss weight", {}},
      {"--eta2", "loss.eta2", "FLOAT", "Barycenter loss weight", {}},
      {"--epochs", "train.epochs", "INT", "Adaptation epochs T", {}},
      {"--pretrain-epochs", "train.pretrain_epochs", "INT", "Source-only epochs", {}},
      {"--lr", "train.lr", "FLOAT", "Learning rate", {}},
      {"--momentum", "train.momentum", "FLOAT", "SGD momentum", {}},
      {"--grad-clip", "train.grad_clip", "FLOAT", "Global gradient-norm clip", {}},
      {"--hidden", "model.hidden", "INT", "Hidden width of g", {}},
      {"--feature", "model.feature", "INT", "Feature width of g", {}},
      {"--k-shared", "task.k_shared", "INT", "Number of shared classes", {}},
  };
}

void AddConfigFlags(CLI::App* app, std::vector<ConfigFlag>* flags) {
  static const std::map<std::string, std::string> defaults = DefaultValues();
  for (ConfigFlag& f : *flags) {
    f.option = app->add_option(f.flag, f.value, f.help)
                   ->type_name(f.type)
                   ->default_str(defaults.at(f.key));
  }
}

TaskConfig ResolveConfig(const std::string& config_path,
                         const std::vector<ConfigFlag>& flags) {
  TaskConfig config = TaskConfig::Defaults(Scenario::kOsda);
  if (!config_path.empty()) config = LoadConfig(config_path, config);
  // Scenario first so explicit weights still win.
  for (const ConfigFlag& f : flags) {
    if (f.option->count() > 0 && std::string(f.key) == "scenario") {
      ApplyConfigValue(&config, f.key, f.value);
    }
  }
  for (const ConfigFlag& f : flags) {
    if (f.option->count() > 0 && std::string(f.key) != "scenario") {
      try {
        ApplyConfigValue(&config, f.key, f.value);
      } catch (const std::invalid_argument& e) {
        throw InvalidArgument(std::string(f.flag) + ": " + e.what());
      }
    }
  }
  config.Validate();
  return config;
}

// "1-10" or "1,4,7" (ranges and lists may be mixed).
std::vector<std::uint64_t> ParseSeeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string part;
  auto number = [&](const std::string& s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw InvalidArgument("--seeds: bad seed '" + s + "'");
    }
    return v;
  };
  while (std::getline(in, part, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(number(part));
      continue;
    }
    const std::uint64_t lo = number(part.substr(0, dash));
    const std::uint64_t hi = number(part.substr(dash + 1));
    if (hi < lo) throw InvalidArgument("--seeds: empty range '" + part + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw InvalidArgument("--seeds: no seeds given");
  return seeds;
}

std::string WithSeedSuffix(const std::string& path, std::uint64_t seed) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  const std::string stem = p.stem().string() + ".seed" + std::to_string(seed);
  return (p.parent_path() / (stem + p.extension().string())).string();
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  SynthSpec spec;
  std::string scenario = "osda";
  std::string placement = "near_other_shared";
  std::string out_dir;
};

int RunGen(const GenArgs& a, std::ostream& out) {
  SynthSpec spec = a.spec;
  spec.placement = ParsePlacement(a.placement);
  const Scenario scenario = ParseScenario(a.scenario);
  const SyntheticTask task = Generate(spec, scenario);
  std::filesystem::create_directories(a.out_dir);
  const std::filesystem::path dir(a.out_dir);
  SaveFeatures(task.source, (dir / "source.csv").string());
  SaveFeatures(task.target, (dir / "target.csv").string());
  const std::string cert = CertificateToJson(task.certificate, spec, scenario);
  WriteText((dir / "certificate.json").string(), cert + '\n');
  out << cert << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string source;
  std::string target;
  bool target_unlabeled = false;
  std::string config;
  std::string log;
  std::string checkpoint;
  int checkpoint_every = 0;
  std::string resume;
  std::string report;
  std::string predictions;
  std::string seeds;
  int jobs = 1;
  std::vector<ConfigFlag> flags = TrainFlags();
};

struct RunOutcome {
  std::uint64_t seed = 0;
  TrainResult result;
  std::vector<int> target_pred;
};

json RunSummary(const RunOutcome& r, const TaskConfig& config) {
  json j;
  j["seed"] = r.seed;
  j["scenario"] = ToString(config.scenario);
  j["epochs_run"] = r.result.state.epoch;
  j["parameter_count"] = r.result.state.model.ParameterCount();
  if (!r.result.log.empty()) {
    j["final_epoch"] = json::parse(EpochRecordToJson(r.result.log.back()));
  }
  return j;
}

int RunTrain(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const TaskConfig config = ResolveConfig(a.config, a.flags);
  const LabeledFeatureSet source = LoadFeatures(a.source, true, Domain::kSource);
  const LabeledFeatureSet target =
      LoadFeatures(a.target, !a.target_unlabeled, Domain::kTarget);
  if (a.jobs < 1) throw InvalidArgument("--jobs must be at least 1");

  const bool sweep = !a.seeds.empty();
  const std::vector<std::uint64_t> seeds =
      sweep ? ParseSeeds(a.seeds) : std::vector<std::uint64_t>{config.seed};
  if (sweep && !a.resume.empty()) {
    throw InvalidArgument("--resume cannot be combined with --seeds");
  }
  // Fail on layout problems before spending time on any run.
  ResolveLayout(source, target, config);

  std::optional<TrainState> resume;
  if (!a.resume.empty()) resume = LoadTrainState(a.resume);

  std::vector<RunOutcome> outcomes(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  auto run_one = [&](std::size_t k) {
    try {
      TaskConfig c = config;
      c.seed = seeds[k];
      const std::string log_path = sweep ? WithSeedSuffix(a.log, c.seed) : a.log;
      std::ofstream log;
      if (!log_path.empty()) {
        log.open(log_path, std::ios::binary);
        if (!log) throw InvalidArgument("cannot write " + log_path);
      }
      TrainOptions opts;
      opts.on_epoch = [&](const EpochRecord& rec) {
        if (log.is_open()) log << EpochRecordToJson(rec) << '\n';
      };
      opts.checkpoint_path = sweep ? WithSeedSuffix(a.checkpoint, c.seed) : a.checkpoint;
      opts.checkpoint_every = a.checkpoint_every;
      opts.resume = resume;
      outcomes[k].seed = c.seed;
      outcomes[k].result = Train(source, target, c, opts);
      if (!opts.checkpoint_path.empty()) {
        SaveTrainState(outcomes[k].result.state, opts.checkpoint_path);
      }
      outcomes[k].target_pred = Predict(outcomes[k].result.state.model, target.features);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(a.jobs), seeds.size());
  if (workers <= 1) {
    for (std::size_t k = 0; k < seeds.size(); ++k) run_one(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < seeds.size(); k = next++) run_one(k);
      });
    }
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  json report;
  report["schema_version"] = kSchemaVersion;
  if (!sweep) {
    report.update(RunSummary(outcomes.front(), config));
    if (!a.predictions.empty()) WriteText(a.predictions, FormatLabels(outcomes.front().target_pred));
  } else {
    report["scenario"] = ToString(config.scenario);
    report["runs"] = json::array();
    std::map<std::string, std::pair<double, int>> sums;
    for (const RunOutcome& r : outcomes) {
      report["runs"].push_back(RunSummary(r, config));
      if (r.result.log.empty() || !r.result.log.back().eval) continue;
      const EvalReport& e = *r.result.log.back().eval;
      auto add = [&](const char* name, std::optional<double> v) {
        if (v && !std::isnan(*v)) {
          sums[name].first += *v;
          sums[name].second += 1;
        }
      };
      add("h", e.h);
      add("acc", e.acc);
      add("os_star", e.os_star);
      add("unk", e.unk);
      add("ident_ratio", e.ident_ratio);
      add("false_pos_rate", e.false_pos_rate);
    }
    json mean = json::object();
    for (const auto& [name, s] : sums) mean[name] = s.first / s.second;
    // Per-run H averaged, not H of the averaged accuracies.
    report["mean"] = mean;
    if (!a.predictions.empty()) {
      for (const RunOutcome& r : outcomes) {
        WriteText(WithSeedSuffix(a.predictions, r.seed), FormatLabels(r.target_pred));
      }
    }
  }
  const std::string text = report.dump(2);
  if (a.report.empty()) {
    out << text << '\n';
  } else {
    WriteText(a.report, text + '\n');
    err << "report written to " << a.report << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- identify

struct IdentifyArgs {
  std::string x1;
  std::string x2;
  std::string truth;
  int k_shared = 0;
  std::string plan_out;
  std::vector<ConfigFlag> flags = {
      {"--lambda", "ot.lambda", "FLOAT", "Entropy weight of the masked plan", {}},
      {"--beta2", "ot.beta2", "FLOAT", "Column-marginal KL weight", {}},
      {"--ot-max-iterations", "ot.max_iterations", "INT", "Scaling iteration cap", {}},
      {"--ot-tolerance", "ot.tolerance", "FLOAT", "Scaling convergence tolerance", {}},
  };
};

json IndexArray(const std::vector<std::size_t>& idx) {
  json arr = json::array();
  for (std::size_t i : idx) arr.push_back(i);
  return arr;
}

int RunIdentify(const IdentifyArgs& a, std::ostream& out) {
  const TaskConfig config = ResolveConfig("", a.flags);
  const LabeledFeatureSet x1 = LoadFeatures(a.x1, true, Domain::kSource);
  const LabeledFeatureSet x2 = LoadFeatures(a.x2, true, Domain::kTarget);
  if (x1.dim() != x2.dim()) throw InvalidArgument("X1 and X2 feature dimensions differ");
  const IdentificationStep step =
      IdentifyPrivate(x1.features, *x1.true_labels, x2.features, *x2.true_labels, config);

  json j;
  j["schema_version"] = kSchemaVersion;
  j["rows"] = x1.size();
  j["cols"] = x2.size();
  j["aborted"] = step.aborted;
  j["excluded_rows"] = IndexArray(step.excluded_rows);
  if (step.aborted) {
    j["diagnostic"] = step.diagnostic;
    out << j.dump(2) << '\n';
    return kExitOk;
  }
  const IdentificationResult& r = step.identification;
  j["shared_idx"] = IndexArray(r.shared_idx);
  j["private_idx"] = IndexArray(r.private_idx);
  j["undecided_idx"] = IndexArray(r.undecided_idx);
  j["private_threshold"] = r.private_threshold();
  j["scores"] = std::vector<double>(r.scores.scores.data(),
                                    r.scores.scores.data() + r.scores.scores.size());
  j["plan"] = json::parse(PlanMetadataJson(step.plan));
  if (!a.truth.empty()) {
    if (a.k_shared <= 0) throw InvalidArgument("--truth needs --k-shared");
    const std::vector<int> truth = ReadLabels(a.truth);
    if (truth.size() != x2.size()) {
      throw InvalidArgument("--truth has " + std::to_string(truth.size()) +
                            " labels for " + std::to_string(x2.size()) + " X2 samples");
    }
    std::unique_ptr<bool[]> is_private(new bool[truth.size()]);
    for (std::size_t i = 0; i < truth.size(); ++i) is_private[i] = truth[i] > a.k_shared;
    const IdentMetrics m = ComputeIdentMetrics(
        r, std::span<const bool>(is_private.get(), truth.size()));
    j["ident_ratio"] = m.ident_ratio;
    j["false_pos_rate"] = m.false_pos_rate;
  }
  if (!a.plan_out.empty()) DumpPlan(step.plan, a.plan_out);
  out << j.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string predictions;
  std::string truth;
  std::string scenario = "osda";
  int k_shared = 0;
  bool csv = false;
  bool bound = false;
  std::string source_predictions;
  std::string source_truth;
};

int RunEval(const EvalArgs& a, std::ostream& out) {
  const std::vector<int> pred = ReadLabels(a.predictions);
  const std::vector<int> truth = ReadLabels(a.truth);
  if (pred.size() != truth.size()) {
    throw InvalidArgument("predictions and truth differ in length");
  }
  const Scenario scenario = ParseScenario(a.scenario);
  if (scenario == Scenario::kOsda && a.k_shared <= 0) {
    throw InvalidArgument("osda evaluation needs --k-shared");
  }
  const EvalReport report = scenario == Scenario::kOsda
                                ? EvalOsda(pred, truth, a.k_shared)
                                : EvalPda(pred, truth);
  if (a.csv) {
    out << EvalCsvHeader() << '\n' << EvalReportToCsv(report) << '\n';
    return kExitOk;
  }
  if (!a.bound) {
    out << EvalReportToJson(report) << '\n';
    return kExitOk;
  }
  if (a.source_predictions.empty() || a.source_truth.empty()) {
    throw InvalidArgument("--bound needs --source-predictions and --source-truth");
  }
  if (a.k_shared <= 0) throw InvalidArgument("--bound needs --k-shared");
  const std::vector<int> spred = ReadLabels(a.source_predictions);
  const std::vector<int> struth = ReadLabels(a.source_truth);
  if (spred.size() != struth.size()) {
    throw InvalidArgument("source predictions and truth differ in length");
  }
  const BoundReport bound = ComputeBoundTerms(spred, struth, pred, truth, a.k_shared);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["eval"] = json::parse(EvalReportToJson(report));
  j["bound"] = json::parse(BoundReportToJson(bound));
  out << j.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- solve-ot

struct SolveArgs {
  std::string cost;
  std::string mask;
  std::string p;
  std::string q;
  double lambda = TaskConfig{}.lambda;
  double beta2 = TaskConfig{}.beta2;
  bool balanced = false;
  bool no_normalize = false;
  int max_iterations = SolverOptions{}.max_iterations;
  double tolerance = SolverOptions{}.tolerance;
  std::string out;
};

Histogram LoadHistogram(const std::string& path, Eigen::Index n) {
  if (path.empty()) return Histogram::Uniform(static_cast<std::size_t>(n));
  const Eigen::MatrixXd m = LoadMatrixCsv(path);
  if (m.size() != n) {
    throw InvalidArgument(path + ": expected " + std::to_string(n) + " weights");
  }
  return Histogram(Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()));
}

int RunSolve(const SolveArgs& a, std::ostream& out) {
  CostSpec spec;
  spec.cost = LoadMatrixCsv(a.cost);
  spec.mask = Mask::Constant(spec.cost.rows(), spec.cost.cols(), true);
  if (!a.mask.empty()) {
    const Eigen::MatrixXd m = LoadMatrixCsv(a.mask);
    if (m.rows() != spec.cost.rows() || m.cols() != spec.cost.cols()) {
      throw InvalidArgument(a.mask + ": mask shape differs from the cost");
    }
    spec.mask = m.array() != 0.0;
  }
  // Infinite costs are blocked entries.
  for (Eigen::Index i = 0; i < spec.cost.rows(); ++i) {
    for (Eigen::Index j = 0; j < spec.cost.cols(); ++j) {
      if (std::isinf(spec.cost(i, j))) {
        spec.mask(i, j) = false;
        spec.cost(i, j) = 0.0;
      }
    }
  }
  spec.lambda = a.lambda;
  spec.beta2 = a.beta2;
  spec.normalize = !a.no_normalize;
  const Histogram p = LoadHistogram(a.p, spec.cost.rows());
  const Histogram q = LoadHistogram(a.q, spec.cost.cols());
  SolverOptions options;
  options.max_iterations = a.max_iterations;
  options.tolerance = a.tolerance;
  const TransportPlan plan = a.balanced ? SolveEntropicOt(p, q, spec, options)
                                        : SolveMaskedSemiRelaxed(p, q, spec, options);
  DumpPlan(plan, a.out);
  out << PlanMetadataJson(plan) << '\n';
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Masked optimal transport for open-set and partial domain adaptation"};
  app.name(args.empty() ? "reot" : std::filesystem::path(args[0]).filename().string());
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a synthetic task and its geometry certificate");
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.spec.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--scenario", gen.scenario, "osda or pda")->capture_default_str();
  gen_cmd->add_option("--k-shared", gen.spec.k_shared, "Shared classes")->capture_default_str();
  gen_cmd->add_option("--k-private", gen.spec.k_private, "Private classes")->capture_default_str();
  gen_cmd->add_option("--dim", gen.spec.d, "Feature dimension")->capture_default_str();
  gen_cmd->add_option("--n-per-class", gen.spec.n_per_class, "Samples per class")->capture_default_str();
  gen_cmd->add_option("--shift", gen.spec.domain_shift, "Target mean shift")->default_str(FormatDouble(gen.spec.domain_shift));
  gen_cmd->add_option("--sigma", gen.spec.within_sigma, "Within-class standard deviation")->default_str(FormatDouble(gen.spec.within_sigma));
  gen_cmd->add_option("--placement", gen.placement, "far or near_other_shared")->capture_default_str();

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Pretrain on the source, then adapt to the target");
  train_cmd->add_option("--source", train.source, "Labeled source CSV")->required();
  train_cmd->add_option("--target", train.target, "Target CSV (labeled unless --target-unlabeled)")->required();
  train_cmd->add_flag("--target-unlabeled", train.target_unlabeled, "Target CSV has no label column");
  train_cmd->add_option("--config", train.config, "Config file of 'key = value' lines; flags override it");
  train_cmd->add_option("--log", train.log, "JSON-lines epoch log");
  train_cmd->add_option("--checkpoint", train.checkpoint, "Training state file, also written at the end");
  train_cmd->add_option("--checkpoint-every", train.checkpoint_every, "Checkpoint period in epochs (0 = end only)")->capture_default_str();
  train_cmd->add_option("--resume", train.resume, "Resume from a checkpoint; pretraining is skipped");
  train_cmd->add_option("--report", train.report, "Final report JSON (default: standard output)");
  train_cmd->add_option("--predictions", train.predictions, "Final target predictions, one label per line");
  train_cmd->add_option("--seeds", train.seeds, "Sweep mode: seeds as '1-10' or '1,3,5'");
  train_cmd->add_option("--jobs", train.jobs, "Concurrent runs in sweep mode")->capture_default_str();
  AddConfigFlags(train_cmd, &train.flags);

  IdentifyArgs ident;
  CLI::App* ident_cmd = app.add_subcommand("identify", "One-shot private-class identification from X1 to X2");
  ident_cmd->add_option("--x1", ident.x1, "Labeled CSV of the reference side")->required();
  ident_cmd->add_option("--x2", ident.x2, "Labeled CSV of the candidates (labels may be predictions)")->required();
  ident_cmd->add_option("--truth", ident.truth, "Ground-truth X2 labels, one per line");
  ident_cmd->add_option("--k-shared", ident.k_shared, "Labels above this are private (with --truth)");
  ident_cmd->add_option("--plan-out", ident.plan_out, "Dump the plan to STEM.csv and STEM.json");
  AddConfigFlags(ident_cmd, &ident.flags);

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Metrics from predicted and true labels");
  eval_cmd->add_option("--predictions", eval.predictions, "Target predictions, one label per line")->required();
  eval_cmd->add_option("--truth", eval.truth, "Target ground truth, one label per line")->required();
  eval_cmd->add_option("--scenario", eval.scenario, "osda or pda")->capture_default_str();
  eval_cmd->add_option("--k-shared", eval.k_shared, "Shared classes; K+1 is the private class");
  eval_cmd->add_flag("--csv", eval.csv, "Emit a CSV header and one row instead of JSON");
  eval_cmd->add_flag("--bound", eval.bound, "Add the target-risk bound terms");
  eval_cmd->add_option("--source-predictions", eval.source_predictions, "Source predictions (with --bound)");
  eval_cmd->add_option("--source-truth", eval.source_truth, "Source ground truth (with --bound)");

  SolveArgs solve;
  CLI::App* solve_cmd = app.add_subcommand("solve-ot", "Solve one plan and dump it");
  solve_cmd->add_option("--cost", solve.cost, "Cost matrix CSV; 'inf' marks blocked entries")->required();
  solve_cmd->add_option("--mask", solve.mask, "Mask CSV, nonzero = pass");
  solve_cmd->add_option("--p", solve.p, "Row weights CSV (default uniform)");
  solve_cmd->add_option("--q", solve.q, "Column weights CSV (default uniform)");
  solve_cmd->add_option("--lambda", solve.lambda, "Entropy weight")->default_str(FormatDouble(solve.lambda));
  solve_cmd->add_option("--beta2", solve.beta2, "Column-marginal KL weight")->default_str(FormatDouble(solve.beta2));
  solve_cmd->add_flag("--balanced", solve.balanced, "Both marginals hard");
  solve_cmd->add_flag("--no-normalize", solve.no_normalize, "Keep raw costs");
  solve_cmd->add_option("--max-iterations", solve.max_iterations, "Iteration cap")->capture_default_str();
  solve_cmd->add_option("--tolerance", solve.tolerance, "Convergence tolerance")->default_str(FormatDouble(solve.tolerance));
  solve_cmd->add_option("--out", solve.out, "Output stem for STEM.csv and STEM.json")->required();

  std::vector<const char*> argv;
  for (const std::string& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUserError;
  }

  try {
    if (*gen_cmd) return RunGen(gen, out);
    if (*train_cmd) return RunTrain(train, out, err);
    if (*ident_cmd) return RunIdentify(ident, out);
    if (*eval_cmd) return RunEval(eval, out);
    if (*solve_cmd) return RunSolve(solve, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const InfeasibleRow& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const Refused& e) {
    err << "refused: " << e.what() << '\n';
    return kExitUserError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternalError;
  }
  err << "internal error: no subcommand ran\n";
  return kExitInternalError;
}

}  // namespace reot::cli
