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

#include "reot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "json.hpp"
#include "reot/errors.hpp"

namespace reot {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void CheckSameLength(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("predictions and labels differ in length (" +
                          std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
}

nlohmann::json NumberOrNull(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

// Confusion counts over collapsed labels 1..k+1, stored 0-based.
struct Confusion {
  explicit Confusion(int classes)
      : counts(static_cast<std::size_t>(classes),
               std::vector<double>(static_cast<std::size_t>(classes), 0.0)),
        support(static_cast<std::size_t>(classes), 0.0) {}
  std::vector<std::vector<double>> counts;  // [truth][pred]
  std::vector<double> support;
  double total = 0.0;
  double errors = 0.0;

  // p(Yhat = i | Y = j); unsupported classes read as perfectly predicted.
  double Conditional(int i, int j) const {
    const auto jj = static_cast<std::size_t>(j);
    if (support[jj] == 0.0) return i == j ? 1.0 : 0.0;
    return counts[jj][static_cast<std::size_t>(i)] / support[jj];
  }
  double Prior(int j) const {
    return total == 0.0 ? 0.0 : support[static_cast<std::size_t>(j)] / total;
  }
};

Confusion Tally(std::span<const int> pred, std::span<const int> truth,
                int k_shared) {
  const int classes = k_shared + 1;
  Confusion c(classes);
  auto collapse = [k_shared](int y) {
    if (y < 1) throw InvalidArgument("labels must be >= 1");
    return std::min(y, k_shared + 1) - 1;
  };
  for (std::size_t s = 0; s < pred.size(); ++s) {
    const int t = collapse(truth[s]);
    const int p = collapse(pred[s]);
    c.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] += 1.0;
    c.support[static_cast<std::size_t>(t)] += 1.0;
    c.total += 1.0;
    if (t != p) c.errors += 1.0;
  }
  return c;
}

}  // namespace

double HarmonicMean(double os_star, double unk) {
  const double denom = os_star + unk;
  return denom == 0.0 ? 0.0 : 2.0 * os_star * unk / denom;
}

EvalReport EvalOsda(std::span<const int> predictions,
                    std::span<const int> truth, int k_shared) {
  CheckSameLength(predictions, truth);
  if (k_shared < 1) throw InvalidArgument("k_shared must be >= 1");
  if (truth.empty()) throw InvalidArgument("evaluation set is empty");
  EvalReport r;
  const int classes = k_shared + 1;
  std::vector<double> hit(static_cast<std::size_t>(classes), 0.0);
  std::vector<double> support(static_cast<std::size_t>(classes), 0.0);
  double correct = 0.0;
  for (std::size_t s = 0; s < truth.size(); ++s) {
    const int t = truth[s];
    if (t < 1 || t > classes) {
      throw InvalidArgument("label " + std::to_string(t) + " outside [1, " +
                            std::to_string(classes) + "]");
    }
    if (predictions[s] < 1) {
      throw InvalidArgument("prediction " + std::to_string(predictions[s]) +
                            " is not a 1-based label");
    }
    const int p = std::min(predictions[s], classes);
    support[static_cast<std::size_t>(t - 1)] += 1.0;
    if (p == t) {
      hit[static_cast<std::size_t>(t - 1)] += 1.0;
      correct += 1.0;
    }
  }
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < classes; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    if (support[cc] == 0.0) {
      r.per_class_acc.push_back(kNaN);
      r.warnings.push_back("class " + std::to_string(c + 1) +
                           " absent from ground truth");
      continue;
    }
    r.per_class_acc.push_back(hit[cc] / support[cc]);
    if (c < k_shared) {
      sum += hit[cc] / support[cc];
      ++present;
    }
  }
  r.os_star = present > 0 ? sum / present : 0.0;
  const double unk = r.per_class_acc.back();
  r.unk = std::isnan(unk) ? 0.0 : unk;
  r.h = HarmonicMean(r.os_star, r.unk);
  r.acc = correct / static_cast<double>(truth.size());
  return r;
}

EvalReport EvalPda(std::span<const int> predictions,
                   std::span<const int> truth) {
  CheckSameLength(predictions, truth);
  if (truth.empty()) throw InvalidArgument("evaluation set is empty");
  EvalReport r;
  const int classes = *std::max_element(truth.begin(), truth.end());
  std::vector<double> hit(static_cast<std::size_t>(classes), 0.0);
  std::vector<double> support(static_cast<std::size_t>(classes), 0.0);
  double correct = 0.0;
  for (std::size_t s = 0; s < truth.size(); ++s) {
    if (truth[s] < 1) throw InvalidArgument("labels must be >= 1");
    support[static_cast<std::size_t>(truth[s] - 1)] += 1.0;
    if (predictions[s] == truth[s]) {
      hit[static_cast<std::size_t>(truth[s] - 1)] += 1.0;
      correct += 1.0;
    }
  }
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < classes; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    if (support[cc] == 0.0) {
      r.per_class_acc.push_back(kNaN);
      continue;
    }
    r.per_class_acc.push_back(hit[cc] / support[cc]);
    sum += hit[cc] / support[cc];
    ++present;
  }
  r.os_star = present > 0 ? sum / present : 0.0;
  r.acc = correct / static_cast<double>(truth.size());
  return r;
}

IdentMetrics ComputeIdentMetrics(const IdentificationResult& result,
                                 std::span<const bool> is_private) {
  if (is_private.size() != result.scores.size()) {
    throw InvalidArgument("ground truth must cover every candidate");
  }
  double true_private = 0.0;
  for (bool b : is_private) true_private += b ? 1.0 : 0.0;
  const double true_shared = static_cast<double>(is_private.size()) - true_private;
  double hit = 0.0;
  double false_hit = 0.0;
  for (std::size_t j : result.private_idx) {
    (is_private[j] ? hit : false_hit) += 1.0;
  }
  IdentMetrics m;
  if (true_private > 0.0) {
    m.ident_ratio = hit / true_private;
  } else {
    m.ident_ratio = result.private_idx.empty() ? 1.0 : 0.0;
  }
  m.false_pos_rate = true_shared > 0.0 ? false_hit / true_shared : 0.0;
  return m;
}

BoundReport ComputeBoundTerms(std::span<const int> source_pred,
                              std::span<const int> source_truth,
                              std::span<const int> target_pred,
                              std::span<const int> target_truth,
                              int k_shared) {
  CheckSameLength(source_pred, source_truth);
  CheckSameLength(target_pred, target_truth);
  if (target_truth.empty()) {
    throw InvalidArgument(
        "bound diagnostics need ground-truth target labels; they are an "
        "evaluation-only diagnostic");
  }
  if (source_truth.empty()) throw InvalidArgument("source set is empty");
  if (k_shared < 1) throw InvalidArgument("k_shared must be >= 1");

  const Confusion p = Tally(source_pred, source_truth, k_shared);
  const Confusion q = Tally(target_pred, target_truth, k_shared);
  const int labels = k_shared + 1;
  const int priv = k_shared;  // 0-based index of the collapsed private class

  BoundReport r;
  r.num_labels = labels;
  r.eps_s = p.errors / p.total;
  r.eps_t = q.errors / q.total;
  for (int j = 0; j < k_shared; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    if (p.support[jj] == 0.0) {
      r.warnings.push_back("shared class " + std::to_string(j + 1) +
                           " has no source support; excluded from MPE");
    } else {
      r.delta_mpe = std::max(r.delta_mpe, 1.0 - p.Conditional(j, j));
    }
    if (q.support[jj] == 0.0) {
      r.warnings.push_back("shared class " + std::to_string(j + 1) +
                           " has no target support");
    }
    double gap = 0.0;
    for (int i = 0; i < labels; ++i) {
      if (i == j) continue;
      gap = std::max(gap, std::abs(p.Conditional(i, j) - q.Conditional(i, j)));
    }
    r.delta_scg += q.Prior(j) * gap;
    r.label_l1 += std::abs(p.Prior(j) - q.Prior(j));
  }
  const auto pp = static_cast<std::size_t>(priv);
  r.p_private_error = (p.support[pp] - p.counts[pp][pp]) / p.total;
  r.q_private_error = (q.support[pp] - q.counts[pp][pp]) / q.total;
  r.bound_value = 2.0 * r.eps_s + r.label_l1 * r.delta_mpe +
                  (labels - 1) * r.delta_scg + r.q_private_error;
  r.holds = r.eps_t <= r.bound_value;
  return r;
}

std::string EvalReportToJson(const EvalReport& report) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["os_star"] = report.os_star;
  j["unk"] = report.unk;
  j["h"] = report.h;
  j["acc"] = report.acc;
  j["ident_ratio"] = report.ident_ratio ? nlohmann::json(*report.ident_ratio)
                                        : nlohmann::json(nullptr);
  j["false_pos_rate"] = report.false_pos_rate
                            ? nlohmann::json(*report.false_pos_rate)
                            : nlohmann::json(nullptr);
  nlohmann::json per = nlohmann::json::array();
  for (double v : report.per_class_acc) per.push_back(NumberOrNull(v));
  j["per_class_acc"] = per;
  j["warnings"] = report.warnings;
  return j.dump();
}

std::string BoundReportToJson(const BoundReport& report) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["eps_s"] = report.eps_s;
  j["eps_t"] = report.eps_t;
  j["delta_mpe"] = report.delta_mpe;
  j["delta_scg"] = report.delta_scg;
  j["label_l1"] = report.label_l1;
  j["private_terms"] = {report.p_private_error, report.q_private_error};
  j["num_labels"] = report.num_labels;
  j["bound_value"] = report.bound_value;
  j["holds"] = report.holds;
  j["estimator"] = "plug-in empirical frequencies";
  j["warnings"] = report.warnings;
  return j.dump();
}

std::string EvalCsvHeader() {
  return "os_star,unk,h,acc,ident_ratio,false_pos_rate";
}

std::string EvalReportToCsv(const EvalReport& report) {
  auto fmt = [](std::optional<double> v) -> std::string {
    if (!v) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
  };
  return fmt(report.os_star) + "," + fmt(report.unk) + "," + fmt(report.h) +
         "," + fmt(report.acc) + "," + fmt(report.ident_ratio) + "," +
         fmt(report.false_pos_rate);
}

}  // namespace reot
