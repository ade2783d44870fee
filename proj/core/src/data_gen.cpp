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

#include "reot/data_gen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "reot/errors.hpp"

namespace reot {
namespace {

// Distance between two shared class means, in units of within_sigma.
constexpr double kSharedSpacing = 10.0;

double LogMeanExp(const std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - mx);
  return mx + std::log(acc / static_cast<double>(v.size()));
}

struct Cluster {
  Eigen::VectorXd mean;
  int label;
};

void Sample(const std::vector<Cluster>& clusters, int n_per_class,
            double sigma, std::mt19937_64& rng, LabeledFeatureSet* out) {
  const auto d = clusters.front().mean.size();
  const auto total =
      static_cast<Eigen::Index>(clusters.size()) * n_per_class;
  Batch x(total, d);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(total));
  std::normal_distribution<double> noise(0.0, sigma);
  Eigen::Index row = 0;
  for (const Cluster& c : clusters) {
    for (int s = 0; s < n_per_class; ++s, ++row) {
      for (Eigen::Index k = 0; k < d; ++k) x(row, k) = c.mean(k) + noise(rng);
      labels.push_back(c.label);
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  out->features.resize(total, d);
  std::vector<int> shuffled(labels.size());
  for (Eigen::Index r = 0; r < total; ++r) {
    out->features.row(r) = x.row(order[static_cast<std::size_t>(r)]);
    shuffled[static_cast<std::size_t>(r)] =
        labels[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
  }
  out->true_labels = std::move(shuffled);
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const char* ToString(Scenario s) { return s == Scenario::kOsda ? "osda" : "pda"; }
const char* ToString(Domain d) { return d == Domain::kSource ? "source" : "target"; }
const char* ToString(PrivatePlacement p) {
  return p == PrivatePlacement::kFar ? "far" : "near_other_shared";
}

Scenario ParseScenario(const std::string& text) {
  if (text == "osda" || text == "OSDA") return Scenario::kOsda;
  if (text == "pda" || text == "PDA") return Scenario::kPda;
  throw InvalidArgument("unknown scenario '" + text + "' (expected osda|pda)");
}

PrivatePlacement ParsePlacement(const std::string& text) {
  if (text == "far") return PrivatePlacement::kFar;
  if (text == "near_other_shared" || text == "near") {
    return PrivatePlacement::kNearOtherShared;
  }
  throw InvalidArgument("unknown private placement '" + text + "'");
}

SyntheticTask Generate(const SynthSpec& spec, Scenario scenario) {
  if (spec.k_shared < 2) throw InvalidArgument("k_shared must be >= 2");
  if (spec.k_private < 0) throw InvalidArgument("k_private must be >= 0");
  if (spec.n_per_class < 4) throw InvalidArgument("n_per_class must be >= 4");
  if (!(spec.within_sigma > 0.0)) {
    throw InvalidArgument("within_sigma must be positive");
  }
  if (!(spec.domain_shift >= 0.0)) {
    throw InvalidArgument("domain_shift must be non-negative");
  }
  const int axes_needed = spec.k_shared + spec.k_private + 1;
  if (spec.d < axes_needed) {
    throw Refused("dimension " + std::to_string(spec.d) +
                  " is too small: shared means, private offsets and the shift "
                  "direction need " + std::to_string(axes_needed) +
                  " orthogonal axes");
  }
  const double sigma = spec.within_sigma;
  // Typical within-class pairwise distance; the diameter exceeds it.
  const double typical = std::sqrt(2.0 * spec.d) * sigma;
  double radius = 0.0;
  if (spec.placement == PrivatePlacement::kNearOtherShared) {
    if (typical <= 3.0 * sigma) {
      throw Refused("in dimension " + std::to_string(spec.d) +
                    " a shared class is not wider than 3*sigma, so no private "
                    "mean can sit inside its spread yet 3*sigma away");
    }
    radius = 0.5 * (3.0 * sigma + typical);
  } else {
    radius = 2.0 * kSharedSpacing * sigma;
  }

  const auto d = static_cast<Eigen::Index>(spec.d);
  const double axis = kSharedSpacing * sigma / std::sqrt(2.0);
  std::vector<Eigen::VectorXd> shared_means;
  for (int k = 0; k < spec.k_shared; ++k) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
    mu(k) = axis;
    shared_means.push_back(mu);
  }
  std::vector<Eigen::VectorXd> private_means;
  for (int p = 0; p < spec.k_private; ++p) {
    Eigen::VectorXd mu = shared_means[static_cast<std::size_t>(p % spec.k_shared)];
    mu(spec.k_shared + p) += radius;
    private_means.push_back(mu);
  }
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(d);
  shift(spec.k_shared + spec.k_private) = spec.domain_shift;

  const int k = spec.k_shared;
  std::vector<Cluster> source_clusters, target_clusters;
  for (int c = 0; c < k; ++c) {
    source_clusters.push_back({shared_means[static_cast<std::size_t>(c)], c + 1});
    target_clusters.push_back(
        {shared_means[static_cast<std::size_t>(c)] + shift, c + 1});
  }
  for (int p = 0; p < spec.k_private; ++p) {
    const auto& mu = private_means[static_cast<std::size_t>(p)];
    if (scenario == Scenario::kOsda) {
      target_clusters.push_back({mu + shift, k + 1});
    } else {
      source_clusters.push_back({mu, k + 1 + p});
    }
  }

  SyntheticTask task;
  task.scenario = scenario;
  task.k_shared = k;
  task.num_source_classes =
      scenario == Scenario::kOsda ? k : k + spec.k_private;
  std::mt19937_64 rng(spec.seed);
  task.source.domain = Domain::kSource;
  task.target.domain = Domain::kTarget;
  Sample(source_clusters, spec.n_per_class, sigma, rng, &task.source);
  Sample(target_clusters, spec.n_per_class, sigma, rng, &task.target);

  const LabeledFeatureSet& x1 =
      scenario == Scenario::kOsda ? task.source : task.target;
  const LabeledFeatureSet& x2 =
      scenario == Scenario::kOsda ? task.target : task.source;
  const std::vector<int> pseudo =
      NearestMeanLabels(x1.features, *x1.true_labels, x2.features);
  task.certificate = CertifyGeometry(x1.features, *x1.true_labels,
                                     x2.features, pseudo, *x2.true_labels, k,
                                     sigma);
  task.certificate.placement_radius = spec.k_private > 0 ? radius : 0.0;
  return task;
}

std::vector<int> NearestMeanLabels(const Batch& reference,
                                   std::span<const int> reference_labels,
                                   const Batch& query) {
  if (static_cast<Eigen::Index>(reference_labels.size()) != reference.rows()) {
    throw InvalidArgument("one label per reference sample is required");
  }
  const int classes =
      *std::max_element(reference_labels.begin(), reference_labels.end());
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(classes, reference.cols());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(classes);
  for (std::size_t i = 0; i < reference_labels.size(); ++i) {
    const int y = reference_labels[i];
    if (y < 1) throw InvalidArgument("labels must be >= 1");
    means.row(y - 1) += reference.row(static_cast<Eigen::Index>(i));
    counts(y - 1) += 1.0;
  }
  std::vector<int> out(static_cast<std::size_t>(query.rows()));
  for (Eigen::Index q = 0; q < query.rows(); ++q) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 1;
    for (int c = 0; c < classes; ++c) {
      if (counts(c) == 0.0) continue;
      const double dist =
          (query.row(q) - means.row(c) / counts(c)).squaredNorm();
      if (dist < best) {
        best = dist;
        arg = c + 1;
      }
    }
    out[static_cast<std::size_t>(q)] = arg;
  }
  return out;
}

GeometryCertificate CertifyGeometry(const Batch& x1, std::span<const int> y1,
                                    const Batch& x2,
                                    std::span<const int> pseudo_y2,
                                    std::span<const int> true_y2, int k_shared,
                                    double within_sigma) {
  GeometryCertificate cert;
  const auto k = static_cast<std::size_t>(k_shared);
  cert.within_diameter.assign(k, 0.0);
  cert.local_margin.assign(k, std::numeric_limits<double>::quiet_NaN());
  cert.worst_anchor_margin.assign(k, std::numeric_limits<double>::quiet_NaN());

  for (Eigen::Index a = 0; a < x2.rows(); ++a) {
    const int ya = true_y2[static_cast<std::size_t>(a)];
    if (ya > k_shared) continue;
    for (Eigen::Index b = a + 1; b < x2.rows(); ++b) {
      if (true_y2[static_cast<std::size_t>(b)] != ya) continue;
      auto& diam = cert.within_diameter[static_cast<std::size_t>(ya - 1)];
      diam = std::max(diam, (x2.row(a) - x2.row(b)).norm());
    }
  }

  // Empirical class means on X2 by ground truth.
  int max_label = 0;
  for (int y : true_y2) max_label = std::max(max_label, y);
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(max_label, x2.cols());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(max_label);
  for (Eigen::Index a = 0; a < x2.rows(); ++a) {
    const int y = true_y2[static_cast<std::size_t>(a)];
    means.row(y - 1) += x2.row(a);
    counts(y - 1) += 1.0;
  }
  for (int c = 0; c < max_label; ++c) {
    if (counts(c) > 0.0) means.row(c) /= counts(c);
  }
  bool placement_ok = true;
  const double max_diam =
      cert.within_diameter.empty()
          ? 0.0
          : *std::max_element(cert.within_diameter.begin(),
                              cert.within_diameter.end());
  for (int c = k_shared; c < max_label; ++c) {
    if (counts(c) == 0.0) continue;
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < k_shared; ++s) {
      if (counts(s) == 0.0) continue;
      best = std::min(best, (means.row(c) - means.row(s)).norm());
    }
    cert.private_to_shared.push_back(best);
    placement_ok = placement_ok && best > 3.0 * within_sigma && best < max_diam;
  }
  cert.placement_holds = placement_ok;

  // Local structure with f = exp(c), c the squared Euclidean distance, in
  // log space.
  bool holds = true;
  bool any_private = false;
  for (int cls = 1; cls <= k_shared; ++cls) {
    std::vector<Eigen::Index> shr, prv;
    for (Eigen::Index j = 0; j < x2.rows(); ++j) {
      if (pseudo_y2[static_cast<std::size_t>(j)] != cls) continue;
      (true_y2[static_cast<std::size_t>(j)] > k_shared ? prv : shr).push_back(j);
    }
    if (prv.empty() || shr.empty()) continue;
    any_private = true;
    double worst = std::numeric_limits<double>::infinity();
    std::vector<double> all_shr, all_prv;
    int anchors = 0;
    for (Eigen::Index i = 0; i < x1.rows(); ++i) {
      if (y1[static_cast<std::size_t>(i)] != cls) continue;
      std::vector<double> cs, cp;
      for (Eigen::Index j : shr) cs.push_back((x1.row(i) - x2.row(j)).squaredNorm());
      for (Eigen::Index j : prv) cp.push_back((x1.row(i) - x2.row(j)).squaredNorm());
      const double margin = LogMeanExp(cp) - LogMeanExp(cs);
      worst = std::min(worst, margin);
      all_shr.insert(all_shr.end(), cs.begin(), cs.end());
      all_prv.insert(all_prv.end(), cp.begin(), cp.end());
      ++anchors;
    }
    if (anchors == 0) continue;
    const auto c = static_cast<std::size_t>(cls - 1);
    // Pair-averaged expectation over anchors and co-labeled samples.
    cert.local_margin[c] = LogMeanExp(all_prv) - LogMeanExp(all_shr);
    cert.worst_anchor_margin[c] = worst;
    holds = holds && cert.local_margin[c] > 0.0;
  }
  cert.local_structure_holds = holds && (any_private || max_label <= k_shared);
  return cert;
}

std::string CertificateToJson(const GeometryCertificate& cert,
                              const SynthSpec& spec, Scenario scenario) {
  auto nan_to_null = [](const std::vector<double>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (double x : v) {
      if (std::isnan(x)) {
        arr.push_back(nullptr);
      } else {
        arr.push_back(x);
      }
    }
    return arr;
  };
  nlohmann::json j;
  j["schema_version"] = 1;
  j["scenario"] = ToString(scenario);
  j["spec"] = {{"k_shared", spec.k_shared},
               {"k_private", spec.k_private},
               {"d", spec.d},
               {"n_per_class", spec.n_per_class},
               {"domain_shift", spec.domain_shift},
               {"within_sigma", spec.within_sigma},
               {"private_placement", ToString(spec.placement)},
               {"seed", spec.seed}};
  j["within_diameter"] = cert.within_diameter;
  j["private_to_shared_min_distance"] = cert.private_to_shared;
  j["placement_radius"] = cert.placement_radius;
  j["local_margin_log"] = nan_to_null(cert.local_margin);
  j["worst_anchor_margin_log"] = nan_to_null(cert.worst_anchor_margin);
  j["local_structure_holds"] = cert.local_structure_holds;
  j["placement_holds"] = cert.placement_holds;
  return j.dump(2);
}

LabeledFeatureSet ParseFeatures(const std::string& text,
                                const std::string& source_name,
                                bool has_labels, Domain domain,
                                int max_label) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  long dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> values;
    std::size_t pos = 0;
    bool first = true;
    while (pos <= line.size()) {
      const std::size_t comma = std::min(line.find(',', pos), line.size());
      std::string_view field(line.data() + pos, comma - pos);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      if (has_labels && first) {
        int y = 0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), y);
        if (ec != std::errc() || ptr != field.data() + field.size()) {
          throw ParseError(source_name, line_no,
                           "label field '" + std::string(field) + "' is not an integer");
        }
        if (y < 1 || (max_label > 0 && y > max_label)) {
          throw ParseError(source_name, line_no,
                           "label " + std::to_string(y) + " outside [1, " +
                               (max_label > 0 ? std::to_string(max_label) : "inf") + "]");
        }
        labels.push_back(y);
      } else {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
          throw ParseError(source_name, line_no,
                           "field '" + std::string(field) + "' is not a finite number");
        }
        values.push_back(v);
      }
      first = false;
      pos = comma + 1;
    }
    if (values.empty()) {
      throw ParseError(source_name, line_no, "row has no feature values");
    }
    if (dim < 0) {
      dim = static_cast<long>(values.size());
    } else if (static_cast<long>(values.size()) != dim) {
      throw ParseError(source_name, line_no,
                       "row has " + std::to_string(values.size()) +
                           " features, expected " + std::to_string(dim));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(source_name, line_no, "file has no rows");
  LabeledFeatureSet set;
  set.domain = domain;
  set.features.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (long c = 0; c < dim; ++c) {
      set.features(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    }
  }
  if (has_labels) set.true_labels = std::move(labels);
  return set;
}

LabeledFeatureSet LoadFeatures(const std::string& path, bool has_labels,
                               Domain domain, int max_label) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseFeatures(buf.str(), path, has_labels, domain, max_label);
}

std::string FormatFeatures(const LabeledFeatureSet& set) {
  std::string out;
  for (Eigen::Index r = 0; r < set.features.rows(); ++r) {
    if (set.true_labels) {
      out += std::to_string((*set.true_labels)[static_cast<std::size_t>(r)]);
      out += ',';
    }
    for (Eigen::Index c = 0; c < set.features.cols(); ++c) {
      if (c > 0) out += ',';
      out += FormatDouble(set.features(r, c));
    }
    out += '\n';
  }
  return out;
}

void SaveFeatures(const LabeledFeatureSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << FormatFeatures(set);
}

}  // namespace reot
