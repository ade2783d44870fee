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

#ifndef REOT_DATA_GEN_HPP_
#define REOT_DATA_GEN_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reot/adapt_model.hpp"

namespace reot {

enum class Scenario { kOsda, kPda };
enum class Domain { kSource, kTarget };
enum class PrivatePlacement { kFar, kNearOtherShared };

const char* ToString(Scenario s);
const char* ToString(Domain d);
const char* ToString(PrivatePlacement p);
Scenario ParseScenario(const std::string& text);
PrivatePlacement ParsePlacement(const std::string& text);

struct LabeledFeatureSet {
  Batch features;
  // 1-based. In OSDA all target privates share label K+1; in PDA source
  // private classes keep their own labels K+1 .. K+K_private.
  std::optional<std::vector<int>> true_labels;
  std::optional<std::vector<int>> predicted_labels;
  Domain domain = Domain::kSource;

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
};

struct SynthSpec {
  int k_shared = 4;
  int k_private = 2;
  int d = 16;
  int n_per_class = 50;
  double domain_shift = 1.5;
  double within_sigma = 1.0;
  PrivatePlacement placement = PrivatePlacement::kNearOtherShared;
  std::uint64_t seed = 7;
};

// Re-checkable description of the generated geometry, measured on the
// domain holding the private samples.
struct GeometryCertificate {
  std::vector<double> within_diameter;      // per shared class
  std::vector<double> private_to_shared;    // per private class, min over shared means
  // Per shared class: log E_prv[exp c] - log E_shr[exp c] over co-labeled
  // pairs (averaged over the anchors z); NaN when no private sample shares
  // the pseudo label.
  std::vector<double> local_margin;
  std::vector<double> worst_anchor_margin;  // min over anchors z
  bool local_structure_holds = false;
  bool placement_holds = false;
  double placement_radius = 0.0;  // distance of private means from their anchor
};

struct SyntheticTask {
  LabeledFeatureSet source;
  LabeledFeatureSet target;
  Scenario scenario = Scenario::kOsda;
  int k_shared = 0;
  int num_source_classes = 0;  // |Y_s|
  GeometryCertificate certificate;
};

// Throws Refused when the geometry cannot be realized in dimension d.
SyntheticTask Generate(const SynthSpec& spec, Scenario scenario);

// Pseudo labels for `query`: label of the nearest class mean of `reference`.
std::vector<int> NearestMeanLabels(const Batch& reference,
                                   std::span<const int> reference_labels,
                                   const Batch& query);

// Measures the certificate for a pair (X1 with labels, X2 with pseudo labels
// and ground truth; ground truth > k_shared means private).
GeometryCertificate CertifyGeometry(const Batch& x1, std::span<const int> y1,
                                    const Batch& x2,
                                    std::span<const int> pseudo_y2,
                                    std::span<const int> true_y2, int k_shared,
                                    double within_sigma);

std::string CertificateToJson(const GeometryCertificate& cert,
                              const SynthSpec& spec, Scenario scenario);

// CSV rows `label,f1,...,fd` (or `f1,...,fd` when unlabeled). Labels above
// max_label (when max_label > 0) are rejected. Throws ParseError with the
// offending line.
LabeledFeatureSet LoadFeatures(const std::string& path, bool has_labels,
                               Domain domain, int max_label = 0);
LabeledFeatureSet ParseFeatures(const std::string& text,
                                const std::string& source_name,
                                bool has_labels, Domain domain,
                                int max_label = 0);
// 17 significant digits; LoadFeatures(SaveFeatures(x)) is exact.
std::string FormatFeatures(const LabeledFeatureSet& set);
void SaveFeatures(const LabeledFeatureSet& set, const std::string& path);

}  // namespace reot

#endif  // REOT_DATA_GEN_HPP_
