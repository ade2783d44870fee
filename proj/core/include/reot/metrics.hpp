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

#ifndef REOT_METRICS_HPP_
#define REOT_METRICS_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reot/identification.hpp"

namespace reot {

struct EvalReport {
  double os_star = 0.0;  // macro accuracy over shared classes
  double unk = 0.0;      // accuracy on the private class K+1
  double h = 0.0;        // harmonic mean of os_star and unk
  double acc = 0.0;      // micro accuracy
  std::optional<double> ident_ratio;
  std::optional<double> false_pos_rate;
  std::vector<double> per_class_acc;  // NaN for classes absent from truth
  std::vector<std::string> warnings;
};

double HarmonicMean(double os_star, double unk);

// Labels in [1, k_shared + 1]; K+1 is the private class. Predictions above
// K+1 count as private.
EvalReport EvalOsda(std::span<const int> predictions,
                    std::span<const int> truth, int k_shared);
EvalReport EvalPda(std::span<const int> predictions,
                   std::span<const int> truth);

struct IdentMetrics {
  double ident_ratio = 0.0;
  double false_pos_rate = 0.0;
};

// is_private[j] is the ground truth for candidate j.
IdentMetrics ComputeIdentMetrics(const IdentificationResult& result,
                                 std::span<const bool> is_private);

// Plug-in estimates of the target-risk decomposition. Labels above
// k_shared are collapsed into one private class, so |Y| = k_shared + 1.
struct BoundReport {
  double eps_s = 0.0;
  double eps_t = 0.0;
  double delta_mpe = 0.0;
  double delta_scg = 0.0;
  double label_l1 = 0.0;
  double p_private_error = 0.0;  // p(Yhat != Y, Y = K_s)
  double q_private_error = 0.0;  // q(Yhat != Y, Y = K_t)
  int num_labels = 0;            // |Y|
  double bound_value = 0.0;
  bool holds = false;            // eps_t <= bound_value
  std::vector<std::string> warnings;
};

BoundReport ComputeBoundTerms(std::span<const int> source_pred,
                              std::span<const int> source_truth,
                              std::span<const int> target_pred,
                              std::span<const int> target_truth,
                              int k_shared);

std::string EvalReportToJson(const EvalReport& report);
std::string BoundReportToJson(const BoundReport& report);
std::string EvalCsvHeader();
std::string EvalReportToCsv(const EvalReport& report);

}  // namespace reot

#endif  // REOT_METRICS_HPP_
