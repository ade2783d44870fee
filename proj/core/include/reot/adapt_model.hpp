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

#ifndef REOT_ADAPT_MODEL_HPP_
#define REOT_ADAPT_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace reot {

// Batches are row-major in the sense of one sample per row.
using Batch = Eigen::MatrixXd;

struct ModelDims {
  int input = 0;
  int hidden = 64;
  int feature = 16;
  int classes = 0;  // |Y_s| + 1

  bool operator==(const ModelDims&) const = default;
};

// Weights are stored (out x in); biases have length out.
struct ModelParams {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
  Eigen::MatrixXd w3;
  Eigen::VectorXd b3;

  static ModelParams Zeros(const ModelDims& dims);
  std::size_t size() const;
  Eigen::VectorXd Flatten() const;
  void Unflatten(const Eigen::VectorXd& flat);

  // Visits every tensor as a flat span in a fixed order
  // (w1, b1, w2, b2, w3, b3).
  void ForEach(const std::function<void(std::span<double>)>& fn);
  void ForEach(const std::function<void(std::span<const double>)>& fn) const;
};

// Feature transform g: x -> w2 relu(w1 x + b1) + b2.
// Classifier h: z -> softmax(w3 z + b3).
struct AdaptModel {
  ModelDims dims;
  ModelParams params;
  std::uint64_t seed = 0;

  // Uniform fan-in initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static AdaptModel Initialize(const ModelDims& dims, std::uint64_t seed);
  std::size_t ParameterCount() const { return params.size(); }
};

struct GradientBuffer {
  ModelParams grads;

  static GradientBuffer ZerosLike(const AdaptModel& model);
  GradientBuffer& operator+=(const GradientBuffer& other);
  GradientBuffer& operator*=(double s);
  double Norm() const;
  bool AllFinite() const;
};

// Activations kept from forward_features for the backward pass.
struct FeatureCache {
  Batch input;
  Batch pre_activation;
  Batch hidden;
  bool valid() const { return input.size() > 0; }
};

Batch ForwardFeatures(const AdaptModel& model, const Batch& x,
                      FeatureCache* cache = nullptr);
Batch ForwardLogits(const AdaptModel& model, const Batch& z);
Batch ForwardClassify(const AdaptModel& model, const Batch& z);

// Row-wise numerically stable softmax / log-softmax.
Batch Softmax(const Batch& logits);
Batch LogSoftmax(const Batch& logits);

// Argmax labels (1-based), lowest index wins ties.
std::vector<int> PredictLabels(const Batch& probabilities);

// Accumulates classifier parameter gradients for upstream d(loss)/d(logits)
// evaluated at inputs z, and returns d(loss)/dz.
Batch BackwardClassifier(const AdaptModel& model, const Batch& z,
                         const Batch& grad_logits, GradientBuffer* grads);

// Accumulates feature-transform gradients for upstream d(loss)/dz. Throws
// InvalidArgument when the cache is missing or does not match.
void BackwardFeatures(const AdaptModel& model, const FeatureCache& cache,
                      const Batch& grad_features, GradientBuffer* grads);

// Full h∘g backward for a batch whose loss depends on the features (and the
// logits computed from them). Either upstream gradient may be empty.
GradientBuffer Backward(const AdaptModel& model, const FeatureCache& cache,
                        const Batch& features, const Batch& grad_features,
                        const Batch& grad_logits);

struct SgdOptions {
  double lr = 1e-2;
  double momentum = 0.9;
  double grad_clip = 5.0;
};

struct SgdState {
  ModelParams velocity;
  static SgdState ZerosLike(const AdaptModel& model);
};

// Global-norm clipping, then heavy-ball momentum: v = mu v + g; w -= lr v.
// Throws Refused on a non-finite gradient.
void SgdStep(AdaptModel* model, const GradientBuffer& grads,
             const SgdOptions& options, SgdState* state);

// Checkpoint layout: JSON with schema_version, dims, seed and flat
// parameter arrays. Doubles round-trip exactly.
std::string ModelToJson(const AdaptModel& model);
AdaptModel ModelFromJson(const std::string& text);
void SaveModel(const AdaptModel& model, const std::string& path);
AdaptModel LoadModel(const std::string& path);

}  // namespace reot

#endif  // REOT_ADAPT_MODEL_HPP_
