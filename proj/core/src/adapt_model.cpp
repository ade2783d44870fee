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

#include "reot/adapt_model.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "reot/errors.hpp"

namespace reot {
namespace {

constexpr int kCheckpointSchema = 1;

void CheckInput(const Batch& x, int expected, const char* what) {
  if (x.cols() != expected) {
    throw InvalidArgument(std::string(what) + " has dimension " +
                          std::to_string(x.cols()) + ", model expects " +
                          std::to_string(expected));
  }
}

template <typename Tensor>
std::span<double> AsSpan(Tensor& t) {
  return {t.data(), static_cast<std::size_t>(t.size())};
}

template <typename Tensor>
std::span<const double> AsSpan(const Tensor& t) {
  return {t.data(), static_cast<std::size_t>(t.size())};
}

}  // namespace

ModelParams ModelParams::Zeros(const ModelDims& d) {
  if (d.input <= 0 || d.hidden <= 0 || d.feature <= 0 || d.classes < 2) {
    throw InvalidArgument("model dimensions must be positive with at least two classes");
  }
  ModelParams p;
  p.w1 = Eigen::MatrixXd::Zero(d.hidden, d.input);
  p.b1 = Eigen::VectorXd::Zero(d.hidden);
  p.w2 = Eigen::MatrixXd::Zero(d.feature, d.hidden);
  p.b2 = Eigen::VectorXd::Zero(d.feature);
  p.w3 = Eigen::MatrixXd::Zero(d.classes, d.feature);
  p.b3 = Eigen::VectorXd::Zero(d.classes);
  return p;
}

std::size_t ModelParams::size() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() +
                                  b2.size() + w3.size() + b3.size());
}

void ModelParams::ForEach(const std::function<void(std::span<double>)>& fn) {
  fn(AsSpan(w1));
  fn(AsSpan(b1));
  fn(AsSpan(w2));
  fn(AsSpan(b2));
  fn(AsSpan(w3));
  fn(AsSpan(b3));
}

void ModelParams::ForEach(
    const std::function<void(std::span<const double>)>& fn) const {
  fn(AsSpan(w1));
  fn(AsSpan(b1));
  fn(AsSpan(w2));
  fn(AsSpan(b2));
  fn(AsSpan(w3));
  fn(AsSpan(b3));
}

Eigen::VectorXd ModelParams::Flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(size()));
  Eigen::Index offset = 0;
  ForEach([&](std::span<const double> t) {
    for (double v : t) flat(offset++) = v;
  });
  return flat;
}

void ModelParams::Unflatten(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != size()) {
    throw InvalidArgument("flat parameter vector has the wrong length");
  }
  Eigen::Index offset = 0;
  ForEach([&](std::span<double> t) {
    for (double& v : t) v = flat(offset++);
  });
}

AdaptModel AdaptModel::Initialize(const ModelDims& dims, std::uint64_t seed) {
  AdaptModel model;
  model.dims = dims;
  model.seed = seed;
  model.params = ModelParams::Zeros(dims);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Eigen::MatrixXd& w, Eigen::VectorXd& b) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = dist(rng);
  };
  fill(model.params.w1, model.params.b1);
  fill(model.params.w2, model.params.b2);
  fill(model.params.w3, model.params.b3);
  return model;
}

GradientBuffer GradientBuffer::ZerosLike(const AdaptModel& model) {
  return {ModelParams::Zeros(model.dims)};
}

GradientBuffer& GradientBuffer::operator+=(const GradientBuffer& other) {
  grads.w1 += other.grads.w1;
  grads.b1 += other.grads.b1;
  grads.w2 += other.grads.w2;
  grads.b2 += other.grads.b2;
  grads.w3 += other.grads.w3;
  grads.b3 += other.grads.b3;
  return *this;
}

GradientBuffer& GradientBuffer::operator*=(double s) {
  grads.ForEach([s](std::span<double> t) {
    for (double& v : t) v *= s;
  });
  return *this;
}

double GradientBuffer::Norm() const {
  double sq = 0.0;
  grads.ForEach([&sq](std::span<const double> t) {
    for (double v : t) sq += v * v;
  });
  return std::sqrt(sq);
}

bool GradientBuffer::AllFinite() const {
  bool ok = true;
  grads.ForEach([&ok](std::span<const double> t) {
    for (double v : t) ok = ok && std::isfinite(v);
  });
  return ok;
}

Batch ForwardFeatures(const AdaptModel& model, const Batch& x,
                      FeatureCache* cache) {
  CheckInput(x, model.dims.input, "input batch");
  const auto& p = model.params;
  Batch pre = x * p.w1.transpose();
  pre.rowwise() += p.b1.transpose();
  Batch hidden = pre.cwiseMax(0.0);
  Batch z = hidden * p.w2.transpose();
  z.rowwise() += p.b2.transpose();
  if (cache != nullptr) {
    cache->input = x;
    cache->pre_activation = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return z;
}

Batch ForwardLogits(const AdaptModel& model, const Batch& z) {
  CheckInput(z, model.dims.feature, "feature batch");
  Batch logits = z * model.params.w3.transpose();
  logits.rowwise() += model.params.b3.transpose();
  return logits;
}

Batch ForwardClassify(const AdaptModel& model, const Batch& z) {
  return Softmax(ForwardLogits(model, z));
}

Batch LogSoftmax(const Batch& logits) {
  Batch out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    const double lse =
        mx + std::log((logits.row(r).array() - mx).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

Batch Softmax(const Batch& logits) {
  Batch out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(r).array() - mx).exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

std::vector<int> PredictLabels(const Batch& probabilities) {
  std::vector<int> labels(static_cast<std::size_t>(probabilities.rows()));
  for (Eigen::Index r = 0; r < probabilities.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probabilities.cols(); ++c) {
      if (probabilities(r, c) > probabilities(r, best)) best = c;
    }
    labels[static_cast<std::size_t>(r)] = static_cast<int>(best) + 1;
  }
  return labels;
}

Batch BackwardClassifier(const AdaptModel& model, const Batch& z,
                         const Batch& grad_logits, GradientBuffer* grads) {
  CheckInput(z, model.dims.feature, "feature batch");
  if (grad_logits.rows() != z.rows() ||
      grad_logits.cols() != model.dims.classes) {
    throw InvalidArgument("logit gradient shape does not match the batch");
  }
  grads->grads.w3 += grad_logits.transpose() * z;
  grads->grads.b3 += grad_logits.colwise().sum().transpose();
  return grad_logits * model.params.w3;
}

void BackwardFeatures(const AdaptModel& model, const FeatureCache& cache,
                      const Batch& grad_features, GradientBuffer* grads) {
  if (!cache.valid() || cache.hidden.rows() != grad_features.rows() ||
      cache.hidden.cols() != model.dims.hidden) {
    throw InvalidArgument("backward pass needs the matching forward cache");
  }
  if (grad_features.cols() != model.dims.feature) {
    throw InvalidArgument("feature gradient has the wrong dimension");
  }
  grads->grads.w2 += grad_features.transpose() * cache.hidden;
  grads->grads.b2 += grad_features.colwise().sum().transpose();
  Batch grad_hidden = grad_features * model.params.w2;
  grad_hidden.array() *= (cache.pre_activation.array() > 0.0).cast<double>();
  grads->grads.w1 += grad_hidden.transpose() * cache.input;
  grads->grads.b1 += grad_hidden.colwise().sum().transpose();
}

GradientBuffer Backward(const AdaptModel& model, const FeatureCache& cache,
                        const Batch& features, const Batch& grad_features,
                        const Batch& grad_logits) {
  if (!cache.valid()) {
    throw InvalidArgument("backward pass needs a forward cache");
  }
  GradientBuffer out = GradientBuffer::ZerosLike(model);
  Batch dz = Batch::Zero(cache.input.rows(), model.dims.feature);
  if (grad_features.size() > 0) dz += grad_features;
  if (grad_logits.size() > 0) {
    dz += BackwardClassifier(model, features, grad_logits, &out);
  }
  BackwardFeatures(model, cache, dz, &out);
  return out;
}

SgdState SgdState::ZerosLike(const AdaptModel& model) {
  return {ModelParams::Zeros(model.dims)};
}

void SgdStep(AdaptModel* model, const GradientBuffer& grads,
             const SgdOptions& options, SgdState* state) {
  if (!(options.lr > 0.0) || !(options.momentum >= 0.0) ||
      !(options.momentum < 1.0) || !(options.grad_clip > 0.0)) {
    throw InvalidArgument("sgd options out of range");
  }
  if (!grads.AllFinite()) {
    throw Refused("gradient contains NaN or Inf; step refused");
  }
  const double norm = grads.Norm();
  const double scale = norm > options.grad_clip ? options.grad_clip / norm : 1.0;
  const Eigen::VectorXd g = grads.grads.Flatten() * scale;
  Eigen::VectorXd v = state->velocity.Flatten();
  v = options.momentum * v + g;
  state->velocity.Unflatten(v);
  model->params.Unflatten(model->params.Flatten() - options.lr * v);
}

std::string ModelToJson(const AdaptModel& model) {
  nlohmann::json j;
  j["schema_version"] = kCheckpointSchema;
  j["dims"] = {{"input", model.dims.input},
               {"hidden", model.dims.hidden},
               {"feature", model.dims.feature},
               {"classes", model.dims.classes}};
  j["seed"] = model.seed;
  const Eigen::VectorXd flat = model.params.Flatten();
  j["params"] = std::vector<double>(flat.data(), flat.data() + flat.size());
  return j.dump();
}

AdaptModel ModelFromJson(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed model checkpoint: ") + e.what());
  }
  if (j.value("schema_version", 0) != kCheckpointSchema) {
    throw InvalidArgument("unsupported model checkpoint schema");
  }
  AdaptModel model;
  try {
    model.dims.input = j.at("dims").at("input").get<int>();
    model.dims.hidden = j.at("dims").at("hidden").get<int>();
    model.dims.feature = j.at("dims").at("feature").get<int>();
    model.dims.classes = j.at("dims").at("classes").get<int>();
    model.seed = j.at("seed").get<std::uint64_t>();
    if (model.dims.input <= 0 || model.dims.hidden <= 0 ||
        model.dims.feature <= 0 || model.dims.classes <= 0) {
      throw InvalidArgument("model checkpoint has non-positive dimensions");
    }
    model.params = ModelParams::Zeros(model.dims);
    const auto values = j.at("params").get<std::vector<double>>();
    model.params.Unflatten(
        Eigen::Map<const Eigen::VectorXd>(values.data(),
                                          static_cast<Eigen::Index>(values.size())));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed model checkpoint: ") + e.what());
  }
  return model;
}

void SaveModel(const AdaptModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write model checkpoint " + path);
  out << ModelToJson(model) << '\n';
}

AdaptModel LoadModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read model checkpoint " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ModelFromJson(buf.str());
}

}  // namespace reot
