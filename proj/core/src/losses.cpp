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

#include "reot/losses.hpp"

#include <cmath>
#include <string>

#include "reot/errors.hpp"

namespace reot {
namespace {

Eigen::MatrixXd SquaredDistances(const Batch& a, const Batch& b) {
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
    }
  }
  return d;
}

void CheckPlanShape(const Eigen::MatrixXd& plan, const Batch& source,
                    const Batch& target, const char* name) {
  if (plan.rows() != source.rows() || plan.cols() != target.rows()) {
    throw InvalidArgument(std::string(name) + " is " +
                          std::to_string(plan.rows()) + "x" +
                          std::to_string(plan.cols()) + " but features are " +
                          std::to_string(source.rows()) + " and " +
                          std::to_string(target.rows()) + " samples");
  }
}

}  // namespace

HeadLoss CrossEntropyHead(const AdaptModel& model, const Batch& z,
                          std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != z.rows()) {
    throw InvalidArgument("one label per sample is required");
  }
  HeadLoss out;
  out.grads = GradientBuffer::ZerosLike(model);
  if (z.rows() == 0) {
    out.grad_features = Batch::Zero(0, model.dims.feature);
    return out;
  }
  const Batch log_prob = LogSoftmax(ForwardLogits(model, z));
  const double inv_n = 1.0 / static_cast<double>(z.rows());
  Batch grad_logits = log_prob.array().exp() * inv_n;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const int y = labels[r];
    if (y < 1 || y > model.dims.classes) {
      throw InvalidArgument("label " + std::to_string(y) + " outside [1, " +
                            std::to_string(model.dims.classes) + "]");
    }
    const auto row = static_cast<Eigen::Index>(r);
    out.value -= log_prob(row, y - 1) * inv_n;
    grad_logits(row, y - 1) -= inv_n;
  }
  out.grad_features = BackwardClassifier(model, z, grad_logits, &out.grads);
  return out;
}

LossValue LossCls(const AdaptModel& model, const Batch& source_x,
                  std::span<const int> source_y, const Batch& private_x,
                  int pseudo_label) {
  Batch x(source_x.rows() + private_x.rows(), model.dims.input);
  x.topRows(source_x.rows()) = source_x;
  if (private_x.rows() > 0) x.bottomRows(private_x.rows()) = private_x;
  std::vector<int> labels(source_y.begin(), source_y.end());
  labels.resize(static_cast<std::size_t>(x.rows()), pseudo_label);

  FeatureCache cache;
  const Batch z = ForwardFeatures(model, x, &cache);
  HeadLoss head = CrossEntropyHead(model, z, labels);
  BackwardFeatures(model, cache, head.grad_features, &head.grads);
  return {head.value, std::move(head.grads)};
}

TransferLoss LossRt(const Batch& source_z, const Batch& target_z,
                    const Eigen::MatrixXd& gamma_shr,
                    const Eigen::MatrixXd& gamma_prv) {
  CheckPlanShape(gamma_shr, source_z, target_z, "shared plan");
  CheckPlanShape(gamma_prv, source_z, target_z, "private plan");
  if (source_z.cols() != target_z.cols()) {
    throw InvalidArgument("source and target features differ in dimension");
  }
  const Eigen::MatrixXd dist = SquaredDistances(source_z, target_z);
  TransferLoss out;
  out.align = gamma_shr.cwiseProduct(dist).sum();
  out.separation = gamma_prv.cwiseProduct(dist).sum();
  out.value = out.align - out.separation;

  // d/dz_i sum_j w_ij |z_i - z'_j|^2 = 2 (r_i z_i - sum_j w_ij z'_j)
  const Eigen::MatrixXd w = gamma_shr - gamma_prv;
  const Eigen::VectorXd row = w.rowwise().sum();
  const Eigen::VectorXd col = w.colwise().sum().transpose();
  out.grad_source = 2.0 * (row.asDiagonal() * source_z - w * target_z);
  out.grad_target =
      2.0 * (col.asDiagonal() * target_z - w.transpose() * source_z);
  return out;
}

BarycenterMap ComputeBarycenterMap(const Eigen::MatrixXd& gamma,
                                   const Batch& target_z) {
  if (gamma.cols() != target_z.rows()) {
    throw InvalidArgument("plan columns must match the target sample count");
  }
  BarycenterMap out;
  out.row_mass = gamma.rowwise().sum();
  out.mapped = gamma * target_z;
  out.excluded.assign(static_cast<std::size_t>(gamma.rows()), false);
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    if (out.row_mass(i) > 0.0) {
      out.mapped.row(i) /= out.row_mass(i);
    } else {
      out.mapped.row(i).setZero();
      out.excluded[static_cast<std::size_t>(i)] = true;
    }
  }
  return out;
}

BarycenterLoss LossBr(const AdaptModel& model, const Eigen::MatrixXd& gamma,
                      const Batch& target_z, std::span<const int> source_y) {
  if (static_cast<Eigen::Index>(source_y.size()) != gamma.rows()) {
    throw InvalidArgument("one source label per plan row is required");
  }
  const BarycenterMap bary = ComputeBarycenterMap(gamma, target_z);
  std::vector<Eigen::Index> used;
  for (std::size_t i = 0; i < bary.excluded.size(); ++i) {
    if (!bary.excluded[i]) used.push_back(static_cast<Eigen::Index>(i));
  }
  BarycenterLoss out;
  out.used_rows = used.size();
  out.grad_target = Batch::Zero(target_z.rows(), target_z.cols());
  if (used.empty()) {
    out.grads = GradientBuffer::ZerosLike(model);
    return out;
  }
  Batch z_hat(static_cast<Eigen::Index>(used.size()), target_z.cols());
  std::vector<int> labels(used.size());
  for (std::size_t k = 0; k < used.size(); ++k) {
    z_hat.row(static_cast<Eigen::Index>(k)) = bary.mapped.row(used[k]);
    labels[k] = source_y[static_cast<std::size_t>(used[k])];
  }
  HeadLoss head = CrossEntropyHead(model, z_hat, labels);
  out.value = head.value;
  out.grads = std::move(head.grads);
  // z_hat_i = sum_j (G_ij / r_i) z'_j
  for (std::size_t k = 0; k < used.size(); ++k) {
    const Eigen::Index i = used[k];
    const double inv_mass = 1.0 / bary.row_mass(i);
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      const double w = gamma(i, j);
      if (w != 0.0) {
        out.grad_target.row(j) +=
            (w * inv_mass) * head.grad_features.row(static_cast<Eigen::Index>(k));
      }
    }
  }
  return out;
}

LossReport Combine(double l_cls, const TransferLoss& rt, double l_br,
                   double eta1, double eta2) {
  if (!(eta1 >= 0.0) || !(eta2 >= 0.0)) {
    throw InvalidArgument("loss weights must be non-negative");
  }
  LossReport r;
  r.l_cls = l_cls;
  r.l_rt = rt.value;
  r.l_rt_align = rt.align;
  r.l_rt_sep = rt.separation;
  r.l_br = l_br;
  r.eta1 = eta1;
  r.eta2 = eta2;
  r.total = l_cls + eta1 * rt.value + eta2 * l_br;
  return r;
}

GradientBuffer CombineGradients(const GradientBuffer& cls,
                                const GradientBuffer& rt,
                                const GradientBuffer& br, double eta1,
                                double eta2) {
  if (!(eta1 >= 0.0) || !(eta2 >= 0.0)) {
    throw InvalidArgument("loss weights must be non-negative");
  }
  GradientBuffer out = cls;
  GradientBuffer a = rt;
  a *= eta1;
  GradientBuffer b = br;
  b *= eta2;
  out += a;
  out += b;
  return out;
}

namespace {

struct ForwardPass {
  FeatureCache source_cache;
  FeatureCache target_cache;
  Batch source_z;
  Batch target_z;
  HeadLoss cls;
  Batch cls_grad_source;
  Batch cls_grad_target;
  TransferLoss rt;
  BarycenterLoss br;
};

ForwardPass RunLosses(const AdaptModel& model, const ObjectiveInputs& in) {
  CheckPlanShape(in.gamma, in.source_x, in.target_x, "plan");
  ForwardPass fp;
  fp.source_z = ForwardFeatures(model, in.source_x, &fp.source_cache);
  fp.target_z = ForwardFeatures(model, in.target_x, &fp.target_cache);

  const Eigen::Index ns = fp.source_z.rows();
  const auto np = static_cast<Eigen::Index>(in.pseudo_private_target.size());
  Batch z_cls(ns + np, model.dims.feature);
  z_cls.topRows(ns) = fp.source_z;
  std::vector<int> labels(in.source_y.begin(), in.source_y.end());
  for (Eigen::Index k = 0; k < np; ++k) {
    const auto j = static_cast<Eigen::Index>(in.pseudo_private_target[k]);
    if (j >= fp.target_z.rows()) {
      throw InvalidArgument("pseudo-private index out of range");
    }
    z_cls.row(ns + k) = fp.target_z.row(j);
    labels.push_back(in.pseudo_label);
  }
  fp.cls = CrossEntropyHead(model, z_cls, labels);
  fp.cls_grad_source = fp.cls.grad_features.topRows(ns);
  fp.cls_grad_target = Batch::Zero(fp.target_z.rows(), model.dims.feature);
  for (Eigen::Index k = 0; k < np; ++k) {
    const auto j = static_cast<Eigen::Index>(in.pseudo_private_target[k]);
    fp.cls_grad_target.row(j) += fp.cls.grad_features.row(ns + k);
  }

  fp.rt = LossRt(fp.source_z, fp.target_z, in.gamma_shr, in.gamma_prv);
  fp.br = LossBr(model, in.gamma, fp.target_z, in.source_y);
  return fp;
}

}  // namespace

ObjectiveResult EvaluateObjective(const AdaptModel& model,
                                  const ObjectiveInputs& in) {
  ForwardPass fp = RunLosses(model, in);
  ObjectiveResult out;
  out.report = Combine(fp.cls.value, fp.rt, fp.br.value, in.eta1, in.eta2);

  out.grads = fp.cls.grads;
  GradientBuffer head_br = fp.br.grads;
  head_br *= in.eta2;
  out.grads += head_br;

  const Batch grad_source = fp.cls_grad_source + in.eta1 * fp.rt.grad_source;
  const Batch grad_target = fp.cls_grad_target + in.eta1 * fp.rt.grad_target +
                            in.eta2 * fp.br.grad_target;
  BackwardFeatures(model, fp.source_cache, grad_source, &out.grads);
  BackwardFeatures(model, fp.target_cache, grad_target, &out.grads);
  return out;
}

SeparateGradients EvaluateLossesSeparately(const AdaptModel& model,
                                           const ObjectiveInputs& in) {
  ForwardPass fp = RunLosses(model, in);
  SeparateGradients out;
  out.report = Combine(fp.cls.value, fp.rt, fp.br.value, in.eta1, in.eta2);

  out.cls = fp.cls.grads;
  BackwardFeatures(model, fp.source_cache, fp.cls_grad_source, &out.cls);
  BackwardFeatures(model, fp.target_cache, fp.cls_grad_target, &out.cls);

  out.rt = GradientBuffer::ZerosLike(model);
  BackwardFeatures(model, fp.source_cache, fp.rt.grad_source, &out.rt);
  BackwardFeatures(model, fp.target_cache, fp.rt.grad_target, &out.rt);

  out.br = fp.br.grads;
  BackwardFeatures(model, fp.target_cache, fp.br.grad_target, &out.br);
  return out;
}

}  // namespace reot
