// Copyright 2026 The ShiftScope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shiftscope/losses.h"

#include <string>

namespace shiftscope {
namespace {

double pairs(Eigen::Index n) {
  return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
}

void check_batch(const Matrix& z, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != z.rows()) {
    throw InvalidArgument("label count " + std::to_string(labels.size()) +
                          " does not match batch size " +
                          std::to_string(z.rows()));
  }
}

// Column-standardized features with degenerate columns zeroed.
struct Standardized {
  Matrix centered;
  Matrix unit;  // centered / sigma, zero for degenerate columns
  Vector variance;
  Vector sigma;
  std::vector<bool> degenerate;
};

Standardized standardize(const Matrix& z) {
  Standardized s;
  const double n = static_cast<double>(z.rows());
  const RowVector mean = z.colwise().mean();
  s.centered = z.rowwise() - mean;
  s.variance = (s.centered.array().square().colwise().sum() / n).transpose();
  s.sigma = s.variance.array().sqrt();
  s.unit = Matrix::Zero(z.rows(), z.cols());
  s.degenerate.assign(z.cols(), false);
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    if (s.sigma(j) < kDegenerateStd) {
      s.degenerate[j] = true;
    } else {
      s.unit.col(j) = s.centered.col(j) / s.sigma(j);
    }
  }
  return s;
}

}  // namespace

void LossConfig::validate() const {
  if (!(w_dist >= 0.0) || !(lambda2 >= 0.0) || !(lambda3 >= 0.0)) {
    throw InvalidArgument("loss weights must be nonnegative");
  }
}

BatchStats batch_stats(const Matrix& z, std::span<const int> labels,
                       int num_classes) {
  check_batch(z, labels);
  check_labels(labels, num_classes);
  if (z.rows() < 2) throw InvalidArgument("batch statistics need >= 2 rows");
  BatchStats stats;
  stats.class_means.assign(num_classes, Vector::Zero(z.cols()));
  stats.class_counts.assign(num_classes, 0);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    stats.class_means[labels[i] - 1] += z.row(i).transpose();
    ++stats.class_counts[labels[i] - 1];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (stats.class_counts[c] > 0) stats.class_means[c] /= stats.class_counts[c];
  }
  const Standardized s = standardize(z);
  stats.mean = z.colwise().mean().transpose();
  stats.per_dim_variance = s.variance;
  stats.degenerate = s.degenerate;
  stats.correlation = s.unit.transpose() * s.unit / static_cast<double>(z.rows());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    if (!s.degenerate[j]) stats.correlation(j, j) = 1.0;
  }
  return stats;
}

LossValue cross_entropy(const Matrix& logits, std::span<const int> labels) {
  check_batch(logits, labels);
  check_labels(labels, static_cast<int>(logits.cols()));
  const double n = static_cast<double>(logits.rows());
  LossValue out;
  out.grad = softmax_rows(logits);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int c = labels[i] - 1;
    out.value += log_sum_exp(logits.row(i)) - logits(i, c);
    out.grad(i, c) -= 1.0;
  }
  out.value /= n;
  out.grad /= n;
  return out;
}

LossValue distance_loss(const Matrix& z, std::span<const int> labels,
                        int num_classes, const LossConfig& cfg) {
  check_batch(z, labels);
  check_labels(labels, num_classes);
  if (num_classes < 2) {
    throw InvalidArgument("the distance loss needs at least two classes");
  }
  std::vector<Vector> means(num_classes, Vector::Zero(z.cols()));
  std::vector<int> counts(num_classes, 0);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    means[labels[i] - 1] += z.row(i).transpose();
    ++counts[labels[i] - 1];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      throw InvalidArgument("class " + std::to_string(c + 1) +
                            " is absent from the batch");
    }
    means[c] /= counts[c];
  }

  const double scale =
      cfg.lambda1() / (pairs(num_classes) * std::sqrt(static_cast<double>(z.cols())));
  LossValue out;
  out.grad = Matrix::Zero(z.rows(), z.cols());
  // d value / d mu_c, accumulated over the pairs c participates in.
  std::vector<Vector> d_means(num_classes, Vector::Zero(z.cols()));
  double total = 0.0;
  for (int l = 0; l < num_classes; ++l) {
    for (int k = l + 1; k < num_classes; ++k) {
      const Vector diff = means[l] - means[k];
      const double norm = diff.norm();
      total += norm;
      if (norm > 0.0) {
        d_means[l] += diff / norm;
        d_means[k] -= diff / norm;
      }
    }
  }
  out.value = scale * total;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int c = labels[i] - 1;
    out.grad.row(i) = scale * d_means[c].transpose() / counts[c];
  }
  return out;
}

EntropyTerms entropy_terms(const Matrix& z) {
  if (z.rows() < 2) throw InvalidArgument("entropy terms need >= 2 rows");
  if (z.cols() < 2) throw InvalidArgument("entropy terms need D >= 2");
  const Standardized s = standardize(z);
  bool all_degenerate = true;
  for (bool d : s.degenerate) all_degenerate = all_degenerate && d;
  if (all_degenerate) {
    throw NumericalError("zero total variance: every feature is constant");
  }
  EntropyTerms terms;
  terms.variance = static_cast<double>(z.cols()) / s.variance.sum();
  const Matrix corr = s.unit.transpose() * s.unit / static_cast<double>(z.rows());
  double sum_sq = 0.0;
  for (Eigen::Index i = 0; i < corr.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < corr.cols(); ++j) {
      sum_sq += corr(i, j) * corr(i, j);
    }
  }
  terms.correlation = sum_sq / pairs(z.cols());
  return terms;
}

LossValue entropy_loss(const Matrix& z, const LossConfig& cfg) {
  if (z.rows() < 2) throw InvalidArgument("entropy loss needs >= 2 rows");
  if (z.cols() < 2) throw InvalidArgument("entropy loss needs D >= 2");
  const Standardized s = standardize(z);
  bool all_degenerate = true;
  for (bool d : s.degenerate) all_degenerate = all_degenerate && d;
  if (all_degenerate) {
    throw NumericalError("zero total variance: every feature is constant");
  }
  const double n = static_cast<double>(z.rows());
  const double dim = static_cast<double>(z.cols());
  const double total_var = s.variance.sum();

  LossValue out;
  // Variance term: lambda2 * D / S, dS/dz = 2 (z - mean) / n.
  out.value = cfg.lambda2 * dim / total_var;
  out.grad = (-cfg.lambda2 * dim / (total_var * total_var) * 2.0 / n) *
             s.centered;

  // Correlation term: lambda3 / C(D,2) * sum_{i<j} C_ij^2 with C = U^T U / n.
  Matrix corr = s.unit.transpose() * s.unit / n;
  corr.diagonal().setZero();
  const double norm = pairs(z.cols());
  out.value += cfg.lambda3 * 0.5 * corr.squaredNorm() / norm;
  // d/dU of 0.5 * sum_{i != j} C_ij^2 is (2 / n) U C_offdiag.
  const Matrix d_unit = (cfg.lambda3 / norm) * (2.0 / n) * (s.unit * corr);
  // Back through u = (z - mean) / sigma with population sigma.
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    if (s.degenerate[j]) continue;
    const auto du = d_unit.col(j);
    const auto u = s.unit.col(j);
    const double mean_du = du.mean();
    const double mean_du_u = du.dot(u) / n;
    out.grad.col(j).array() +=
        (du.array() - mean_du - u.array() * mean_du_u) / s.sigma(j);
  }
  return out;
}

TotalLoss total_loss(const ForwardTrace& trace, std::span<const int> labels,
                     const LossConfig& cfg) {
  cfg.validate();
  const Matrix& z = trace.penultimate();
  const int num_classes = static_cast<int>(trace.logits().cols());
  TotalLoss out;
  LossValue ce = cross_entropy(trace.logits(), labels);
  out.cross_entropy = ce.value;
  out.value = ce.value;
  out.d_logits = std::move(ce.grad);
  out.d_penultimate = Matrix::Zero(z.rows(), z.cols());

  if (cfg.enable_dist && cfg.w_dist != 0.0) {
    const LossValue dist = distance_loss(z, labels, num_classes, cfg);
    out.distance = dist.value;
    out.value += dist.value;
    out.d_penultimate += dist.grad;
  }
  if (cfg.enable_entropy && (cfg.lambda2 != 0.0 || cfg.lambda3 != 0.0)) {
    const LossValue ent = entropy_loss(z, cfg);
    const EntropyTerms raw = entropy_terms(z);
    out.variance_term = cfg.lambda2 * raw.variance;
    out.correlation_term = cfg.lambda3 * raw.correlation;
    out.value += ent.value;
    out.d_penultimate += ent.grad;
  }
  return out;
}

}  // namespace shiftscope
