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

// Composite training objective: cross-entropy + class-mean distance term +
// feature entropy term (variance and decorrelation).
//
// Conventions fixed by this module:
//  * The distance weight is stored as a nonnegative magnitude `w_dist`; the
//    applied coefficient is -w_dist, so larger class separation lowers the
//    loss.
//  * Class-mean distances are summed over unordered pairs and divided by
//    C(K, 2). Correlation terms are summed over unordered pairs (i < j) and
//    divided by C(D, 2).
//  * Variances and covariances use the population (1/n) normalization.
//  * A feature dimension with standard deviation below kDegenerateStd has its
//    correlations defined as zero and is flagged in BatchStats.

#ifndef SHIFTSCOPE_LOSSES_H_
#define SHIFTSCOPE_LOSSES_H_

#include <span>
#include <vector>

#include "shiftscope/common.h"
#include "shiftscope/net.h"

namespace shiftscope {

inline constexpr double kDegenerateStd = 1e-8;

struct LossConfig {
  double w_dist = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  bool enable_dist = false;
  bool enable_entropy = false;

  double lambda1() const { return -w_dist; }
  // True when a batch-statistics term contributes to the objective.
  bool uses_batch_terms() const {
    return (enable_dist && w_dist != 0.0) ||
           (enable_entropy && (lambda2 != 0.0 || lambda3 != 0.0));
  }
  void validate() const;

  static LossConfig cross_entropy_only() { return {}; }
  static LossConfig full(double w_dist, double lambda2, double lambda3) {
    return {w_dist, lambda2, lambda3, true, true};
  }
};

struct BatchStats {
  std::vector<Vector> class_means;  // indexed by label - 1
  std::vector<int> class_counts;
  Vector mean;
  Vector per_dim_variance;
  Matrix correlation;
  std::vector<bool> degenerate;  // per dimension
};

struct LossValue {
  double value = 0.0;
  Matrix grad;  // same shape as the differentiated input
};

struct TotalLoss {
  double value = 0.0;
  double cross_entropy = 0.0;
  double distance = 0.0;
  double variance_term = 0.0;     // weighted: lambda2 * D / sum Var
  double correlation_term = 0.0;  // weighted: lambda3 * mean C_ij^2
  Matrix d_logits;
  Matrix d_penultimate;
};

// Unweighted entropy components measured on a feature matrix.
struct EntropyTerms {
  double variance = 0.0;     // D / sum_i Var(z_i)
  double correlation = 0.0;  // mean over i < j of C_ij^2
};

BatchStats batch_stats(const Matrix& z, std::span<const int> labels,
                       int num_classes);

LossValue cross_entropy(const Matrix& logits, std::span<const int> labels);

LossValue distance_loss(const Matrix& z, std::span<const int> labels,
                        int num_classes, const LossConfig& cfg);

// Weighted entropy loss. Throws NumericalError when every feature dimension
// is degenerate (zero total variance).
LossValue entropy_loss(const Matrix& z, const LossConfig& cfg);

EntropyTerms entropy_terms(const Matrix& z);

// Sum of the enabled terms. A term whose weight is exactly zero is skipped,
// so such configurations reproduce the cross-entropy path bit for bit.
TotalLoss total_loss(const ForwardTrace& trace, std::span<const int> labels,
                     const LossConfig& cfg);

}  // namespace shiftscope

#endif  // SHIFTSCOPE_LOSSES_H_
