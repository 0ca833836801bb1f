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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.h"
#include "test_util.h"

namespace shiftscope {
namespace {

using testing::cycled_labels;
using testing::random_matrix;

// Checks every entry of `analytic` against central differences of f(z).
void expect_gradient(const std::function<double(const Matrix&)>& f, Matrix z,
                     const Matrix& analytic, double tol = 1e-4) {
  ASSERT_EQ(analytic.rows(), z.rows());
  ASSERT_EQ(analytic.cols(), z.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double numeric =
        oracle::central_difference([&] { return f(z); }, z.data()[i]);
    EXPECT_LT(oracle::relative_error(analytic.data()[i], numeric), tol)
        << "entry " << i << " analytic " << analytic.data()[i] << " numeric " << numeric;
  }
}

TEST(CrossEntropy, UniformLogitsGiveLogTwo) {
  const LossValue ce = cross_entropy(Matrix::Zero(1, 2), Labels{1});
  EXPECT_NEAR(ce.value, std::log(2.0), 1e-15);
}

TEST(CrossEntropy, ConfidentCorrectIsNearZero) {
  Matrix logits(1, 2);
  logits << 20.0, -20.0;
  EXPECT_LT(cross_entropy(logits, Labels{1}).value, 1e-8);
}

TEST(CrossEntropy, MatchesLogSumExpOracle) {
  Rng rng(3);
  const Matrix logits = random_matrix(4, 3, rng, 2.0);
  const Labels labels{3, 1, 2, 2};
  EXPECT_NEAR(cross_entropy(logits, labels).value,
              oracle::cross_entropy(logits, labels), 1e-12);
}

TEST(CrossEntropy, GradientIsSoftmaxMinusOneHotOverBatch) {
  Rng rng(4);
  const Matrix logits = random_matrix(5, 3, rng);
  const Labels labels{1, 2, 3, 1, 2};
  const LossValue ce = cross_entropy(logits, labels);
  Matrix expected = softmax_rows(logits);
  for (int i = 0; i < 5; ++i) expected(i, labels[i] - 1) -= 1.0;
  expected /= 5.0;
  EXPECT_TRUE(ce.grad.isApprox(expected, 1e-14));
}

TEST(CrossEntropy, RejectsOutOfRangeLabel) {
  EXPECT_THROW(cross_entropy(Matrix::Zero(2, 3), Labels{1, 4}), InvalidArgument);
  EXPECT_THROW(cross_entropy(Matrix::Zero(2, 3), Labels{0, 1}), InvalidArgument);
}

TEST(DistanceLoss, TwoClassWorkedExample) {
  Matrix z = Matrix::Zero(2, 4);
  z(1, 0) = 2.0;
  const LossValue d = distance_loss(z, Labels{1, 2}, 2, LossConfig::full(0.1, 0, 0));
  EXPECT_NEAR(d.value, -0.1, 1e-15);
}

TEST(DistanceLoss, CoincidentMeansGiveZero) {
  const Matrix z = Matrix::Constant(6, 3, 1.5);
  const LossValue d =
      distance_loss(z, cycled_labels(6, 3), 3, LossConfig::full(0.1, 0, 0));
  EXPECT_EQ(d.value, 0.0);
  EXPECT_TRUE(d.grad.isZero());
}

TEST(DistanceLoss, MatchesDoubleSumOracle) {
  Rng rng(5);
  const Matrix z = random_matrix(12, 5, rng);
  const Labels labels = cycled_labels(12, 4);
  const LossConfig cfg = LossConfig::full(0.3, 0, 0);
  EXPECT_NEAR(distance_loss(z, labels, 4, cfg).value,
              oracle::distance_term(z, labels, 4, 0.3), 1e-13);
}

TEST(DistanceLoss, GradientMatchesFiniteDifferences) {
  Rng rng(6);
  const Matrix z = random_matrix(9, 4, rng);
  const Labels labels = cycled_labels(9, 3);
  const LossConfig cfg = LossConfig::full(0.1, 0, 0);
  expect_gradient([&](const Matrix& m) { return distance_loss(m, labels, 3, cfg).value; },
                  z, distance_loss(z, labels, 3, cfg).grad);
}

TEST(DistanceLoss, RejectsAbsentClass) {
  EXPECT_THROW(distance_loss(Matrix::Zero(4, 2), Labels{1, 1, 2, 2}, 3,
                             LossConfig::full(0.1, 0, 0)),
               InvalidArgument);
}

TEST(DistanceLoss, ScalesLinearlyAndIsNonPositive) {
  Rng rng(7);
  const Matrix z = random_matrix(8, 3, rng);
  const Labels labels = cycled_labels(8, 2);
  const LossConfig cfg = LossConfig::full(0.1, 0, 0);
  const double base = distance_loss(z, labels, 2, cfg).value;
  EXPECT_LE(base, 0.0);
  EXPECT_NEAR(distance_loss(3.0 * z, labels, 2, cfg).value, 3.0 * base, 1e-13);
}

TEST(DistanceLoss, DecreasesAsMeansSeparate) {
  Rng rng(8);
  Matrix z = random_matrix(8, 3, rng);
  const Labels labels = cycled_labels(8, 2);
  const LossConfig cfg = LossConfig::full(0.1, 0, 0);
  const double before = distance_loss(z, labels, 2, cfg).value;
  const Vector gap = z.row(0) - z.row(1);
  for (int i = 0; i < 8; i += 2) z.row(i) += 0.5 * gap.transpose();
  EXPECT_LT(distance_loss(z, labels, 2, cfg).value, before);
}

TEST(EntropyLoss, WhitenedFeaturesGiveLambda2) {
  Matrix z(4, 2);
  z << 1, 1, 1, -1, -1, 1, -1, -1;
  EXPECT_NEAR(entropy_loss(z, LossConfig::full(0, 0.7, 0.4)).value, 0.7, 1e-15);
}

TEST(EntropyLoss, PerfectlyCorrelatedPair) {
  Matrix z(4, 2);
  z << 0, 0, 1, 1, 2, 2, 5, 5;
  const double v = oracle::covariance(z)(0, 0);
  const double expected = 0.5 * 2.0 / (2.0 * v) + 0.25 * 1.0;
  EXPECT_NEAR(entropy_loss(z, LossConfig::full(0, 0.5, 0.25)).value, expected, 1e-14);
}

TEST(EntropyLoss, MatchesCovarianceOracle) {
  Rng rng(9);
  const Matrix z = random_matrix(8, 4, rng);
  const LossConfig cfg = LossConfig::full(0, 0.3, 0.8);
  EXPECT_NEAR(entropy_loss(z, cfg).value, oracle::entropy_term(z, 0.3, 0.8), 1e-13);
}

TEST(EntropyLoss, GradientMatchesFiniteDifferences) {
  Rng rng(10);
  const Matrix z = random_matrix(8, 4, rng);
  const LossConfig cfg = LossConfig::full(0, 0.3, 0.8);
  expect_gradient([&](const Matrix& m) { return entropy_loss(m, cfg).value; }, z,
                  entropy_loss(z, cfg).grad);
}

TEST(EntropyLoss, GradientWithDegenerateDimension) {
  Rng rng(11);
  Matrix z = random_matrix(7, 4, rng);
  z.col(2).setConstant(0.25);
  const LossConfig cfg = LossConfig::full(0, 0.2, 1.0);
  const LossValue loss = entropy_loss(z, cfg);
  ASSERT_TRUE(std::isfinite(loss.value));
  // Only the non-degenerate columns are differentiable in the usual sense.
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j : {0, 1, 3}) {
      Matrix zz = z;
      const double numeric = oracle::central_difference(
          [&] { return entropy_loss(zz, cfg).value; }, zz(i, j));
      EXPECT_LT(oracle::relative_error(loss.grad(i, j), numeric), 1e-4);
    }
  }
}

TEST(EntropyLoss, ZeroTotalVarianceIsAnError) {
  EXPECT_THROW(entropy_loss(Matrix::Constant(5, 3, 2.0), LossConfig::full(0, 1, 1)),
               NumericalError);
}

TEST(EntropyLoss, RejectsTooSmallInputs) {
  EXPECT_THROW(entropy_loss(Matrix::Zero(1, 3), LossConfig::full(0, 1, 1)),
               InvalidArgument);
  EXPECT_THROW(entropy_loss(Matrix::Zero(4, 1), LossConfig::full(0, 1, 1)),
               InvalidArgument);
}

TEST(EntropyLoss, ScaleResponse) {
  Rng rng(12);
  const Matrix z = random_matrix(10, 3, rng);
  const EntropyTerms base = entropy_terms(z);
  const EntropyTerms scaled = entropy_terms(2.0 * z);
  EXPECT_NEAR(scaled.variance, base.variance / 4.0, 1e-14);
  EXPECT_NEAR(scaled.correlation, base.correlation, 1e-14);
}

TEST(BatchStats, TwoPointWorkedExample) {
  Matrix z(2, 2);
  z << 0, 0, 2, 2;
  const BatchStats s = batch_stats(z, Labels{1, 1}, 1);
  EXPECT_TRUE(s.class_means[0].isApprox(Vector::Ones(2)));
  EXPECT_TRUE(s.per_dim_variance.isApprox(Vector::Ones(2)));
  EXPECT_NEAR(s.correlation(0, 1), 1.0, 1e-15);
  EXPECT_EQ(s.class_counts, (std::vector<int>{2}));
}

TEST(BatchStats, ConstantDimensionIsFlagged) {
  Matrix z(3, 3);
  z << 1, 5, 2, 2, 5, 0, 4, 5, 1;
  const BatchStats s = batch_stats(z, Labels{1, 2, 1}, 2);
  EXPECT_EQ(s.degenerate, (std::vector<bool>{false, true, false}));
  EXPECT_TRUE(s.correlation.row(1).isZero());
  EXPECT_TRUE(s.correlation.col(1).isZero());
  EXPECT_EQ(s.correlation(0, 0), 1.0);
}

TEST(BatchStats, MatchesTextbookCovariance) {
  Rng rng(13);
  const Matrix z = random_matrix(11, 4, rng);
  const BatchStats s = batch_stats(z, cycled_labels(11, 2), 2);
  const Matrix cov = oracle::covariance(z);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(s.per_dim_variance(i), cov(i, i), 1e-12);
    for (int j = 0; j < 4; ++j) {
      EXPECT_NEAR(s.correlation(i, j), cov(i, j) / std::sqrt(cov(i, i) * cov(j, j)),
                  1e-12);
    }
  }
  EXPECT_TRUE(s.correlation.isApprox(s.correlation.transpose()));
  EXPECT_LE(s.correlation.cwiseAbs().maxCoeff(), 1.0 + 1e-9);
}

class TotalLossTest : public ::testing::Test {
 protected:
  void SetUp() override {
    net_ = init_net({2, 6, 5, 3}, 31);
    Rng rng(32);
    x_ = random_matrix(12, 2, rng);
    labels_ = cycled_labels(12, 3);
    trace_ = forward(net_, x_);
  }
  DenseNet net_;
  Matrix x_;
  Labels labels_;
  ForwardTrace trace_;
};

TEST_F(TotalLossTest, CrossEntropyOnlyEqualsCrossEntropy) {
  const TotalLoss t = total_loss(trace_, labels_, LossConfig::cross_entropy_only());
  const LossValue ce = cross_entropy(trace_.logits(), labels_);
  EXPECT_EQ(t.value, ce.value);
  EXPECT_EQ(t.d_logits, ce.grad);
  EXPECT_TRUE(t.d_penultimate.isZero());
}

TEST_F(TotalLossTest, ZeroWeightsEqualCrossEntropyExactly) {
  const TotalLoss t = total_loss(trace_, labels_, LossConfig::full(0, 0, 0));
  const TotalLoss ce = total_loss(trace_, labels_, LossConfig::cross_entropy_only());
  EXPECT_EQ(t.value, ce.value);
  EXPECT_EQ(t.d_logits, ce.d_logits);
  EXPECT_EQ(t.d_penultimate, ce.d_penultimate);
}

TEST_F(TotalLossTest, FullIsSumOfIndependentTerms) {
  const LossConfig cfg = LossConfig::full(0.1, 0.5, 0.2);
  const TotalLoss t = total_loss(trace_, labels_, cfg);
  const Matrix& z = trace_.penultimate();
  const double expected = oracle::cross_entropy(trace_.logits(), labels_) +
                          oracle::distance_term(z, labels_, 3, 0.1) +
                          oracle::entropy_term(z, 0.5, 0.2);
  EXPECT_NEAR(t.value, expected, 1e-12);
  EXPECT_NEAR(t.value, t.cross_entropy + t.distance + t.variance_term + t.correlation_term,
              1e-14);
}

TEST_F(TotalLossTest, PermutationInvariant) {
  const LossConfig cfg = LossConfig::full(0.1, 0.5, 0.2);
  std::vector<int> order(12);
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  Matrix xp(12, 2);
  Labels lp(12);
  for (int i = 0; i < 12; ++i) {
    xp.row(i) = x_.row(order[i]);
    lp[i] = labels_[order[i]];
  }
  EXPECT_NEAR(total_loss(forward(net_, xp), lp, cfg).value,
              total_loss(trace_, labels_, cfg).value, 1e-13);
}

TEST(LossConfig, RejectsNegativeWeights) {
  EXPECT_THROW(LossConfig::full(-0.1, 0, 0).validate(), InvalidArgument);
  EXPECT_THROW(LossConfig::full(0, -1, 0).validate(), InvalidArgument);
  EXPECT_THROW(LossConfig::full(0, 0, -1).validate(), InvalidArgument);
  EXPECT_EQ(LossConfig::full(0.1, 0, 0).lambda1(), -0.1);
}

}  // namespace
}  // namespace shiftscope
