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

// Independent reference implementations used only by tests. Nothing here
// calls into the library code paths it checks: the metrics are exhaustive
// threshold/pair enumerations, the net forward pass is explicit scalar loops,
// and the loss oracles evaluate the textbook formulas term by term.

#ifndef SHIFTSCOPE_TESTS_ORACLES_H_
#define SHIFTSCOPE_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <vector>

#include "shiftscope/common.h"
#include "shiftscope/net.h"

namespace shiftscope::oracle {

// ---- metrics ---------------------------------------------------------------

inline double auroc(const std::vector<double>& id, const std::vector<double>& nas) {
  double wins = 0.0;
  for (double a : id) {
    for (double b : nas) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(id.size()) * static_cast<double>(nas.size()));
}

inline double frac_at_least(const std::vector<double>& v, double tau) {
  double c = 0;
  for (double x : v) c += x >= tau ? 1.0 : 0.0;
  return c / static_cast<double>(v.size());
}

inline double frac_below(const std::vector<double>& v, double tau) {
  double c = 0;
  for (double x : v) c += x < tau ? 1.0 : 0.0;
  return c / static_cast<double>(v.size());
}

inline std::vector<double> candidate_thresholds(const std::vector<double>& id,
                                                const std::vector<double>& nas) {
  std::set<double> all(id.begin(), id.end());
  all.insert(nas.begin(), nas.end());
  return {all.begin(), all.end()};
}

inline double tnr_at_tpr(const std::vector<double>& id, const std::vector<double>& nas,
                         double target) {
  // Largest feasible threshold among all observed scores.
  double best_tau = -std::numeric_limits<double>::infinity();
  for (double tau : candidate_thresholds(id, nas)) {
    if (frac_at_least(id, tau) >= target) best_tau = std::max(best_tau, tau);
  }
  return frac_below(nas, best_tau);
}

inline double detection_accuracy(const std::vector<double>& id,
                                 const std::vector<double>& nas) {
  double best = 0.5;  // tau = +inf
  for (double tau : candidate_thresholds(id, nas)) {
    best = std::max(best, 0.5 * frac_at_least(id, tau) + 0.5 * frac_below(nas, tau));
  }
  return best;
}

// Average precision with `pos` as the positive class and higher = positive.
inline double average_precision(const std::vector<double>& pos,
                                const std::vector<double>& neg) {
  auto thresholds = candidate_thresholds(pos, neg);
  std::sort(thresholds.rbegin(), thresholds.rend());
  double prev_recall = 0.0;
  double area = 0.0;
  for (double tau : thresholds) {
    double tp = 0, fp = 0;
    for (double x : pos) tp += x >= tau ? 1 : 0;
    for (double x : neg) fp += x >= tau ? 1 : 0;
    const double recall = tp / static_cast<double>(pos.size());
    if (tp + fp > 0) area += (recall - prev_recall) * tp / (tp + fp);
    prev_recall = recall;
  }
  return area;
}

inline std::vector<double> negate(std::vector<double> v) {
  for (double& x : v) x = -x;
  return v;
}

// ---- dense net -------------------------------------------------------------

inline double act(Activation a, double x) {
  switch (a) {
    case Activation::kRelu:
      return x > 0 ? x : 0.0;
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kIdentity:
      return x;
  }
  return x;
}

// Scalar-loop forward pass; returns {penultimate, logits}.
inline std::pair<Matrix, Matrix> forward_loops(const DenseNet& net, const Matrix& x) {
  std::vector<std::vector<double>> rows_pen;
  Matrix pen, logits;
  const int transitions = static_cast<int>(net.weights.size());
  std::vector<Matrix> acts{x};
  for (int l = 0; l < transitions; ++l) {
    const Matrix& in = acts.back();
    const Matrix& w = net.weights[l];
    Matrix out(in.rows(), w.cols());
    for (Eigen::Index n = 0; n < in.rows(); ++n) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        double s = net.biases[l](j);
        for (Eigen::Index i = 0; i < w.rows(); ++i) s += in(n, i) * w(i, j);
        out(n, j) = l + 1 < transitions ? act(net.activation, s) : s;
      }
    }
    acts.push_back(out);
  }
  return {acts[acts.size() - 2], acts.back()};
}

// ---- losses ----------------------------------------------------------------

inline double cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < logits.cols(); ++j) m = std::max(m, logits(i, j));
    double s = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) s += std::exp(logits(i, j) - m);
    total += -(logits(i, labels[i] - 1) - m - std::log(s));
  }
  return total / static_cast<double>(logits.rows());
}

inline double distance_term(const Matrix& z, const std::vector<int>& labels, int k,
                            double w_dist) {
  // Ordered double sum over l != k divided by 2 C(K,2): equals the
  // unordered-pair convention.
  std::vector<std::vector<double>> mu(k, std::vector<double>(z.cols(), 0.0));
  std::vector<double> cnt(k, 0.0);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) mu[labels[i] - 1][j] += z(i, j);
    cnt[labels[i] - 1] += 1;
  }
  for (int c = 0; c < k; ++c) {
    for (auto& v : mu[c]) v /= cnt[c];
  }
  double sum = 0.0;
  for (int l = 0; l < k; ++l) {
    for (int m = 0; m < k; ++m) {
      if (l == m) continue;
      double sq = 0.0;
      for (Eigen::Index j = 0; j < z.cols(); ++j) sq += std::pow(mu[l][j] - mu[m][j], 2);
      sum += std::sqrt(sq);
    }
  }
  const double pairs = 0.5 * k * (k - 1);
  return -w_dist * (sum / 2.0) / pairs / std::sqrt(static_cast<double>(z.cols()));
}

// Textbook population covariance, element by element.
inline Matrix covariance(const Matrix& z) {
  const Eigen::Index n = z.rows(), d = z.cols();
  std::vector<double> mean(d, 0.0);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) mean[j] += z(i, j);
    mean[j] /= static_cast<double>(n);
  }
  Matrix cov(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) s += (z(i, a) - mean[a]) * (z(i, b) - mean[b]);
      cov(a, b) = s / static_cast<double>(n);
    }
  }
  return cov;
}

inline double entropy_term(const Matrix& z, double lambda2, double lambda3) {
  const Matrix cov = covariance(z);
  const Eigen::Index d = z.cols();
  double total_var = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) total_var += cov(i, i);
  double corr_sq = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (i == j) continue;
      const double c = cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
      corr_sq += c * c;
    }
  }
  const double pairs = 0.5 * static_cast<double>(d) * static_cast<double>(d - 1);
  return lambda2 * static_cast<double>(d) / total_var + lambda3 * (corr_sq / 2.0) / pairs;
}

// ---- finite differences ------------------------------------------------------

inline double central_difference(const std::function<double()>& f, double& x,
                                 double h = 1e-5) {
  const double saved = x;
  x = saved + h;
  const double plus = f();
  x = saved - h;
  const double minus = f();
  x = saved;
  return (plus - minus) / (2.0 * h);
}

// |a - b| / max(|a|, |b|), with an absolute fallback near zero.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < floor) return std::abs(analytic - numeric) / floor;
  return std::abs(analytic - numeric) / scale;
}

}  // namespace shiftscope::oracle

#endif  // SHIFTSCOPE_TESTS_ORACLES_H_
