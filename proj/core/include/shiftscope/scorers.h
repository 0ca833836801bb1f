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

// In-distribution score functions. Every scorer returns "higher = more
// in-distribution"; shifted samples are flagged by low scores.

#ifndef SHIFTSCOPE_SCORERS_H_
#define SHIFTSCOPE_SCORERS_H_

#include <optional>
#include <string>
#include <vector>

#include "shiftscope/common.h"
#include "shiftscope/data.h"
#include "shiftscope/net.h"

namespace shiftscope {

// Maximum softmax probability.
double score_msp(const Eigen::Ref<const RowVector>& logits);
// One score per logit row.
Vector msp_scores(const Matrix& logits);

struct OdinConfig {
  double temperature = 1000.0;
  double epsilon = 0.0;
  void validate() const;
};

// Tempered softmax confidence after one signed-gradient input step of size
// epsilon that decreases -log S(x; T).
Vector odin_scores(const DenseNet& net, const Matrix& inputs,
                   const OdinConfig& cfg);
double score_odin(const DenseNet& net, const Eigen::Ref<const RowVector>& x,
                  const OdinConfig& cfg);

// Negative free energy: T * logsumexp(logits / T).
double score_energy(const Eigen::Ref<const RowVector>& logits,
                    double temperature = 1.0);
Vector energy_scores(const Matrix& logits, double temperature = 1.0);

// Feature layers addressable by the Mahalanobis and gram scorers: hidden
// layer indices 1 .. net.num_hidden(); the penultimate layer is the last.
struct LayerSelection {
  static std::vector<int> penultimate(int num_hidden) { return {num_hidden}; }
  static std::vector<int> all_hidden(int num_hidden);
};

struct MahalanobisLayer {
  int layer = 0;
  std::vector<Vector> class_means;  // indexed by label - 1
  Matrix precision;                 // inverse tied covariance
  double weight = 1.0;              // alpha_l
  double ridge = 0.0;               // ridge actually applied
};

struct MahalanobisModel {
  std::vector<MahalanobisLayer> layers;
  int num_classes() const {
    return layers.empty() ? 0 : static_cast<int>(layers[0].class_means.size());
  }
};

// Tied-covariance Gaussian fit per selected layer. With `ridge` unset the
// applied ridge is 1e-6 * trace(Sigma) / D. Throws NumericalError when the
// regularized covariance is not positive definite.
MahalanobisModel fit_mahalanobis(const ForwardTrace& trace,
                                 std::span<const int> labels,
                                 const std::vector<int>& layers,
                                 std::optional<double> ridge = std::nullopt);

// Fit on the raw rows of a feature matrix (single layer, index 0).
MahalanobisModel fit_mahalanobis(const Matrix& features,
                                 std::span<const int> labels,
                                 std::optional<double> ridge = std::nullopt);

Vector score_mahalanobis(const MahalanobisModel& model,
                         const ForwardTrace& trace);
// Scores raw feature rows with a single-layer model.
Vector score_mahalanobis(const MahalanobisModel& model,
                         const Matrix& features);

// Per class, per layer, per order, per upper-triangular gram entry (i <= j)
// min/max of (a^p)_i (a^p)_j over the fitting data.
struct GramBounds {
  std::vector<int> layers;
  std::vector<int> orders;
  // mins[c][l][o] and maxs[c][l][o] are vectors of D_l (D_l + 1) / 2 entries.
  std::vector<std::vector<std::vector<Vector>>> mins;
  std::vector<std::vector<std::vector<Vector>>> maxs;

  int num_classes() const { return static_cast<int>(mins.size()); }
};

// Upper-triangular (row-major, i <= j) entries of (a^p)(a^p)^T.
Vector gram_features(const Eigen::Ref<const RowVector>& activation, int order);

GramBounds fit_gram(const ForwardTrace& trace, std::span<const int> labels,
                    int num_classes, const std::vector<int>& layers,
                    const std::vector<int>& orders = {1, 2});

// Minus the normalized total deviation of each sample, attributed to the
// class the net predicts for it.
Vector score_gram(const GramBounds& bounds, const ForwardTrace& trace);

// Deviation of a single gram entry v against [lo, hi].
double gram_deviation(double value, double lo, double hi);

// Named scorer kinds exposed through the CLI and experiments.
enum class ScorerKind {
  kMsp,
  kOdin,
  kMahalanobis,
  kMahalanobisEnsemble,
  kEnergy,
  kGram,
};

std::string scorer_name(ScorerKind kind);
std::optional<ScorerKind> parse_scorer(const std::string& name);
const std::vector<ScorerKind>& all_scorers();

struct ScorerSettings {
  OdinConfig odin;
  double energy_temperature = 1.0;
  std::optional<double> mahalanobis_ridge;
  std::vector<int> gram_orders = {1, 2};
};

// A net plus whatever each requested scorer needs fitted on ID training data.
class ScoringSuite {
 public:
  ScoringSuite(DenseNet net, const LabeledDataset& train,
               const std::vector<ScorerKind>& kinds,
               ScorerSettings settings = {});

  Vector score(ScorerKind kind, const Matrix& inputs) const;
  const DenseNet& net() const { return net_; }
  const std::optional<MahalanobisModel>& mahalanobis() const {
    return mahalanobis_;
  }
  const std::optional<MahalanobisModel>& mahalanobis_ensemble() const {
    return mahalanobis_ensemble_;
  }
  const std::optional<GramBounds>& gram() const { return gram_; }

 private:
  DenseNet net_;
  ScorerSettings settings_;
  std::optional<MahalanobisModel> mahalanobis_;
  std::optional<MahalanobisModel> mahalanobis_ensemble_;
  std::optional<GramBounds> gram_;
};

}  // namespace shiftscope

#endif  // SHIFTSCOPE_SCORERS_H_
