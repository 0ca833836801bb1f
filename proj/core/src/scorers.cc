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

#include "shiftscope/scorers.h"

#include <algorithm>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

namespace shiftscope {
namespace {

// Precision of the ridge-regularized covariance; throws if not PD.
Matrix invert_covariance(const Matrix& covariance) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("covariance eigendecomposition failed");
  }
  const Vector& values = eig.eigenvalues();
  const double largest = std::max(values.maxCoeff(), 0.0);
  if (!(values.minCoeff() > largest * 1e-14) || !(largest > 0.0)) {
    throw NumericalError(
        "tied covariance is singular; use a positive ridge");
  }
  const Matrix& vectors = eig.eigenvectors();
  Matrix precision =
      vectors * values.cwiseInverse().asDiagonal() * vectors.transpose();
  return 0.5 * (precision + precision.transpose());
}

MahalanobisLayer fit_layer(const Matrix& features, std::span<const int> labels,
                           int num_classes, std::optional<double> ridge) {
  const Eigen::Index dim = features.cols();
  MahalanobisLayer layer;
  layer.class_means.assign(num_classes, Vector::Zero(dim));
  std::vector<int> counts(num_classes, 0);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    layer.class_means[labels[i] - 1] += features.row(i).transpose();
    ++counts[labels[i] - 1];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] < 2) {
      throw InvalidArgument("class " + std::to_string(c + 1) +
                            " needs at least two samples");
    }
    layer.class_means[c] /= counts[c];
  }
  Matrix centered(features.rows(), dim);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    centered.row(i) = features.row(i) - layer.class_means[labels[i] - 1].transpose();
  }
  Matrix covariance =
      centered.transpose() * centered / static_cast<double>(features.rows());
  if (ridge.has_value()) {
    if (!(*ridge >= 0.0)) throw InvalidArgument("ridge must be >= 0");
    layer.ridge = *ridge;
  } else {
    layer.ridge = 1e-6 * covariance.trace() / static_cast<double>(dim);
  }
  covariance.diagonal().array() += layer.ridge;
  layer.precision = invert_covariance(covariance);
  return layer;
}

Vector score_layer(const MahalanobisLayer& layer, const Matrix& features) {
  if (features.cols() != layer.precision.rows()) {
    throw InvalidArgument("feature width does not match the fitted layer");
  }
  Vector scores(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Vector& mean : layer.class_means) {
      const Vector diff = features.row(i).transpose() - mean;
      best = std::max(best, -diff.dot(layer.precision * diff));
    }
    scores(i) = best;
  }
  return scores;
}

std::size_t triangle_size(Eigen::Index dim) {
  return static_cast<std::size_t>(dim * (dim + 1) / 2);
}

}  // namespace

double score_msp(const Eigen::Ref<const RowVector>& logits) {
  const double top = logits.maxCoeff();
  return 1.0 / (logits.array() - top).exp().sum();
}

Vector msp_scores(const Matrix& logits) {
  Vector out(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) out(i) = score_msp(RowVector(logits.row(i)));
  return out;
}

void OdinConfig::validate() const {
  if (!(temperature > 0.0)) throw InvalidArgument("ODIN temperature must be > 0");
  if (!(epsilon >= 0.0)) throw InvalidArgument("ODIN epsilon must be >= 0");
}

Vector odin_scores(const DenseNet& net, const Matrix& inputs,
                   const OdinConfig& cfg) {
  cfg.validate();
  const ForwardTrace trace = forward(net, inputs);
  Matrix perturbed = inputs;
  if (cfg.epsilon > 0.0) {
    // Gradient of -log S(x; T) with respect to the logits is
    // (softmax(z / T) - onehot(argmax)) / T.
    Matrix d_logits = softmax_rows(trace.logits(), cfg.temperature);
    const Labels top = predict_labels(trace.logits());
    for (Eigen::Index i = 0; i < d_logits.rows(); ++i) d_logits(i, top[i] - 1) -= 1.0;
    d_logits /= cfg.temperature;
    const GradientSet grads =
        backward(net, trace, d_logits,
                 Matrix::Zero(trace.penultimate().rows(), trace.penultimate().cols()),
                 true);
    perturbed -= cfg.epsilon * grads.input->array().sign().matrix();
  }
  const Matrix logits =
      cfg.epsilon > 0.0 ? forward(net, perturbed).logits() : trace.logits();
  Vector out(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    out(i) = score_msp(RowVector(logits.row(i) / cfg.temperature));
  }
  return out;
}

double score_odin(const DenseNet& net, const Eigen::Ref<const RowVector>& x,
                  const OdinConfig& cfg) {
  return odin_scores(net, Matrix(x), cfg)(0);
}

double score_energy(const Eigen::Ref<const RowVector>& logits,
                    double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("energy temperature must be > 0");
  return temperature * log_sum_exp(logits / temperature);
}

Vector energy_scores(const Matrix& logits, double temperature) {
  Vector out(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    out(i) = score_energy(RowVector(logits.row(i)), temperature);
  }
  return out;
}

std::vector<int> LayerSelection::all_hidden(int num_hidden) {
  std::vector<int> layers(num_hidden);
  for (int l = 0; l < num_hidden; ++l) layers[l] = l + 1;
  return layers;
}

MahalanobisModel fit_mahalanobis(const ForwardTrace& trace,
                                 std::span<const int> labels,
                                 const std::vector<int>& layers,
                                 std::optional<double> ridge) {
  if (static_cast<Eigen::Index>(labels.size()) != trace.batch_size()) {
    throw InvalidArgument("label count does not match trace batch size");
  }
  if (layers.empty()) throw InvalidArgument("no layers selected");
  const int num_classes = static_cast<int>(trace.logits().cols());
  check_labels(labels, num_classes);
  MahalanobisModel model;
  for (int layer : layers) {
    if (layer < 1 || layer > trace.num_hidden()) {
      throw InvalidArgument("layer " + std::to_string(layer) +
                            " is not a hidden layer of the trace");
    }
    MahalanobisLayer fitted =
        fit_layer(trace.hidden(layer), labels, num_classes, ridge);
    fitted.layer = layer;
    model.layers.push_back(std::move(fitted));
  }
  return model;
}

MahalanobisModel fit_mahalanobis(const Matrix& features,
                                 std::span<const int> labels,
                                 std::optional<double> ridge) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw InvalidArgument("label count does not match feature rows");
  }
  const int num_classes = infer_num_classes(labels);
  MahalanobisModel model;
  MahalanobisLayer fitted = fit_layer(features, labels, num_classes, ridge);
  fitted.layer = 0;
  model.layers.push_back(std::move(fitted));
  return model;
}

Vector score_mahalanobis(const MahalanobisModel& model,
                         const ForwardTrace& trace) {
  Vector total = Vector::Zero(trace.batch_size());
  for (const auto& layer : model.layers) {
    if (layer.layer < 1 || layer.layer > trace.num_hidden()) {
      throw InvalidArgument("model layer " + std::to_string(layer.layer) +
                            " is not present in the trace");
    }
    total += layer.weight * score_layer(layer, trace.hidden(layer.layer));
  }
  return total;
}

Vector score_mahalanobis(const MahalanobisModel& model,
                         const Matrix& features) {
  if (model.layers.size() != 1) {
    throw InvalidArgument("raw feature scoring needs a single-layer model");
  }
  return model.layers[0].weight * score_layer(model.layers[0], features);
}

Vector gram_features(const Eigen::Ref<const RowVector>& activation, int order) {
  const RowVector powered = activation.array().pow(order).matrix();
  const Eigen::Index dim = powered.size();
  Vector out(triangle_size(dim));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i; j < dim; ++j) out(k++) = powered(i) * powered(j);
  }
  return out;
}

double gram_deviation(double value, double lo, double hi) {
  const double excess = std::max({0.0, lo - value, value - hi});
  return excess / (std::abs(lo) + std::abs(hi) + 1e-9);
}

GramBounds fit_gram(const ForwardTrace& trace, std::span<const int> labels,
                    int num_classes, const std::vector<int>& layers,
                    const std::vector<int>& orders) {
  if (static_cast<Eigen::Index>(labels.size()) != trace.batch_size()) {
    throw InvalidArgument("label count does not match trace batch size");
  }
  check_labels(labels, num_classes);
  if (layers.empty() || orders.empty()) {
    throw InvalidArgument("gram fit needs layers and orders");
  }
  for (int p : orders) {
    if (p < 1) throw InvalidArgument("gram orders must be positive");
  }
  for (int layer : layers) {
    if (layer < 1 || layer > trace.num_hidden()) {
      throw InvalidArgument("layer " + std::to_string(layer) +
                            " is not a hidden layer of the trace");
    }
  }
  GramBounds bounds;
  bounds.layers = layers;
  bounds.orders = orders;
  bounds.mins.resize(num_classes);
  bounds.maxs.resize(num_classes);
  std::vector<bool> seen(num_classes, false);
  for (Eigen::Index i = 0; i < trace.batch_size(); ++i) {
    const int c = labels[i] - 1;
    if (!seen[c]) {
      bounds.mins[c].resize(layers.size());
      bounds.maxs[c].resize(layers.size());
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const Matrix& act = trace.hidden(layers[l]);
      if (!seen[c]) {
        bounds.mins[c][l].resize(orders.size());
        bounds.maxs[c][l].resize(orders.size());
      }
      for (std::size_t o = 0; o < orders.size(); ++o) {
        const Vector feats = gram_features(act.row(i), orders[o]);
        if (!seen[c]) {
          bounds.mins[c][l][o] = feats;
          bounds.maxs[c][l][o] = feats;
        } else {
          bounds.mins[c][l][o] = bounds.mins[c][l][o].cwiseMin(feats);
          bounds.maxs[c][l][o] = bounds.maxs[c][l][o].cwiseMax(feats);
        }
      }
    }
    seen[c] = true;
  }
  for (int c = 0; c < num_classes; ++c) {
    if (!seen[c]) {
      throw InvalidArgument("class " + std::to_string(c + 1) +
                            " has no fitting samples");
    }
  }
  return bounds;
}

Vector score_gram(const GramBounds& bounds, const ForwardTrace& trace) {
  const Labels predicted = predict_labels(trace.logits());
  Vector scores(trace.batch_size());
  for (Eigen::Index i = 0; i < trace.batch_size(); ++i) {
    const int c = predicted[i] - 1;
    if (c >= bounds.num_classes()) {
      throw InvalidArgument("trace predicts a class unknown to the bounds");
    }
    double deviation = 0.0;
    for (std::size_t l = 0; l < bounds.layers.size(); ++l) {
      const Matrix& act = trace.hidden(bounds.layers[l]);
      for (std::size_t o = 0; o < bounds.orders.size(); ++o) {
        const Vector feats = gram_features(act.row(i), bounds.orders[o]);
        const Vector& lo = bounds.mins[c][l][o];
        const Vector& hi = bounds.maxs[c][l][o];
        if (feats.size() != lo.size()) {
          throw InvalidArgument("trace layer width does not match the bounds");
        }
        for (Eigen::Index k = 0; k < feats.size(); ++k) {
          deviation += gram_deviation(feats(k), lo(k), hi(k));
        }
      }
    }
    scores(i) = -deviation;
  }
  return scores;
}

std::string scorer_name(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kMsp:
      return "msp";
    case ScorerKind::kOdin:
      return "odin";
    case ScorerKind::kMahalanobis:
      return "mahalanobis";
    case ScorerKind::kMahalanobisEnsemble:
      return "mahalanobis-ensemble";
    case ScorerKind::kEnergy:
      return "energy";
    case ScorerKind::kGram:
      return "gram";
  }
  return "msp";
}

const std::vector<ScorerKind>& all_scorers() {
  static const std::vector<ScorerKind> kinds = {
      ScorerKind::kMsp,    ScorerKind::kOdin,
      ScorerKind::kMahalanobis, ScorerKind::kMahalanobisEnsemble,
      ScorerKind::kEnergy, ScorerKind::kGram};
  return kinds;
}

std::optional<ScorerKind> parse_scorer(const std::string& name) {
  for (ScorerKind kind : all_scorers()) {
    if (scorer_name(kind) == name) return kind;
  }
  return std::nullopt;
}

ScoringSuite::ScoringSuite(DenseNet net, const LabeledDataset& train,
                           const std::vector<ScorerKind>& kinds,
                           ScorerSettings settings)
    : net_(std::move(net)), settings_(std::move(settings)) {
  net_.validate();
  settings_.odin.validate();
  const bool needs_trace = std::any_of(kinds.begin(), kinds.end(), [](ScorerKind k) {
    return k == ScorerKind::kMahalanobis || k == ScorerKind::kMahalanobisEnsemble ||
           k == ScorerKind::kGram;
  });
  if (!needs_trace) return;
  const ForwardTrace trace = forward(net_, train.inputs);
  const int hidden = net_.num_hidden();
  for (ScorerKind kind : kinds) {
    if (kind == ScorerKind::kMahalanobis && !mahalanobis_) {
      mahalanobis_ = fit_mahalanobis(trace, train.labels,
                                     LayerSelection::penultimate(hidden),
                                     settings_.mahalanobis_ridge);
    } else if (kind == ScorerKind::kMahalanobisEnsemble && !mahalanobis_ensemble_) {
      mahalanobis_ensemble_ = fit_mahalanobis(trace, train.labels,
                                              LayerSelection::all_hidden(hidden),
                                              settings_.mahalanobis_ridge);
    } else if (kind == ScorerKind::kGram && !gram_) {
      gram_ = fit_gram(trace, train.labels, net_.num_classes(),
                       LayerSelection::all_hidden(hidden), settings_.gram_orders);
    }
  }
}

Vector ScoringSuite::score(ScorerKind kind, const Matrix& inputs) const {
  switch (kind) {
    case ScorerKind::kMsp:
      return msp_scores(forward(net_, inputs).logits());
    case ScorerKind::kOdin:
      return odin_scores(net_, inputs, settings_.odin);
    case ScorerKind::kEnergy:
      return energy_scores(forward(net_, inputs).logits(),
                          settings_.energy_temperature);
    case ScorerKind::kMahalanobis:
      if (!mahalanobis_) throw InvalidArgument("mahalanobis scorer not fitted");
      return score_mahalanobis(*mahalanobis_, forward(net_, inputs));
    case ScorerKind::kMahalanobisEnsemble:
      if (!mahalanobis_ensemble_) {
        throw InvalidArgument("mahalanobis-ensemble scorer not fitted");
      }
      return score_mahalanobis(*mahalanobis_ensemble_, forward(net_, inputs));
    case ScorerKind::kGram:
      if (!gram_) throw InvalidArgument("gram scorer not fitted");
      return score_gram(*gram_, forward(net_, inputs));
  }
  throw InvalidArgument("unknown scorer");
}

}  // namespace shiftscope
