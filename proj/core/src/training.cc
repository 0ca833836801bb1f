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

#include "shiftscope/training.h"

#include <algorithm>
#include <string>

namespace shiftscope {
namespace {

class Adam {
 public:
  Adam(const DenseNet& net, const OptimizerConfig& cfg) : cfg_(cfg) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      m_w_.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
      v_w_.push_back(m_w_.back());
      m_b_.push_back(Vector::Zero(net.biases[l].size()));
      v_b_.push_back(m_b_.back());
    }
  }

  void step(DenseNet& net, const GradientSet& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      update(net.weights[l], grads.weights[l], m_w_[l], v_w_[l], c1, c2);
      update(net.biases[l], grads.biases[l], m_b_[l], v_b_[l], c1, c2);
    }
  }

 private:
  template <typename Param>
  void update(Param& param, const Param& grad, Param& m, Param& v, double c1,
              double c2) const {
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    param.array() -= cfg_.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + cfg_.epsilon);
  }

  OptimizerConfig cfg_;
  int t_ = 0;
  std::vector<Matrix> m_w_, v_w_;
  std::vector<Vector> m_b_, v_b_;
};

}  // namespace

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("Adam betas must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw InvalidArgument("Adam epsilon must be > 0");
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
}

std::vector<std::vector<int>> stratified_batches(std::span<const int> labels,
                                                 int num_classes,
                                                 int batch_size, Rng& rng) {
  std::vector<std::vector<int>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[labels[i] - 1].push_back(static_cast<int>(i));
  }
  std::size_t smallest = labels.size();
  for (const auto& members : by_class) {
    smallest = std::min(smallest, members.size());
  }
  std::size_t num_batches =
      std::max<std::size_t>(1, labels.size() / static_cast<std::size_t>(batch_size));
  num_batches = std::max<std::size_t>(1, std::min(num_batches, smallest));

  std::vector<std::vector<int>> batches(num_batches);
  std::size_t cursor = 0;
  for (auto& members : by_class) {
    rng.shuffle(members);
    for (int index : members) {
      batches[cursor % num_batches].push_back(index);
      ++cursor;
    }
  }
  for (auto& batch : batches) rng.shuffle(batch);
  rng.shuffle(batches);
  return batches;
}

TrainResult train(const DenseNet& initial, const LabeledDataset& data,
                  const LossConfig& loss_cfg, const OptimizerConfig& opt_cfg,
                  int epochs, std::uint64_t seed) {
  initial.validate();
  data.validate();
  loss_cfg.validate();
  opt_cfg.validate();
  if (data.size() == 0) throw InvalidArgument("training data is empty");
  if (data.dim() != initial.input_dim()) {
    throw InvalidArgument("data dimension does not match the net input");
  }
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  const int num_classes = initial.num_classes();
  check_labels(data.labels, num_classes);
  std::vector<int> counts(num_classes, 0);
  for (int label : data.labels) ++counts[label - 1];
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      throw InvalidArgument("class " + std::to_string(c + 1) +
                            " is absent from the training data");
    }
  }
  if (loss_cfg.uses_batch_terms() && opt_cfg.batch_size < 2 * num_classes) {
    throw InvalidArgument("batch size " + std::to_string(opt_cfg.batch_size) +
                          " is below 2K = " + std::to_string(2 * num_classes) +
                          " required by the batch-statistics loss terms");
  }

  TrainResult result;
  result.net = initial;
  Adam adam(result.net, opt_cfg);
  Rng rng(seed);
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const auto batches =
        stratified_batches(data.labels, num_classes, opt_cfg.batch_size, rng);
    EpochLog log;
    log.epoch = epoch;
    for (const auto& batch : batches) {
      Matrix inputs(batch.size(), data.dim());
      Labels labels(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        inputs.row(i) = data.inputs.row(batch[i]);
        labels[i] = data.labels[batch[i]];
      }
      const ForwardTrace trace = forward(result.net, inputs);
      const TotalLoss loss = total_loss(trace, labels, loss_cfg);
      const GradientSet grads = backward(result.net, trace, loss.d_logits,
                                         loss.d_penultimate, false);
      adam.step(result.net, grads);
      log.total += loss.value;
      log.cross_entropy += loss.cross_entropy;
      log.distance += loss.distance;
      log.variance += loss.variance_term;
      log.correlation += loss.correlation_term;
    }
    const double count = static_cast<double>(batches.size());
    log.total /= count;
    log.cross_entropy /= count;
    log.distance /= count;
    log.variance /= count;
    log.correlation /= count;
    result.history.push_back(log);
  }
  return result;
}

}  // namespace shiftscope
