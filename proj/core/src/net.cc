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

#include "shiftscope/net.h"

#include <string>

namespace shiftscope {
namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Matrix activate(Activation activation, const Matrix& pre) {
  switch (activation) {
    case Activation::kRelu:
      return pre.cwiseMax(0.0);
    case Activation::kTanh:
      return pre.array().tanh().matrix();
    case Activation::kIdentity:
      return pre;
  }
  return pre;
}

// Elementwise derivative of the activation evaluated at `pre`, given the
// activation output `post`.
Matrix activation_slope(Activation activation, const Matrix& pre,
                        const Matrix& post) {
  switch (activation) {
    case Activation::kRelu:
      return (pre.array() > 0.0).cast<double>().matrix();
    case Activation::kTanh:
      return (1.0 - post.array().square()).matrix();
    case Activation::kIdentity:
      return Matrix::Ones(pre.rows(), pre.cols());
  }
  return Matrix::Ones(pre.rows(), pre.cols());
}

}  // namespace

std::string activation_name(Activation activation) {
  switch (activation) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
  }
  return "relu";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw InvalidArgument("unknown activation '" + name + "'");
}

void DenseNet::validate() const {
  if (layer_sizes.size() < 3) {
    throw InvalidArgument(
        "a net needs an input, at least one hidden and an output layer");
  }
  for (int size : layer_sizes) {
    if (size < 1) throw InvalidArgument("layer sizes must be >= 1");
  }
  if (penultimate_dim() < 2) {
    throw InvalidArgument("penultimate layer width must be >= 2, got " +
                          std::to_string(penultimate_dim()));
  }
  if (weights.size() != layer_sizes.size() - 1 ||
      biases.size() != weights.size()) {
    throw InvalidArgument("parameter count does not match layer sizes");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_sizes[l] ||
        weights[l].cols() != layer_sizes[l + 1] ||
        biases[l].size() != layer_sizes[l + 1]) {
      throw InvalidArgument("parameter shapes of transition " +
                            std::to_string(l) + " are inconsistent");
    }
  }
}

DenseNet init_net(const std::vector<int>& layer_sizes, std::uint64_t seed,
                  Activation activation) {
  if (layer_sizes.empty()) throw InvalidArgument("empty layer list");
  DenseNet net;
  net.layer_sizes = layer_sizes;
  net.activation = activation;
  net.seed = seed;
  for (int size : layer_sizes) {
    if (size < 1) throw InvalidArgument("layer sizes must be >= 1");
  }
  if (layer_sizes.size() < 3) {
    throw InvalidArgument(
        "a net needs an input, at least one hidden and an output layer");
  }
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const double bound = std::sqrt(6.0 / fan_in);
    Matrix w(fan_in, layer_sizes[l + 1]);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        w(i, j) = rng.uniform(-bound, bound);
      }
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(layer_sizes[l + 1]));
  }
  net.validate();
  return net;
}

ForwardTrace forward(const DenseNet& net, const Matrix& batch) {
  if (batch.cols() != net.input_dim()) {
    throw InvalidArgument("batch has " + std::to_string(batch.cols()) +
                          " columns, net expects " +
                          std::to_string(net.input_dim()));
  }
  ForwardTrace trace;
  const int transitions = net.num_transitions();
  trace.pre.reserve(transitions);
  trace.post.reserve(transitions);
  trace.post.push_back(batch);
  for (int l = 0; l < transitions; ++l) {
    Matrix pre = trace.post.back() * net.weights[l];
    pre.rowwise() += net.biases[l].transpose();
    if (l + 1 < transitions) {
      trace.post.push_back(activate(net.activation, pre));
    }
    trace.pre.push_back(std::move(pre));
  }
  return trace;
}

GradientSet backward(const DenseNet& net, const ForwardTrace& trace,
                     const Matrix& d_logits, const Matrix& d_penultimate,
                     bool want_input_grad) {
  const Matrix& logits = trace.logits();
  const Matrix& penultimate = trace.penultimate();
  if (d_logits.rows() != logits.rows() || d_logits.cols() != logits.cols()) {
    throw InvalidArgument("d_logits is " + shape(d_logits) + ", logits are " +
                          shape(logits));
  }
  if (d_penultimate.rows() != penultimate.rows() ||
      d_penultimate.cols() != penultimate.cols()) {
    throw InvalidArgument("d_penultimate is " + shape(d_penultimate) +
                          ", penultimate features are " + shape(penultimate));
  }
  const int transitions = net.num_transitions();
  GradientSet grads;
  grads.weights.resize(transitions);
  grads.biases.resize(transitions);

  // `delta` holds dL/d(pre-activation) of transition l.
  Matrix delta = d_logits;
  for (int l = transitions - 1; l >= 0; --l) {
    grads.weights[l] = trace.post[l].transpose() * delta;
    grads.biases[l] = delta.colwise().sum().transpose();
    if (l == 0 && !want_input_grad) break;
    Matrix upstream = delta * net.weights[l].transpose();
    if (l == 0) {
      grads.input = std::move(upstream);
      break;
    }
    if (l == transitions - 1) upstream += d_penultimate;
    delta = upstream.cwiseProduct(
        activation_slope(net.activation, trace.pre[l - 1], trace.post[l]));
  }
  return grads;
}

Labels predict_labels(const Matrix& logits) {
  Labels labels(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    labels[i] = static_cast<int>(best) + 1;
  }
  return labels;
}

double accuracy(const DenseNet& net, const Matrix& inputs,
                std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != inputs.rows()) {
    throw InvalidArgument("label count does not match input rows");
  }
  if (labels.empty()) return 0.0;
  const Labels predicted = predict_labels(forward(net, inputs).logits());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    correct += predicted[i] == labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace shiftscope
