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

// Dense feedforward classifier with explicit forward and reverse passes.
//
// A net with layer sizes [d, h1, ..., hm, K] holds m + 1 affine transitions.
// Hidden layers apply the configured activation; the output layer is linear
// and produces logits. The last hidden layer (size D = hm) is the
// "penultimate" feature space used by the Mahalanobis scorer, the PCA
// diagnostics and the batch-level loss terms.
//
// Batches are row-major in the mathematical sense: one sample per row.

#ifndef SHIFTSCOPE_NET_H_
#define SHIFTSCOPE_NET_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shiftscope/common.h"

namespace shiftscope {

enum class Activation { kRelu, kTanh, kIdentity };

std::string activation_name(Activation activation);
Activation parse_activation(const std::string& name);

struct DenseNet {
  std::vector<int> layer_sizes;
  // weights[l] is layer_sizes[l] x layer_sizes[l + 1].
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Activation activation = Activation::kRelu;
  std::uint64_t seed = 0;

  int input_dim() const { return layer_sizes.front(); }
  int num_classes() const { return layer_sizes.back(); }
  int penultimate_dim() const { return layer_sizes[layer_sizes.size() - 2]; }
  int num_transitions() const { return static_cast<int>(weights.size()); }
  int num_hidden() const { return num_transitions() - 1; }

  // Throws InvalidArgument if the shape invariants do not hold.
  void validate() const;
};

struct ForwardTrace {
  // pre[l] = post[l] * W_l + b_l, for l in [0, transitions).
  std::vector<Matrix> pre;
  // post[0] is the input batch; post[l + 1] = act(pre[l]) for hidden layers.
  // There are `transitions` entries: the logits are not stored here.
  std::vector<Matrix> post;

  const Matrix& input() const { return post.front(); }
  const Matrix& penultimate() const { return post.back(); }
  const Matrix& logits() const { return pre.back(); }
  // Post-activation of hidden layer `hidden` (1-based: 1 .. num_hidden).
  const Matrix& hidden(int hidden_layer) const { return post.at(hidden_layer); }
  int num_hidden() const { return static_cast<int>(post.size()) - 1; }
  Eigen::Index batch_size() const { return post.front().rows(); }
};

struct GradientSet {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  std::optional<Matrix> input;
};

// Builds a net with fan-in scaled uniform weights, U(-sqrt(6/fan_in),
// sqrt(6/fan_in)), and zero biases. Requires at least one hidden layer, all
// sizes >= 1 and a penultimate width >= 2.
DenseNet init_net(const std::vector<int>& layer_sizes, std::uint64_t seed,
                  Activation activation = Activation::kRelu);

ForwardTrace forward(const DenseNet& net, const Matrix& batch);

// Reverse pass for a scalar whose partials with respect to the logits and the
// penultimate features are supplied.
GradientSet backward(const DenseNet& net, const ForwardTrace& trace,
                     const Matrix& d_logits, const Matrix& d_penultimate,
                     bool want_input_grad);

// Convenience: argmax class (1-based) per row of logits.
Labels predict_labels(const Matrix& logits);

double accuracy(const DenseNet& net, const Matrix& inputs,
                std::span<const int> labels);

}  // namespace shiftscope

#endif  // SHIFTSCOPE_NET_H_
