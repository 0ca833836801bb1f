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

#ifndef SHIFTSCOPE_TRAINING_H_
#define SHIFTSCOPE_TRAINING_H_

#include <cstdint>
#include <vector>

#include "shiftscope/data.h"
#include "shiftscope/losses.h"
#include "shiftscope/net.h"

namespace shiftscope {

// Adam settings. Defaults target the small synthetic problems this library is
// built around.
struct OptimizerConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 64;

  void validate() const;
};

// Mean of each term over the mini-batches of one epoch.
struct EpochLog {
  int epoch = 0;
  double total = 0.0;
  double cross_entropy = 0.0;
  double distance = 0.0;
  double variance = 0.0;
  double correlation = 0.0;
};

struct TrainResult {
  DenseNet net;
  std::vector<EpochLog> history;
};

// Splits sample indices into stratified mini-batches: each class's shuffled
// indices are dealt round-robin over the batches so that every batch holds
// every class. The batch count is floor(n / batch_size), capped by the
// smallest class count, and at least 1.
std::vector<std::vector<int>> stratified_batches(std::span<const int> labels,
                                                 int num_classes,
                                                 int batch_size, Rng& rng);

// Minimizes the composite loss with Adam. The run is a pure function of its
// arguments. Every batch contains every class regardless of the loss config,
// so enabling a term with zero weight leaves the trajectory unchanged.
TrainResult train(const DenseNet& initial, const LabeledDataset& data,
                  const LossConfig& loss_cfg, const OptimizerConfig& opt_cfg,
                  int epochs, std::uint64_t seed);

}  // namespace shiftscope

#endif  // SHIFTSCOPE_TRAINING_H_
