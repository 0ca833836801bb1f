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

// Entropy-loss weight selection without any shifted validation data.
//
// Each (lambda2, lambda3) candidate is trained with the full loss. Candidates
// are ranked by the harmonic mean of their unweighted variance and
// correlation terms on the ID training set, lowest first. The first
// candidate that both raises the residual singular mass of the penultimate
// features above the CE + distance reference and keeps ID accuracy within
// `accuracy_floor` of the CE-only reference is accepted.

#ifndef SHIFTSCOPE_HYPERPARAM_H_
#define SHIFTSCOPE_HYPERPARAM_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftscope/common.h"
#include "shiftscope/data.h"
#include "shiftscope/losses.h"
#include "shiftscope/net.h"

namespace shiftscope {

// Sum of the singular values of `features` beyond the two largest.
double residual_singular_mass(const Matrix& features);

double harmonic_mean(double a, double b);

struct SweepGrid {
  std::vector<double> lambda2_values = {0.01, 0.1, 1.0, 10.0};
  std::vector<double> lambda3_values = {0.0001, 0.001, 0.01, 0.1, 1.0};
  double w_dist = 0.1;
  void validate() const;
};

enum class Verdict {
  kAccepted,
  kRejectedSvd,
  kRejectedAccuracy,
  kRejectedBoth,
  kNotReached,  // ranked after the accepted candidate
};
std::string verdict_name(Verdict verdict);

struct ModelDiagnostics {
  double variance_term = 0.0;     // unweighted D / sum Var
  double correlation_term = 0.0;  // unweighted mean C_ij^2
  double residual_mass = 0.0;
  double accuracy = 0.0;
};

struct SweepRecord {
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  ModelDiagnostics diagnostics;
  double harmonic = 0.0;
  bool passes_svd = false;
  bool passes_accuracy = false;
  Verdict verdict = Verdict::kNotReached;
  std::optional<DenseNet> model;
};

struct SelectionResult {
  ModelDiagnostics ce_reference;
  ModelDiagnostics dist_reference;
  std::vector<SweepRecord> trail;  // ascending harmonic mean
  std::optional<std::size_t> accepted;

  bool has_accepted() const { return accepted.has_value(); }
};

// Trains a net on the ID training data under the given loss.
using TrainFn = std::function<DenseNet(const LossConfig&)>;

struct SelectionInputs {
  const LabeledDataset* train = nullptr;
  // ID data for the accuracy check; the training set when null.
  const LabeledDataset* accuracy_data = nullptr;
  double accuracy_floor = 0.02;
  int threads = 1;
  // Called once per finished candidate (in completion order) before ranking.
  std::function<void(const SweepRecord&)> on_candidate;
};

ModelDiagnostics diagnose(const DenseNet& net, const LabeledDataset& train,
                          const LabeledDataset& accuracy_data);

SelectionResult select_hyperparams(const SweepGrid& grid,
                                   const SelectionInputs& inputs,
                                   const TrainFn& train_fn);

nlohmann::json to_json(const SweepRecord& record);
nlohmann::json to_json(const SelectionResult& result, const SweepGrid& grid);

}  // namespace shiftscope

#endif  // SHIFTSCOPE_HYPERPARAM_H_
