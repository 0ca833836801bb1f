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

// End-to-end synthetic experiments: generate the ID world, train one net per
// seed, fit the scorers on the ID training split, and evaluate every
// (category, delta, scorer, metric) cell. Reports use the same JSON schema as
// `shiftscope eval`, so `shiftscope report` aggregates either.

#ifndef SHIFTSCOPE_EXPERIMENT_H_
#define SHIFTSCOPE_EXPERIMENT_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftscope/data.h"
#include "shiftscope/losses.h"
#include "shiftscope/metrics.h"
#include "shiftscope/net.h"
#include "shiftscope/scorers.h"
#include "shiftscope/training.h"

namespace shiftscope {

inline constexpr int kReportSchemaVersion = 1;

struct ShiftSpec {
  int category = 1;
  std::vector<double> deltas;
};

struct ExperimentConfig {
  std::vector<int> hidden = {16, 16, 16, 16};
  Activation activation = Activation::kRelu;
  LossConfig loss;
  OptimizerConfig optimizer;
  int epochs = 200;
  SynthConfig synth;
  int n_shifted = 600;
  std::vector<ShiftSpec> shifts;
  std::vector<ScorerKind> scorers = all_scorers();
  std::vector<MetricKind> metrics = all_metrics();
  ScorerSettings scorer_settings;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const nlohmann::json& j);

// Data splits derived from one experiment seed.
struct SeedData {
  LabeledDataset train;
  LabeledDataset test;
};
SeedData make_seed_data(const SynthConfig& synth, std::uint64_t seed);

std::uint64_t shift_seed(std::uint64_t seed, int category, std::size_t step);

struct MetricRow {
  int category = 0;
  double delta = 0.0;
  std::string scorer;
  std::string metric;
  double value = 0.0;
};

struct ConfidencePoint {
  int category = 0;
  double delta = 0.0;
  double mean_msp = 0.0;
};

struct SeedReport {
  std::uint64_t seed = 0;
  double id_accuracy = 0.0;
  double residual_mass = 0.0;
  std::vector<MetricRow> rows;
  std::vector<ConfidencePoint> confidence;
};

nlohmann::json to_json(const SeedReport& report);
SeedReport seed_report_from_json(const nlohmann::json& j);

struct SeedRun {
  DenseNet net;
  std::vector<EpochLog> history;
  SeedReport report;
};

DenseNet train_for_seed(const ExperimentConfig& cfg, const LabeledDataset& train,
                        std::uint64_t seed, std::vector<EpochLog>* history = nullptr);

// Scores every shift cell for an already trained net.
SeedReport evaluate_net(const ExperimentConfig& cfg, const DenseNet& net,
                        const SeedData& data, std::uint64_t seed);

SeedRun run_seed(const ExperimentConfig& cfg, std::uint64_t seed);

// One run per configured seed, in seed order. Seeds run on up to `threads`
// workers; results do not depend on the thread count.
std::vector<SeedRun> run_experiment(const ExperimentConfig& cfg, int threads);

// Mean of a metric cell across seed reports.
double mean_metric(const std::vector<SeedReport>& reports, int category,
                   double delta, const std::string& scorer,
                   const std::string& metric);

}  // namespace shiftscope

#endif  // SHIFTSCOPE_EXPERIMENT_H_
