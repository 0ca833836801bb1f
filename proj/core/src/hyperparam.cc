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

#include "shiftscope/hyperparam.h"

#include <algorithm>
#include <mutex>
#include <numeric>

#include <Eigen/SVD>

namespace shiftscope {

double residual_singular_mass(const Matrix& features) {
  if (features.rows() == 0 || features.cols() == 0) return 0.0;
  const Eigen::BDCSVD<Matrix> svd(features);
  const Vector& sigma = svd.singularValues();  // sorted descending
  double mass = 0.0;
  for (Eigen::Index i = 2; i < sigma.size(); ++i) mass += sigma(i);
  return mass;
}

double harmonic_mean(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw InvalidArgument("harmonic mean needs positive inputs");
  }
  return 2.0 * a * b / (a + b);
}

void SweepGrid::validate() const {
  if (lambda2_values.empty() || lambda3_values.empty()) {
    throw InvalidArgument("sweep grid lists must be non-empty");
  }
  for (double v : lambda2_values) {
    if (!(v > 0.0)) throw InvalidArgument("lambda2 values must be > 0");
  }
  for (double v : lambda3_values) {
    if (!(v > 0.0)) throw InvalidArgument("lambda3 values must be > 0");
  }
  if (!(w_dist >= 0.0)) throw InvalidArgument("w_dist must be >= 0");
}

std::string verdict_name(Verdict verdict) {
  switch (verdict) {
    case Verdict::kAccepted:
      return "accepted";
    case Verdict::kRejectedSvd:
      return "rejected-svd";
    case Verdict::kRejectedAccuracy:
      return "rejected-accuracy";
    case Verdict::kRejectedBoth:
      return "rejected-svd-and-accuracy";
    case Verdict::kNotReached:
      return "not-reached";
  }
  return "not-reached";
}

ModelDiagnostics diagnose(const DenseNet& net, const LabeledDataset& train,
                          const LabeledDataset& accuracy_data) {
  ModelDiagnostics d;
  const ForwardTrace trace = forward(net, train.inputs);
  const EntropyTerms terms = entropy_terms(trace.penultimate());
  d.variance_term = terms.variance;
  d.correlation_term = terms.correlation;
  d.residual_mass = residual_singular_mass(trace.penultimate());
  d.accuracy = accuracy(net, accuracy_data.inputs, accuracy_data.labels);
  return d;
}

SelectionResult select_hyperparams(const SweepGrid& grid,
                                   const SelectionInputs& inputs,
                                   const TrainFn& train_fn) {
  grid.validate();
  if (inputs.train == nullptr) throw InvalidArgument("no training data");
  const LabeledDataset& train = *inputs.train;
  const LabeledDataset& acc_data =
      inputs.accuracy_data != nullptr ? *inputs.accuracy_data : train;

  struct Job {
    LossConfig loss;
  };
  std::vector<Job> jobs;
  jobs.push_back({LossConfig::cross_entropy_only()});
  LossConfig dist_only;
  dist_only.w_dist = grid.w_dist;
  dist_only.enable_dist = true;
  jobs.push_back({dist_only});
  for (double l2 : grid.lambda2_values) {
    for (double l3 : grid.lambda3_values) {
      jobs.push_back({LossConfig::full(grid.w_dist, l2, l3)});
    }
  }

  std::vector<std::optional<DenseNet>> models(jobs.size());
  std::vector<ModelDiagnostics> diags(jobs.size());
  std::mutex report_mutex;
  parallel_for(jobs.size(), inputs.threads, [&](std::size_t j) {
    DenseNet net;
    try {
      net = train_fn(jobs[j].loss);
    } catch (const std::exception& e) {
      throw std::runtime_error(
          "training failed for candidate (lambda2=" +
          std::to_string(jobs[j].loss.lambda2) +
          ", lambda3=" + std::to_string(jobs[j].loss.lambda3) +
          ", w_dist=" + std::to_string(jobs[j].loss.w_dist) + "): " + e.what());
    }
    diags[j] = diagnose(net, train, acc_data);
    models[j] = std::move(net);
    if (j >= 2 && inputs.on_candidate) {
      SweepRecord partial;
      partial.lambda2 = jobs[j].loss.lambda2;
      partial.lambda3 = jobs[j].loss.lambda3;
      partial.diagnostics = diags[j];
      partial.harmonic = harmonic_mean(diags[j].variance_term,
                                       diags[j].correlation_term);
      std::lock_guard lock(report_mutex);
      inputs.on_candidate(partial);
    }
  });

  SelectionResult result;
  result.ce_reference = diags[0];
  result.dist_reference = diags[1];
  for (std::size_t j = 2; j < jobs.size(); ++j) {
    SweepRecord record;
    record.lambda2 = jobs[j].loss.lambda2;
    record.lambda3 = jobs[j].loss.lambda3;
    record.diagnostics = diags[j];
    record.harmonic =
        harmonic_mean(diags[j].variance_term, diags[j].correlation_term);
    record.passes_svd = diags[j].residual_mass > result.dist_reference.residual_mass;
    record.passes_accuracy =
        diags[j].accuracy >= result.ce_reference.accuracy - inputs.accuracy_floor;
    record.model = std::move(models[j]);
    result.trail.push_back(std::move(record));
  }
  // Stable: ties keep grid order.
  std::stable_sort(result.trail.begin(), result.trail.end(),
                   [](const SweepRecord& a, const SweepRecord& b) {
                     return a.harmonic < b.harmonic;
                   });
  for (std::size_t i = 0; i < result.trail.size(); ++i) {
    SweepRecord& r = result.trail[i];
    if (result.accepted) {
      r.verdict = Verdict::kNotReached;
    } else if (r.passes_svd && r.passes_accuracy) {
      r.verdict = Verdict::kAccepted;
      result.accepted = i;
    } else if (!r.passes_svd && !r.passes_accuracy) {
      r.verdict = Verdict::kRejectedBoth;
    } else {
      r.verdict = r.passes_svd ? Verdict::kRejectedAccuracy : Verdict::kRejectedSvd;
    }
  }
  return result;
}

namespace {

nlohmann::json to_json(const ModelDiagnostics& d) {
  return {{"variance_term", d.variance_term},
          {"correlation_term", d.correlation_term},
          {"residual_mass", d.residual_mass},
          {"accuracy", d.accuracy}};
}

}  // namespace

nlohmann::json to_json(const SweepRecord& record) {
  return {{"lambda2", record.lambda2},
          {"lambda3", record.lambda3},
          {"variance_term", record.diagnostics.variance_term},
          {"correlation_term", record.diagnostics.correlation_term},
          {"harmonic_mean", record.harmonic},
          {"residual_mass", record.diagnostics.residual_mass},
          {"accuracy", record.diagnostics.accuracy},
          {"passes_svd", record.passes_svd},
          {"passes_accuracy", record.passes_accuracy},
          {"verdict", verdict_name(record.verdict)}};
}

nlohmann::json to_json(const SelectionResult& result, const SweepGrid& grid) {
  nlohmann::json trail = nlohmann::json::array();
  for (const auto& r : result.trail) trail.push_back(to_json(r));
  nlohmann::json out = {
      {"schema_version", 1},
      {"kind", "sweep"},
      {"grid",
       {{"lambda2", grid.lambda2_values},
        {"lambda3", grid.lambda3_values},
        {"w_dist", grid.w_dist}}},
      {"reference_ce", to_json(result.ce_reference)},
      {"reference_ce_dist", to_json(result.dist_reference)},
      {"trail", trail},
  };
  if (result.accepted) {
    const auto& r = result.trail[*result.accepted];
    out["outcome"] = "accepted";
    out["accepted"] = {{"lambda2", r.lambda2},
                       {"lambda3", r.lambda3},
                       {"w_dist", grid.w_dist}};
  } else {
    out["outcome"] = "no candidate accepted";
    out["accepted"] = nullptr;
  }
  return out;
}

}  // namespace shiftscope
