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

#include "shiftscope/experiment.h"

#include "shiftscope/hyperparam.h"

namespace shiftscope {
namespace {

using nlohmann::json;

template <typename T>
void read_if(const json& j, const char* key, T& target) {
  if (j.contains(key) && !j.at(key).is_null()) target = j.at(key).get<T>();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (hidden.empty()) throw InvalidArgument("at least one hidden layer required");
  for (int h : hidden) {
    if (h < 1) throw InvalidArgument("hidden widths must be >= 1");
  }
  if (hidden.back() < 2) throw InvalidArgument("penultimate width must be >= 2");
  loss.validate();
  optimizer.validate();
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  synth.validate();
  if (n_shifted < 1) throw InvalidArgument("n_shifted must be >= 1");
  for (const auto& s : shifts) {
    parse_category(s.category);
    if (s.deltas.empty()) throw InvalidArgument("shift spec without deltas");
    for (double d : s.deltas) {
      if (!(d >= 0.0)) throw InvalidArgument("shift degrees must be >= 0");
      if (s.category == 1 && d > 1.0) {
        throw InvalidArgument("category 1 shift degrees must be in [0, 1]");
      }
    }
  }
  if (seeds.empty()) throw InvalidArgument("seed list is empty");
  scorer_settings.odin.validate();
  if (!(scorer_settings.energy_temperature > 0.0)) {
    throw InvalidArgument("energy temperature must be > 0");
  }
}

json to_json(const ExperimentConfig& cfg) {
  json shifts = json::array();
  for (const auto& s : cfg.shifts) {
    shifts.push_back({{"category", s.category}, {"deltas", s.deltas}});
  }
  json scorers = json::array();
  for (ScorerKind k : cfg.scorers) scorers.push_back(scorer_name(k));
  json metrics = json::array();
  for (MetricKind k : cfg.metrics) metrics.push_back(metric_name(k));
  json centers = json::array();
  for (const auto& c : cfg.synth.centers) centers.push_back({c.x(), c.y()});
  return {
      {"hidden", cfg.hidden},
      {"activation", activation_name(cfg.activation)},
      {"loss",
       {{"w_dist", cfg.loss.w_dist},
        {"lambda2", cfg.loss.lambda2},
        {"lambda3", cfg.loss.lambda3},
        {"enable_dist", cfg.loss.enable_dist},
        {"enable_entropy", cfg.loss.enable_entropy}}},
      {"optimizer",
       {{"learning_rate", cfg.optimizer.learning_rate},
        {"beta1", cfg.optimizer.beta1},
        {"beta2", cfg.optimizer.beta2},
        {"epsilon", cfg.optimizer.epsilon},
        {"batch_size", cfg.optimizer.batch_size}}},
      {"epochs", cfg.epochs},
      {"synth",
       {{"num_classes", cfg.synth.num_classes},
        {"centers", centers},
        {"triangle_side", cfg.synth.triangle_side},
        {"spread", cfg.synth.spread},
        {"n_per_class", cfg.synth.n_per_class}}},
      {"n_shifted", cfg.n_shifted},
      {"shifts", shifts},
      {"scorers", scorers},
      {"metrics", metrics},
      {"scorer_settings",
       {{"odin_temperature", cfg.scorer_settings.odin.temperature},
        {"odin_epsilon", cfg.scorer_settings.odin.epsilon},
        {"energy_temperature", cfg.scorer_settings.energy_temperature},
        {"mahalanobis_ridge", cfg.scorer_settings.mahalanobis_ridge
                                  ? json(*cfg.scorer_settings.mahalanobis_ridge)
                                  : json(nullptr)},
        {"gram_orders", cfg.scorer_settings.gram_orders}}},
      {"seeds", cfg.seeds},
  };
}

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    read_if(j, "hidden", cfg.hidden);
    if (j.contains("activation")) {
      cfg.activation = parse_activation(j.at("activation").get<std::string>());
    }
    if (j.contains("loss")) {
      const json& l = j.at("loss");
      read_if(l, "w_dist", cfg.loss.w_dist);
      read_if(l, "lambda2", cfg.loss.lambda2);
      read_if(l, "lambda3", cfg.loss.lambda3);
      read_if(l, "enable_dist", cfg.loss.enable_dist);
      read_if(l, "enable_entropy", cfg.loss.enable_entropy);
    }
    if (j.contains("optimizer")) {
      const json& o = j.at("optimizer");
      read_if(o, "learning_rate", cfg.optimizer.learning_rate);
      read_if(o, "beta1", cfg.optimizer.beta1);
      read_if(o, "beta2", cfg.optimizer.beta2);
      read_if(o, "epsilon", cfg.optimizer.epsilon);
      read_if(o, "batch_size", cfg.optimizer.batch_size);
    }
    read_if(j, "epochs", cfg.epochs);
    if (j.contains("synth")) {
      const json& s = j.at("synth");
      read_if(s, "num_classes", cfg.synth.num_classes);
      read_if(s, "triangle_side", cfg.synth.triangle_side);
      read_if(s, "spread", cfg.synth.spread);
      read_if(s, "n_per_class", cfg.synth.n_per_class);
      if (s.contains("centers")) {
        for (const auto& c : s.at("centers")) {
          cfg.synth.centers.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
        }
      }
    }
    read_if(j, "n_shifted", cfg.n_shifted);
    if (j.contains("shifts")) {
      for (const auto& s : j.at("shifts")) {
        cfg.shifts.push_back({s.at("category").get<int>(),
                              s.at("deltas").get<std::vector<double>>()});
      }
    }
    if (j.contains("scorers")) {
      cfg.scorers.clear();
      for (const auto& name : j.at("scorers")) {
        const auto kind = parse_scorer(name.get<std::string>());
        if (!kind) throw InvalidArgument("unknown scorer '" + name.get<std::string>() + "'");
        cfg.scorers.push_back(*kind);
      }
    }
    if (j.contains("metrics")) {
      cfg.metrics.clear();
      for (const auto& name : j.at("metrics")) {
        const auto kind = parse_metric(name.get<std::string>());
        if (!kind) throw InvalidArgument("unknown metric '" + name.get<std::string>() + "'");
        cfg.metrics.push_back(*kind);
      }
    }
    if (j.contains("scorer_settings")) {
      const json& s = j.at("scorer_settings");
      read_if(s, "odin_temperature", cfg.scorer_settings.odin.temperature);
      read_if(s, "odin_epsilon", cfg.scorer_settings.odin.epsilon);
      read_if(s, "energy_temperature", cfg.scorer_settings.energy_temperature);
      if (s.contains("mahalanobis_ridge") && !s.at("mahalanobis_ridge").is_null()) {
        cfg.scorer_settings.mahalanobis_ridge = s.at("mahalanobis_ridge").get<double>();
      }
      read_if(s, "gram_orders", cfg.scorer_settings.gram_orders);
    }
    read_if(j, "seeds", cfg.seeds);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

SeedData make_seed_data(const SynthConfig& synth, std::uint64_t seed) {
  SynthConfig train_cfg = synth;
  train_cfg.seed = derive_seed(seed, 0);
  SynthConfig test_cfg = synth;
  test_cfg.seed = derive_seed(seed, 1);
  return {gen_id(train_cfg), gen_id(test_cfg)};
}

std::uint64_t shift_seed(std::uint64_t seed, int category, std::size_t step) {
  return derive_seed(derive_seed(seed, 100 + static_cast<std::uint64_t>(category)), step);
}

json to_json(const SeedReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"category", r.category},
                    {"delta", r.delta},
                    {"scorer", r.scorer},
                    {"metric", r.metric},
                    {"value", r.value}});
  }
  json confidence = json::array();
  for (const auto& c : report.confidence) {
    confidence.push_back(
        {{"category", c.category}, {"delta", c.delta}, {"mean_msp", c.mean_msp}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"kind", "eval"},
          {"seed", report.seed},
          {"id_accuracy", report.id_accuracy},
          {"residual_mass", report.residual_mass},
          {"rows", rows},
          {"confidence", confidence}};
}

SeedReport seed_report_from_json(const json& j) {
  if (j.value("schema_version", 0) != kReportSchemaVersion ||
      j.value("kind", std::string()) != "eval") {
    throw InvalidArgument("not an eval report (schema_version 1, kind eval)");
  }
  SeedReport report;
  report.seed = j.value("seed", std::uint64_t{0});
  report.id_accuracy = j.value("id_accuracy", 0.0);
  report.residual_mass = j.value("residual_mass", 0.0);
  for (const auto& r : j.at("rows")) {
    report.rows.push_back({r.at("category").get<int>(), r.at("delta").get<double>(),
                           r.at("scorer").get<std::string>(),
                           r.at("metric").get<std::string>(),
                           r.at("value").get<double>()});
  }
  if (j.contains("confidence")) {
    for (const auto& c : j.at("confidence")) {
      report.confidence.push_back({c.at("category").get<int>(),
                                   c.at("delta").get<double>(),
                                   c.at("mean_msp").get<double>()});
    }
  }
  return report;
}

DenseNet train_for_seed(const ExperimentConfig& cfg, const LabeledDataset& train,
                        std::uint64_t seed, std::vector<EpochLog>* history) {
  std::vector<int> sizes;
  sizes.push_back(static_cast<int>(train.dim()));
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(train.num_classes);
  const DenseNet initial = init_net(sizes, derive_seed(seed, 2), cfg.activation);
  TrainResult result = shiftscope::train(initial, train, cfg.loss, cfg.optimizer,
                                         cfg.epochs, derive_seed(seed, 3));
  if (history != nullptr) *history = std::move(result.history);
  return std::move(result.net);
}

SeedReport evaluate_net(const ExperimentConfig& cfg, const DenseNet& net,
                        const SeedData& data, std::uint64_t seed) {
  SeedReport report;
  report.seed = seed;
  report.id_accuracy = accuracy(net, data.test.inputs, data.test.labels);
  report.residual_mass =
      residual_singular_mass(forward(net, data.train.inputs).penultimate());

  const ScoringSuite suite(net, data.train, cfg.scorers, cfg.scorer_settings);
  std::vector<Vector> id_scores;
  for (ScorerKind kind : cfg.scorers) id_scores.push_back(suite.score(kind, data.test.inputs));

  for (const auto& spec : cfg.shifts) {
    const ShiftCategory category = parse_category(spec.category);
    for (std::size_t step = 0; step < spec.deltas.size(); ++step) {
      const double delta = spec.deltas[step];
      const LabeledDataset shifted =
          gen_nas(cfg.synth, category, delta, cfg.n_shifted,
                  shift_seed(seed, spec.category, step));
      report.confidence.push_back(
          {spec.category, delta,
           msp_scores(forward(net, shifted.inputs).logits()).mean()});
      for (std::size_t s = 0; s < cfg.scorers.size(); ++s) {
        const Vector nas = suite.score(cfg.scorers[s], shifted.inputs);
        ScoreSample sample;
        sample.id_scores.assign(id_scores[s].data(), id_scores[s].data() + id_scores[s].size());
        sample.nas_scores.assign(nas.data(), nas.data() + nas.size());
        for (MetricKind metric : cfg.metrics) {
          report.rows.push_back({spec.category, delta, scorer_name(cfg.scorers[s]),
                                 metric_name(metric), compute_metric(metric, sample)});
        }
      }
    }
  }
  return report;
}

SeedRun run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  const SeedData data = make_seed_data(cfg.synth, seed);
  SeedRun run;
  run.net = train_for_seed(cfg, data.train, seed, &run.history);
  run.report = evaluate_net(cfg, run.net, data, seed);
  return run;
}

std::vector<SeedRun> run_experiment(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  std::vector<SeedRun> runs(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), threads,
               [&](std::size_t i) { runs[i] = run_seed(cfg, cfg.seeds[i]); });
  return runs;
}

double mean_metric(const std::vector<SeedReport>& reports, int category,
                   double delta, const std::string& scorer,
                   const std::string& metric) {
  double sum = 0.0;
  int count = 0;
  for (const auto& report : reports) {
    for (const auto& row : report.rows) {
      if (row.category == category && row.delta == delta && row.scorer == scorer &&
          row.metric == metric) {
        sum += row.value;
        ++count;
      }
    }
  }
  if (count == 0) {
    throw InvalidArgument("no rows for category " + std::to_string(category) +
                          ", scorer " + scorer + ", metric " + metric);
  }
  return sum / count;
}

}  // namespace shiftscope
