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

#include "cli.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "shiftscope/analysis.h"
#include "shiftscope/common.h"
#include "shiftscope/container.h"
#include "shiftscope/data.h"
#include "shiftscope/experiment.h"
#include "shiftscope/hyperparam.h"
#include "shiftscope/losses.h"
#include "shiftscope/metrics.h"
#include "shiftscope/net.h"
#include "shiftscope/scorers.h"
#include "shiftscope/training.h"

namespace shiftscope::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Bad arguments or configuration; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure while running a validated command; exit code 1.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --config reader: a JSON object whose keys are subcommand names, each
// mapping option names (without dashes) to scalars or arrays.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return {};
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json root;
    try {
      input >> root;
    } catch (const json::exception& e) {
      throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw CLI::ConfigError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    std::vector<std::string> parents;
    flatten(root, parents, items);
    return items;
  }

 private:
  static std::string scalar(const json& value, const std::string& key) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
    if (value.is_number()) return value.dump();
    throw CLI::ConfigError("config value for '" + key + "' must be a scalar or a list");
  }

  static void flatten(const json& object, std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : object.items()) {
      if (value.is_object()) {
        parents.push_back(key);
        flatten(value, parents, items);
        parents.pop_back();
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& element : value) item.inputs.push_back(scalar(element, key));
      } else {
        item.inputs.push_back(scalar(value, key));
      }
      items.push_back(std::move(item));
    }
  }
};

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::string valid_scorer_list() {
  std::vector<std::string> names;
  for (ScorerKind kind : all_scorers()) names.push_back(scorer_name(kind));
  return join(names, ", ");
}

std::string valid_metric_list() {
  std::vector<std::string> names;
  for (MetricKind kind : all_metrics()) names.push_back(metric_name(kind));
  return join(names, ", ");
}

std::vector<ScorerKind> parse_scorers(const std::vector<std::string>& names) {
  std::vector<ScorerKind> kinds;
  for (const auto& name : names) {
    const auto kind = parse_scorer(name);
    if (!kind) {
      throw UsageError("unknown scorer '" + name + "'; valid scorers: " +
                       valid_scorer_list());
    }
    if (std::find(kinds.begin(), kinds.end(), *kind) != kinds.end()) {
      throw UsageError("scorer '" + name + "' listed twice");
    }
    kinds.push_back(*kind);
  }
  if (kinds.empty()) throw UsageError("at least one scorer is required");
  return kinds;
}

std::vector<MetricKind> parse_metrics(const std::vector<std::string>& names) {
  std::vector<MetricKind> kinds;
  for (const auto& name : names) {
    const auto kind = parse_metric(name);
    if (!kind) {
      throw UsageError("unknown metric '" + name + "'; valid metrics: " +
                       valid_metric_list());
    }
    if (std::find(kinds.begin(), kinds.end(), *kind) != kinds.end()) {
      throw UsageError("metric '" + name + "' listed twice");
    }
    kinds.push_back(*kind);
  }
  if (kinds.empty()) throw UsageError("at least one metric is required");
  return kinds;
}

// Rejects any two equal paths among inputs and outputs.
void require_distinct(const std::vector<fs::path>& paths) {
  std::set<fs::path> seen;
  for (const auto& p : paths) {
    const fs::path normal = p.lexically_normal();
    if (!seen.insert(normal).second) {
      throw UsageError("path '" + p.string() + "' is used more than once");
    }
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw RuntimeFailure("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& value) {
  write_text(path, value.dump(2) + "\n");
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw RuntimeFailure(path.string() + ": invalid JSON: " + e.what());
  }
}

LabeledDataset load_dataset(const fs::path& path) {
  try {
    return read_csv(path);
  } catch (const CsvError& e) {
    throw RuntimeFailure(path.string() + ": " + e.what());
  }
}

DenseNet load_model(const fs::path& path) {
  try {
    return load_net(path);
  } catch (const FormatError& e) {
    throw RuntimeFailure(path.string() + ": " + e.what());
  }
}

void require_input_dim(const DenseNet& net, const LabeledDataset& data,
                       const fs::path& path) {
  if (data.dim() != net.input_dim()) {
    throw RuntimeFailure(path.string() + " has " + std::to_string(data.dim()) +
                         " feature columns but the model expects " +
                         std::to_string(net.input_dim()));
  }
  if (data.num_classes > net.num_classes()) {
    throw RuntimeFailure(path.string() + " has label " +
                         std::to_string(data.num_classes) +
                         " but the model has " + std::to_string(net.num_classes()) +
                         " classes");
  }
}

std::string nas_file_name(int category, double delta) {
  return "nas_cat" + std::to_string(category) + "_d" + format_number(delta) + ".csv";
}

// Recovers (category, delta) from a file named nas_cat{c}_d{delta}.csv.
std::pair<int, double> parse_nas_file_name(const fs::path& path) {
  static const std::regex pattern(R"(nas_cat([0-9]+)_d([^/]+)\.csv)");
  const std::string name = path.filename().string();
  std::smatch match;
  if (!std::regex_match(name, match, pattern)) {
    throw UsageError("cannot infer category and delta from '" + name +
                     "'; shifted files must be named nas_cat{category}_d{delta}.csv");
  }
  const int category = std::stoi(match[1].str());
  const std::string token = match[2].str();
  double delta = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), delta);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw UsageError("malformed delta '" + token + "' in file name '" + name + "'");
  }
  parse_category(category);
  return {category, delta};
}

// Failures that depend on file contents rather than on the arguments are
// runtime errors, even when a library precondition reports them.
template <typename Fn>
int execute(Fn&& fn) {
  try {
    return fn();
  } catch (const InvalidArgument& e) {
    throw RuntimeFailure(e.what());
  } catch (const CsvError& e) {
    throw RuntimeFailure(e.what());
  }
}

// Shared network and optimizer flags for train and sweep.
struct NetOptions {
  std::vector<int> hidden = {16, 16, 16, 16};
  std::string activation = "relu";
  int epochs = 200;
  double learning_rate = 1e-3;
  int batch_size = 64;
  std::uint64_t seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("--hidden", hidden, "Hidden layer widths")
        ->delimiter(',')
        ->capture_default_str();
    app->add_option("--activation", activation, "relu, tanh or identity")
        ->capture_default_str();
    app->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app->add_option("--lr", learning_rate, "Adam learning rate")->capture_default_str();
    app->add_option("--batch-size", batch_size, "Mini-batch size")->capture_default_str();
    app->add_option("--seed", seed, "Seed for initialization and shuffling")
        ->capture_default_str();
  }

  ExperimentConfig to_config() const {
    ExperimentConfig cfg;
    cfg.hidden = hidden;
    cfg.activation = parse_activation(activation);
    cfg.epochs = epochs;
    cfg.optimizer.learning_rate = learning_rate;
    cfg.optimizer.batch_size = batch_size;
    if (hidden.empty()) throw UsageError("--hidden needs at least one layer");
    for (int h : hidden) {
      if (h < 1) throw UsageError("hidden widths must be positive");
    }
    if (hidden.back() < 2) throw UsageError("the last hidden layer needs width >= 2");
    if (epochs < 1) throw UsageError("--epochs must be positive");
    cfg.optimizer.validate();
    return cfg;
  }
};

// ---- gen-data ----------------------------------------------------------------

struct GenDataOptions {
  std::string out;
  std::vector<int> categories = {1, 2, 3};
  std::vector<double> deltas;
  std::uint64_t seed = 0;
  int n_per_class = 200;
  int n_shifted = 600;
  int num_classes = 3;
  double side = 6.0;
  double spread = 1.0;
  bool with_test = false;
};

int run_gen_data(const GenDataOptions& o, std::ostream& out) {
  SynthConfig synth;
  synth.num_classes = o.num_classes;
  synth.triangle_side = o.side;
  synth.spread = o.spread;
  synth.n_per_class = o.n_per_class;
  if (o.n_shifted < 1) throw UsageError("--n-shifted must be positive");
  std::set<double> unique(o.deltas.begin(), o.deltas.end());
  if (unique.size() != o.deltas.size()) throw UsageError("--deltas has duplicates");
  std::set<int> unique_cats(o.categories.begin(), o.categories.end());
  if (unique_cats.size() != o.categories.size()) {
    throw UsageError("--category has duplicates");
  }

  // Everything is generated in memory first so that bad parameters fail
  // before any file is written.
  std::vector<std::pair<std::string, LabeledDataset>> files;
  const SeedData splits = make_seed_data(synth, o.seed);
  files.emplace_back("id.csv", splits.train);
  if (o.with_test) files.emplace_back("id_test.csv", splits.test);
  if (!o.deltas.empty()) {
    for (int category : o.categories) {
      const ShiftCategory cat = parse_category(category);
      for (std::size_t step = 0; step < o.deltas.size(); ++step) {
        files.emplace_back(nas_file_name(category, o.deltas[step]),
                           gen_nas(synth, cat, o.deltas[step], o.n_shifted,
                                   shift_seed(o.seed, category, step)));
      }
    }
  }

  const fs::path dir(o.out);
  fs::create_directories(dir);
  for (const auto& [name, data] : files) {
    try {
      write_csv(data, dir / name);
    } catch (const CsvError& e) {
      throw RuntimeFailure(e.what());
    }
  }
  out << "wrote " << files.size() << " files to " << dir.string() << "\n";
  return kExitOk;
}

// ---- train -------------------------------------------------------------------

struct TrainOptions {
  std::string data;
  std::string loss = "ce";
  std::optional<double> w_dist;
  std::optional<double> lambda2;
  std::optional<double> lambda3;
  std::vector<double> lambdas;
  NetOptions net;
  std::string out;
  std::string log;
};

LossConfig make_loss(const std::string& kind, double w_dist, double lambda2,
                     double lambda3) {
  LossConfig cfg;
  if (kind == "ce") {
    cfg = LossConfig::cross_entropy_only();
  } else if (kind == "full") {
    cfg = LossConfig::full(w_dist, lambda2, lambda3);
  } else if (kind == "ce+dist") {
    cfg.enable_dist = true;
    cfg.w_dist = w_dist;
  } else if (kind == "ce+entropy") {
    cfg.enable_entropy = true;
    cfg.lambda2 = lambda2;
    cfg.lambda3 = lambda3;
  } else {
    throw UsageError("unknown loss '" + kind +
                     "'; valid losses: ce, full, ce+dist, ce+entropy");
  }
  cfg.validate();
  return cfg;
}

std::string epoch_log_csv(const std::vector<EpochLog>& history) {
  std::ostringstream csv;
  csv << "epoch,total,cross_entropy,distance,variance,correlation\n";
  for (const auto& e : history) {
    csv << e.epoch << ',' << format_number(e.total) << ','
        << format_number(e.cross_entropy) << ',' << format_number(e.distance) << ','
        << format_number(e.variance) << ',' << format_number(e.correlation) << '\n';
  }
  return csv.str();
}

int run_train(const TrainOptions& o, std::ostream& out) {
  double w_dist = 0.1, lambda2 = 0.1, lambda3 = 1e-4;
  if (!o.lambdas.empty()) {
    if (o.lambdas.size() != 3) {
      throw UsageError("--lambdas takes three values: w_dist,lambda2,lambda3");
    }
    if (o.w_dist || o.lambda2 || o.lambda3) {
      throw UsageError("--lambdas cannot be combined with --w-dist, --l2 or --l3");
    }
    w_dist = o.lambdas[0];
    lambda2 = o.lambdas[1];
    lambda3 = o.lambdas[2];
  }
  if (o.w_dist) w_dist = *o.w_dist;
  if (o.lambda2) lambda2 = *o.lambda2;
  if (o.lambda3) lambda3 = *o.lambda3;
  ExperimentConfig cfg = o.net.to_config();
  cfg.loss = make_loss(o.loss, w_dist, lambda2, lambda3);
  const fs::path log_path = o.log.empty() ? fs::path(o.out + ".log.csv") : fs::path(o.log);
  require_distinct({o.data, o.out, log_path});

  return execute([&] {
    const LabeledDataset train = load_dataset(o.data);
    if (cfg.loss.uses_batch_terms() && train.num_classes < 2) {
      throw RuntimeFailure("batch loss terms need at least two classes");
    }
    std::vector<EpochLog> history;
    const DenseNet net = train_for_seed(cfg, train, o.net.seed, &history);
    if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
    save_net(net, o.out);
    write_text(log_path, epoch_log_csv(history));
    out << "trained " << o.loss << " model: train accuracy "
        << format_number(accuracy(net, train.inputs, train.labels)) << ", wrote "
        << o.out << " and " << log_path.string() << "\n";
    return kExitOk;
  });
}

// ---- eval --------------------------------------------------------------------

struct ScorerFlags {
  double odin_temperature = 1000.0;
  double odin_epsilon = 0.0;
  double energy_temperature = 1.0;
  std::optional<double> ridge;

  void add_to(CLI::App* app) {
    app->add_option("--odin-temperature", odin_temperature, "ODIN temperature")
        ->capture_default_str();
    app->add_option("--odin-epsilon", odin_epsilon, "ODIN perturbation size")
        ->capture_default_str();
    app->add_option("--energy-temperature", energy_temperature, "Energy temperature")
        ->capture_default_str();
    app->add_option("--ridge", ridge,
                    "Mahalanobis covariance ridge (default 1e-6 * trace / D)");
  }

  ScorerSettings to_settings() const {
    ScorerSettings s;
    s.odin.temperature = odin_temperature;
    s.odin.epsilon = odin_epsilon;
    s.odin.validate();
    if (!(energy_temperature > 0.0) || !std::isfinite(energy_temperature)) {
      throw UsageError("--energy-temperature must be positive");
    }
    s.energy_temperature = energy_temperature;
    if (ridge && !(*ridge >= 0.0)) throw UsageError("--ridge must be nonnegative");
    s.mahalanobis_ridge = ridge;
    return s;
  }
};

std::vector<std::string> default_scorer_names() {
  std::vector<std::string> names;
  for (ScorerKind kind : all_scorers()) names.push_back(scorer_name(kind));
  return names;
}

std::vector<std::string> default_metric_names() {
  std::vector<std::string> names;
  for (MetricKind kind : all_metrics()) names.push_back(metric_name(kind));
  return names;
}

struct EvalOptions {
  std::string model;
  std::string id;
  std::string train;
  std::vector<std::string> nas;
  std::vector<std::string> scorers = default_scorer_names();
  std::vector<std::string> metrics = default_metric_names();
  ScorerFlags scorer_flags;
  std::string out;
  std::string pca_out;
};

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

int run_eval(const EvalOptions& o, std::ostream& out) {
  const std::vector<ScorerKind> scorers = parse_scorers(o.scorers);
  const std::vector<MetricKind> metrics = parse_metrics(o.metrics);
  const ScorerSettings settings = o.scorer_flags.to_settings();
  // Shifted files in (category, delta) order so reports do not depend on the
  // order the shell expands a glob.
  std::vector<std::pair<std::pair<int, double>, std::string>> cells;
  std::vector<fs::path> outputs = {o.out};
  if (!o.pca_out.empty()) outputs.emplace_back(o.pca_out);
  for (const auto& path : o.nas) {
    const auto cell = parse_nas_file_name(path);
    if (std::any_of(cells.begin(), cells.end(),
                    [&](const auto& c) { return c.first == cell; })) {
      throw UsageError("two shifted files share category " +
                       std::to_string(cell.first) + " and delta " +
                       format_number(cell.second));
    }
    cells.emplace_back(cell, path);
  }
  std::sort(cells.begin(), cells.end());
  for (const auto& output : outputs) {
    for (const fs::path& input : {fs::path(o.model), fs::path(o.id), fs::path(o.train)}) {
      if (!input.empty() && input.lexically_normal() == output.lexically_normal()) {
        throw UsageError("output '" + output.string() + "' would overwrite an input");
      }
    }
    for (const auto& nas : o.nas) {
      if (fs::path(nas).lexically_normal() == output.lexically_normal()) {
        throw UsageError("output '" + output.string() + "' would overwrite an input");
      }
    }
  }
  require_distinct(outputs);

  return execute([&] {
    const DenseNet net = load_model(o.model);
    const LabeledDataset id = load_dataset(o.id);
    require_input_dim(net, id, o.id);
    const LabeledDataset train = o.train.empty() ? id : load_dataset(o.train);
    if (!o.train.empty()) require_input_dim(net, train, o.train);
    train.validate();

    SeedReport report;
    report.seed = net.seed;
    report.id_accuracy = accuracy(net, id.inputs, id.labels);
    report.residual_mass = residual_singular_mass(forward(net, train.inputs).penultimate());
    LabeledDataset fit_data = train;
    fit_data.num_classes = net.num_classes();
    const ScoringSuite suite(net, fit_data, scorers, settings);
    std::vector<Vector> id_scores;
    for (ScorerKind kind : scorers) id_scores.push_back(suite.score(kind, id.inputs));

    std::vector<ProjectedSet> projected;
    std::optional<PcaModel> pca;
    if (!o.pca_out.empty()) {
      pca = pca_fit(forward(net, train.inputs).penultimate(), 2);
      projected.push_back(
          {pca_project(*pca, forward(net, id.inputs).penultimate()), id.labels, 0.0});
    }

    for (const auto& [cell, path] : cells) {
      const auto [category, delta] = cell;
      const LabeledDataset shifted = load_dataset(path);
      require_input_dim(net, shifted, path);
      const ForwardTrace trace = forward(net, shifted.inputs);
      report.confidence.push_back({category, delta, msp_scores(trace.logits()).mean()});
      if (pca) {
        projected.push_back(
            {pca_project(*pca, trace.penultimate()), shifted.labels, delta});
      }
      for (std::size_t s = 0; s < scorers.size(); ++s) {
        ScoreSample sample;
        sample.id_scores = to_std(id_scores[s]);
        sample.nas_scores = to_std(suite.score(scorers[s], shifted.inputs));
        for (MetricKind metric : metrics) {
          report.rows.push_back({category, delta, scorer_name(scorers[s]),
                                 metric_name(metric), compute_metric(metric, sample)});
        }
      }
    }

    write_json(o.out, to_json(report));
    if (pca) {
      if (fs::path(o.pca_out).has_parent_path()) {
        fs::create_directories(fs::path(o.pca_out).parent_path());
      }
      write_projection_csv(projected, o.pca_out);
    }
    out << "evaluated " << o.nas.size() << " shifted sets x " << scorers.size()
        << " scorers, ID accuracy " << format_number(report.id_accuracy) << ", wrote "
        << o.out << "\n";
    return kExitOk;
  });
}

// ---- sweep -------------------------------------------------------------------

struct SweepOptions {
  std::string data;
  std::string accuracy_data;
  bool grid_defaults = false;
  std::vector<double> lambda2_values;
  std::vector<double> lambda3_values;
  double w_dist = 0.1;
  double accuracy_floor = 0.02;
  NetOptions net;
  std::string out;
};

int run_sweep(const SweepOptions& o, std::ostream& out) {
  SweepGrid grid;
  const bool explicit_lists = !o.lambda2_values.empty() || !o.lambda3_values.empty();
  if (o.grid_defaults == explicit_lists) {
    throw UsageError("give either --grid-defaults or both --l2 and --l3 lists");
  }
  if (explicit_lists) {
    if (o.lambda2_values.empty() || o.lambda3_values.empty()) {
      throw UsageError("explicit grids need both --l2 and --l3");
    }
    grid.lambda2_values = o.lambda2_values;
    grid.lambda3_values = o.lambda3_values;
  }
  grid.w_dist = o.w_dist;
  grid.validate();
  if (!std::isfinite(o.accuracy_floor)) throw UsageError("--accuracy-floor must be finite");
  ExperimentConfig base = o.net.to_config();
  const fs::path partial_path = o.out + ".partial.jsonl";
  require_distinct({o.data, o.out, partial_path});
  if (!o.accuracy_data.empty()) require_distinct({o.accuracy_data, o.out, partial_path});

  return execute([&] {
    const LabeledDataset train = load_dataset(o.data);
    const LabeledDataset accuracy_data =
        o.accuracy_data.empty() ? train : load_dataset(o.accuracy_data);
    if (accuracy_data.dim() != train.dim()) {
      throw RuntimeFailure("--accuracy-data has a different feature dimension than --data");
    }

    if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
    std::ofstream partial(partial_path, std::ios::binary | std::ios::trunc);
    if (!partial) throw RuntimeFailure("cannot write " + partial_path.string());

    SelectionInputs inputs;
    inputs.train = &train;
    inputs.accuracy_data = &accuracy_data;
    inputs.accuracy_floor = o.accuracy_floor;
    inputs.threads = max_threads();
    inputs.on_candidate = [&](const SweepRecord& record) {
      partial << to_json(record).dump() << '\n';
      partial.flush();
    };
    const SelectionResult result = select_hyperparams(grid, inputs, [&](const LossConfig& loss) {
      ExperimentConfig cfg = base;
      cfg.loss = loss;
      return train_for_seed(cfg, train, o.net.seed);
    });
    partial.close();
    write_json(o.out, to_json(result, grid));
    if (result.has_accepted()) {
      const SweepRecord& r = result.trail[*result.accepted];
      out << "accepted lambda2=" << format_number(r.lambda2)
          << " lambda3=" << format_number(r.lambda3) << " (" << result.trail.size()
          << " candidates), wrote " << o.out << "\n";
    } else {
      out << "no candidate accepted (" << result.trail.size() << " candidates), wrote "
          << o.out << "\n";
    }
    return kExitOk;
  });
}

// ---- report ------------------------------------------------------------------

struct ReportOptions {
  std::vector<std::string> eval_jsons;
  std::string out;
};

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

// Mean and sample standard deviation; zero spread for a single value.
Moments moments(const std::vector<double>& values) {
  Moments m;
  for (double v : values) m.mean += v;
  m.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return m;
}

std::string delta_list(const std::vector<double>& deltas) {
  std::vector<std::string> parts;
  for (double d : deltas) parts.push_back(format_number(d));
  return "[" + join(parts, ", ") + "]";
}

// Per-category delta grids in order of first appearance.
std::map<int, std::vector<double>> delta_grid(const SeedReport& report) {
  std::map<int, std::vector<double>> grid;
  for (const auto& row : report.rows) {
    auto& deltas = grid[row.category];
    if (std::find(deltas.begin(), deltas.end(), row.delta) == deltas.end()) {
      deltas.push_back(row.delta);
    }
  }
  return grid;
}

void check_same_grid(const SeedReport& first, const std::string& first_name,
                     const SeedReport& other, const std::string& other_name) {
  const auto a = delta_grid(first);
  const auto b = delta_grid(other);
  std::set<int> categories;
  for (const auto& [c, d] : a) categories.insert(c);
  for (const auto& [c, d] : b) categories.insert(c);
  for (int c : categories) {
    const std::vector<double> da = a.count(c) ? a.at(c) : std::vector<double>{};
    const std::vector<double> db = b.count(c) ? b.at(c) : std::vector<double>{};
    if (da != db) {
      throw RuntimeFailure("delta grid mismatch for category " + std::to_string(c) +
                           ": " + first_name + " has " + delta_list(da) + " but " +
                           other_name + " has " + delta_list(db));
    }
  }
  if (first.rows.size() != other.rows.size()) {
    throw RuntimeFailure("scorer/metric cells differ between " + first_name +
                         " and " + other_name);
  }
  for (std::size_t i = 0; i < first.rows.size(); ++i) {
    const MetricRow& x = first.rows[i];
    const MetricRow& y = other.rows[i];
    if (x.category != y.category || x.delta != y.delta || x.scorer != y.scorer ||
        x.metric != y.metric) {
      throw RuntimeFailure("scorer/metric cells differ between " + first_name +
                           " and " + other_name + " at row " + std::to_string(i + 1));
    }
  }
}

int run_report(const ReportOptions& o, std::ostream& out) {
  for (const auto& path : o.eval_jsons) {
    if (fs::path(path).lexically_normal() == fs::path(o.out).lexically_normal()) {
      throw UsageError("--out must not be one of the inputs");
    }
  }
  std::vector<fs::path> inputs(o.eval_jsons.begin(), o.eval_jsons.end());
  require_distinct(inputs);

  std::vector<SeedReport> reports;
  for (const auto& path : o.eval_jsons) {
    try {
      reports.push_back(seed_report_from_json(read_json(path)));
    } catch (const json::exception& e) {
      throw RuntimeFailure(path + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw RuntimeFailure(path + ": " + e.what());
    }
  }
  for (std::size_t i = 1; i < reports.size(); ++i) {
    check_same_grid(reports[0], o.eval_jsons[0], reports[i], o.eval_jsons[i]);
  }

  const SeedReport& first = reports.front();
  std::vector<Moments> cell_moments;
  for (std::size_t r = 0; r < first.rows.size(); ++r) {
    std::vector<double> values;
    for (const auto& report : reports) values.push_back(report.rows[r].value);
    cell_moments.push_back(moments(values));
  }

  const fs::path dir(o.out);
  std::vector<std::string> written;

  std::ostringstream cells;
  cells << "category,delta,scorer,metric,mean,std,n\n";
  for (std::size_t r = 0; r < first.rows.size(); ++r) {
    const MetricRow& row = first.rows[r];
    cells << row.category << ',' << format_number(row.delta) << ',' << row.scorer << ','
          << row.metric << ',' << format_number(cell_moments[r].mean) << ','
          << format_number(cell_moments[r].std) << ',' << reports.size() << '\n';
  }
  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("cells.csv", cells.str());

  // One wide table per metric: rows are (category, delta), columns scorers.
  std::vector<std::string> metric_order, scorer_order;
  for (const auto& row : first.rows) {
    if (std::find(metric_order.begin(), metric_order.end(), row.metric) == metric_order.end()) {
      metric_order.push_back(row.metric);
    }
    if (std::find(scorer_order.begin(), scorer_order.end(), row.scorer) == scorer_order.end()) {
      scorer_order.push_back(row.scorer);
    }
  }
  for (const auto& metric : metric_order) {
    std::ostringstream table;
    table << "category,delta";
    for (const auto& scorer : scorer_order) table << ',' << scorer << "_mean," << scorer << "_std";
    table << '\n';
    std::vector<std::pair<int, double>> keys;
    std::map<std::pair<std::pair<int, double>, std::string>, Moments> lookup;
    for (std::size_t r = 0; r < first.rows.size(); ++r) {
      const MetricRow& row = first.rows[r];
      if (row.metric != metric) continue;
      const std::pair<int, double> key{row.category, row.delta};
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
      lookup[{key, row.scorer}] = cell_moments[r];
    }
    for (const auto& key : keys) {
      table << key.first << ',' << format_number(key.second);
      for (const auto& scorer : scorer_order) {
        const auto it = lookup.find({key, scorer});
        if (it == lookup.end()) {
          table << ",,";
        } else {
          table << ',' << format_number(it->second.mean) << ','
                << format_number(it->second.std);
        }
      }
      table << '\n';
    }
    files.emplace_back("table_" + metric + ".csv", table.str());
  }

  std::ostringstream confidence;
  confidence << "category,delta,mean_msp,std\n";
  for (std::size_t c = 0; c < first.confidence.size(); ++c) {
    std::vector<double> values;
    for (const auto& report : reports) {
      if (report.confidence.size() != first.confidence.size() ||
          report.confidence[c].category != first.confidence[c].category ||
          report.confidence[c].delta != first.confidence[c].delta) {
        throw RuntimeFailure("confidence curves differ across the eval files");
      }
      values.push_back(report.confidence[c].mean_msp);
    }
    const Moments m = moments(values);
    confidence << first.confidence[c].category << ','
               << format_number(first.confidence[c].delta) << ','
               << format_number(m.mean) << ',' << format_number(m.std) << '\n';
  }
  files.emplace_back("confidence.csv", confidence.str());

  std::vector<double> accuracies, masses;
  std::vector<std::uint64_t> seeds;
  for (const auto& report : reports) {
    accuracies.push_back(report.id_accuracy);
    masses.push_back(report.residual_mass);
    seeds.push_back(report.seed);
  }
  const Moments acc = moments(accuracies);
  const Moments mass = moments(masses);
  json file_list = json::array();
  for (const auto& [name, text] : files) file_list.push_back(name);
  const json summary = {
      {"schema_version", kReportSchemaVersion},
      {"kind", "report"},
      {"inputs", o.eval_jsons},
      {"seeds", seeds},
      {"id_accuracy", {{"mean", acc.mean}, {"std", acc.std}}},
      {"residual_mass", {{"mean", mass.mean}, {"std", mass.std}}},
      {"files", file_list}};

  fs::create_directories(dir);
  for (const auto& [name, text] : files) write_text(dir / name, text);
  write_json(dir / "summary.json", summary);
  out << "aggregated " << reports.size() << " eval files into " << dir.string() << "\n";
  return kExitOk;
}

// ---- landscape ---------------------------------------------------------------

struct LandscapeOptions {
  std::string model;
  std::string scorer = "msp";
  std::string train;
  std::vector<double> bounds = {-10.0, 10.0, -10.0, 10.0};
  std::vector<int> resolution = {100};
  ScorerFlags scorer_flags;
  std::string out;
};

int run_landscape(const LandscapeOptions& o, std::ostream& out) {
  const ScorerKind kind = parse_scorers({o.scorer}).front();
  const ScorerSettings settings = o.scorer_flags.to_settings();
  if (o.bounds.size() != 4) throw UsageError("--bounds takes xmin,xmax,ymin,ymax");
  const LandscapeBounds bounds{o.bounds[0], o.bounds[1], o.bounds[2], o.bounds[3]};
  if (!(bounds.x_min < bounds.x_max) || !(bounds.y_min < bounds.y_max)) {
    throw UsageError("--bounds must satisfy xmin < xmax and ymin < ymax");
  }
  if (o.resolution.empty() || o.resolution.size() > 2) {
    throw UsageError("--resolution takes N or NX,NY");
  }
  const int rx = o.resolution.front();
  const int ry = o.resolution.back();
  if (rx < 1 || ry < 1) throw UsageError("--resolution must be positive");
  const bool needs_fit = kind == ScorerKind::kMahalanobis ||
                         kind == ScorerKind::kMahalanobisEnsemble ||
                         kind == ScorerKind::kGram;
  if (needs_fit && o.train.empty()) {
    throw UsageError("scorer '" + o.scorer + "' needs --train data to fit on");
  }
  require_distinct({o.model, o.out});
  if (!o.train.empty()) require_distinct({o.train, o.out});

  return execute([&] {
    const DenseNet net = load_model(o.model);
    if (net.input_dim() != 2) {
      throw RuntimeFailure("landscapes need a model with 2 inputs; this one has " +
                           std::to_string(net.input_dim()));
    }
    LabeledDataset fit_data;
    if (!o.train.empty()) {
      fit_data = load_dataset(o.train);
      require_input_dim(net, fit_data, o.train);
      fit_data.num_classes = net.num_classes();
    } else {
      // Confidence scorers fit nothing; a single dummy row per class suffices.
      fit_data.num_classes = net.num_classes();
      fit_data.inputs = Matrix::Zero(net.num_classes(), 2);
      for (int c = 1; c <= net.num_classes(); ++c) fit_data.labels.push_back(c);
    }
    const ScoringSuite suite(net, fit_data, {kind}, settings);
    const ScoreLandscape landscape = score_landscape(
        net, [&](const Matrix& points) { return suite.score(kind, points); }, bounds, rx, ry);
    if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
    write_landscape_csv(landscape, o.out);
    out << "scored " << rx * ry << " cells with " << o.scorer << ", wrote " << o.out << "\n";
    return kExitOk;
  });
}

// ---- experiment --------------------------------------------------------------

struct ExperimentOptions {
  std::string config;
  std::string out;
};

int run_experiment_cmd(const ExperimentOptions& o, std::ostream& out) {
  ExperimentConfig cfg;
  {
    std::ifstream in(o.config, std::ios::binary);
    if (!in) throw UsageError("cannot read experiment config " + o.config);
    try {
      cfg = experiment_from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw UsageError(o.config + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw UsageError(o.config + ": " + e.what());
    }
  }
  if (cfg.shifts.empty()) throw UsageError(o.config + ": no shifts configured");
  return execute([&] {
    const std::vector<SeedRun> runs = run_experiment(cfg, max_threads());
    const fs::path dir(o.out);
    fs::create_directories(dir);
    write_json(dir / "config.json", to_json(cfg));
    for (const auto& run : runs) {
      const std::string stem = "seed_" + std::to_string(run.report.seed);
      write_json(dir / (stem + ".json"), to_json(run.report));
      save_net(run.net, dir / (stem + ".model"));
      write_text(dir / (stem + ".log.csv"), epoch_log_csv(run.history));
    }
    out << "ran " << runs.size() << " seeds, wrote " << dir.string() << "\n";
    return kExitOk;
  });
}

void check_thread_env() {
  const char* env = std::getenv("SHIFTSCOPE_THREADS");
  if (env == nullptr) return;
  const std::string text(env);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 1) {
    throw UsageError("SHIFTSCOPE_THREADS must be a positive integer, got '" + text + "'");
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Detection of natural attribute-based distribution shifts", "shiftscope"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with per-subcommand option values");
  app.allow_config_extras(false);
  app.require_subcommand(1);

  GenDataOptions gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate ID and shifted CSV datasets");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--category", gen.categories, "Shift categories (1, 2, 3)")
      ->delimiter(',')
      ->capture_default_str();
  gen_cmd->add_option("--deltas", gen.deltas, "Shift degrees; none writes only id.csv")
      ->delimiter(',');
  gen_cmd->add_option("--seed", gen.seed, "Data seed")->capture_default_str();
  gen_cmd->add_option("--n-per-class", gen.n_per_class, "ID samples per class")
      ->capture_default_str();
  gen_cmd->add_option("--n-shifted", gen.n_shifted, "Samples per shifted file")
      ->capture_default_str();
  gen_cmd->add_option("--classes", gen.num_classes, "Number of clusters")
      ->capture_default_str();
  gen_cmd->add_option("--side", gen.side, "Cluster polygon side length")
      ->capture_default_str();
  gen_cmd->add_option("--spread", gen.spread, "Cluster standard deviation")
      ->capture_default_str();
  gen_cmd->add_flag("--with-test", gen.with_test, "Also write an ID test split");

  TrainOptions train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a classifier");
  train_cmd->add_option("--data", train.data, "Training CSV")->required();
  train_cmd->add_option("--loss", train.loss, "ce, full, ce+dist or ce+entropy")
      ->capture_default_str();
  train_cmd->add_option("--lambdas", train.lambdas, "w_dist,lambda2,lambda3")
      ->delimiter(',');
  train_cmd->add_option("--w-dist", train.w_dist, "Distance weight (default 0.1)");
  train_cmd->add_option("--l2", train.lambda2, "Variance weight (default 0.1)");
  train_cmd->add_option("--l3", train.lambda3, "Correlation weight (default 1e-4)");
  train.net.add_to(train_cmd);
  train_cmd->add_option("--out", train.out, "Model file")->required();
  train_cmd->add_option("--log", train.log, "Per-epoch loss CSV (default <out>.log.csv)");

  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score ID and shifted data");
  eval_cmd->add_option("--model", eval.model, "Model file")->required();
  eval_cmd->add_option("--id", eval.id, "ID evaluation CSV")->required();
  eval_cmd->add_option("--train", eval.train,
                       "ID data for fitting feature statistics (default --id)");
  eval_cmd->add_option("--nas", eval.nas, "Shifted CSVs named nas_cat{c}_d{delta}.csv")
      ->required();
  eval_cmd->add_option("--scorers", eval.scorers, "Scorers")->delimiter(',')
      ->capture_default_str();
  eval_cmd->add_option("--metrics", eval.metrics, "Metrics")->delimiter(',')
      ->capture_default_str();
  eval.scorer_flags.add_to(eval_cmd);
  eval_cmd->add_option("--out", eval.out, "Report JSON")->required();
  eval_cmd->add_option("--pca-out", eval.pca_out, "PCA projection CSV of penultimate features");

  SweepOptions sweep;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Select entropy-loss weights");
  sweep_cmd->add_option("--data", sweep.data, "ID training CSV")->required();
  sweep_cmd->add_option("--accuracy-data", sweep.accuracy_data,
                        "ID CSV for the accuracy check (default --data)");
  sweep_cmd->add_flag("--grid-defaults", sweep.grid_defaults, "Use the 4 x 5 default grid");
  sweep_cmd->add_option("--l2", sweep.lambda2_values, "lambda2 values")->delimiter(',');
  sweep_cmd->add_option("--l3", sweep.lambda3_values, "lambda3 values")->delimiter(',');
  sweep_cmd->add_option("--w-dist", sweep.w_dist, "Distance weight")->capture_default_str();
  sweep_cmd->add_option("--accuracy-floor", sweep.accuracy_floor,
                        "Allowed accuracy drop against the CE reference")
      ->capture_default_str();
  sweep.net.add_to(sweep_cmd);
  sweep_cmd->add_option("--out", sweep.out, "Sweep JSON")->required();

  ReportOptions report;
  CLI::App* report_cmd = app.add_subcommand("report", "Aggregate eval reports across seeds");
  report_cmd->add_option("--eval-jsons", report.eval_jsons, "Eval report files")->required();
  report_cmd->add_option("--out", report.out, "Output directory")->required();

  LandscapeOptions land;
  CLI::App* land_cmd = app.add_subcommand("landscape", "Score a 2D input grid");
  land_cmd->add_option("--model", land.model, "Model file")->required();
  land_cmd->add_option("--scorer", land.scorer, "Scorer")->capture_default_str();
  land_cmd->add_option("--train", land.train, "ID data for fitting feature statistics");
  land_cmd->add_option("--bounds", land.bounds, "xmin,xmax,ymin,ymax")->delimiter(',')
      ->capture_default_str();
  land_cmd->add_option("--resolution", land.resolution, "N or NX,NY")->delimiter(',')
      ->capture_default_str();
  land.scorer_flags.add_to(land_cmd);
  land_cmd->add_option("--out", land.out, "Landscape CSV")->required();

  ExperimentOptions experiment;
  CLI::App* exp_cmd =
      app.add_subcommand("experiment", "Run a full multi-seed synthetic experiment");
  exp_cmd->add_option("--experiment", experiment.config, "Experiment JSON")->required();
  exp_cmd->add_option("--out", experiment.out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    check_thread_env();
    if (gen_cmd->parsed()) return run_gen_data(gen, out);
    if (train_cmd->parsed()) return run_train(train, out);
    if (eval_cmd->parsed()) return run_eval(eval, out);
    if (sweep_cmd->parsed()) return run_sweep(sweep, out);
    if (report_cmd->parsed()) return run_report(report, out);
    if (land_cmd->parsed()) return run_landscape(land, out);
    if (exp_cmd->parsed()) return run_experiment_cmd(experiment, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    // Library precondition failures before or during setup are argument
    // problems: every command checks its configuration before any output.
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace shiftscope::cli
