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

#include "shiftscope/data.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

namespace shiftscope {
namespace {

Eigen::Vector2d centroid(const std::vector<Eigen::Vector2d>& centers) {
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (const auto& c : centers) g += c;
  return g / static_cast<double>(centers.size());
}

// Source/partner pairs visited by a category, cycled over sample index.
std::vector<std::pair<int, int>> category_routes(ShiftCategory category,
                                                 int num_classes) {
  std::vector<std::pair<int, int>> routes;
  if (category == ShiftCategory::kOutward) {
    for (int a = 0; a < num_classes; ++a) routes.emplace_back(a, a);
    return routes;
  }
  for (int a = 0; a < num_classes; ++a) {
    for (int b = 0; b < num_classes; ++b) {
      if (a != b) routes.emplace_back(a, b);
    }
  }
  return routes;
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view strip(std::string_view field) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  return field;
}

std::string format_double17(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                    std::chars_format::general, 17);
  return std::string(buffer, result.ptr);
}

struct ParsedTable {
  Matrix values;
  Labels labels;
};

ParsedTable read_table(const std::filesystem::path& path, char prefix) {
  std::ifstream in(path);
  if (!in) {
    throw CsvError(CsvError::Kind::kIo, 0,
                   "cannot open '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw CsvError(CsvError::Kind::kNoDataRows, 0,
                   "'" + path.string() + "': no data rows");
  }
  const auto header = split_fields(trim_cr(line));
  if (header.size() < 2 || strip(header.back()) != "label") {
    throw CsvError(CsvError::Kind::kBadHeader, 1,
                   "line 1: header must end with 'label'");
  }
  const std::size_t width = header.size() - 1;
  for (std::size_t j = 0; j < width; ++j) {
    const std::string expected = std::string(1, prefix) + std::to_string(j + 1);
    if (strip(header[j]) != expected) {
      throw CsvError(CsvError::Kind::kBadHeader, 1,
                     "line 1: expected column '" + expected + "', found '" +
                         std::string(header[j]) + "'");
    }
  }

  std::vector<double> values;
  Labels labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim_cr(line);
    if (row.empty()) continue;
    const auto fields = split_fields(row);
    if (fields.size() != header.size()) {
      throw CsvError(CsvError::Kind::kWrongFieldCount, line_no,
                     "line " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " fields, found " +
                         std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < width; ++j) {
      const std::string_view f = strip(fields[j]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || f.empty()) {
        throw CsvError(CsvError::Kind::kMalformedNumber, line_no,
                       "line " + std::to_string(line_no) + ": malformed number '" +
                           std::string(f) + "' in column " +
                           std::to_string(j + 1));
      }
      values.push_back(v);
    }
    const std::string_view lf = strip(fields.back());
    int label = 0;
    const auto [ptr, ec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
    if (ec != std::errc() || ptr != lf.data() + lf.size() || lf.empty() ||
        label < 1) {
      throw CsvError(CsvError::Kind::kBadLabel, line_no,
                     "line " + std::to_string(line_no) +
                         ": label must be a positive integer, found '" +
                         std::string(lf) + "'");
    }
    labels.push_back(label);
  }
  if (labels.empty()) {
    throw CsvError(CsvError::Kind::kNoDataRows, 0,
                   "'" + path.string() + "': no data rows");
  }
  ParsedTable table;
  table.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(labels.size()),
      static_cast<Eigen::Index>(width));
  table.labels = std::move(labels);
  return table;
}

void write_table(const Matrix& values, std::span<const int> labels,
                 char prefix, const std::filesystem::path& path) {
  if (static_cast<Eigen::Index>(labels.size()) != values.rows()) {
    throw InvalidArgument("label count does not match row count");
  }
  std::ostringstream out;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    out << prefix << (j + 1) << ',';
  }
  out << "label\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      out << format_double17(values(i, j)) << ',';
    }
    out << labels[i] << '\n';
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw CsvError(CsvError::Kind::kIo, 0,
                   "cannot write '" + path.string() + "'");
  }
  file << out.str();
  if (!file) {
    throw CsvError(CsvError::Kind::kIo, 0,
                   "write failed for '" + path.string() + "'");
  }
}

}  // namespace

void LabeledDataset::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != inputs.rows()) {
    throw InvalidArgument("dataset has " + std::to_string(inputs.rows()) +
                          " rows but " + std::to_string(labels.size()) +
                          " labels");
  }
  check_labels(labels, num_classes);
}

std::vector<Eigen::Vector2d> SynthConfig::resolved_centers() const {
  if (!centers.empty()) return centers;
  // Regular polygon with the requested side, centered at the origin, first
  // vertex on the positive y axis.
  std::vector<Eigen::Vector2d> out;
  const double radius = triangle_side / (2.0 * std::sin(M_PI / num_classes));
  for (int k = 0; k < num_classes; ++k) {
    const double angle = M_PI / 2.0 + 2.0 * M_PI * k / num_classes;
    out.emplace_back(radius * std::cos(angle), radius * std::sin(angle));
  }
  return out;
}

void SynthConfig::validate() const {
  if (num_classes < 2) throw InvalidArgument("need at least two classes");
  if (!(spread > 0.0)) throw InvalidArgument("cluster spread must be > 0");
  if (n_per_class < 1) throw InvalidArgument("n_per_class must be >= 1");
  if (!centers.empty() &&
      static_cast<int>(centers.size()) != num_classes) {
    throw InvalidArgument("center count does not match the class count");
  }
  if (centers.empty() && !(triangle_side > 0.0)) {
    throw InvalidArgument("polygon side must be > 0");
  }
  const auto resolved = resolved_centers();
  for (std::size_t a = 0; a < resolved.size(); ++a) {
    for (std::size_t b = a + 1; b < resolved.size(); ++b) {
      if ((resolved[a] - resolved[b]).norm() == 0.0) {
        throw InvalidArgument("cluster centers must be distinct");
      }
    }
  }
}

ShiftCategory parse_category(int category) {
  if (category < 1 || category > 3) {
    throw InvalidArgument("shift category must be 1, 2 or 3, got " +
                          std::to_string(category));
  }
  return static_cast<ShiftCategory>(category);
}

LabeledDataset gen_id(const SynthConfig& cfg) {
  cfg.validate();
  const auto centers = cfg.resolved_centers();
  Rng rng(cfg.seed);
  LabeledDataset out;
  out.num_classes = cfg.num_classes;
  out.attribute = "delta";
  out.attribute_value = 0.0;
  out.inputs.resize(static_cast<Eigen::Index>(cfg.n_per_class) * cfg.num_classes, 2);
  out.labels.reserve(out.inputs.rows());
  Eigen::Index row = 0;
  for (int c = 0; c < cfg.num_classes; ++c) {
    for (int i = 0; i < cfg.n_per_class; ++i, ++row) {
      const double nx = rng.normal();
      const double ny = rng.normal();
      out.inputs(row, 0) = centers[c].x() + cfg.spread * nx;
      out.inputs(row, 1) = centers[c].y() + cfg.spread * ny;
      out.labels.push_back(c + 1);
    }
  }
  return out;
}

Eigen::Vector2d shift_location(const SynthConfig& cfg, ShiftCategory category,
                               double delta, int source, int partner) {
  const auto centers = cfg.resolved_centers();
  const Eigen::Vector2d& a = centers.at(source);
  const Eigen::Vector2d g = centroid(centers);
  switch (category) {
    case ShiftCategory::kBetweenClasses: {
      const Eigen::Vector2d m = 0.5 * (a + centers.at(partner));
      return a + delta * (m - a);
    }
    case ShiftCategory::kOutward: {
      const Eigen::Vector2d out = a - g;
      return a + delta * out / out.norm();
    }
    case ShiftCategory::kBoundaryOutward: {
      const Eigen::Vector2d m = 0.5 * (a + centers.at(partner));
      Eigen::Vector2d u = m - g;
      if (u.norm() == 0.0) {
        // Pair straddles the centroid: use the bisector direction itself.
        const Eigen::Vector2d ab = centers.at(partner) - a;
        u = Eigen::Vector2d(-ab.y(), ab.x());
      }
      u.normalize();
      return a + std::min(delta, 1.0) * (m - a) + delta * u;
    }
  }
  return a;
}

LabeledDataset gen_nas(const SynthConfig& cfg, ShiftCategory category,
                       double delta, int n, std::uint64_t seed) {
  cfg.validate();
  const int cat = static_cast<int>(category);
  if (cat < 1 || cat > 3) throw InvalidArgument("invalid shift category");
  if (!(delta >= 0.0)) throw InvalidArgument("shift degree must be >= 0");
  if (category == ShiftCategory::kBetweenClasses && delta > 1.0) {
    throw InvalidArgument("category 1 shift degree must be in [0, 1]");
  }
  if (n < 1) throw InvalidArgument("sample count must be >= 1");
  const auto routes = category_routes(category, cfg.num_classes);
  std::vector<Eigen::Vector2d> locations;
  locations.reserve(routes.size());
  for (const auto& [a, b] : routes) {
    locations.push_back(shift_location(cfg, category, delta, a, b));
  }
  Rng rng(seed);
  LabeledDataset out;
  out.num_classes = cfg.num_classes;
  out.attribute = "delta";
  out.attribute_value = delta;
  out.inputs.resize(n, 2);
  out.labels.reserve(n);
  for (int i = 0; i < n; ++i) {
    const std::size_t r = static_cast<std::size_t>(i) % routes.size();
    const double nx = rng.normal();
    const double ny = rng.normal();
    out.inputs(i, 0) = locations[r].x() + cfg.spread * nx;
    out.inputs(i, 1) = locations[r].y() + cfg.spread * ny;
    out.labels.push_back(routes[r].first + 1);
  }
  return out;
}

ShiftSequence gen_shift_sequence(const SynthConfig& cfg,
                                 ShiftCategory category,
                                 const std::vector<double>& deltas, int n,
                                 std::uint64_t seed) {
  if (deltas.empty()) throw InvalidArgument("shift degree list is empty");
  if (deltas.front() != 0.0) {
    throw InvalidArgument("shift degree list must start at 0");
  }
  for (std::size_t i = 1; i < deltas.size(); ++i) {
    if (!(deltas[i] > deltas[i - 1])) {
      throw InvalidArgument("shift degrees must be strictly increasing");
    }
  }
  ShiftSequence seq;
  seq.category = category;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    seq.steps.emplace_back(
        deltas[i], gen_nas(cfg, category, deltas[i], n, derive_seed(seed, i)));
  }
  return seq;
}

CsvError::CsvError(Kind kind, std::size_t line, const std::string& message)
    : std::runtime_error(message), kind_(kind), line_(line) {}

void write_csv(const LabeledDataset& dataset,
               const std::filesystem::path& path) {
  write_table(dataset.inputs, dataset.labels, 'x', path);
}

LabeledDataset read_csv(const std::filesystem::path& path) {
  ParsedTable table = read_table(path, 'x');
  LabeledDataset out;
  out.inputs = std::move(table.values);
  out.num_classes = infer_num_classes(table.labels);
  out.labels = std::move(table.labels);
  return out;
}

FeatureTable read_features_csv(const std::filesystem::path& path) {
  ParsedTable table = read_table(path, 'z');
  return {std::move(table.values), std::move(table.labels)};
}

void write_features_csv(const Matrix& features, std::span<const int> labels,
                        const std::filesystem::path& path) {
  write_table(features, labels, 'z', path);
}

std::string format_number(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

}  // namespace shiftscope
