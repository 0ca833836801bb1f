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

// Labeled datasets, the synthetic three-cluster world with its shift
// categories, and CSV I/O.
//
// Shift geometry. Let g be the centroid of the cluster centers, a a source
// center, b a partner center, m = (a + b) / 2 and u the unit vector from g
// towards m. The sampling location for shift degree delta is
//
//   category 1 (near boundary, near ID):  a + delta * (m - a),  delta in [0,1]
//   category 2 (far boundary, far ID):    a + delta * (a - g) / |a - g|
//   category 3 (near boundary, far ID):   a + min(delta, 1) * (m - a)
//                                           + delta * u
//
// and isotropic Gaussian noise with the cluster spread is added around it.
// For delta >= 1 category 3 sits on the perpendicular bisector of (a, b),
// displaced delta away from g. Every category reduces to ID sampling at
// delta = 0. Category 1 and 3 samples cycle over all ordered (a, b) pairs,
// category 2 over all centers; the label is the source cluster's label.

#ifndef SHIFTSCOPE_DATA_H_
#define SHIFTSCOPE_DATA_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "shiftscope/common.h"

namespace shiftscope {

struct LabeledDataset {
  Matrix inputs;
  Labels labels;
  int num_classes = 0;
  std::string attribute;
  double attribute_value = 0.0;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
  void validate() const;
};

struct SynthConfig {
  int num_classes = 3;
  std::vector<Eigen::Vector2d> centers;  // empty: equilateral triangle
  double triangle_side = 6.0;
  double spread = 1.0;
  int n_per_class = 200;
  std::uint64_t seed = 0;

  // Centers actually used: `centers` if set, otherwise a regular polygon with
  // `num_classes` vertices and side `triangle_side` centered at the origin.
  std::vector<Eigen::Vector2d> resolved_centers() const;
  void validate() const;
};

enum class ShiftCategory { kBetweenClasses = 1, kOutward = 2, kBoundaryOutward = 3 };

ShiftCategory parse_category(int category);

struct ShiftSequence {
  ShiftCategory category = ShiftCategory::kBetweenClasses;
  std::vector<std::pair<double, LabeledDataset>> steps;
};

LabeledDataset gen_id(const SynthConfig& cfg);

// Shifted samples of the given category and degree, `n` samples total.
LabeledDataset gen_nas(const SynthConfig& cfg, ShiftCategory category,
                       double delta, int n, std::uint64_t seed);

// Sampling location (before noise) for one (source, partner) pair. Exposed
// for tests and diagnostics.
Eigen::Vector2d shift_location(const SynthConfig& cfg, ShiftCategory category,
                               double delta, int source, int partner);

// One dataset per delta; step i uses derive_seed(seed, i).
ShiftSequence gen_shift_sequence(const SynthConfig& cfg,
                                 ShiftCategory category,
                                 const std::vector<double>& deltas, int n,
                                 std::uint64_t seed);

// CSV errors carry the 1-based line number (0 when not line-specific).
class CsvError : public std::runtime_error {
 public:
  enum class Kind {
    kIo,
    kBadHeader,
    kNoDataRows,
    kWrongFieldCount,
    kMalformedNumber,
    kBadLabel,
  };
  CsvError(Kind kind, std::size_t line, const std::string& message);
  Kind kind() const { return kind_; }
  std::size_t line() const { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

// Header x1,...,xd,label; values printed with 17 significant digits.
void write_csv(const LabeledDataset& dataset,
               const std::filesystem::path& path);
LabeledDataset read_csv(const std::filesystem::path& path);

struct FeatureTable {
  Matrix features;
  Labels labels;
};

// Header z1,...,zD,label.
FeatureTable read_features_csv(const std::filesystem::path& path);
void write_features_csv(const Matrix& features, std::span<const int> labels,
                        const std::filesystem::path& path);

// Shortest-form decimal used in file names and reports ("0.25", "2").
std::string format_number(double value);

}  // namespace shiftscope

#endif  // SHIFTSCOPE_DATA_H_
