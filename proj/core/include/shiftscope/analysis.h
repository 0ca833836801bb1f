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

// Feature-space diagnostics: PCA projections, confidence-vs-shift curves and
// 2D score landscapes.

#ifndef SHIFTSCOPE_ANALYSIS_H_
#define SHIFTSCOPE_ANALYSIS_H_

#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "shiftscope/common.h"
#include "shiftscope/data.h"
#include "shiftscope/net.h"

namespace shiftscope {

struct PcaModel {
  Vector mean;
  Matrix directions;  // D x k, orthonormal columns
  Vector explained;   // fraction of total variance per direction
};

// Top-k principal directions of the centered rows. Each direction's sign is
// fixed so that its largest-magnitude component is positive.
PcaModel pca_fit(const Matrix& features, int k = 2);
Matrix pca_project(const PcaModel& model, const Matrix& features);

// Mean maximum softmax probability per shift degree, in sequence order.
std::vector<std::pair<double, double>> confidence_curve(
    const DenseNet& net, const ShiftSequence& sequence);

struct LandscapeBounds {
  double x_min = -1.0;
  double x_max = 1.0;
  double y_min = -1.0;
  double y_max = 1.0;
};

struct ScoreLandscape {
  LandscapeBounds bounds;
  int resolution_x = 0;
  int resolution_y = 0;
  Matrix cell_centers;  // (rx * ry) x 2, x varies fastest
  Vector scores;
};

// Scores a batch of 2D input rows.
using BatchScorer = std::function<Vector(const Matrix&)>;

ScoreLandscape score_landscape(const DenseNet& net, const BatchScorer& scorer,
                               const LandscapeBounds& bounds,
                               int resolution_x, int resolution_y);

// x,y,score rows.
void write_landscape_csv(const ScoreLandscape& landscape,
                         const std::filesystem::path& path);

struct ProjectedSet {
  Matrix projection;  // n x 2
  Labels labels;
  double delta = 0.0;
};

// pc1,pc2,label,delta rows.
void write_projection_csv(const std::vector<ProjectedSet>& sets,
                          const std::filesystem::path& path);

}  // namespace shiftscope

#endif  // SHIFTSCOPE_ANALYSIS_H_
