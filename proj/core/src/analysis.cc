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

#include "shiftscope/analysis.h"

#include <fstream>
#include <sstream>

#include <Eigen/SVD>

#include "shiftscope/scorers.h"

namespace shiftscope {
namespace {

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write '" + path.string() + "'");
  file << text;
  if (!file) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace

PcaModel pca_fit(const Matrix& features, int k) {
  if (features.rows() < 2) throw InvalidArgument("PCA needs at least two rows");
  if (k < 1 || k > features.cols()) {
    throw InvalidArgument("PCA component count must be in [1, D]");
  }
  PcaModel model;
  model.mean = features.colwise().mean().transpose();
  const Matrix centered = features.rowwise() - model.mean.transpose();
  const Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const double total = sigma.squaredNorm();
  model.directions = svd.matrixV().leftCols(k);
  model.explained = Vector::Zero(k);
  for (int i = 0; i < k; ++i) {
    Eigen::Index arg = 0;
    model.directions.col(i).cwiseAbs().maxCoeff(&arg);
    if (model.directions(arg, i) < 0.0) model.directions.col(i) *= -1.0;
    if (total > 0.0 && i < sigma.size()) {
      model.explained(i) = sigma(i) * sigma(i) / total;
    }
  }
  return model;
}

Matrix pca_project(const PcaModel& model, const Matrix& features) {
  if (features.cols() != model.mean.size()) {
    throw InvalidArgument("feature width does not match the PCA model");
  }
  return (features.rowwise() - model.mean.transpose()) * model.directions;
}

std::vector<std::pair<double, double>> confidence_curve(
    const DenseNet& net, const ShiftSequence& sequence) {
  if (sequence.steps.empty()) throw InvalidArgument("empty shift sequence");
  std::vector<std::pair<double, double>> curve;
  for (const auto& [delta, dataset] : sequence.steps) {
    const Vector msp = msp_scores(forward(net, dataset.inputs).logits());
    curve.emplace_back(delta, msp.mean());
  }
  return curve;
}

ScoreLandscape score_landscape(const DenseNet& net, const BatchScorer& scorer,
                               const LandscapeBounds& bounds,
                               int resolution_x, int resolution_y) {
  if (net.input_dim() != 2) {
    throw InvalidArgument("score landscapes need a net with 2D inputs");
  }
  if (resolution_x < 2 || resolution_y < 2) {
    throw InvalidArgument("landscape resolution must be >= 2 per axis");
  }
  if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min)) {
    throw InvalidArgument("landscape bounds must be non-empty");
  }
  ScoreLandscape out;
  out.bounds = bounds;
  out.resolution_x = resolution_x;
  out.resolution_y = resolution_y;
  out.cell_centers.resize(static_cast<Eigen::Index>(resolution_x) * resolution_y, 2);
  const double dx = (bounds.x_max - bounds.x_min) / resolution_x;
  const double dy = (bounds.y_max - bounds.y_min) / resolution_y;
  Eigen::Index row = 0;
  for (int iy = 0; iy < resolution_y; ++iy) {
    for (int ix = 0; ix < resolution_x; ++ix, ++row) {
      out.cell_centers(row, 0) = bounds.x_min + (ix + 0.5) * dx;
      out.cell_centers(row, 1) = bounds.y_min + (iy + 0.5) * dy;
    }
  }
  out.scores = scorer(out.cell_centers);
  if (out.scores.size() != out.cell_centers.rows()) {
    throw InvalidArgument("scorer returned the wrong number of scores");
  }
  return out;
}

void write_landscape_csv(const ScoreLandscape& landscape,
                         const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "x,y,score\n";
  for (Eigen::Index i = 0; i < landscape.cell_centers.rows(); ++i) {
    out << landscape.cell_centers(i, 0) << ',' << landscape.cell_centers(i, 1)
        << ',' << landscape.scores(i) << '\n';
  }
  write_text(out.str(), path);
}

void write_projection_csv(const std::vector<ProjectedSet>& sets,
                          const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "pc1,pc2,label,delta\n";
  for (const auto& set : sets) {
    if (set.projection.cols() < 2) {
      throw InvalidArgument("projection CSV needs two components");
    }
    for (Eigen::Index i = 0; i < set.projection.rows(); ++i) {
      out << set.projection(i, 0) << ',' << set.projection(i, 1) << ','
          << set.labels.at(i) << ',' << set.delta << '\n';
    }
  }
  write_text(out.str(), path);
}

}  // namespace shiftscope
