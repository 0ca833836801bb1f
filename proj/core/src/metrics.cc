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

#include "shiftscope/metrics.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "shiftscope/common.h"

namespace shiftscope {
namespace {

void check_sample(const ScoreSample& s) {
  if (s.id_scores.empty() || s.nas_scores.empty()) {
    throw InvalidArgument("metrics need non-empty ID and NAS score sets");
  }
  const auto is_nan = [](double v) { return std::isnan(v); };
  if (std::any_of(s.id_scores.begin(), s.id_scores.end(), is_nan) ||
      std::any_of(s.nas_scores.begin(), s.nas_scores.end(), is_nan)) {
    throw InvalidArgument("scores must not be NaN");
  }
}

// One entry per distinct score, descending, with the number of positives and
// negatives sharing that score.
struct Level {
  double score;
  std::size_t positives;
  std::size_t negatives;
};

std::vector<Level> levels_descending(const std::vector<double>& positives,
                                     const std::vector<double>& negatives) {
  std::vector<std::pair<double, bool>> all;
  all.reserve(positives.size() + negatives.size());
  for (double v : positives) all.emplace_back(v, true);
  for (double v : negatives) all.emplace_back(v, false);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<Level> levels;
  for (const auto& [score, positive] : all) {
    if (levels.empty() || levels.back().score != score) {
      levels.push_back({score, 0, 0});
    }
    (positive ? levels.back().positives : levels.back().negatives) += 1;
  }
  return levels;
}

std::vector<double> negated(const std::vector<double>& values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), std::negate<>());
  return out;
}

}  // namespace

double auroc(const ScoreSample& s) {
  check_sample(s);
  // Walk levels from the top; each ID score beats every NAS score strictly
  // below it and ties with the NAS scores at its own level.
  const auto levels = levels_descending(s.id_scores, s.nas_scores);
  const double n_nas = static_cast<double>(s.nas_scores.size());
  double nas_above = 0.0;
  double wins = 0.0;
  for (const Level& level : levels) {
    const double nas_here = static_cast<double>(level.negatives);
    const double below = n_nas - nas_above - nas_here;
    wins += static_cast<double>(level.positives) * (below + 0.5 * nas_here);
    nas_above += nas_here;
  }
  return wins / (static_cast<double>(s.id_scores.size()) * n_nas);
}

double tnr_at_tpr(const ScoreSample& s, double tpr_target) {
  check_sample(s);
  if (!(tpr_target > 0.0 && tpr_target <= 1.0)) {
    throw InvalidArgument("TPR target must be in (0, 1]");
  }
  const auto levels = levels_descending(s.id_scores, s.nas_scores);
  const double n_id = static_cast<double>(s.id_scores.size());
  const double n_nas = static_cast<double>(s.nas_scores.size());
  std::size_t id_at_or_above = 0;
  std::size_t nas_at_or_above = 0;
  for (const Level& level : levels) {
    id_at_or_above += level.positives;
    nas_at_or_above += level.negatives;
    // Only ID scores can be the largest feasible threshold.
    if (level.positives > 0 &&
        static_cast<double>(id_at_or_above) / n_id >= tpr_target) {
      return static_cast<double>(s.nas_scores.size() - nas_at_or_above) / n_nas;
    }
  }
  return 0.0;  // unreachable: the lowest ID level always reaches TPR 1
}

double aupr(const ScoreSample& s, PositiveClass positive) {
  check_sample(s);
  const auto levels =
      positive == PositiveClass::kId
          ? levels_descending(s.id_scores, s.nas_scores)
          : levels_descending(negated(s.nas_scores), negated(s.id_scores));
  const double n_pos = static_cast<double>(
      positive == PositiveClass::kId ? s.id_scores.size() : s.nas_scores.size());
  double tp = 0.0;
  double fp = 0.0;
  double area = 0.0;
  for (const Level& level : levels) {
    tp += static_cast<double>(level.positives);
    fp += static_cast<double>(level.negatives);
    if (level.positives > 0) {
      area += (static_cast<double>(level.positives) / n_pos) * (tp / (tp + fp));
    }
  }
  return area;
}

double detection_accuracy(const ScoreSample& s) {
  check_sample(s);
  const auto levels = levels_descending(s.id_scores, s.nas_scores);
  const double n_id = static_cast<double>(s.id_scores.size());
  const double n_nas = static_cast<double>(s.nas_scores.size());
  // tau = +inf: nothing accepted as ID.
  double best = 0.5;
  double id_at_or_above = 0.0;
  double nas_at_or_above = 0.0;
  for (const Level& level : levels) {
    id_at_or_above += static_cast<double>(level.positives);
    nas_at_or_above += static_cast<double>(level.negatives);
    // Threshold at this level: NAS strictly below are those not yet counted.
    const double value =
        0.5 * (id_at_or_above / n_id) + 0.5 * ((n_nas - nas_at_or_above) / n_nas);
    best = std::max(best, value);
  }
  return best;
}

std::string metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::kAuroc:
      return "auroc";
    case MetricKind::kAuprIn:
      return "aupr-in";
    case MetricKind::kAuprOut:
      return "aupr-out";
    case MetricKind::kTnrAt95Tpr:
      return "tnr@95tpr";
    case MetricKind::kDetectionAcc:
      return "detection-acc";
  }
  return "auroc";
}

const std::vector<MetricKind>& all_metrics() {
  static const std::vector<MetricKind> kinds = {
      MetricKind::kAuroc, MetricKind::kAuprIn, MetricKind::kAuprOut,
      MetricKind::kTnrAt95Tpr, MetricKind::kDetectionAcc};
  return kinds;
}

std::optional<MetricKind> parse_metric(const std::string& name) {
  for (MetricKind kind : all_metrics()) {
    if (metric_name(kind) == name) return kind;
  }
  return std::nullopt;
}

double compute_metric(MetricKind kind, const ScoreSample& s) {
  switch (kind) {
    case MetricKind::kAuroc:
      return auroc(s);
    case MetricKind::kAuprIn:
      return aupr(s, PositiveClass::kId);
    case MetricKind::kAuprOut:
      return aupr(s, PositiveClass::kNas);
    case MetricKind::kTnrAt95Tpr:
      return tnr_at_tpr(s, 0.95);
    case MetricKind::kDetectionAcc:
      return detection_accuracy(s);
  }
  throw InvalidArgument("unknown metric");
}

}  // namespace shiftscope
