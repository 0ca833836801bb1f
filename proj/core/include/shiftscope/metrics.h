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

// Detection metrics over ID and shifted (NAS) scores, both oriented "higher =
// more in-distribution". ID is the positive class unless stated otherwise.
// Thresholded metrics predict ID when score >= tau and sweep tau over the
// distinct observed scores.

#ifndef SHIFTSCOPE_METRICS_H_
#define SHIFTSCOPE_METRICS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shiftscope {

struct ScoreSample {
  std::vector<double> id_scores;
  std::vector<double> nas_scores;
};

// P(id > nas) + 0.5 P(id == nas).
double auroc(const ScoreSample& s);

// Largest tau with |{id >= tau}| / n_id >= tpr_target; returns the fraction
// of NAS scores strictly below tau.
double tnr_at_tpr(const ScoreSample& s, double tpr_target = 0.95);

enum class PositiveClass { kId, kNas };

// Step-interpolated area under the precision-recall curve (average
// precision). For kNas the scores are negated so NAS is the positive class.
double aupr(const ScoreSample& s, PositiveClass positive);

// max_tau 0.5 * P(id >= tau) + 0.5 * P(nas < tau).
double detection_accuracy(const ScoreSample& s);

enum class MetricKind { kAuroc, kAuprIn, kAuprOut, kTnrAt95Tpr, kDetectionAcc };

std::string metric_name(MetricKind kind);
std::optional<MetricKind> parse_metric(const std::string& name);
const std::vector<MetricKind>& all_metrics();
double compute_metric(MetricKind kind, const ScoreSample& s);

}  // namespace shiftscope

#endif  // SHIFTSCOPE_METRICS_H_
