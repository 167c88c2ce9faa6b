/*
 * Copyright 2026 The fairlm Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Equality-of-opportunity metrics (false positive rates and their ratio) and
// ROC AUC.

#ifndef FAIRLM_METRICS_H_
#define FAIRLM_METRICS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairlm/dataset.h"
#include "fairlm/io.h"
#include "nlohmann/json.hpp"

namespace fairlm {

inline constexpr double kDefaultThreshold = 0.5;

// Fraction of label-0 instances whose prediction is >= threshold. Throws
// ValidationError when there are no negatives.
double FalsePositiveRate(std::span<const double> predictions,
                         std::span<const int> labels, double threshold);

// fpr_group / fpr_majority. Throws UndefinedRatioError when fpr_majority is 0.
double FprRatio(double fpr_group, double fpr_majority);

// Mann-Whitney AUC: mean over (positive, negative) pairs of 1 / 0.5 / 0 for
// win / tie / loss. Uses exact pair counting up to kAucPairCountingLimit
// instances and a sort-based tie-aware count above; both are exact.
inline constexpr std::size_t kAucPairCountingLimit = 10000;
double RocAuc(std::span<const double> scores, std::span<const int> labels);
double RocAucPairCounting(std::span<const double> scores, std::span<const int> labels);
double RocAucSorted(std::span<const double> scores, std::span<const int> labels);

struct GroupMetricsRow {
  std::string group;
  std::string majority;
  // Unset when the side has no negatives.
  std::optional<double> fpr_group;
  std::optional<double> fpr_majority;
  // Unset when either rate is unset or the majority rate is zero.
  std::optional<double> fpr_ratio;
  std::size_t n_negatives_group = 0;
  std::size_t n_negatives_majority = 0;

  bool defined() const { return fpr_ratio.has_value(); }
};

struct EvalReport {
  double auc = 0.0;
  std::vector<GroupMetricsRow> rows;
  double threshold = kDefaultThreshold;
  Split split = Split::kTest;
};

// AUC over the whole split plus one row per configured pair. Predictions
// must cover every id of the split.
EvalReport Evaluate(const Dataset& dataset, Split split, const PredictionMap& predictions,
                    const GroupConfig& config, double threshold = kDefaultThreshold);

nlohmann::json ToJson(const EvalReport& report);
// Header plus one line per row:
// group,majority,fpr_group,fpr_majority,fpr_ratio,n_negatives_group,n_negatives_majority
std::string GroupsCsv(const EvalReport& report);

}  // namespace fairlm

#endif  // FAIRLM_METRICS_H_
