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

#include "fairlm/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "fairlm/errors.h"

namespace fairlm {

namespace {

void CheckBinary(std::span<const double> scores, std::span<const int> labels,
                 const char* what) {
  if (scores.size() != labels.size()) {
    throw ValidationError(std::string(what) + ": " + std::to_string(scores.size()) +
                          " scores but " + std::to_string(labels.size()) + " labels");
  }
  for (const int y : labels) {
    if (y != 0 && y != 1) throw ValidationError(std::string(what) + ": labels must be 0 or 1");
  }
}

struct ClassCounts {
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
};

ClassCounts CountClasses(std::span<const int> labels) {
  ClassCounts counts;
  for (const int y : labels) (y == 1 ? counts.positives : counts.negatives)++;
  if (counts.positives == 0 || counts.negatives == 0) {
    throw ValidationError("ROC AUC needs at least one positive and one negative");
  }
  return counts;
}

std::optional<double> RateOrNull(const std::vector<double>& preds,
                                 const std::vector<int>& labels, double threshold) {
  if (preds.empty()) return std::nullopt;
  return FalsePositiveRate(preds, labels, threshold);
}

nlohmann::json OptionalJson(const std::optional<double>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

std::string OptionalCsv(const std::optional<double>& value) {
  return value ? FormatDouble(*value) : std::string();
}

}  // namespace

double FalsePositiveRate(std::span<const double> predictions,
                         std::span<const int> labels, double threshold) {
  CheckBinary(predictions, labels, "FPR");
  std::size_t negatives = 0;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0) continue;
    ++negatives;
    if (predictions[i] >= threshold) ++flagged;
  }
  if (negatives == 0) {
    throw ValidationError("FPR is undefined without negative instances");
  }
  return static_cast<double>(flagged) / static_cast<double>(negatives);
}

double FprRatio(double fpr_group, double fpr_majority) {
  if (!(fpr_majority > 0.0)) throw UndefinedRatioError(fpr_group, fpr_majority);
  return fpr_group / fpr_majority;
}

double RocAucPairCounting(std::span<const double> scores, std::span<const int> labels) {
  CheckBinary(scores, labels, "ROC AUC");
  const ClassCounts counts = CountClasses(labels);
  // Twice the Mann-Whitney statistic, kept integral so both routes agree
  // bit-for-bit.
  std::uint64_t twice_wins = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      if (scores[i] > scores[j]) {
        twice_wins += 2;
      } else if (scores[i] == scores[j]) {
        twice_wins += 1;
      }
    }
  }
  return static_cast<double>(twice_wins) /
         (2.0 * static_cast<double>(counts.positives) * static_cast<double>(counts.negatives));
}

double RocAucSorted(std::span<const double> scores, std::span<const int> labels) {
  CheckBinary(scores, labels, "ROC AUC");
  const ClassCounts counts = CountClasses(labels);
  for (const double s : scores) {
    if (std::isnan(s)) throw ValidationError("ROC AUC: NaN score");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::uint64_t twice_wins = 0;
  std::uint64_t negatives_below = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t tie_pos = 0;
    std::uint64_t tie_neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? tie_pos : tie_neg)++;
      ++j;
    }
    twice_wins += 2 * tie_pos * negatives_below + tie_pos * tie_neg;
    negatives_below += tie_neg;
    i = j;
  }
  return static_cast<double>(twice_wins) /
         (2.0 * static_cast<double>(counts.positives) * static_cast<double>(counts.negatives));
}

double RocAuc(std::span<const double> scores, std::span<const int> labels) {
  return scores.size() <= kAucPairCountingLimit ? RocAucPairCounting(scores, labels)
                                                : RocAucSorted(scores, labels);
}

EvalReport Evaluate(const Dataset& dataset, Split split, const PredictionMap& predictions,
                    const GroupConfig& config, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("decision threshold must lie inside (0, 1)");
  }
  config.Validate();
  const auto& examples = dataset.split(split);
  std::vector<double> preds;
  std::vector<int> labels;
  preds.reserve(examples.size());
  labels.reserve(examples.size());
  std::vector<std::string> missing;
  for (const Example& example : examples) {
    const auto it = predictions.find(example.id);
    if (it == predictions.end()) {
      missing.push_back(example.id);
      continue;
    }
    preds.push_back(it->second);
    labels.push_back(example.label);
  }
  if (!missing.empty()) {
    std::string message = "predictions do not cover split " +
                          std::string(SplitName(split)) + "; missing " +
                          std::to_string(missing.size()) + " ids:";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) message += " " + missing[i];
    if (missing.size() > 20) message += " ...";
    throw ValidationError(message);
  }

  EvalReport report;
  report.threshold = threshold;
  report.split = split;
  report.auc = RocAuc(preds, labels);
  for (const auto& pair : config.pairs) {
    GroupMetricsRow row;
    row.group = pair.group;
    row.majority = pair.majority;
    std::vector<double> group_preds;
    std::vector<double> majority_preds;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (labels[i] != 0) continue;
      if (examples[i].InGroup(pair.group)) group_preds.push_back(preds[i]);
      if (examples[i].InGroup(pair.majority)) majority_preds.push_back(preds[i]);
    }
    row.n_negatives_group = group_preds.size();
    row.n_negatives_majority = majority_preds.size();
    row.fpr_group = RateOrNull(group_preds, std::vector<int>(group_preds.size(), 0), threshold);
    row.fpr_majority =
        RateOrNull(majority_preds, std::vector<int>(majority_preds.size(), 0), threshold);
    if (row.fpr_group && row.fpr_majority && *row.fpr_majority > 0.0) {
      row.fpr_ratio = FprRatio(*row.fpr_group, *row.fpr_majority);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

nlohmann::json ToJson(const EvalReport& report) {
  nlohmann::json doc;
  doc["auc"] = report.auc;
  doc["threshold"] = report.threshold;
  doc["split"] = std::string(SplitName(report.split));
  doc["rows"] = nlohmann::json::array();
  for (const auto& row : report.rows) {
    doc["rows"].push_back({{"group", row.group},
                           {"majority", row.majority},
                           {"fpr_group", OptionalJson(row.fpr_group)},
                           {"fpr_majority", OptionalJson(row.fpr_majority)},
                           {"fpr_ratio", OptionalJson(row.fpr_ratio)},
                           {"defined", row.defined()},
                           {"n_negatives_group", row.n_negatives_group},
                           {"n_negatives_majority", row.n_negatives_majority}});
  }
  return doc;
}

std::string GroupsCsv(const EvalReport& report) {
  std::string out =
      "group,majority,fpr_group,fpr_majority,fpr_ratio,n_negatives_group,"
      "n_negatives_majority\n";
  for (const auto& row : report.rows) {
    out += row.group + "," + row.majority + "," + OptionalCsv(row.fpr_group) + "," +
           OptionalCsv(row.fpr_majority) + "," + OptionalCsv(row.fpr_ratio) + "," +
           std::to_string(row.n_negatives_group) + "," +
           std::to_string(row.n_negatives_majority) + "\n";
  }
  return out;
}

}  // namespace fairlm
