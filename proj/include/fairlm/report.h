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

#ifndef FAIRLM_REPORT_H_
#define FAIRLM_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairlm/harness.h"
#include "fairlm/metrics.h"
#include "nlohmann/json.hpp"

namespace fairlm {

inline constexpr std::string_view kSweepCsvHeader =
    "lambda,auc,fpr_group,fpr_majority,fpr_ratio,unfairness,method";

std::string SweepCsv(std::span<const ParetoPoint> points);
// Points parsed back from SweepCsv output (reports are left empty).
std::vector<ParetoPoint> ParseSweepCsv(std::string_view text);

// Frontier of each method label separately, concatenated in order of first
// appearance.
std::vector<ParetoPoint> FrontiersByMethod(std::span<const ParetoPoint> points);

// One line per (point, pair) and per (prompt variant, pair).
std::string GroupsTableCsv(std::span<const ParetoPoint> points,
                           const std::map<std::string, EvalReport>& prompt_reports);

struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::uint64_t> seeds;

  nlohmann::json ToJson() const;
};

// Writes sweep.csv, frontier.csv, groups.csv and manifest.json into `dir`
// (plus prompt_reports.json when prompt reports are given).
void EmitReport(std::span<const ParetoPoint> points,
                const std::map<std::string, EvalReport>& prompt_reports,
                const RunManifest& manifest, const std::filesystem::path& dir);

}  // namespace fairlm

#endif  // FAIRLM_REPORT_H_
