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

#include "fairlm/report.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fairlm/errors.h"
#include "fairlm/io.h"

namespace fairlm {

namespace {

std::string OptionalCell(const std::optional<double>& value) {
  return value ? FormatDouble(*value) : std::string();
}

double ParseCell(const std::string& cell, std::size_t line) {
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double value = std::stod(cell, &used);
    if (used == cell.size()) return value;
  } catch (const std::exception&) {
  }
  throw ValidationError("sweep CSV line " + std::to_string(line) + ": cannot parse '" + cell +
                        "'");
}

}  // namespace

std::string SweepCsv(std::span<const ParetoPoint> points) {
  std::string out(kSweepCsvHeader);
  out += '\n';
  for (const auto& p : points) {
    out += FormatDouble(p.lambda) + "," + FormatDouble(p.auc) + "," + FormatDouble(p.fpr_group) +
           "," + FormatDouble(p.fpr_majority) + "," + FormatDouble(p.fpr_ratio) + "," +
           FormatDouble(p.unfairness) + "," + p.method + "\n";
  }
  return out;
}

std::vector<ParetoPoint> ParseSweepCsv(std::string_view text) {
  std::vector<ParetoPoint> points;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_number == 1) {
      if (line != kSweepCsvHeader) throw ValidationError("unexpected sweep CSV header: " + line);
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) {
      throw ValidationError("sweep CSV line " + std::to_string(line_number) +
                            ": expected 7 columns");
    }
    ParetoPoint p;
    p.lambda = ParseCell(cells[0], line_number);
    p.auc = ParseCell(cells[1], line_number);
    p.fpr_group = ParseCell(cells[2], line_number);
    p.fpr_majority = ParseCell(cells[3], line_number);
    p.fpr_ratio = ParseCell(cells[4], line_number);
    p.unfairness = ParseCell(cells[5], line_number);
    p.method = cells[6];
    p.unremediated = p.lambda == 0.0;
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<ParetoPoint> FrontiersByMethod(std::span<const ParetoPoint> points) {
  std::vector<std::string> methods;
  for (const auto& p : points) {
    if (std::find(methods.begin(), methods.end(), p.method) == methods.end()) {
      methods.push_back(p.method);
    }
  }
  std::vector<ParetoPoint> out;
  for (const auto& method : methods) {
    std::vector<ParetoPoint> subset;
    for (const auto& p : points) {
      if (p.method == method) subset.push_back(p);
    }
    const auto frontier = ParetoFrontier(subset);
    out.insert(out.end(), frontier.begin(), frontier.end());
  }
  return out;
}

std::string GroupsTableCsv(std::span<const ParetoPoint> points,
                           const std::map<std::string, EvalReport>& prompt_reports) {
  std::string out =
      "method,lambda,group,majority,fpr_group,fpr_majority,fpr_ratio,n_negatives_group,"
      "n_negatives_majority\n";
  const auto append = [&](const std::string& method, const std::string& lambda,
                          const EvalReport& report) {
    for (const auto& row : report.rows) {
      out += method + "," + lambda + "," + row.group + "," + row.majority + "," +
             OptionalCell(row.fpr_group) + "," + OptionalCell(row.fpr_majority) + "," +
             OptionalCell(row.fpr_ratio) + "," + std::to_string(row.n_negatives_group) + "," +
             std::to_string(row.n_negatives_majority) + "\n";
    }
  };
  for (const auto& p : points) append(p.method, FormatDouble(p.lambda), p.report);
  for (const auto& [key, report] : prompt_reports) append("prompt:" + key, "", report);
  return out;
}

nlohmann::json RunManifest::ToJson() const {
  return {{"command", command},
          {"config", config},
          {"seeds", seeds},
          {"fairness_term", "squared MMD (biased V-statistic), gaussian kernel"}};
}

void EmitReport(std::span<const ParetoPoint> points,
                const std::map<std::string, EvalReport>& prompt_reports,
                const RunManifest& manifest, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create output directory " + dir.string());
  WriteTextFile(dir / "sweep.csv", SweepCsv(points));
  const auto frontier = FrontiersByMethod(points);
  WriteTextFile(dir / "frontier.csv", SweepCsv(frontier));
  WriteTextFile(dir / "groups.csv", GroupsTableCsv(points, prompt_reports));
  nlohmann::json doc = manifest.ToJson();
  doc["files"] = {"sweep.csv", "frontier.csv", "groups.csv", "manifest.json"};
  if (!prompt_reports.empty()) {
    nlohmann::json reports = nlohmann::json::object();
    for (const auto& [key, report] : prompt_reports) reports[key] = ToJson(report);
    WriteTextFile(dir / "prompt_reports.json", reports.dump(2) + "\n");
    doc["files"].push_back("prompt_reports.json");
  }
  WriteTextFile(dir / "manifest.json", doc.dump(2) + "\n");
}

}  // namespace fairlm
