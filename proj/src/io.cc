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

#include "fairlm/io.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fairlm/errors.h"

namespace fairlm {

std::string FormatDouble(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void ForEachJsonLine(
    const std::filesystem::path& path,
    const std::function<void(std::size_t, const nlohmann::json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_number) +
                            ": malformed JSON: " + e.what());
    }
    fn(line_number, record);
  }
}

nlohmann::json ReadJsonFile(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": malformed JSON: " + e.what());
  }
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteTextFile(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << content;
  if (!out) throw RuntimeFailure("write failed for " + path.string());
}

PredictionMap ReadPredictions(const std::filesystem::path& path) {
  PredictionMap out;
  ForEachJsonLine(path, [&](std::size_t line, const nlohmann::json& record) {
    try {
      const std::string id = record.at("id").get<std::string>();
      const double prob = record.at("prob").get<double>();
      if (!(prob >= 0.0 && prob <= 1.0)) {
        throw ValidationError("probability out of range");
      }
      if (!out.emplace(id, prob).second) throw ValidationError("duplicate id " + id);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

void WritePredictions(const PredictionMap& predictions,
                      std::span<const std::string> id_order,
                      const std::filesystem::path& path) {
  std::string content;
  for (const auto& id : id_order) {
    const auto it = predictions.find(id);
    if (it == predictions.end()) continue;
    nlohmann::json record = {{"id", id}, {"prob", it->second}};
    content += record.dump();
    content += '\n';
  }
  WriteTextFile(path, content);
}

}  // namespace fairlm
