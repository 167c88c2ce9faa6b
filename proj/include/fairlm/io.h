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

#ifndef FAIRLM_IO_H_
#define FAIRLM_IO_H_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>

#include "nlohmann/json.hpp"

namespace fairlm {

// Predicted positive-class probability keyed by instance id.
using PredictionMap = std::unordered_map<std::string, double>;

// Round-trip representation ("%.17g"); "nan", "inf" and "-inf" for
// non-finite values.
std::string FormatDouble(double value);

// Calls `fn(line_number, record)` for every non-blank line. Parse failures
// raise ValidationError with the file name and 1-based line number.
void ForEachJsonLine(
    const std::filesystem::path& path,
    const std::function<void(std::size_t, const nlohmann::json&)>& fn);

nlohmann::json ReadJsonFile(const std::filesystem::path& path);
std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, const std::string& content);

// JSON-lines {"id": ..., "prob": ...}.
PredictionMap ReadPredictions(const std::filesystem::path& path);
// Lines are written in `id_order`; ids absent from the map are skipped.
void WritePredictions(const PredictionMap& predictions,
                      std::span<const std::string> id_order,
                      const std::filesystem::path& path);

}  // namespace fairlm

#endif  // FAIRLM_IO_H_
