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

// Instance data: binarization of rater proportions, JSON-lines ingestion, and
// the immutable Dataset consumed by the metric and training code.

#ifndef FAIRLM_DATASET_H_
#define FAIRLM_DATASET_H_

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nlohmann/json.hpp"

namespace fairlm {

enum class Split { kTrain = 0, kValidation = 1, kTest = 2 };

inline constexpr std::array<Split, 3> kAllSplits = {Split::kTrain, Split::kValidation,
                                                    Split::kTest};

std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);

struct Example {
  std::string id;
  std::vector<double> embedding;
  int label = 0;
  std::set<std::string> groups;
  std::optional<std::string> text;
  std::optional<double> baseline_prob;

  bool InGroup(std::string_view group) const;
};

struct GroupPair {
  std::string group;
  std::string majority;

  bool operator==(const GroupPair&) const = default;
};

struct GroupConfig {
  std::vector<GroupPair> pairs;

  void Validate() const;
};

// Embedding vectors keyed by instance id.
struct EmbeddingTable {
  std::size_t dimension = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;
};

// Immutable after construction. Safe for concurrent reads.
class Dataset {
 public:
  Dataset() = default;
  // Validates shared dimension and per-split id uniqueness.
  Dataset(std::size_t dimension, std::array<std::vector<Example>, 3> splits,
          GroupConfig group_table, nlohmann::json metadata = nlohmann::json::object());

  std::size_t dimension() const { return dimension_; }
  const std::vector<Example>& split(Split split) const {
    return splits_[static_cast<std::size_t>(split)];
  }
  const GroupConfig& group_table() const { return group_table_; }
  const nlohmann::json& metadata() const { return metadata_; }

  // Every group name carried by at least one example, sorted.
  const std::vector<std::string>& known_groups() const { return known_groups_; }
  // Names referenced by the group table that no example carries.
  const std::vector<std::string>& unseen_groups() const { return unseen_groups_; }

  // Copy with every embedding replaced by the table entry of the same id.
  Dataset WithEmbeddings(const EmbeddingTable& table) const;
  // Copy with a different group table.
  Dataset WithGroupTable(GroupConfig group_table) const;

 private:
  std::size_t dimension_ = 0;
  std::array<std::vector<Example>, 3> splits_;
  GroupConfig group_table_;
  nlohmann::json metadata_ = nlohmann::json::object();
  std::vector<std::string> known_groups_;
  std::vector<std::string> unseen_groups_;
};

// 1 iff the proportion of raters is non-zero. Throws ValidationError naming
// `instance_id` when p lies outside [0, 1].
int Binarize(double p, std::string_view instance_id = {});

struct IngestionConfig {
  enum class EmbeddingFormat { kJsonLines, kCsv };

  std::string target_label = "toxicity";
  // Group columns to read; empty means every column present in the file.
  std::vector<std::string> group_names;
  GroupConfig group_table;
  std::optional<std::filesystem::path> embedding_path;
  EmbeddingFormat embedding_format = EmbeddingFormat::kJsonLines;
  // Declared embedding dimension; inferred from the embedding file if absent.
  std::optional<std::size_t> dimension;

  // Relative embedding paths are resolved against `base_dir`.
  static IngestionConfig FromJson(const nlohmann::json& doc,
                                  const std::filesystem::path& base_dir = {});
  nlohmann::json ToJson() const;
};

EmbeddingTable ReadEmbeddingTable(const std::filesystem::path& path,
                                  IngestionConfig::EmbeddingFormat format);
void WriteEmbeddingTableJsonl(const EmbeddingTable& table,
                              std::span<const std::string> id_order,
                              const std::filesystem::path& path);

Dataset LoadDataset(const std::filesystem::path& path, const IngestionConfig& config);

// Reads a directory written by SaveDataset (ingestion.json, instances.jsonl,
// embeddings.jsonl and optional metadata.json).
Dataset LoadDatasetDir(const std::filesystem::path& dir);
void SaveDataset(const Dataset& dataset, const std::filesystem::path& dir,
                 std::string_view target_label = "toxicity");

// Positions (within the split) of the examples with label 0 that belong to
// `group`, in dataset order. Throws ValidationError listing the known names
// when the group is unknown.
std::vector<std::size_t> GroupNegativeIndices(const Dataset& dataset, Split split,
                                              std::string_view group);
std::vector<Example> GroupNegatives(const Dataset& dataset, Split split,
                                    std::string_view group);

}  // namespace fairlm

#endif  // FAIRLM_DATASET_H_
