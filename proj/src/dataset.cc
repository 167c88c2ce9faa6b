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

#include "fairlm/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "fairlm/errors.h"
#include "fairlm/io.h"

namespace fairlm {

namespace {

std::string JoinNames(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& name : names) {
    if (!out.empty()) out += ", ";
    out += name;
  }
  return out.empty() ? "<none>" : out;
}

double ReadProportion(const nlohmann::json& value, const std::string& id,
                      const std::string& column) {
  if (!value.is_number()) {
    throw ValidationError("instance '" + id + "': proportion '" + column +
                          "' is not a number");
  }
  return value.get<double>();
}

EmbeddingTable ReadEmbeddingsJsonl(const std::filesystem::path& path) {
  EmbeddingTable table;
  bool first = true;
  ForEachJsonLine(path, [&](std::size_t line, const nlohmann::json& record) {
    const auto where = path.string() + ":" + std::to_string(line);
    if (!record.contains("id") || !record.contains("embedding")) {
      throw ValidationError(where + ": embedding record needs 'id' and 'embedding'");
    }
    std::string id = record["id"].get<std::string>();
    std::vector<double> vec;
    try {
      vec = record["embedding"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError(where + ": embedding of '" + id + "' is not an array of reals");
    }
    if (first) {
      table.dimension = vec.size();
      first = false;
    } else if (vec.size() != table.dimension) {
      throw ValidationError(where + ": embedding of '" + id + "' has length " +
                            std::to_string(vec.size()) + ", expected " +
                            std::to_string(table.dimension));
    }
    if (!table.vectors.emplace(std::move(id), std::move(vec)).second) {
      throw ValidationError(where + ": duplicate embedding id");
    }
  });
  return table;
}

EmbeddingTable ReadEmbeddingsCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  EmbeddingTable table;
  bool first = true;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const auto where = path.string() + ":" + std::to_string(line_number);
    if (cells.empty()) continue;
    // Optional header row.
    if (line_number == 1 && cells[0] == "id") continue;
    std::vector<double> vec;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      try {
        std::size_t used = 0;
        vec.push_back(std::stod(cells[i], &used));
        if (used != cells[i].size()) throw std::invalid_argument(cells[i]);
      } catch (const std::exception&) {
        throw ValidationError(where + ": cannot parse '" + cells[i] + "' as a real");
      }
    }
    if (first) {
      table.dimension = vec.size();
      first = false;
    } else if (vec.size() != table.dimension) {
      throw ValidationError(where + ": embedding of '" + cells[0] + "' has length " +
                            std::to_string(vec.size()) + ", expected " +
                            std::to_string(table.dimension));
    }
    if (!table.vectors.emplace(cells[0], std::move(vec)).second) {
      throw ValidationError(where + ": duplicate embedding id '" + cells[0] + "'");
    }
  }
  return table;
}

}  // namespace

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "unknown";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw ValidationError("unknown split name '" + std::string(name) +
                        "' (expected train, validation or test)");
}

bool Example::InGroup(std::string_view group) const {
  return groups.find(std::string(group)) != groups.end();
}

void GroupConfig::Validate() const {
  for (const auto& pair : pairs) {
    if (pair.group.empty() || pair.majority.empty()) {
      throw ValidationError("group pair with an empty name");
    }
    if (pair.group == pair.majority) {
      throw ValidationError("group '" + pair.group + "' is paired with itself as majority");
    }
  }
}

Dataset::Dataset(std::size_t dimension, std::array<std::vector<Example>, 3> splits,
                 GroupConfig group_table, nlohmann::json metadata)
    : dimension_(dimension),
      splits_(std::move(splits)),
      group_table_(std::move(group_table)),
      metadata_(std::move(metadata)) {
  group_table_.Validate();
  std::set<std::string> known;
  for (const Split split : kAllSplits) {
    std::unordered_set<std::string> ids;
    for (const Example& example : splits_[static_cast<std::size_t>(split)]) {
      if (example.embedding.size() != dimension_) {
        throw ValidationError("instance '" + example.id + "' has embedding length " +
                              std::to_string(example.embedding.size()) +
                              ", dataset dimension is " + std::to_string(dimension_));
      }
      if (example.label != 0 && example.label != 1) {
        throw ValidationError("instance '" + example.id + "' has a non-binary label");
      }
      if (example.baseline_prob &&
          !(*example.baseline_prob > 0.0 && *example.baseline_prob < 1.0)) {
        throw ValidationError("instance '" + example.id +
                              "' has a baseline probability outside (0, 1)");
      }
      if (!ids.insert(example.id).second) {
        throw ValidationError("duplicate id '" + example.id + "' in split " +
                              std::string(SplitName(split)));
      }
      known.insert(example.groups.begin(), example.groups.end());
    }
  }
  known_groups_.assign(known.begin(), known.end());
  std::set<std::string> unseen;
  for (const auto& pair : group_table_.pairs) {
    if (!known.count(pair.group)) unseen.insert(pair.group);
    if (!known.count(pair.majority)) unseen.insert(pair.majority);
  }
  unseen_groups_.assign(unseen.begin(), unseen.end());
}

Dataset Dataset::WithEmbeddings(const EmbeddingTable& table) const {
  auto splits = splits_;
  for (auto& examples : splits) {
    for (Example& example : examples) {
      const auto it = table.vectors.find(example.id);
      if (it == table.vectors.end()) {
        throw ValidationError("embedding table has no entry for '" + example.id + "'");
      }
      example.embedding = it->second;
    }
  }
  return Dataset(table.dimension, std::move(splits), group_table_, metadata_);
}

Dataset Dataset::WithGroupTable(GroupConfig group_table) const {
  return Dataset(dimension_, splits_, std::move(group_table), metadata_);
}

int Binarize(double p, std::string_view instance_id) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("proportion " + FormatDouble(p) + " of instance '" +
                          std::string(instance_id) + "' is outside [0, 1]");
  }
  return p > 0.0 ? 1 : 0;
}

IngestionConfig IngestionConfig::FromJson(const nlohmann::json& doc,
                                          const std::filesystem::path& base_dir) {
  IngestionConfig config;
  try {
    if (doc.contains("target_label")) config.target_label = doc["target_label"].get<std::string>();
    if (doc.contains("groups")) {
      config.group_names = doc["groups"].get<std::vector<std::string>>();
    }
    if (doc.contains("pairs")) {
      for (const auto& pair : doc["pairs"]) {
        config.group_table.pairs.push_back(
            {pair.at("group").get<std::string>(), pair.at("majority").get<std::string>()});
      }
    }
    if (doc.contains("embeddings") && !doc["embeddings"].is_null()) {
      const auto& emb = doc["embeddings"];
      std::filesystem::path path = emb.at("path").get<std::string>();
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      config.embedding_path = path;
      const std::string format = emb.value("format", "jsonl");
      if (format == "jsonl") {
        config.embedding_format = EmbeddingFormat::kJsonLines;
      } else if (format == "csv") {
        config.embedding_format = EmbeddingFormat::kCsv;
      } else {
        throw ValidationError("unknown embedding format '" + format + "'");
      }
    }
    if (doc.contains("dimension") && !doc["dimension"].is_null()) {
      config.dimension = doc["dimension"].get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed ingestion config: ") + e.what());
  }
  if (config.target_label.empty()) throw ValidationError("ingestion config needs a target_label");
  config.group_table.Validate();
  return config;
}

nlohmann::json IngestionConfig::ToJson() const {
  nlohmann::json doc;
  doc["target_label"] = target_label;
  doc["groups"] = group_names;
  doc["pairs"] = nlohmann::json::array();
  for (const auto& pair : group_table.pairs) {
    doc["pairs"].push_back({{"group", pair.group}, {"majority", pair.majority}});
  }
  if (embedding_path) {
    doc["embeddings"] = {{"path", embedding_path->string()},
                         {"format", embedding_format == EmbeddingFormat::kCsv ? "csv" : "jsonl"}};
  }
  if (dimension) doc["dimension"] = *dimension;
  return doc;
}

EmbeddingTable ReadEmbeddingTable(const std::filesystem::path& path,
                                  IngestionConfig::EmbeddingFormat format) {
  return format == IngestionConfig::EmbeddingFormat::kCsv ? ReadEmbeddingsCsv(path)
                                                         : ReadEmbeddingsJsonl(path);
}

void WriteEmbeddingTableJsonl(const EmbeddingTable& table,
                              std::span<const std::string> id_order,
                              const std::filesystem::path& path) {
  std::string content;
  for (const auto& id : id_order) {
    const auto it = table.vectors.find(id);
    if (it == table.vectors.end()) continue;
    content += nlohmann::json({{"id", id}, {"embedding", it->second}}).dump();
    content += '\n';
  }
  WriteTextFile(path, content);
}

Dataset LoadDataset(const std::filesystem::path& path, const IngestionConfig& config) {
  std::array<std::vector<Example>, 3> splits;
  const std::set<std::string> selected(config.group_names.begin(), config.group_names.end());

  ForEachJsonLine(path, [&](std::size_t line, const nlohmann::json& record) {
    const auto where = path.string() + ":" + std::to_string(line);
    if (!record.is_object()) throw ValidationError(where + ": record is not an object");
    if (!record.contains("id") || !record["id"].is_string() ||
        record["id"].get<std::string>().empty()) {
      throw ValidationError(where + ": record is missing its id");
    }
    Example example;
    example.id = record["id"].get<std::string>();
    if (!record.contains("split") || !record["split"].is_string()) {
      throw ValidationError(where + ": instance '" + example.id + "' has no split");
    }
    const Split split = ParseSplit(record["split"].get<std::string>());

    const auto labels = record.value("label_proportions", nlohmann::json::object());
    for (const auto& [name, value] : labels.items()) {
      Binarize(ReadProportion(value, example.id, name), example.id);
    }
    if (!labels.contains(config.target_label)) {
      throw ValidationError(where + ": instance '" + example.id +
                            "' is missing target label '" + config.target_label + "'");
    }
    example.label =
        Binarize(ReadProportion(labels[config.target_label], example.id, config.target_label),
                 example.id);

    const auto groups = record.value("group_proportions", nlohmann::json::object());
    for (const auto& [name, value] : groups.items()) {
      const int member = Binarize(ReadProportion(value, example.id, name), example.id);
      if (member == 1 && (selected.empty() || selected.count(name))) {
        example.groups.insert(name);
      }
    }
    if (record.contains("text") && record["text"].is_string()) {
      example.text = record["text"].get<std::string>();
    }
    if (record.contains("baseline_prob") && !record["baseline_prob"].is_null()) {
      example.baseline_prob = record["baseline_prob"].get<double>();
    }
    splits[static_cast<std::size_t>(split)].push_back(std::move(example));
  });

  std::size_t dimension = config.dimension.value_or(0);
  if (config.embedding_path) {
    const EmbeddingTable table = ReadEmbeddingTable(*config.embedding_path, config.embedding_format);
    if (config.dimension && table.dimension != *config.dimension && !table.vectors.empty()) {
      throw ValidationError("embedding file " + config.embedding_path->string() +
                            " has dimension " + std::to_string(table.dimension) +
                            ", declared dimension is " + std::to_string(*config.dimension));
    }
    if (!table.vectors.empty()) dimension = table.dimension;
    for (auto& examples : splits) {
      for (Example& example : examples) {
        const auto it = table.vectors.find(example.id);
        if (it == table.vectors.end()) {
          throw ValidationError("embedding file " + config.embedding_path->string() +
                                " has no entry for '" + example.id + "'");
        }
        example.embedding = it->second;
      }
    }
  } else {
    // Prompt-only flows carry no embeddings.
    dimension = 0;
  }
  return Dataset(dimension, std::move(splits), config.group_table);
}

Dataset LoadDatasetDir(const std::filesystem::path& dir) {
  const IngestionConfig config =
      IngestionConfig::FromJson(ReadJsonFile(dir / "ingestion.json"), dir);
  Dataset loaded = LoadDataset(dir / "instances.jsonl", config);
  nlohmann::json metadata = nlohmann::json::object();
  if (std::filesystem::exists(dir / "metadata.json")) {
    metadata = ReadJsonFile(dir / "metadata.json");
  }
  std::array<std::vector<Example>, 3> splits;
  for (const Split split : kAllSplits) {
    splits[static_cast<std::size_t>(split)] = loaded.split(split);
  }
  return Dataset(loaded.dimension(), std::move(splits), loaded.group_table(),
                 std::move(metadata));
}

void SaveDataset(const Dataset& dataset, const std::filesystem::path& dir,
                 std::string_view target_label) {
  std::string instances;
  EmbeddingTable table;
  table.dimension = dataset.dimension();
  std::vector<std::string> order;
  for (const Split split : kAllSplits) {
    for (const Example& example : dataset.split(split)) {
      nlohmann::json record;
      record["id"] = example.id;
      if (example.text) record["text"] = *example.text;
      record["label_proportions"] = {{std::string(target_label), example.label == 1 ? 1.0 : 0.0}};
      nlohmann::json groups = nlohmann::json::object();
      for (const auto& group : example.groups) groups[group] = 1.0;
      record["group_proportions"] = groups;
      record["split"] = std::string(SplitName(split));
      if (example.baseline_prob) record["baseline_prob"] = *example.baseline_prob;
      instances += record.dump();
      instances += '\n';
      // Ids may repeat across splits; the embedding file is keyed by id.
      if (!table.vectors.count(example.id)) {
        table.vectors.emplace(example.id, example.embedding);
        order.push_back(example.id);
      }
    }
  }
  std::filesystem::create_directories(dir);
  WriteTextFile(dir / "instances.jsonl", instances);
  IngestionConfig config;
  config.target_label = std::string(target_label);
  config.group_names = dataset.known_groups();
  config.group_table = dataset.group_table();
  config.dimension = dataset.dimension();
  if (dataset.dimension() > 0) {
    WriteEmbeddingTableJsonl(table, order, dir / "embeddings.jsonl");
    config.embedding_path = "embeddings.jsonl";
  }
  WriteTextFile(dir / "ingestion.json", config.ToJson().dump(2) + "\n");
  WriteTextFile(dir / "metadata.json", dataset.metadata().dump(2) + "\n");
}

std::vector<std::size_t> GroupNegativeIndices(const Dataset& dataset, Split split,
                                              std::string_view group) {
  const auto& known = dataset.known_groups();
  bool is_known = std::binary_search(known.begin(), known.end(), std::string(group));
  std::vector<std::string> names = known;
  for (const auto& pair : dataset.group_table().pairs) {
    if (pair.group == group || pair.majority == group) is_known = true;
    names.push_back(pair.group);
    names.push_back(pair.majority);
  }
  if (!is_known) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    throw ValidationError("unknown group '" + std::string(group) +
                          "'; known groups: " + JoinNames(names));
  }
  std::vector<std::size_t> out;
  const auto& examples = dataset.split(split);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].label == 0 && examples[i].InGroup(group)) out.push_back(i);
  }
  return out;
}

std::vector<Example> GroupNegatives(const Dataset& dataset, Split split,
                                    std::string_view group) {
  std::vector<Example> out;
  const auto& examples = dataset.split(split);
  for (const std::size_t i : GroupNegativeIndices(dataset, split, group)) {
    out.push_back(examples[i]);
  }
  return out;
}

}  // namespace fairlm
