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

// fairlm command line. Every subcommand reads one JSON config document
// (--config) with dotted --set overrides, and writes a manifest.json next to
// its outputs so the run can be replayed.
//
// Exit codes: 0 success, 1 validation error, 2 runtime or numerical failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairlm/dataset.h"
#include "fairlm/errors.h"
#include "fairlm/harness.h"
#include "fairlm/io.h"
#include "fairlm/metrics.h"
#include "fairlm/prompting.h"
#include "fairlm/report.h"
#include "fairlm/synthetic.h"
#include "fairlm/training.h"
#include "nlohmann/json.hpp"

namespace fairlm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
};

struct PromptOptions {
  std::vector<std::string> variants;
  std::string group_phrase;
  std::string super_group_phrase;
};

// Applies "a.b.c=value" to `doc`. The value is parsed as JSON when possible
// and taken as a plain string otherwise.
void ApplyOverride(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override '" + assignment + "' is not of the form key=value");
  }
  std::string pointer;
  std::string key = assignment.substr(0, eq);
  for (std::size_t start = 0; start <= key.size();) {
    const std::size_t dot = std::min(key.find('.', start), key.size());
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ValidationError("override key '" + key + "' has an empty segment");
    pointer += "/" + part;
    start = dot + 1;
  }
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  try {
    doc[json::json_pointer(pointer)] = std::move(value);
  } catch (const json::exception& e) {
    throw ValidationError("cannot apply override '" + assignment + "': " + e.what());
  }
}

json LoadConfig(const CommonOptions& options) {
  json doc = json::object();
  if (!options.config_path.empty()) doc = ReadJsonFile(options.config_path);
  if (!doc.is_object()) throw ValidationError("config document must be a JSON object");
  for (const auto& assignment : options.overrides) ApplyOverride(doc, assignment);
  if (!options.out.empty()) doc["out"] = options.out;
  return doc;
}

// Relative paths in a config document are resolved against its directory.
fs::path ConfigDir(const CommonOptions& options) {
  return options.config_path.empty() ? fs::current_path()
                                     : fs::absolute(options.config_path).parent_path();
}

fs::path Resolve(const CommonOptions& options, const std::string& path) {
  const fs::path p(path);
  return p.is_absolute() ? p : ConfigDir(options) / p;
}

std::string RequireString(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_string()) {
    throw ValidationError(std::string("config needs a string field '") + key + "'");
  }
  return doc[key].get<std::string>();
}

json Section(const json& doc, const char* key) {
  if (!doc.contains(key)) return json::object();
  if (!doc[key].is_object()) throw ValidationError(std::string("'") + key + "' must be an object");
  return doc[key];
}

// "dataset" is either a directory written by gen-synth or an object
// {"instances": path, "ingestion": {...}}.
Dataset LoadDatasetFromConfig(const json& doc, const CommonOptions& options) {
  if (!doc.contains("dataset")) throw ValidationError("config needs a 'dataset' field");
  const json& spec = doc["dataset"];
  if (spec.is_string()) return LoadDatasetDir(Resolve(options, spec.get<std::string>()));
  if (!spec.is_object()) throw ValidationError("'dataset' must be a path or an object");
  const IngestionConfig ingestion =
      IngestionConfig::FromJson(Section(spec, "ingestion"), ConfigDir(options));
  return LoadDataset(Resolve(options, RequireString(spec, "instances")), ingestion);
}

std::vector<std::string> AllIds(const Dataset& dataset) {
  std::vector<std::string> ids;
  for (const Split split : kAllSplits) {
    for (const Example& example : dataset.split(split)) ids.push_back(example.id);
  }
  return ids;
}

void WriteManifest(const fs::path& dir, const RunManifest& manifest) {
  fs::create_directories(dir);
  WriteTextFile(dir / "manifest.json", manifest.ToJson().dump(2) + "\n");
}

// The sweep pair defaults to the first pair of the dataset's group table.
SweepConfig LoadSweep(const json& doc, const Dataset& dataset, std::optional<Method> forced) {
  json section = Section(doc, "sweep");
  if (forced) section["method"] = std::string(MethodName(*forced));
  if (!section.contains("pair") && !dataset.group_table().pairs.empty()) {
    const GroupPair& pair = dataset.group_table().pairs.front();
    section["pair"] = {{"group", pair.group}, {"majority", pair.majority}};
  }
  return SweepConfig::FromJson(section);
}

// Seeds used to build the dataset, plus `extra`.
std::vector<std::uint64_t> RunSeeds(const Dataset& dataset, std::vector<std::uint64_t> extra) {
  const json& metadata = dataset.metadata();
  if (metadata.contains("synthetic_spec") && metadata["synthetic_spec"].contains("seed")) {
    extra.insert(extra.begin(), metadata["synthetic_spec"]["seed"].get<std::uint64_t>());
  }
  return extra;
}

// Baseline predictions from a file, or from a plain head trained with the
// sweep's base settings when no file is configured.
PredictionMap BaselineFor(const json& doc, const CommonOptions& options, const Dataset& dataset,
                          const SweepConfig& sweep, const char* key) {
  if (doc.contains(key)) return ReadPredictions(Resolve(options, RequireString(doc, key)));
  RemediationConfig plain = sweep.base;
  plain.lambda = 0.0;
  plain.pair = sweep.pair;
  return PredictAll(TrainHead(dataset, plain).model, dataset);
}

int GenSynth(const CommonOptions& options) {
  json doc = LoadConfig(options);
  const SyntheticSpec spec = SyntheticSpec::FromJson(Section(doc, "synthetic"));
  const fs::path out = Resolve(options, RequireString(doc, "out"));
  const Dataset dataset = GenSynthetic(spec);
  SaveDataset(dataset, out);
  doc["synthetic"] = spec.ToJson();
  WriteManifest(out, {"gen-synth", doc, {spec.seed}});
  std::printf("wrote %zu/%zu/%zu instances to %s (expected ratio %.4f)\n",
              dataset.split(Split::kTrain).size(), dataset.split(Split::kValidation).size(),
              dataset.split(Split::kTest).size(), out.string().c_str(),
              SolveSyntheticModel(spec).expected_ratio());
  return 0;
}

int TrainHeadCommand(const CommonOptions& options) {
  json doc = LoadConfig(options);
  const RemediationConfig config = RemediationConfig::FromJson(Section(doc, "remediation"));
  const fs::path out = Resolve(options, RequireString(doc, "out"));
  const Dataset dataset = LoadDatasetFromConfig(doc, options);
  const TrainedHead head = TrainHead(dataset, config);
  fs::create_directories(out);
  json model = head.ToJson();
  model["dimension"] = dataset.dimension();
  WriteTextFile(out / "model.json", model.dump(2) + "\n");
  WritePredictions(PredictAll(head.model, dataset), AllIds(dataset), out / "predictions.jsonl");
  doc["remediation"] = config.ToJson();
  WriteManifest(out, {"train-head", doc, RunSeeds(dataset, {config.seed})});
  std::printf("trained head over %zu epochs, final objective %s\n",
              head.loss_trace.empty() ? 0 : head.loss_trace.size() - 1,
              head.loss_trace.empty() ? "n/a" : FormatDouble(head.loss_trace.back().total).c_str());
  return 0;
}

void PrintPoints(const std::vector<ParetoPoint>& points) {
  for (const auto& p : points) {
    std::printf("%-16s lambda %-8s auc %.5f ratio %.4f unfairness %.4f\n", p.method.c_str(),
                FormatDouble(p.lambda).c_str(), p.auc, p.fpr_ratio, p.unfairness);
  }
}

int SweepCommand(const CommonOptions& options, std::optional<Method> forced, const char* name) {
  json doc = LoadConfig(options);
  const fs::path out = Resolve(options, RequireString(doc, "out"));
  const Dataset dataset = LoadDatasetFromConfig(doc, options);
  const SweepConfig sweep = LoadSweep(doc, dataset, forced);
  std::vector<ParetoPoint> points;
  if (sweep.method == Method::kPostProcessing) {
    const PredictionMap baseline = BaselineFor(doc, options, dataset, sweep, "baseline");
    points = Sweep(dataset, sweep, &baseline);
  } else {
    points = Sweep(dataset, sweep);
  }
  doc["sweep"] = sweep.ToJson();
  EmitReport(points, {}, {name, doc, RunSeeds(dataset, {sweep.base.seed})}, out);
  PrintPoints(points);
  return 0;
}

int TransferCommand(const CommonOptions& options) {
  json doc = LoadConfig(options);
  const fs::path out = Resolve(options, RequireString(doc, "out"));
  const Dataset dataset = LoadDatasetFromConfig(doc, options);
  const SweepConfig sweep = LoadSweep(doc, dataset, Method::kPostProcessing);
  const PredictionMap source = BaselineFor(doc, options, dataset, sweep, "source_baseline");
  std::vector<std::uint64_t> seeds = RunSeeds(dataset, {sweep.base.seed});

  // Without a target baseline and third-party embeddings the synthetic
  // two-model fixture stands in for both.
  PredictionMap target;
  EmbeddingTable embeddings;
  const bool external = doc.contains("target_baseline") || doc.contains("third_party_embeddings");
  if (external) {
    target = ReadPredictions(Resolve(options, RequireString(doc, "target_baseline")));
    const std::string format = doc.value("embedding_format", std::string("jsonl"));
    if (format != "jsonl" && format != "csv") {
      throw ValidationError("embedding_format must be jsonl or csv");
    }
    embeddings = ReadEmbeddingTable(Resolve(options, RequireString(doc, "third_party_embeddings")),
                                    format == "csv" ? IngestionConfig::EmbeddingFormat::kCsv
                                                    : IngestionConfig::EmbeddingFormat::kJsonLines);
  } else {
    const TransferFixtureSpec fixture_spec =
        TransferFixtureSpec::FromJson(Section(doc, "transfer_fixture"));
    TransferFixture fixture = MakeTransferFixture(dataset, source, fixture_spec);
    target = std::move(fixture.target_baseline);
    embeddings = std::move(fixture.third_party);
    doc["transfer_fixture"] = fixture_spec.ToJson();
    seeds.push_back(fixture_spec.seed);
  }
  const TransferResult result = TransferExperiment(source, target, embeddings, dataset, sweep);
  std::vector<ParetoPoint> points = result.native;
  points.insert(points.end(), result.transfer.begin(), result.transfer.end());
  doc["sweep"] = sweep.ToJson();
  EmitReport(points, {}, {"transfer", doc, seeds}, out);
  PrintPoints(points);
  return 0;
}

std::vector<PromptVariant> ResolveVariants(const json& doc, const PromptOptions& prompt) {
  std::vector<std::string> kinds = prompt.variants;
  if (kinds.empty() && doc.contains("variants")) {
    kinds = doc["variants"].get<std::vector<std::string>>();
  }
  if (kinds.empty()) kinds = {"base", "pbf", "pbf2sg", "pbf2tg"};
  std::optional<std::string> group_phrase;
  std::optional<std::string> super_group_phrase;
  if (!prompt.group_phrase.empty()) {
    group_phrase = prompt.group_phrase;
  } else if (doc.contains("group_phrase")) {
    group_phrase = doc["group_phrase"].get<std::string>();
  }
  if (!prompt.super_group_phrase.empty()) {
    super_group_phrase = prompt.super_group_phrase;
  } else if (doc.contains("super_group_phrase")) {
    super_group_phrase = doc["super_group_phrase"].get<std::string>();
  }
  std::vector<PromptVariant> variants;
  for (const auto& kind : kinds) {
    variants.push_back(PromptVariant::Parse(kind, kind == "pbf2tg" ? group_phrase : std::nullopt,
                                            kind == "pbf2sg" ? super_group_phrase : std::nullopt));
  }
  return variants;
}

int PromptEval(const CommonOptions& options, const PromptOptions& prompt) {
  json doc = LoadConfig(options);
  const fs::path out = Resolve(options, RequireString(doc, "out"));
  const Dataset dataset = LoadDatasetFromConfig(doc, options);
  json scorer = Section(doc, "scorer");
  ScorerBinding binding = ScorerBinding::FromJson(scorer);
  if (binding.mode == ScorerBinding::Mode::kFile) {
    binding.location = Resolve(options, binding.location).string();
  }
  if (binding.cache_path) binding.cache_path = Resolve(options, binding.cache_path->string());
  const Split split = ParseSplit(doc.value("split", std::string("test")));
  const double threshold = doc.value("threshold", kDefaultThreshold);
  const std::vector<PromptVariant> variants = ResolveVariants(doc, prompt);
  const auto reports = EvaluatePromptVariants(dataset, split, binding, variants,
                                              dataset.group_table(), threshold);
  json keys = json::array();
  for (const auto& variant : variants) keys.push_back(variant.Key());
  doc["variants"] = keys;
  doc["scorer"] = binding.ToJson();
  EmitReport({}, reports, {"prompt-eval", doc, RunSeeds(dataset, {})}, out);
  for (const auto& [key, report] : reports) {
    std::printf("%-40s auc %.5f\n", key.c_str(), report.auc);
    for (const auto& row : report.rows) {
      std::printf("  %s/%s ratio %s\n", row.group.c_str(), row.majority.c_str(),
                  row.fpr_ratio ? FormatDouble(*row.fpr_ratio).c_str() : "undefined");
    }
  }
  return 0;
}

// Merges sweep CSVs from earlier runs and recomputes the frontiers.
int ReportCommand(const CommonOptions& options) {
  json doc = LoadConfig(options);
  const fs::path out = Resolve(options, RequireString(doc, "out"));
  if (!doc.contains("inputs") || !doc["inputs"].is_array() || doc["inputs"].empty()) {
    throw ValidationError("report needs a non-empty 'inputs' list of sweep CSV files");
  }
  std::vector<ParetoPoint> points;
  for (const auto& input : doc["inputs"]) {
    const auto parsed = ParseSweepCsv(ReadTextFile(Resolve(options, input.get<std::string>())));
    points.insert(points.end(), parsed.begin(), parsed.end());
  }
  fs::create_directories(out);
  WriteTextFile(out / "sweep.csv", SweepCsv(points));
  WriteTextFile(out / "frontier.csv", SweepCsv(FrontiersByMethod(points)));
  WriteManifest(out, {"report", doc, {}});
  PrintPoints(FrontiersByMethod(points));
  return 0;
}

void AddCommon(CLI::App* command, CommonOptions& options) {
  command->add_option("-c,--config", options.config_path, "JSON config document")
      ->check(CLI::ExistingFile);
  command->add_option("-s,--set", options.overrides,
                      "Override a config field, e.g. sweep.lambdas=[0,1] (repeatable)");
  command->add_option("-o,--out", options.out, "Output directory (overrides 'out')");
}

int Main(int argc, char** argv) {
  CLI::App app{"Group-fairness remediation experiments for toxicity classifiers"};
  app.require_subcommand(1);
  CommonOptions options;
  PromptOptions prompt;

  std::map<std::string, CLI::App*> commands;
  const std::vector<std::pair<std::string, std::string>> descriptions = {
      {"gen-synth", "Generate the synthetic dataset with a planted FPR gap"},
      {"train-head", "Train a classification head (plain or MMD-regularized)"},
      {"sweep", "Lambda sweep of a remediation method (in-processing by default)"},
      {"postproc", "Lambda sweep of the post-processing model over a baseline"},
      {"transfer", "Train post-processing on one baseline and apply it to another"},
      {"prompt-eval", "Evaluate prompt variants against a scorer"},
      {"report", "Merge sweep CSVs and recompute the frontiers"},
  };
  for (const auto& [name, description] : descriptions) {
    commands[name] = app.add_subcommand(name, description);
    AddCommon(commands[name], options);
  }
  commands["prompt-eval"]->add_option("--variant", prompt.variants,
                                      "base, pbf, pbf2sg or pbf2tg (repeatable)");
  commands["prompt-eval"]->add_option("--group-phrase", prompt.group_phrase,
                                      "Target group phrase for pbf2tg");
  commands["prompt-eval"]->add_option("--super-group-phrase", prompt.super_group_phrase,
                                      "Super group phrase for pbf2sg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (commands["gen-synth"]->parsed()) return GenSynth(options);
    if (commands["train-head"]->parsed()) return TrainHeadCommand(options);
    if (commands["sweep"]->parsed()) return SweepCommand(options, std::nullopt, "sweep");
    if (commands["postproc"]->parsed()) {
      return SweepCommand(options, Method::kPostProcessing, "postproc");
    }
    if (commands["transfer"]->parsed()) return TransferCommand(options);
    if (commands["prompt-eval"]->parsed()) return PromptEval(options, prompt);
    if (commands["report"]->parsed()) return ReportCommand(options);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return 2;
  }
  return 1;
}

}  // namespace
}  // namespace fairlm

int main(int argc, char** argv) { return fairlm::Main(argc, argv); }
