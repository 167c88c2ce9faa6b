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

#include "fairlm/harness.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <thread>

#include "fairlm/errors.h"

namespace fairlm {

namespace {

// Runs fn(0..n-1) on up to `threads` workers. Failures are rethrown after
// every job settles, lowest index first.
void RunIndexed(std::size_t n, std::size_t threads,
                const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(threads, n));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
}

// Rethrows the active exception with `context` prepended, keeping its kind.
[[noreturn]] void RethrowWithContext(const std::string& context) {
  try {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(context + ": " + e.what());
  } catch (const RuntimeFailure& e) {
    throw RuntimeFailure(context + ": " + e.what());
  } catch (const std::exception& e) {
    throw RuntimeFailure(context + ": " + e.what());
  }
}

RemediationConfig PointConfig(const SweepConfig& config, double lambda) {
  RemediationConfig run = config.base;
  run.lambda = lambda;
  run.pair = config.pair;
  return run;
}

void RequireCoverage(const PredictionMap& predictions, const Dataset& dataset, Split split,
                     const std::string& side) {
  std::vector<std::string> missing;
  for (const Example& example : dataset.split(split)) {
    if (!predictions.count(example.id)) missing.push_back(example.id);
  }
  if (missing.empty()) return;
  std::string message = side + " does not cover split " + std::string(SplitName(split)) +
                        "; missing";
  for (std::size_t i = 0; i < missing.size() && i < 20; ++i) message += " " + missing[i];
  if (missing.size() > 20) message += " ...";
  throw ValidationError(message);
}

std::string LambdaContext(double lambda) { return "sweep point lambda=" + FormatDouble(lambda); }

}  // namespace

std::string_view MethodName(Method method) {
  return method == Method::kInProcessing ? "in_processing" : "post_processing";
}

Method ParseMethod(std::string_view name) {
  if (name == "in_processing") return Method::kInProcessing;
  if (name == "post_processing") return Method::kPostProcessing;
  throw ValidationError("unknown method '" + std::string(name) +
                        "' (expected in_processing or post_processing)");
}

void SweepConfig::Validate() const {
  if (lambdas.empty()) throw ValidationError("sweep needs at least one lambda");
  if (std::find(lambdas.begin(), lambdas.end(), 0.0) == lambdas.end()) {
    throw ValidationError("sweep lambdas must include 0 (the unremediated point)");
  }
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0) || !std::isfinite(lambdas[i])) {
      throw ValidationError("sweep lambdas must be finite and non-negative");
    }
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) {
      throw ValidationError("sweep lambdas must be strictly increasing");
    }
  }
  GroupConfig{{pair}}.Validate();
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("decision threshold must lie inside (0, 1)");
  }
  if (threads == 0) throw ValidationError("threads must be positive");
  for (const double lambda : lambdas) PointConfig(*this, lambda).Validate();
}

nlohmann::json SweepConfig::ToJson() const {
  return {{"lambdas", lambdas},
          {"method", std::string(MethodName(method))},
          {"pair", {{"group", pair.group}, {"majority", pair.majority}}},
          {"eval_split", std::string(SplitName(eval_split))},
          {"threshold", threshold},
          {"base", base.ToJson()},
          {"threads", threads}};
}

SweepConfig SweepConfig::FromJson(const nlohmann::json& doc) {
  return FromJson(doc, SweepConfig{});
}

SweepConfig SweepConfig::FromJson(const nlohmann::json& doc, const SweepConfig& defaults) {
  SweepConfig config = defaults;
  try {
    if (doc.contains("lambdas")) config.lambdas = doc["lambdas"].get<std::vector<double>>();
    if (doc.contains("method")) config.method = ParseMethod(doc["method"].get<std::string>());
    if (doc.contains("pair")) {
      config.pair.group = doc["pair"].at("group").get<std::string>();
      config.pair.majority = doc["pair"].at("majority").get<std::string>();
    }
    if (doc.contains("eval_split")) {
      config.eval_split = ParseSplit(doc["eval_split"].get<std::string>());
    }
    config.threshold = doc.value("threshold", config.threshold);
    if (doc.contains("base")) {
      config.base = RemediationConfig::FromJson(doc["base"], config.base);
    }
    config.threads = doc.value("threads", config.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed sweep config: ") + e.what());
  }
  config.Validate();
  return config;
}

double Unfairness(double fpr_ratio) {
  if (std::isnan(fpr_ratio) || !(fpr_ratio > 0.0)) return std::numeric_limits<double>::infinity();
  return std::abs(std::log(fpr_ratio));
}

GroupConfig EvaluationPairs(const Dataset& dataset, const GroupPair& pair) {
  GroupConfig config = dataset.group_table();
  if (std::find(config.pairs.begin(), config.pairs.end(), pair) == config.pairs.end()) {
    config.pairs.push_back(pair);
  }
  return config;
}

ParetoPoint MakePoint(double lambda, std::string method, const EvalReport& report,
                      const GroupPair& pair) {
  const auto row = std::find_if(report.rows.begin(), report.rows.end(), [&](const auto& r) {
    return r.group == pair.group && r.majority == pair.majority;
  });
  if (row == report.rows.end()) {
    throw ValidationError("report has no row for pair " + pair.group + "/" + pair.majority);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ParetoPoint point;
  point.lambda = lambda;
  point.auc = report.auc;
  point.fpr_group = row->fpr_group.value_or(nan);
  point.fpr_majority = row->fpr_majority.value_or(nan);
  point.fpr_ratio = row->fpr_ratio.value_or(nan);
  point.unfairness = Unfairness(point.fpr_ratio);
  point.method = std::move(method);
  point.unremediated = lambda == 0.0;
  point.report = report;
  return point;
}

std::vector<ParetoPoint> Sweep(const Dataset& dataset, const SweepConfig& config,
                               const PredictionMap* baseline) {
  config.Validate();
  const GroupConfig pairs = EvaluationPairs(dataset, config.pair);
  if (config.method == Method::kPostProcessing) {
    if (baseline == nullptr) {
      throw ValidationError("post-processing sweep needs baseline predictions");
    }
    RequireCoverage(*baseline, dataset, Split::kTrain, "baseline");
    RequireCoverage(*baseline, dataset, config.eval_split, "baseline");
  }
  std::vector<ParetoPoint> points(config.lambdas.size());
  RunIndexed(config.lambdas.size(), config.threads, [&](std::size_t i) {
    const double lambda = config.lambdas[i];
    try {
      const RemediationConfig run = PointConfig(config, lambda);
      PredictionMap predictions;
      if (config.method == Method::kInProcessing) {
        const TrainedHead head = TrainHead(dataset, run);
        predictions = PredictSplit(head.model, dataset, config.eval_split);
      } else {
        const EmfaireningModel model = TrainEmfairening(*baseline, dataset, Split::kTrain, run);
        predictions = ApplyEmfairening(model, *baseline, dataset, config.eval_split);
      }
      const EvalReport report =
          Evaluate(dataset, config.eval_split, predictions, pairs, config.threshold);
      points[i] = MakePoint(lambda, std::string(MethodName(config.method)), report, config.pair);
    } catch (...) {
      RethrowWithContext(LambdaContext(lambda));
    }
  });
  return points;
}

std::vector<ParetoPoint> ParetoFrontier(std::span<const ParetoPoint> points) {
  const auto dominates = [](const ParetoPoint& a, const ParetoPoint& b) {
    return a.auc >= b.auc && a.unfairness <= b.unfairness &&
           (a.auc > b.auc || a.unfairness < b.unfairness);
  };
  std::vector<ParetoPoint> frontier;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const ParetoPoint& candidate = points[i];
    if (std::isnan(candidate.auc) || std::isnan(candidate.unfairness)) continue;
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
      dominated = j != i && dominates(points[j], candidate);
    }
    if (dominated) continue;
    const bool duplicate = std::any_of(frontier.begin(), frontier.end(), [&](const auto& kept) {
      return kept.auc == candidate.auc && kept.unfairness == candidate.unfairness;
    });
    if (!duplicate) frontier.push_back(candidate);
  }
  std::stable_sort(frontier.begin(), frontier.end(), [](const auto& a, const auto& b) {
    return a.auc > b.auc || (a.auc == b.auc && a.unfairness < b.unfairness);
  });
  return frontier;
}

TransferResult TransferExperiment(const PredictionMap& source_baseline,
                                  const PredictionMap& target_baseline,
                                  const EmbeddingTable& third_party_embeddings,
                                  const Dataset& dataset, const SweepConfig& config) {
  config.Validate();
  RequireCoverage(source_baseline, dataset, Split::kTrain, "source baseline");
  RequireCoverage(source_baseline, dataset, config.eval_split, "source baseline");
  RequireCoverage(target_baseline, dataset, config.eval_split, "target baseline");
  for (const Split split : {Split::kTrain, config.eval_split}) {
    for (const Example& example : dataset.split(split)) {
      if (!third_party_embeddings.vectors.count(example.id)) {
        throw ValidationError("third-party embeddings have no entry for '" + example.id + "'");
      }
    }
  }
  // Only the splits the experiment touches need third-party vectors.
  std::array<std::vector<Example>, 3> splits;
  for (const Split split : {Split::kTrain, config.eval_split}) {
    auto& examples = splits[static_cast<std::size_t>(split)];
    examples = dataset.split(split);
    for (Example& example : examples) {
      example.embedding = third_party_embeddings.vectors.at(example.id);
    }
  }
  const Dataset embedded(third_party_embeddings.dimension, std::move(splits),
                         dataset.group_table(), dataset.metadata());
  const GroupConfig pairs = EvaluationPairs(embedded, config.pair);

  TransferResult result;
  result.native.resize(config.lambdas.size());
  result.transfer.resize(config.lambdas.size());
  RunIndexed(config.lambdas.size(), config.threads, [&](std::size_t i) {
    const double lambda = config.lambdas[i];
    try {
      const EmfaireningModel model =
          TrainEmfairening(source_baseline, embedded, Split::kTrain, PointConfig(config, lambda));
      const auto native = ApplyEmfairening(model, source_baseline, embedded, config.eval_split);
      const auto transfer = ApplyEmfairening(model, target_baseline, embedded, config.eval_split);
      result.native[i] = MakePoint(
          lambda, "native",
          Evaluate(embedded, config.eval_split, native, pairs, config.threshold), config.pair);
      result.transfer[i] = MakePoint(
          lambda, "transfer",
          Evaluate(embedded, config.eval_split, transfer, pairs, config.threshold), config.pair);
    } catch (...) {
      RethrowWithContext(LambdaContext(lambda));
    }
  });
  return result;
}

PredictionMap PromptVariantPredictions(const Dataset& dataset, Split split,
                                       const ScorerBinding& binding,
                                       const PromptVariant& variant) {
  std::vector<PromptRequest> requests;
  for (const Example& example : dataset.split(split)) {
    if (!example.text || example.text->empty()) {
      throw ValidationError("instance '" + example.id + "' has no text to prompt with");
    }
    requests.push_back({example.id, WrapPrompt(*example.text, variant)});
  }
  const ScoreMap scores = FetchScores(binding, requests, variant.Key());
  PredictionMap predictions;
  for (const auto& request : requests) {
    predictions[request.id] = ScoresToProbs(scores.at(request.id)).positive;
  }
  return predictions;
}

std::map<std::string, EvalReport> EvaluatePromptVariants(
    const Dataset& dataset, Split split, const ScorerBinding& binding,
    std::span<const PromptVariant> variants, const GroupConfig& config, double threshold) {
  std::map<std::string, EvalReport> reports;
  for (const PromptVariant& variant : variants) {
    try {
      variant.Validate();
      const PredictionMap predictions =
          PromptVariantPredictions(dataset, split, binding, variant);
      reports[variant.Key()] = Evaluate(dataset, split, predictions, config, threshold);
    } catch (...) {
      RethrowWithContext("prompt variant " + variant.Key());
    }
  }
  return reports;
}

}  // namespace fairlm
