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

// Experiment orchestration: lambda sweeps for both remediation methods,
// Pareto frontiers, model transfer of the post-processing model, and
// evaluation of prompt variants against a scorer.

#ifndef FAIRLM_HARNESS_H_
#define FAIRLM_HARNESS_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairlm/dataset.h"
#include "fairlm/io.h"
#include "fairlm/metrics.h"
#include "fairlm/prompting.h"
#include "fairlm/training.h"
#include "nlohmann/json.hpp"

namespace fairlm {

enum class Method { kInProcessing, kPostProcessing };

std::string_view MethodName(Method method);
Method ParseMethod(std::string_view name);

inline const std::vector<double> kDefaultLambdaGrid = {0.0, 0.01, 0.03, 0.1,
                                                       0.3, 1.0,  3.0,  10.0};

struct SweepConfig {
  std::vector<double> lambdas = kDefaultLambdaGrid;
  Method method = Method::kInProcessing;
  GroupPair pair;
  Split eval_split = Split::kTest;
  double threshold = kDefaultThreshold;
  // Template for every run; its lambda and pair are overridden per point.
  RemediationConfig base;
  // Lambda points run concurrently on up to this many threads.
  std::size_t threads = 1;

  // lambdas non-empty, contain 0 and strictly increase.
  void Validate() const;
  nlohmann::json ToJson() const;
  static SweepConfig FromJson(const nlohmann::json& doc);
  static SweepConfig FromJson(const nlohmann::json& doc, const SweepConfig& defaults);
};

struct ParetoPoint {
  double lambda = 0.0;
  double auc = 0.0;
  double fpr_group = 0.0;
  double fpr_majority = 0.0;
  // NaN when undefined; unfairness is then +inf.
  double fpr_ratio = 1.0;
  double unfairness = 0.0;
  // "in_processing", "post_processing", or a series label such as
  // "native" / "transfer".
  std::string method;
  // The lambda = 0 point.
  bool unremediated = false;
  // Full evaluation behind the point (every configured pair).
  EvalReport report;
};

// |ln ratio|; +inf for an undefined (NaN) or zero ratio.
double Unfairness(double fpr_ratio);

// Builds a point from the row of `pair` in `report`.
ParetoPoint MakePoint(double lambda, std::string method, const EvalReport& report,
                      const GroupPair& pair);

// The dataset's group table with `pair` appended if absent.
GroupConfig EvaluationPairs(const Dataset& dataset, const GroupPair& pair);

// One point per lambda, in order. Post-processing needs `baseline` covering
// the train split and the evaluation split.
std::vector<ParetoPoint> Sweep(const Dataset& dataset, const SweepConfig& config,
                               const PredictionMap* baseline = nullptr);

// Non-dominated subset under (maximize auc, minimize unfairness), sorted by
// auc descending. Duplicates are kept once.
std::vector<ParetoPoint> ParetoFrontier(std::span<const ParetoPoint> points);

struct TransferResult {
  std::vector<ParetoPoint> native;
  std::vector<ParetoPoint> transfer;
};

// Fits the post-processing model per lambda against `source_baseline` on
// third-party embeddings, then evaluates it on top of the source (native)
// and of `target_baseline` (transfer).
TransferResult TransferExperiment(const PredictionMap& source_baseline,
                                  const PredictionMap& target_baseline,
                                  const EmbeddingTable& third_party_embeddings,
                                  const Dataset& dataset, const SweepConfig& config);

// One report per variant, keyed by PromptVariant::Key(). Scores are fetched
// under the variant key so variants sharing a cache stay independent.
std::map<std::string, EvalReport> EvaluatePromptVariants(
    const Dataset& dataset, Split split, const ScorerBinding& binding,
    std::span<const PromptVariant> variants, const GroupConfig& config,
    double threshold = kDefaultThreshold);

// Probabilities for one variant (every id of the split).
PredictionMap PromptVariantPredictions(const Dataset& dataset, Split split,
                                       const ScorerBinding& binding,
                                       const PromptVariant& variant);

}  // namespace fairlm

#endif  // FAIRLM_HARNESS_H_
