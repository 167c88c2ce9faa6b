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

// Logistic-regression heads over embeddings: plain and MMD-regularized
// fitting, and the post-processing ("emfairening") delta model that is added
// to a frozen baseline in logit space.

#ifndef FAIRLM_TRAINING_H_
#define FAIRLM_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fairlm/dataset.h"
#include "fairlm/fairloss.h"
#include "fairlm/io.h"
#include "nlohmann/json.hpp"

namespace fairlm {

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;

  static LinearModel Zeros(std::size_t dimension) {
    return {std::vector<double>(dimension, 0.0), 0.0};
  }
  std::size_t dimension() const { return weights.size(); }
  // weights . embedding + bias; throws ValidationError on dimension mismatch.
  double Linear(std::span<const double> embedding) const;
  bool IsZero() const;

  nlohmann::json ToJson() const;
  static LinearModel FromJson(const nlohmann::json& doc);
};

// sigmoid(weights . embedding + bias)
double Predict(const LinearModel& model, std::span<const double> embedding);

struct RemediationConfig {
  double lambda = 0.0;
  KernelSpec kernel;
  GroupPair pair;
  double learning_rate = 0.1;
  int epochs = 30;
  std::size_t batch_size = 256;
  std::size_t min_group_negatives_per_batch = 16;
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  // Fields absent from `doc` keep the values of `defaults`.
  static RemediationConfig FromJson(const nlohmann::json& doc);
  static RemediationConfig FromJson(const nlohmann::json& doc, const RemediationConfig& defaults);
};

// Objective value on the full training split after each epoch (epoch 0 is
// the initial model). The fairness term is absent when lambda is zero and
// is estimated on a fixed subsample of at most kTraceMmdSampleSize
// negatives per side otherwise. An epoch whose updates would raise the
// objective is undone; its entry repeats the previous values with
// `rolled_back` set.
struct LossTraceEntry {
  int epoch = 0;
  double total = 0.0;
  double data_term = 0.0;
  std::optional<double> fairness_term;
  bool rolled_back = false;
};

inline constexpr std::size_t kTraceMmdSampleSize = 512;

nlohmann::json ToJson(const std::vector<LossTraceEntry>& trace);
std::vector<LossTraceEntry> LossTraceFromJson(const nlohmann::json& doc);

// A mini-batch: features, labels, optional frozen baseline probabilities
// (already clamped) and the batch positions of the two conditioning sets.
// `weights` rescale each entry's data term; empty means uniform. Stratified
// batches use inverse inclusion weights so the weighted mean stays an
// unbiased estimate of the split mean.
struct TrainingBatch {
  std::vector<std::span<const double>> features;
  std::vector<int> labels;
  std::vector<double> baseline;
  std::vector<double> weights;
  std::vector<std::size_t> group_negatives;
  std::vector<std::size_t> majority_negatives;
};

struct ObjectiveValue {
  double total = 0.0;
  double data_term = 0.0;
  std::optional<double> fairness_term;
  std::vector<double> grad_weights;
  double grad_bias = 0.0;
};

// Mean cross entropy + lambda * MMD^2 between the predictions of the group
// and majority negatives. The MMD term is skipped entirely when lambda is 0.
ObjectiveValue InProcessingObjective(const LinearModel& model, const TrainingBatch& batch,
                                     double lambda, const KernelSpec& kernel);

// Mean KL(baseline || post-processed) + lambda * MMD^2 between the
// post-processed predictions of the group and majority negatives.
ObjectiveValue PostProcessingObjective(const LinearModel& delta, const TrainingBatch& batch,
                                       double lambda, const KernelSpec& kernel);

struct TrainedHead {
  LinearModel model;
  RemediationConfig config;
  std::vector<LossTraceEntry> loss_trace;

  nlohmann::json ToJson() const;
  static TrainedHead FromJson(const nlohmann::json& doc);
};

// Fits on the train split by mini-batch gradient descent from all-zero
// weights. With lambda > 0 every batch carries at least
// min_group_negatives_per_batch negatives from each side of the pair.
TrainedHead TrainHead(const Dataset& dataset, const RemediationConfig& config);

// sigmoid(logit(p_bl) + delta_logit); returns p_bl unchanged when the delta
// is zero. p_bl must already be clamped inside (0, 1).
double PostprocessCombine(double p_bl, double delta_logit);

struct EmfaireningModel {
  LinearModel delta;
  RemediationConfig config;
  std::vector<LossTraceEntry> loss_trace;

  // Post-processed probability for one instance; the baseline is clamped.
  double Apply(double p_bl, std::span<const double> embedding) const;

  nlohmann::json ToJson() const;
  static EmfaireningModel FromJson(const nlohmann::json& doc);
};

// Fits the delta model on `split`, with the baseline predictions held fixed.
EmfaireningModel TrainEmfairening(const PredictionMap& baseline, const Dataset& dataset,
                                  Split split, const RemediationConfig& config);

PredictionMap PredictSplit(const LinearModel& model, const Dataset& dataset, Split split);
// Predictions for every split of the dataset.
PredictionMap PredictAll(const LinearModel& model, const Dataset& dataset);
PredictionMap ApplyEmfairening(const EmfaireningModel& model, const PredictionMap& baseline,
                               const Dataset& dataset, Split split);

}  // namespace fairlm

#endif  // FAIRLM_TRAINING_H_
