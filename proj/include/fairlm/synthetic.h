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

// Desk-scale stand-in for a toxicity corpus. Embeddings are Gaussian given
// the label; group members carry a marker coordinate and a higher base rate
// of positives, so a plain head learns to lean on the marker and pushes the
// group's negatives towards the positive side. The group base rate is solved
// in closed form so that the Bayes head shows the requested false positive
// rate ratio at threshold 0.5.

#ifndef FAIRLM_SYNTHETIC_H_
#define FAIRLM_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fairlm/dataset.h"
#include "fairlm/io.h"
#include "nlohmann/json.hpp"

namespace fairlm {

struct SyntheticSpec {
  std::size_t n_train = 20000;
  std::size_t n_validation = 0;
  std::size_t n_test = 5000;
  std::size_t dimension = 16;
  double group_fraction = 0.2;
  double majority_fraction = 0.4;
  // Target FPR ratio (group over majority) of the unremediated head.
  double planted_ratio = 2.0;
  std::uint64_t seed = 7;
  std::string group_name = "group";
  std::string majority_name = "majority";

  void Validate() const;
  nlohmann::json ToJson() const;
  static SyntheticSpec FromJson(const nlohmann::json& doc);
  static SyntheticSpec FromJson(const nlohmann::json& doc, const SyntheticSpec& defaults);
};

// Closed-form description of the generator.
struct SyntheticModel {
  // Class-conditional mean is +class_means (y = 1) or -class_means (y = 0).
  std::vector<double> class_means;
  // Coordinate 1 is N(group_marker, marker_spread^2) for group members and
  // N(0, marker_spread^2) for everyone else.
  double group_marker = 0.0;
  double marker_spread = 0.0;
  double base_rate = 0.0;
  double group_base_rate = 0.0;
  double expected_fpr_majority = 0.0;
  double expected_fpr_group = 0.0;

  double expected_ratio() const { return expected_fpr_group / expected_fpr_majority; }
  nlohmann::json ToJson() const;
};

// FPR at threshold 0.5 of the Bayes head 2 m.x + prior_logit when
// x | y ~ N(+-m, I) and |m|^2 = separation.
double BayesFalsePositiveRate(double separation, double prior_logit);

SyntheticModel SolveSyntheticModel(const SyntheticSpec& spec);

// Deterministic given the spec; the generator description is stored in the
// dataset metadata.
Dataset GenSynthetic(const SyntheticSpec& spec);

struct TransferFixtureSpec {
  std::size_t third_party_dimension = 8;
  // Target baseline = sigmoid(target_scale * logit(source) + target_shift).
  double target_scale = 0.8;
  double target_shift = 0.0;
  double projection_noise = 0.1;
  std::uint64_t seed = 11;

  nlohmann::json ToJson() const;
  static TransferFixtureSpec FromJson(const nlohmann::json& doc);
  static TransferFixtureSpec FromJson(const nlohmann::json& doc, const TransferFixtureSpec& defaults);
};

struct TransferFixture {
  PredictionMap target_baseline;
  // Random projection of the dataset embeddings plus noise, standing in for
  // an independent embedding model.
  EmbeddingTable third_party;
};

TransferFixture MakeTransferFixture(const Dataset& dataset, const PredictionMap& source_baseline,
                                    const TransferFixtureSpec& spec);

}  // namespace fairlm

#endif  // FAIRLM_SYNTHETIC_H_
