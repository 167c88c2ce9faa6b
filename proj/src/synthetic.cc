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

#include "fairlm/synthetic.h"

#include <cmath>
#include <random>

#include "fairlm/errors.h"
#include "fairlm/fairloss.h"

namespace fairlm {

namespace {

// Generator constants. Coordinate 0 carries most of the label signal,
// coordinates 2..5 a little more, coordinate 1 marks group members and the
// rest is noise.
constexpr double kPrimaryMean = 0.7;
constexpr double kSecondaryMean = 0.2;
constexpr std::size_t kFirstSecondary = 2;
constexpr std::size_t kSecondaryCount = 4;
constexpr double kGroupMarker = 2.0;
constexpr double kMarkerSpread = 0.25;
constexpr double kBaseRate = 0.35;
constexpr std::size_t kMinDimension = 2;

double UpperNormalTail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

std::string PaddedId(std::string_view prefix, std::size_t index) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%06zu", index);
  return std::string(prefix) + "-" + buffer;
}

}  // namespace

void SyntheticSpec::Validate() const {
  if (dimension < kMinDimension) {
    throw ValidationError("synthetic dimension must be at least " + std::to_string(kMinDimension));
  }
  if (!(group_fraction > 0.0 && group_fraction < 1.0)) {
    throw ValidationError("group_fraction must lie inside (0, 1)");
  }
  if (!(majority_fraction > 0.0 && group_fraction + majority_fraction <= 1.0)) {
    throw ValidationError("majority_fraction must be positive with group + majority <= 1");
  }
  if (!(planted_ratio > 1.0) || !std::isfinite(planted_ratio)) {
    throw ValidationError("planted_ratio must be a finite number greater than 1");
  }
  if (group_name.empty() || majority_name.empty() || group_name == majority_name) {
    throw ValidationError("group and majority names must be distinct and non-empty");
  }
  const auto check_size = [&](std::size_t n, const char* split) {
    if (n > 0 && group_fraction * static_cast<double>(n) < 10.0) {
      throw ValidationError(std::string("degenerate synthetic spec: group_fraction * n_") + split +
                            " < 10");
    }
  };
  if (n_train == 0) throw ValidationError("n_train must be positive");
  check_size(n_train, "train");
  check_size(n_validation, "validation");
  check_size(n_test, "test");
}

nlohmann::json SyntheticSpec::ToJson() const {
  return {{"n_train", n_train},           {"n_validation", n_validation},
          {"n_test", n_test},             {"dimension", dimension},
          {"group_fraction", group_fraction}, {"majority_fraction", majority_fraction},
          {"planted_ratio", planted_ratio},   {"seed", seed},
          {"group_name", group_name},     {"majority_name", majority_name}};
}

SyntheticSpec SyntheticSpec::FromJson(const nlohmann::json& doc) {
  return FromJson(doc, SyntheticSpec{});
}

SyntheticSpec SyntheticSpec::FromJson(const nlohmann::json& doc, const SyntheticSpec& defaults) {
  SyntheticSpec spec = defaults;
  try {
    spec.n_train = doc.value("n_train", spec.n_train);
    spec.n_validation = doc.value("n_validation", spec.n_validation);
    spec.n_test = doc.value("n_test", spec.n_test);
    spec.dimension = doc.value("dimension", spec.dimension);
    spec.group_fraction = doc.value("group_fraction", spec.group_fraction);
    spec.majority_fraction = doc.value("majority_fraction", spec.majority_fraction);
    spec.planted_ratio = doc.value("planted_ratio", spec.planted_ratio);
    spec.seed = doc.value("seed", spec.seed);
    spec.group_name = doc.value("group_name", spec.group_name);
    spec.majority_name = doc.value("majority_name", spec.majority_name);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed synthetic spec: ") + e.what());
  }
  spec.Validate();
  return spec;
}

nlohmann::json SyntheticModel::ToJson() const {
  return {{"generator", "Gaussian class-conditional embeddings with a marked group"},
          {"class_means", class_means},
          {"group_marker", group_marker},
          {"marker_spread", marker_spread},
          {"base_rate", base_rate},
          {"group_base_rate", group_base_rate},
          {"expected_fpr_majority", expected_fpr_majority},
          {"expected_fpr_group", expected_fpr_group},
          {"expected_ratio", expected_ratio()},
          {"threshold", 0.5}};
}

double BayesFalsePositiveRate(double separation, double prior_logit) {
  if (!(separation > 0.0)) throw ValidationError("class separation must be positive");
  // Under y = 0 the log likelihood ratio 2 m.x is N(-2 |m|^2, 4 |m|^2).
  return UpperNormalTail((2.0 * separation - prior_logit) / (2.0 * std::sqrt(separation)));
}

SyntheticModel SolveSyntheticModel(const SyntheticSpec& spec) {
  spec.Validate();
  SyntheticModel model;
  model.class_means.assign(spec.dimension, 0.0);
  model.class_means[0] = kPrimaryMean;
  for (std::size_t k = kFirstSecondary; k < kFirstSecondary + kSecondaryCount && k < spec.dimension;
       ++k) {
    model.class_means[k] = kSecondaryMean;
  }
  model.group_marker = kGroupMarker;
  model.marker_spread = kMarkerSpread;
  model.base_rate = kBaseRate;
  double separation = 0.0;
  for (const double m : model.class_means) separation += m * m;
  const double base_logit = Logit(kBaseRate);
  model.expected_fpr_majority = BayesFalsePositiveRate(separation, base_logit);
  if (spec.planted_ratio * model.expected_fpr_majority >= 1.0 - 1e-9) {
    throw ValidationError("planted_ratio " + FormatDouble(spec.planted_ratio) +
                          " is unreachable for this generator");
  }
  const double target = spec.planted_ratio * model.expected_fpr_majority;
  double lo = base_logit;
  double hi = base_logit + 1.0;
  while (BayesFalsePositiveRate(separation, hi) < target) hi += 1.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (BayesFalsePositiveRate(separation, mid) < target ? lo : hi) = mid;
  }
  model.group_base_rate = Sigmoid(0.5 * (lo + hi));
  model.expected_fpr_group = BayesFalsePositiveRate(separation, Logit(model.group_base_rate));
  return model;
}

Dataset GenSynthetic(const SyntheticSpec& spec) {
  const SyntheticModel model = SolveSyntheticModel(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const auto make_split = [&](Split split, std::size_t n) {
    std::vector<Example> examples;
    examples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Example example;
      example.id = PaddedId(SplitName(split), i);
      const double u = uniform(rng);
      const bool in_group = u < spec.group_fraction;
      const bool in_majority = !in_group && u < spec.group_fraction + spec.majority_fraction;
      if (in_group) example.groups.insert(spec.group_name);
      if (in_majority) example.groups.insert(spec.majority_name);
      const double rate = in_group ? model.group_base_rate : model.base_rate;
      example.label = uniform(rng) < rate ? 1 : 0;
      const double sign = example.label == 1 ? 1.0 : -1.0;
      example.embedding.resize(spec.dimension);
      for (std::size_t k = 0; k < spec.dimension; ++k) {
        example.embedding[k] = sign * model.class_means[k] + normal(rng);
      }
      example.embedding[1] *= model.marker_spread;
      if (in_group) example.embedding[1] += model.group_marker;
      example.text = "synthetic comment " + example.id;
      examples.push_back(std::move(example));
    }
    return examples;
  };

  std::array<std::vector<Example>, 3> splits;
  splits[static_cast<std::size_t>(Split::kTrain)] = make_split(Split::kTrain, spec.n_train);
  splits[static_cast<std::size_t>(Split::kValidation)] =
      make_split(Split::kValidation, spec.n_validation);
  splits[static_cast<std::size_t>(Split::kTest)] = make_split(Split::kTest, spec.n_test);

  nlohmann::json metadata = {{"synthetic_spec", spec.ToJson()}, {"generator", model.ToJson()}};
  GroupConfig table{{{spec.group_name, spec.majority_name}}};
  return Dataset(spec.dimension, std::move(splits), std::move(table), std::move(metadata));
}

nlohmann::json TransferFixtureSpec::ToJson() const {
  return {{"third_party_dimension", third_party_dimension},
          {"target_scale", target_scale},
          {"target_shift", target_shift},
          {"projection_noise", projection_noise},
          {"seed", seed}};
}

TransferFixtureSpec TransferFixtureSpec::FromJson(const nlohmann::json& doc) {
  return FromJson(doc, TransferFixtureSpec{});
}

TransferFixtureSpec TransferFixtureSpec::FromJson(const nlohmann::json& doc,
                                                  const TransferFixtureSpec& defaults) {
  TransferFixtureSpec spec = defaults;
  try {
    spec.third_party_dimension = doc.value("third_party_dimension", spec.third_party_dimension);
    spec.target_scale = doc.value("target_scale", spec.target_scale);
    spec.target_shift = doc.value("target_shift", spec.target_shift);
    spec.projection_noise = doc.value("projection_noise", spec.projection_noise);
    spec.seed = doc.value("seed", spec.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed transfer fixture spec: ") + e.what());
  }
  if (spec.third_party_dimension == 0) {
    throw ValidationError("third_party_dimension must be positive");
  }
  if (!(spec.target_scale > 0.0)) throw ValidationError("target_scale must be positive");
  return spec;
}

TransferFixture MakeTransferFixture(const Dataset& dataset, const PredictionMap& source_baseline,
                                    const TransferFixtureSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = dataset.dimension();
  const std::size_t k = spec.third_party_dimension;
  std::vector<double> projection(k * d);
  const double scale = d > 0 ? 1.0 / std::sqrt(static_cast<double>(d)) : 0.0;
  for (double& v : projection) v = normal(rng) * scale;

  TransferFixture fixture;
  fixture.third_party.dimension = k;
  for (const Split split : kAllSplits) {
    for (const Example& example : dataset.split(split)) {
      const auto it = source_baseline.find(example.id);
      if (it == source_baseline.end()) {
        throw ValidationError("source baseline has no prediction for '" + example.id + "'");
      }
      const double z = Logit(ClampProbability(it->second));
      fixture.target_baseline[example.id] = Sigmoid(spec.target_scale * z + spec.target_shift);
      std::vector<double> embedded(k, 0.0);
      for (std::size_t r = 0; r < k; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < d; ++c) sum += projection[r * d + c] * example.embedding[c];
        embedded[r] = sum + spec.projection_noise * normal(rng);
      }
      fixture.third_party.vectors[example.id] = std::move(embedded);
    }
  }
  return fixture;
}

}  // namespace fairlm
