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

// Helpers shared by the unit tests: scratch directories, tiny datasets and
// brute-force reference implementations.

#ifndef FAIRLM_TESTS_TEST_SUPPORT_H_
#define FAIRLM_TESTS_TEST_SUPPORT_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairlm/dataset.h"
#include "fairlm/training.h"

namespace fairlm::testing {

// A fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  ScratchDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "fairlm-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~ScratchDir() {
    std::error_code ignored;
    std::filesystem::remove_all(path_, ignored);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Example MakeExample(std::string id, std::vector<double> embedding, int label,
                           std::set<std::string> groups = {}) {
  Example example;
  example.id = std::move(id);
  example.embedding = std::move(embedding);
  example.label = label;
  example.groups = std::move(groups);
  return example;
}

// Dataset whose test split holds `examples`; other splits are empty.
inline Dataset TestOnlyDataset(std::size_t dimension, std::vector<Example> examples,
                               GroupConfig table = {}) {
  std::array<std::vector<Example>, 3> splits;
  splits[static_cast<std::size_t>(Split::kTest)] = std::move(examples);
  return Dataset(dimension, std::move(splits), std::move(table));
}

// Random small dataset: `n` examples per split, groups "a", "b" and "c"
// assigned independently, one-dimensional embeddings.
inline Dataset RandomSmallDataset(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution member(0.4);
  std::normal_distribution<double> normal;
  std::array<std::vector<Example>, 3> splits;
  for (const Split split : kAllSplits) {
    for (std::size_t i = 0; i < n; ++i) {
      std::set<std::string> groups;
      for (const char* g : {"a", "b", "c"}) {
        if (member(rng)) groups.insert(g);
      }
      splits[static_cast<std::size_t>(split)].push_back(
          MakeExample(std::string(SplitName(split)) + "-" + std::to_string(i), {normal(rng)},
                      coin(rng) ? 1 : 0, std::move(groups)));
    }
  }
  return Dataset(1, std::move(splits), GroupConfig{{{"a", "b"}}});
}

inline double BruteForceFpr(std::span<const double> preds, std::span<const int> labels,
                            double threshold) {
  int negatives = 0;
  int flagged = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] != 0) continue;
    ++negatives;
    if (preds[i] >= threshold) ++flagged;
  }
  return static_cast<double>(flagged) / negatives;
}

inline double BruteForceAuc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / pairs;
}

inline double BruteForceMmd2(std::span<const double> a, std::span<const double> b,
                             double bandwidth) {
  const auto k = [&](double u, double v) {
    return std::exp(-(u - v) * (u - v) / (2.0 * bandwidth * bandwidth));
  };
  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (double u : a) {
    for (double v : a) aa += k(u, v);
  }
  for (double u : b) {
    for (double v : b) bb += k(u, v);
  }
  for (double u : a) {
    for (double v : b) ab += k(u, v);
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  return aa / (na * na) + bb / (nb * nb) - 2.0 * ab / (na * nb);
}

// |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline double RelativeError(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Owns the feature storage behind a TrainingBatch.
struct OwnedBatch {
  std::vector<std::vector<double>> rows;
  TrainingBatch batch;
};

// Random features, labels and baselines; half of the batches carry entry
// weights. The conditioning sets may overlap and hold at least two entries.
inline OwnedBatch RandomBatch(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  OwnedBatch owned;
  owned.rows.resize(n);
  for (auto& row : owned.rows) {
    row.resize(dim);
    for (double& v : row) v = normal(rng);
  }
  for (std::size_t i = 0; i < n; ++i) {
    owned.batch.features.emplace_back(owned.rows[i]);
    owned.batch.labels.push_back(static_cast<int>(rng() % 2));
    owned.batch.baseline.push_back(unit(rng));
  }
  if (rng() % 2 == 0) {
    for (std::size_t i = 0; i < n; ++i) owned.batch.weights.push_back(0.5 + unit(rng));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = rng() % 3;
    if (r == 0 || i < 2) owned.batch.group_negatives.push_back(i);
    if (r == 1 || (i >= 2 && i < 4) || (r == 2 && i % 5 == 0)) {
      owned.batch.majority_negatives.push_back(i);
    }
  }
  return owned;
}

inline LinearModel RandomModel(std::mt19937_64& rng, std::size_t dim, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  LinearModel model = LinearModel::Zeros(dim);
  for (double& w : model.weights) w = normal(rng);
  model.bias = normal(rng);
  return model;
}

// Largest relative error between the analytic gradient of `objective` at
// `model` and central differences with step 1e-5, over every parameter.
template <typename Objective>
double WorstGradientError(const Objective& objective, LinearModel model) {
  constexpr double kStep = 1e-5;
  const ObjectiveValue analytic = objective(model);
  const auto numeric = [&](double& parameter) {
    const double saved = parameter;
    parameter = saved + kStep;
    const double up = objective(model).total;
    parameter = saved - kStep;
    const double down = objective(model).total;
    parameter = saved;
    return (up - down) / (2.0 * kStep);
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < model.weights.size(); ++k) {
    worst = std::max(worst, RelativeError(analytic.grad_weights[k], numeric(model.weights[k])));
  }
  return std::max(worst, RelativeError(analytic.grad_bias, numeric(model.bias)));
}

}  // namespace fairlm::testing

#endif  // FAIRLM_TESTS_TEST_SUPPORT_H_
