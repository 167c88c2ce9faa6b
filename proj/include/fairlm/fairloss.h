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

// Numerical kernel shared by both remediation losses: link functions, cross
// entropy, Bernoulli KL divergence and the Gaussian-kernel MMD estimator.

#ifndef FAIRLM_FAIRLOSS_H_
#define FAIRLM_FAIRLOSS_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairlm {

// Probabilities entering logit, KL or cross entropy are clamped to
// [kProbEpsilon, 1 - kProbEpsilon] by the caller.
inline constexpr double kProbEpsilon = 1e-7;

double ClampProbability(double p);

// Stable for |t| well beyond 1e3.
double Sigmoid(double t);

// Requires p strictly inside (0, 1); throws ValidationError otherwise.
double Logit(double p);

// Mean binary cross entropy. Predictions are clamped before the logarithm;
// a prediction that is NaN or outside [0, 1] is rejected.
double CrossEntropy(std::span<const double> predictions,
                    std::span<const int> labels);

// KL(Bernoulli(p) || Bernoulli(q)). Both arguments strictly inside (0, 1).
double BernoulliKl(double p, double q);

// Mean over instances of KL(p_i || q_i).
double MeanBernoulliKl(std::span<const double> p, std::span<const double> q);

struct KernelSpec {
  enum class BandwidthMode { kFixed, kMedianHeuristic };

  // Gaussian is the only supported family.
  double bandwidth = 0.25;
  BandwidthMode mode = BandwidthMode::kFixed;

  void Validate() const;
  std::string ModeName() const;
  static BandwidthMode ParseMode(std::string_view name);
};

// Median pairwise distance of the pooled sample. Falls back to `fallback`
// when the median is zero (e.g. all values equal).
double MedianHeuristicBandwidth(std::span<const double> sample_a,
                                std::span<const double> sample_b,
                                double fallback);

// Bandwidth actually used for a pair of samples.
double ResolveBandwidth(const KernelSpec& kernel,
                        std::span<const double> sample_a,
                        std::span<const double> sample_b);

// Biased (V-statistic) squared MMD with Gaussian kernel
// k(u, v) = exp(-(u - v)^2 / (2 h^2)), clamped at zero.
double Mmd2(std::span<const double> sample_a, std::span<const double> sample_b,
            const KernelSpec& kernel);

struct Mmd2WithGradient {
  double value = 0.0;
  std::vector<double> grad_a;
  std::vector<double> grad_b;
};

// Value and exact partial derivatives of Mmd2 with respect to every element
// of both samples. Under the median heuristic the bandwidth is treated as a
// constant.
Mmd2WithGradient Mmd2Gradient(std::span<const double> sample_a,
                              std::span<const double> sample_b,
                              const KernelSpec& kernel);

}  // namespace fairlm

#endif  // FAIRLM_FAIRLOSS_H_
