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

#include "fairlm/fairloss.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairlm/errors.h"

namespace fairlm {

namespace {

void RequireInterior(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError(std::string(what) +
                          " must lie strictly inside (0, 1), got " +
                          std::to_string(p));
  }
}

void RequireNonEmpty(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw ValidationError("MMD requires two non-empty samples (got sizes " +
                          std::to_string(a.size()) + " and " +
                          std::to_string(b.size()) + ")");
  }
}

// Mean of the kernel over all ordered pairs of the cross product.
double MeanKernel(std::span<const double> a, std::span<const double> b,
                  double inv_two_h2) {
  double sum = 0.0;
  for (const double u : a) {
    for (const double v : b) {
      const double d = u - v;
      sum += std::exp(-d * d * inv_two_h2);
    }
  }
  return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

}  // namespace

double ClampProbability(double p) {
  return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
}

double Sigmoid(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double Logit(double p) {
  RequireInterior(p, "logit argument");
  return std::log(p) - std::log1p(-p);
}

double CrossEntropy(std::span<const double> predictions,
                    std::span<const int> labels) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    throw ValidationError(
        "cross entropy requires equal non-zero lengths (got " +
        std::to_string(predictions.size()) + " predictions and " +
        std::to_string(labels.size()) + " labels)");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double raw = predictions[i];
    if (!(raw >= 0.0 && raw <= 1.0)) {
      throw ValidationError("cross entropy prediction " + std::to_string(i) +
                            " is not a probability: " + std::to_string(raw));
    }
    if (labels[i] != 0 && labels[i] != 1) {
      throw ValidationError("cross entropy label " + std::to_string(i) +
                            " is not binary");
    }
    const double p = ClampProbability(raw);
    sum -= labels[i] == 1 ? std::log(p) : std::log1p(-p);
  }
  return sum / static_cast<double>(predictions.size());
}

double BernoulliKl(double p, double q) {
  RequireInterior(p, "KL first argument");
  RequireInterior(q, "KL second argument");
  return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

double MeanBernoulliKl(std::span<const double> p, std::span<const double> q) {
  if (p.empty() || p.size() != q.size()) {
    throw ValidationError("mean KL requires equal non-zero lengths");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += BernoulliKl(p[i], q[i]);
  return sum / static_cast<double>(p.size());
}

void KernelSpec::Validate() const {
  if (mode == BandwidthMode::kFixed && !(bandwidth > 0.0 && std::isfinite(bandwidth))) {
    throw ValidationError("kernel bandwidth must be a positive finite number");
  }
}

std::string KernelSpec::ModeName() const {
  return mode == BandwidthMode::kFixed ? "fixed" : "median_heuristic";
}

KernelSpec::BandwidthMode KernelSpec::ParseMode(std::string_view name) {
  if (name == "fixed") return BandwidthMode::kFixed;
  if (name == "median_heuristic") return BandwidthMode::kMedianHeuristic;
  throw ValidationError("unknown bandwidth mode '" + std::string(name) +
                        "' (expected fixed or median_heuristic)");
}

double MedianHeuristicBandwidth(std::span<const double> sample_a,
                                std::span<const double> sample_b,
                                double fallback) {
  std::vector<double> pooled(sample_a.begin(), sample_a.end());
  pooled.insert(pooled.end(), sample_b.begin(), sample_b.end());
  std::vector<double> distances;
  distances.reserve(pooled.size() * (pooled.size() - 1) / 2);
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    for (std::size_t j = i + 1; j < pooled.size(); ++j) {
      distances.push_back(std::abs(pooled[i] - pooled[j]));
    }
  }
  if (distances.empty()) return fallback;
  const auto mid = distances.begin() + distances.size() / 2;
  std::nth_element(distances.begin(), mid, distances.end());
  const double median = *mid;
  return median > 0.0 ? median : fallback;
}

double ResolveBandwidth(const KernelSpec& kernel,
                        std::span<const double> sample_a,
                        std::span<const double> sample_b) {
  kernel.Validate();
  if (kernel.mode == KernelSpec::BandwidthMode::kFixed) return kernel.bandwidth;
  const double fallback = kernel.bandwidth > 0.0 ? kernel.bandwidth : 0.25;
  return MedianHeuristicBandwidth(sample_a, sample_b, fallback);
}

double Mmd2(std::span<const double> sample_a, std::span<const double> sample_b,
            const KernelSpec& kernel) {
  RequireNonEmpty(sample_a, sample_b);
  const double h = ResolveBandwidth(kernel, sample_a, sample_b);
  const double inv_two_h2 = 1.0 / (2.0 * h * h);
  const double value = MeanKernel(sample_a, sample_a, inv_two_h2) +
                       MeanKernel(sample_b, sample_b, inv_two_h2) -
                       2.0 * MeanKernel(sample_a, sample_b, inv_two_h2);
  return std::max(value, 0.0);
}

Mmd2WithGradient Mmd2Gradient(std::span<const double> sample_a,
                              std::span<const double> sample_b,
                              const KernelSpec& kernel) {
  RequireNonEmpty(sample_a, sample_b);
  const double h = ResolveBandwidth(kernel, sample_a, sample_b);
  const double inv_h2 = 1.0 / (h * h);
  const double inv_two_h2 = 0.5 * inv_h2;
  const double n = static_cast<double>(sample_a.size());
  const double m = static_cast<double>(sample_b.size());

  Mmd2WithGradient out;
  out.grad_a.assign(sample_a.size(), 0.0);
  out.grad_b.assign(sample_b.size(), 0.0);

  // d k(u, v) / du = -(u - v) / h^2 * k(u, v). Each within-sample sum counts
  // (i, j) and (j, i), hence the factor 2 on the within terms.
  double sum_aa = 0.0;
  for (std::size_t i = 0; i < sample_a.size(); ++i) {
    double g = 0.0;
    for (std::size_t j = 0; j < sample_a.size(); ++j) {
      const double d = sample_a[i] - sample_a[j];
      const double k = std::exp(-d * d * inv_two_h2);
      sum_aa += k;
      g -= d * inv_h2 * k;
    }
    out.grad_a[i] += 2.0 * g / (n * n);
  }
  double sum_bb = 0.0;
  for (std::size_t i = 0; i < sample_b.size(); ++i) {
    double g = 0.0;
    for (std::size_t j = 0; j < sample_b.size(); ++j) {
      const double d = sample_b[i] - sample_b[j];
      const double k = std::exp(-d * d * inv_two_h2);
      sum_bb += k;
      g -= d * inv_h2 * k;
    }
    out.grad_b[i] += 2.0 * g / (m * m);
  }
  double sum_ab = 0.0;
  for (std::size_t i = 0; i < sample_a.size(); ++i) {
    for (std::size_t j = 0; j < sample_b.size(); ++j) {
      const double d = sample_a[i] - sample_b[j];
      const double k = std::exp(-d * d * inv_two_h2);
      sum_ab += k;
      const double dk = -d * inv_h2 * k;  // d/da_i; d/db_j is -dk
      out.grad_a[i] -= 2.0 * dk / (n * m);
      out.grad_b[j] += 2.0 * dk / (n * m);
    }
  }
  const double value = sum_aa / (n * n) + sum_bb / (m * m) - 2.0 * sum_ab / (n * m);
  out.value = std::max(value, 0.0);
  return out;
}

}  // namespace fairlm
