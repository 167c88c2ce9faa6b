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

#include "fairlm/training.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fairlm/errors.h"

namespace fairlm {

namespace {

// Derivative of a clamped probability's downstream loss is zero once the
// clamp is active; loss and gradient paths share this test.
bool ClampActive(double p) { return p < kProbEpsilon || p > 1.0 - kProbEpsilon; }

double EntryWeight(const TrainingBatch& batch, std::size_t i) {
  return batch.weights.empty() ? 1.0 : batch.weights[i];
}

void CheckWeights(const TrainingBatch& batch) {
  if (!batch.weights.empty() && batch.weights.size() != batch.features.size()) {
    throw ValidationError("batch weights must match the batch size");
  }
}

// Accumulates dL/dt_i (t = linear output) into the parameter gradient.
void AccumulateGradient(const TrainingBatch& batch, const std::vector<double>& dloss_dt,
                        ObjectiveValue& out) {
  const std::size_t dim = batch.features.empty() ? 0 : batch.features.front().size();
  out.grad_weights.assign(dim, 0.0);
  out.grad_bias = 0.0;
  for (std::size_t i = 0; i < batch.features.size(); ++i) {
    const double g = dloss_dt[i];
    if (g == 0.0) continue;
    const auto x = batch.features[i];
    for (std::size_t k = 0; k < dim; ++k) out.grad_weights[k] += g * x[k];
    out.grad_bias += g;
  }
}

// Adds lambda * MMD^2 over the conditioning sets, with chain rule through
// dp/dt = p (1 - p).
double AddFairnessTerm(const TrainingBatch& batch, const std::vector<double>& probs,
                       double lambda, const KernelSpec& kernel,
                       std::vector<double>& dloss_dt) {
  std::vector<double> group(batch.group_negatives.size());
  std::vector<double> majority(batch.majority_negatives.size());
  for (std::size_t i = 0; i < group.size(); ++i) group[i] = probs[batch.group_negatives[i]];
  for (std::size_t i = 0; i < majority.size(); ++i) {
    majority[i] = probs[batch.majority_negatives[i]];
  }
  const Mmd2WithGradient mmd = Mmd2Gradient(group, majority, kernel);
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double p = group[i];
    dloss_dt[batch.group_negatives[i]] += lambda * mmd.grad_a[i] * p * (1.0 - p);
  }
  for (std::size_t i = 0; i < majority.size(); ++i) {
    const double p = majority[i];
    dloss_dt[batch.majority_negatives[i]] += lambda * mmd.grad_b[i] * p * (1.0 - p);
  }
  return mmd.value;
}

// The training split flattened into what the objectives consume.
struct TrainingData {
  std::vector<std::span<const double>> features;
  std::vector<int> labels;
  std::vector<double> baseline;
  std::vector<char> is_group_negative;
  std::vector<char> is_majority_negative;

  std::size_t size() const { return features.size(); }

  // `weights` is indexed by example; empty means uniform.
  TrainingBatch Batch(const std::vector<std::size_t>& indices,
                      const std::vector<double>& weights = {}) const {
    TrainingBatch batch;
    batch.features.reserve(indices.size());
    batch.labels.reserve(indices.size());
    for (std::size_t pos = 0; pos < indices.size(); ++pos) {
      const std::size_t i = indices[pos];
      batch.features.push_back(features[i]);
      batch.labels.push_back(labels[i]);
      if (!baseline.empty()) batch.baseline.push_back(baseline[i]);
      if (!weights.empty()) batch.weights.push_back(weights[i]);
      if (is_group_negative[i]) batch.group_negatives.push_back(pos);
      if (is_majority_negative[i]) batch.majority_negatives.push_back(pos);
    }
    return batch;
  }
};

TrainingData Flatten(const Dataset& dataset, Split split, const RemediationConfig& config) {
  const auto& examples = dataset.split(split);
  TrainingData data;
  data.features.reserve(examples.size());
  data.labels.reserve(examples.size());
  data.is_group_negative.assign(examples.size(), 0);
  data.is_majority_negative.assign(examples.size(), 0);
  for (const Example& example : examples) {
    data.features.emplace_back(example.embedding);
    data.labels.push_back(example.label);
  }
  if (config.lambda > 0.0) {
    const auto group = GroupNegativeIndices(dataset, split, config.pair.group);
    const auto majority = GroupNegativeIndices(dataset, split, config.pair.majority);
    if (group.empty()) {
      throw ValidationError("no negatives of group '" + config.pair.group + "' in split " +
                            std::string(SplitName(split)) + "; the MMD term needs both sides");
    }
    if (majority.empty()) {
      throw ValidationError("no negatives of majority '" + config.pair.majority +
                            "' in split " + std::string(SplitName(split)) +
                            "; the MMD term needs both sides");
    }
    for (const std::size_t i : group) data.is_group_negative[i] = 1;
    for (const std::size_t i : majority) data.is_majority_negative[i] = 1;
  }
  return data;
}

// An endlessly cycling shuffled stream over one pool.
class PoolStream {
 public:
  explicit PoolStream(std::vector<std::size_t> items) : items_(std::move(items)) {}

  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }

  std::size_t Next(std::mt19937_64& rng) {
    if (pos_ == 0) std::shuffle(items_.begin(), items_.end(), rng);
    const std::size_t item = items_[pos_];
    pos_ = (pos_ + 1) % items_.size();
    return item;
  }

 private:
  std::vector<std::size_t> items_;
  std::size_t pos_ = 0;
};

// Plain shuffled batches when lambda is zero; otherwise batches drawn from
// three pools (group negatives, remaining majority negatives, the rest) so
// that both conditioning sets are represented in every step.
class BatchSampler {
 public:
  BatchSampler(const TrainingData& data, const RemediationConfig& config, std::mt19937_64& rng)
      : n_(data.size()),
        batch_size_(config.batch_size),
        stratified_(config.lambda > 0.0),
        rng_(rng),
        group_({}),
        majority_({}),
        rest_({}) {
    if (!stratified_) return;
    std::vector<std::size_t> group, majority, rest;
    std::size_t majority_in_group = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (data.is_group_negative[i]) {
        group.push_back(i);
        majority_in_group += data.is_majority_negative[i];
      } else if (data.is_majority_negative[i]) {
        majority.push_back(i);
      } else {
        rest.push_back(i);
      }
    }
    // Both conditioning sets get the same number of slots. The V-statistic
    // carries a 1/n bias towards squeezing each sample, and unequal sample
    // sizes would squeeze the smaller side harder.
    const std::size_t conditioning = group.size() + majority.size() + majority_in_group;
    const auto proportional = static_cast<std::size_t>(std::llround(
        static_cast<double>(batch_size_) * static_cast<double>(conditioning) /
        (2.0 * static_cast<double>(n_))));
    const std::size_t per_side =
        std::min(batch_size_ / 2, std::max(config.min_group_negatives_per_batch, proportional));
    n_group_ = per_side;
    n_majority_ = majority.empty() ? 0 : per_side;
    n_rest_ = rest.empty() ? 0 : batch_size_ - std::min(batch_size_, n_group_ + n_majority_);
    const std::size_t slots = n_group_ + n_majority_ + n_rest_;
    // Pool share of the split over pool share of the batch.
    const auto inclusion_weight = [&](std::size_t pool, std::size_t taken) {
      return (static_cast<double>(pool) / static_cast<double>(n_)) /
             (static_cast<double>(taken) / static_cast<double>(slots));
    };
    weights_.assign(n_, 1.0);
    for (const std::size_t i : group) weights_[i] = inclusion_weight(group.size(), n_group_);
    for (const std::size_t i : majority) {
      weights_[i] = inclusion_weight(majority.size(), n_majority_);
    }
    for (const std::size_t i : rest) weights_[i] = inclusion_weight(rest.size(), n_rest_);
    group_ = PoolStream(std::move(group));
    majority_ = PoolStream(std::move(majority));
    rest_ = PoolStream(std::move(rest));
  }

  // Per-example data-term weights; empty for plain shuffled batches.
  const std::vector<double>& weights() const { return weights_; }

  std::vector<std::vector<std::size_t>> Epoch() {
    std::vector<std::vector<std::size_t>> batches;
    if (!stratified_) {
      std::vector<std::size_t> order(n_);
      for (std::size_t i = 0; i < n_; ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng_);
      for (std::size_t begin = 0; begin < n_; begin += batch_size_) {
        const std::size_t end = std::min(n_, begin + batch_size_);
        batches.emplace_back(order.begin() + begin, order.begin() + end);
      }
      return batches;
    }
    const std::size_t steps = (n_ + batch_size_ - 1) / batch_size_;
    for (std::size_t s = 0; s < steps; ++s) {
      std::vector<std::size_t> batch;
      batch.reserve(n_group_ + n_majority_ + n_rest_);
      for (std::size_t k = 0; k < n_group_; ++k) batch.push_back(group_.Next(rng_));
      for (std::size_t k = 0; k < n_majority_; ++k) batch.push_back(majority_.Next(rng_));
      for (std::size_t k = 0; k < n_rest_; ++k) batch.push_back(rest_.Next(rng_));
      batches.push_back(std::move(batch));
    }
    return batches;
  }

 private:
  std::size_t n_;
  std::size_t batch_size_;
  bool stratified_;
  std::mt19937_64& rng_;
  PoolStream group_;
  PoolStream majority_;
  PoolStream rest_;
  std::size_t n_group_ = 0;
  std::size_t n_majority_ = 0;
  std::size_t n_rest_ = 0;
  std::vector<double> weights_;
};

// Whole split for the data term; a fixed subsample of each conditioning set
// for the fairness term.
TrainingBatch TraceBatch(const TrainingData& data, std::mt19937_64& rng) {
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  TrainingBatch batch = data.Batch(all);
  const auto subsample = [&](std::vector<std::size_t>& positions) {
    if (positions.size() <= kTraceMmdSampleSize) return;
    std::shuffle(positions.begin(), positions.end(), rng);
    positions.resize(kTraceMmdSampleSize);
    std::sort(positions.begin(), positions.end());
  };
  subsample(batch.group_negatives);
  subsample(batch.majority_negatives);
  return batch;
}

template <typename Objective>
std::vector<LossTraceEntry> GradientDescent(const TrainingData& data,
                                            const RemediationConfig& config,
                                            const Objective& objective, LinearModel& model) {
  std::mt19937_64 rng(config.seed);
  const TrainingBatch trace_batch = TraceBatch(data, rng);
  BatchSampler sampler(data, config, rng);
  std::vector<LossTraceEntry> trace;
  const auto evaluate = [&](int epoch) {
    const ObjectiveValue value = objective(model, trace_batch);
    if (!std::isfinite(value.total)) {
      throw RuntimeFailure("non-finite training loss at the end of epoch " +
                           std::to_string(epoch));
    }
    return LossTraceEntry{epoch, value.total, value.data_term, value.fairness_term};
  };
  trace.push_back(evaluate(0));
  // An epoch that raises the full objective is undone, so the trace never
  // increases and the returned model is the best epoch-end iterate.
  LinearModel accepted = model;
  std::size_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (const auto& indices : sampler.Epoch()) {
      const ObjectiveValue value = objective(model, data.Batch(indices, sampler.weights()));
      if (!std::isfinite(value.total)) {
        throw RuntimeFailure("non-finite training loss at step " + std::to_string(step) +
                             " (epoch " + std::to_string(epoch) + ")");
      }
      bool finite = true;
      for (std::size_t k = 0; k < model.weights.size(); ++k) {
        model.weights[k] -= config.learning_rate * value.grad_weights[k];
        finite = finite && std::isfinite(model.weights[k]);
      }
      model.bias -= config.learning_rate * value.grad_bias;
      if (!finite || !std::isfinite(model.bias)) {
        throw RuntimeFailure("non-finite model parameters after step " + std::to_string(step) +
                             " (epoch " + std::to_string(epoch) + ")");
      }
      ++step;
    }
    LossTraceEntry entry = evaluate(epoch);
    if (entry.total > trace.back().total) {
      model = accepted;
      entry = trace.back();
      entry.epoch = epoch;
      entry.rolled_back = true;
    } else {
      accepted = model;
    }
    trace.push_back(entry);
  }
  return trace;
}


}  // namespace

double LinearModel::Linear(std::span<const double> embedding) const {
  if (embedding.size() != weights.size()) {
    throw ValidationError("embedding has dimension " + std::to_string(embedding.size()) +
                          ", model expects " + std::to_string(weights.size()));
  }
  double t = bias;
  for (std::size_t k = 0; k < weights.size(); ++k) t += weights[k] * embedding[k];
  return t;
}

bool LinearModel::IsZero() const {
  return bias == 0.0 &&
         std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; });
}

nlohmann::json LinearModel::ToJson() const {
  return {{"dimension", weights.size()}, {"weights", weights}, {"bias", bias}};
}

LinearModel LinearModel::FromJson(const nlohmann::json& doc) {
  LinearModel model;
  try {
    model.weights = doc.at("weights").get<std::vector<double>>();
    model.bias = doc.at("bias").get<double>();
    if (doc.contains("dimension") && doc["dimension"].get<std::size_t>() != model.weights.size()) {
      throw ValidationError("model dimension does not match its weight count");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model document: ") + e.what());
  }
  return model;
}

double Predict(const LinearModel& model, std::span<const double> embedding) {
  return Sigmoid(model.Linear(embedding));
}

void RemediationConfig::Validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("lambda must be a finite non-negative number");
  }
  kernel.Validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be positive");
  }
  if (epochs <= 0) throw ValidationError("epochs must be positive");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (min_group_negatives_per_batch == 0) {
    throw ValidationError("min_group_negatives_per_batch must be positive");
  }
  if (batch_size < 2 * min_group_negatives_per_batch) {
    throw ValidationError("batch_size must be at least twice min_group_negatives_per_batch");
  }
  if (lambda > 0.0) GroupConfig{{pair}}.Validate();
}

nlohmann::json RemediationConfig::ToJson() const {
  return {{"lambda", lambda},
          {"kernel",
           {{"family", "gaussian"}, {"bandwidth", kernel.bandwidth},
            {"bandwidth_mode", kernel.ModeName()}}},
          {"pair", {{"group", pair.group}, {"majority", pair.majority}}},
          {"learning_rate", learning_rate},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"min_group_negatives_per_batch", min_group_negatives_per_batch},
          {"seed", seed},
          {"fairness_term", "squared MMD (biased V-statistic)"}};
}

RemediationConfig RemediationConfig::FromJson(const nlohmann::json& doc) {
  return FromJson(doc, RemediationConfig{});
}

RemediationConfig RemediationConfig::FromJson(const nlohmann::json& doc,
                                              const RemediationConfig& defaults) {
  RemediationConfig config = defaults;
  try {
    config.lambda = doc.value("lambda", config.lambda);
    if (doc.contains("kernel")) {
      const auto& kernel = doc["kernel"];
      if (kernel.value("family", std::string("gaussian")) != "gaussian") {
        throw ValidationError("only the gaussian kernel family is supported");
      }
      config.kernel.bandwidth = kernel.value("bandwidth", config.kernel.bandwidth);
      if (kernel.contains("bandwidth_mode")) {
        config.kernel.mode =
            KernelSpec::ParseMode(kernel["bandwidth_mode"].get<std::string>());
      }
    }
    if (doc.contains("pair")) {
      config.pair.group = doc["pair"].at("group").get<std::string>();
      config.pair.majority = doc["pair"].at("majority").get<std::string>();
    }
    config.learning_rate = doc.value("learning_rate", config.learning_rate);
    config.epochs = doc.value("epochs", config.epochs);
    config.batch_size = doc.value("batch_size", config.batch_size);
    config.min_group_negatives_per_batch =
        doc.value("min_group_negatives_per_batch", config.min_group_negatives_per_batch);
    config.seed = doc.value("seed", config.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed remediation config: ") + e.what());
  }
  config.Validate();
  return config;
}

nlohmann::json ToJson(const std::vector<LossTraceEntry>& trace) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& entry : trace) {
    nlohmann::json item = {{"epoch", entry.epoch},
                           {"total", entry.total},
                           {"data_term", entry.data_term}};
    if (entry.fairness_term) item["fairness_term"] = *entry.fairness_term;
    if (entry.rolled_back) item["rolled_back"] = true;
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<LossTraceEntry> LossTraceFromJson(const nlohmann::json& doc) {
  std::vector<LossTraceEntry> trace;
  for (const auto& item : doc) {
    LossTraceEntry entry;
    entry.epoch = item.at("epoch").get<int>();
    entry.total = item.at("total").get<double>();
    entry.data_term = item.at("data_term").get<double>();
    if (item.contains("fairness_term") && !item["fairness_term"].is_null()) {
      entry.fairness_term = item["fairness_term"].get<double>();
    }
    entry.rolled_back = item.value("rolled_back", false);
    trace.push_back(entry);
  }
  return trace;
}

ObjectiveValue InProcessingObjective(const LinearModel& model, const TrainingBatch& batch,
                                     double lambda, const KernelSpec& kernel) {
  const std::size_t n = batch.features.size();
  if (n == 0 || batch.labels.size() != n) {
    throw ValidationError("in-processing objective needs a non-empty labeled batch");
  }
  CheckWeights(batch);
  std::vector<double> probs(n);
  std::vector<double> dloss_dt(n, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  ObjectiveValue out;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = Predict(model, batch.features[i]);
    probs[i] = p;
    const double pc = ClampProbability(p);
    const double w = EntryWeight(batch, i);
    out.data_term -= w * (batch.labels[i] == 1 ? std::log(pc) : std::log1p(-pc));
    if (!ClampActive(p)) dloss_dt[i] = w * (p - batch.labels[i]) * inv_n;
  }
  out.data_term *= inv_n;
  out.total = out.data_term;
  if (lambda > 0.0) {
    const double mmd = AddFairnessTerm(batch, probs, lambda, kernel, dloss_dt);
    out.fairness_term = mmd;
    out.total += lambda * mmd;
  }
  AccumulateGradient(batch, dloss_dt, out);
  return out;
}

double PostprocessCombine(double p_bl, double delta_logit) {
  if (!(p_bl > 0.0 && p_bl < 1.0)) {
    throw ValidationError("baseline probability " + FormatDouble(p_bl) +
                          " is not strictly inside (0, 1)");
  }
  if (delta_logit == 0.0) return p_bl;
  return Sigmoid(Logit(p_bl) + delta_logit);
}

ObjectiveValue PostProcessingObjective(const LinearModel& delta, const TrainingBatch& batch,
                                       double lambda, const KernelSpec& kernel) {
  const std::size_t n = batch.features.size();
  if (n == 0 || batch.baseline.size() != n) {
    throw ValidationError("post-processing objective needs a baseline for every batch entry");
  }
  CheckWeights(batch);
  std::vector<double> probs(n);
  std::vector<double> dloss_dt(n, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  ObjectiveValue out;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = batch.baseline[i];
    const double q = PostprocessCombine(p, delta.Linear(batch.features[i]));
    probs[i] = q;
    const double w = EntryWeight(batch, i);
    out.data_term += w * BernoulliKl(p, ClampProbability(q));
    // d KL(p || q) / d logit(q) = q - p.
    if (!ClampActive(q)) dloss_dt[i] = w * (q - p) * inv_n;
  }
  out.data_term *= inv_n;
  out.total = out.data_term;
  if (lambda > 0.0) {
    const double mmd = AddFairnessTerm(batch, probs, lambda, kernel, dloss_dt);
    out.fairness_term = mmd;
    out.total += lambda * mmd;
  }
  AccumulateGradient(batch, dloss_dt, out);
  return out;
}

nlohmann::json TrainedHead::ToJson() const {
  nlohmann::json doc = model.ToJson();
  doc["kind"] = "head";
  doc["config"] = config.ToJson();
  doc["loss_trace"] = fairlm::ToJson(loss_trace);
  return doc;
}

TrainedHead TrainedHead::FromJson(const nlohmann::json& doc) {
  TrainedHead head;
  head.model = LinearModel::FromJson(doc);
  if (doc.contains("config")) head.config = RemediationConfig::FromJson(doc["config"]);
  if (doc.contains("loss_trace")) head.loss_trace = LossTraceFromJson(doc["loss_trace"]);
  return head;
}

TrainedHead TrainHead(const Dataset& dataset, const RemediationConfig& config) {
  config.Validate();
  if (dataset.split(Split::kTrain).empty()) {
    throw ValidationError("cannot train a head on an empty train split");
  }
  const TrainingData data = Flatten(dataset, Split::kTrain, config);
  TrainedHead head;
  head.config = config;
  head.model = LinearModel::Zeros(dataset.dimension());
  const auto objective = [&](const LinearModel& model, const TrainingBatch& batch) {
    return InProcessingObjective(model, batch, config.lambda, config.kernel);
  };
  head.loss_trace = GradientDescent(data, config, objective, head.model);
  return head;
}

double EmfaireningModel::Apply(double p_bl, std::span<const double> embedding) const {
  return PostprocessCombine(ClampProbability(p_bl), delta.Linear(embedding));
}

nlohmann::json EmfaireningModel::ToJson() const {
  nlohmann::json doc = delta.ToJson();
  doc["kind"] = "emfairening";
  doc["config"] = config.ToJson();
  doc["loss_trace"] = fairlm::ToJson(loss_trace);
  return doc;
}

EmfaireningModel EmfaireningModel::FromJson(const nlohmann::json& doc) {
  EmfaireningModel model;
  model.delta = LinearModel::FromJson(doc);
  if (doc.contains("config")) model.config = RemediationConfig::FromJson(doc["config"]);
  if (doc.contains("loss_trace")) model.loss_trace = LossTraceFromJson(doc["loss_trace"]);
  return model;
}

EmfaireningModel TrainEmfairening(const PredictionMap& baseline, const Dataset& dataset,
                                  Split split, const RemediationConfig& config) {
  config.Validate();
  if (dataset.split(split).empty()) {
    throw ValidationError("cannot fit a post-processing model on an empty split");
  }
  TrainingData data = Flatten(dataset, split, config);
  const auto& examples = dataset.split(split);
  data.baseline.reserve(examples.size());
  std::vector<std::string> missing;
  for (const Example& example : examples) {
    const auto it = baseline.find(example.id);
    if (it == baseline.end()) {
      missing.push_back(example.id);
      continue;
    }
    if (!(it->second >= 0.0 && it->second <= 1.0)) {
      throw ValidationError("baseline probability of '" + example.id + "' is outside [0, 1]");
    }
    data.baseline.push_back(ClampProbability(it->second));
  }
  if (!missing.empty()) {
    std::string message = "baseline predictions do not cover split " +
                          std::string(SplitName(split)) + "; missing";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) message += " " + missing[i];
    if (missing.size() > 20) message += " ...";
    throw ValidationError(message);
  }
  EmfaireningModel model;
  model.config = config;
  model.delta = LinearModel::Zeros(dataset.dimension());
  const auto objective = [&](const LinearModel& delta, const TrainingBatch& batch) {
    return PostProcessingObjective(delta, batch, config.lambda, config.kernel);
  };
  model.loss_trace = GradientDescent(data, config, objective, model.delta);
  return model;
}

PredictionMap PredictSplit(const LinearModel& model, const Dataset& dataset, Split split) {
  PredictionMap out;
  for (const Example& example : dataset.split(split)) {
    out[example.id] = Predict(model, example.embedding);
  }
  return out;
}

PredictionMap PredictAll(const LinearModel& model, const Dataset& dataset) {
  PredictionMap out;
  for (const Split split : kAllSplits) out.merge(PredictSplit(model, dataset, split));
  return out;
}

PredictionMap ApplyEmfairening(const EmfaireningModel& model, const PredictionMap& baseline,
                               const Dataset& dataset, Split split) {
  PredictionMap out;
  for (const Example& example : dataset.split(split)) {
    const auto it = baseline.find(example.id);
    if (it == baseline.end()) {
      throw ValidationError("baseline has no prediction for '" + example.id + "'");
    }
    out[example.id] = model.Apply(it->second, example.embedding);
  }
  return out;
}

}  // namespace fairlm
