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

#include "fairlm/prompting.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <regex>
#include <thread>
#include <vector>

#include "fairlm/errors.h"
#include "fairlm/io.h"
#include "httplib.h"

namespace fairlm {

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint ParseEndpoint(const std::string& url) {
  static const std::regex kUrl(R"(^(http://[A-Za-z0-9.\-]+(:[0-9]+)?)(/[^\s]*)?$)");
  std::smatch match;
  if (!std::regex_match(url, match, kUrl)) {
    throw ValidationError("scorer URL '" + url + "' is not a well-formed http:// URL");
  }
  return {match[1].str(), match[3].matched ? match[3].str() : std::string("/")};
}

ScorePair ParseScore(const nlohmann::json& record, const std::string& where) {
  if (!record.contains("yes_score") || !record.contains("no_score") ||
      !record["yes_score"].is_number() || !record["no_score"].is_number()) {
    throw ValidationError(where + ": score record needs numeric yes_score and no_score");
  }
  ScorePair pair{record["yes_score"].get<double>(), record["no_score"].get<double>()};
  if (!std::isfinite(pair.yes_score) || !std::isfinite(pair.no_score)) {
    throw ValidationError(where + ": non-finite score");
  }
  return pair;
}

// One POST; throws RuntimeFailure describing the failure.
ScoreMap PostBatch(const ScorerBinding& binding, const Endpoint& endpoint,
                   std::span<const PromptRequest> batch) {
  httplib::Client client(endpoint.base);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(binding.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
      binding.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  nlohmann::json body;
  body["prompts"] = nlohmann::json::array();
  for (const auto& request : batch) {
    body["prompts"].push_back({{"id", request.id}, {"prompt", request.prompt}});
  }
  body["targets"] = {"Yes", "No"};
  const auto response = client.Post(endpoint.path, body.dump(), "application/json");
  if (!response) {
    throw RuntimeFailure("transport error: " + httplib::to_string(response.error()));
  }
  if (response->status < 200 || response->status >= 300) {
    throw RuntimeFailure("HTTP status " + std::to_string(response->status));
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(response->body);
  } catch (const nlohmann::json::parse_error&) {
    throw RuntimeFailure("malformed response body");
  }
  if (!doc.is_object() || !doc.contains("scores") || !doc["scores"].is_array()) {
    throw RuntimeFailure("response body lacks a 'scores' array");
  }
  ScoreMap out;
  for (const auto& record : doc["scores"]) {
    if (!record.is_object() || !record.contains("id") || !record["id"].is_string()) {
      throw RuntimeFailure("response score without an id");
    }
    try {
      out[record["id"].get<std::string>()] = ParseScore(record, "response");
    } catch (const ValidationError& e) {
      throw RuntimeFailure(e.what());
    }
  }
  for (const auto& request : batch) {
    if (!out.count(request.id)) throw RuntimeFailure("response is missing id '" + request.id + "'");
  }
  return out;
}

}  // namespace

PromptVariant PromptVariant::Parse(std::string_view kind,
                                   std::optional<std::string> group_phrase,
                                   std::optional<std::string> super_group_phrase) {
  if (kind == "base") return Base();
  if (kind == "pbf") return Pbf();
  if (kind == "pbf2sg") {
    return Pbf2Sg(super_group_phrase.value_or(std::string(kDefaultSuperGroupPhrase)));
  }
  if (kind == "pbf2tg") {
    return Pbf2Tg(group_phrase.value_or(std::string(kDefaultTargetGroupPhrase)));
  }
  throw ValidationError("unknown prompt variant '" + std::string(kind) +
                        "' (expected base, pbf, pbf2sg or pbf2tg)");
}

void PromptVariant::Validate() const {
  switch (kind) {
    case Kind::kBase:
    case Kind::kPbf:
      if (target_group_phrase || super_group_phrase) {
        throw ValidationError("variant " + KindName() + " takes no group phrase");
      }
      break;
    case Kind::kPbf2Sg:
      if (!super_group_phrase || super_group_phrase->empty()) {
        throw ValidationError("variant pbf2sg requires a super-group phrase");
      }
      if (target_group_phrase) throw ValidationError("variant pbf2sg takes no target-group phrase");
      break;
    case Kind::kPbf2Tg:
      if (!target_group_phrase || target_group_phrase->empty()) {
        throw ValidationError("variant pbf2tg requires a target-group phrase");
      }
      if (super_group_phrase) throw ValidationError("variant pbf2tg takes no super-group phrase");
      break;
  }
}

std::string PromptVariant::KindName() const {
  switch (kind) {
    case Kind::kBase:
      return "base";
    case Kind::kPbf:
      return "pbf";
    case Kind::kPbf2Sg:
      return "pbf2sg";
    case Kind::kPbf2Tg:
      return "pbf2tg";
  }
  return "unknown";
}

std::string PromptVariant::Key() const {
  if (kind == Kind::kPbf2Sg && super_group_phrase &&
      *super_group_phrase != kDefaultSuperGroupPhrase) {
    return KindName() + ":" + *super_group_phrase;
  }
  if (kind == Kind::kPbf2Tg && target_group_phrase &&
      *target_group_phrase != kDefaultTargetGroupPhrase) {
    return KindName() + ":" + *target_group_phrase;
  }
  return KindName();
}

std::string PromptVariant::Suffix() const {
  Validate();
  switch (kind) {
    case Kind::kBase:
      return {};
    case Kind::kPbf:
      return std::string(kFairnessSuffix);
    case Kind::kPbf2Sg:
      return std::string(kFairnessSuffix) + " about comments about " + *super_group_phrase;
    case Kind::kPbf2Tg:
      return std::string(kFairnessSuffix) + " about comments that mention " +
             *target_group_phrase;
  }
  return {};
}

std::string WrapPrompt(std::string_view text, const PromptVariant& variant) {
  if (text.empty()) throw ValidationError("cannot wrap an empty comment");
  std::string prompt = "'";
  prompt += text;
  prompt += "' ";
  prompt += kToxicityInstruction;
  const std::string suffix = variant.Suffix();
  if (!suffix.empty()) {
    prompt += ' ';
    prompt += suffix;
  }
  return prompt;
}

ClassProbabilities ScoresToProbs(ScorePair scores) {
  if (!std::isfinite(scores.yes_score) || !std::isfinite(scores.no_score)) {
    throw ValidationError("token scores must be finite");
  }
  const double shift = std::max(scores.yes_score, scores.no_score);
  const double yes = std::exp(scores.yes_score - shift);
  const double no = std::exp(scores.no_score - shift);
  const double total = yes + no;
  return {yes / total, no / total};
}

void ScorerBinding::Validate() const {
  if (batch_size == 0) throw ValidationError("scorer batch_size must be positive");
  if (max_concurrency == 0) throw ValidationError("scorer max_concurrency must be positive");
  if (max_retries < 0) throw ValidationError("scorer max_retries must be non-negative");
  if (timeout.count() <= 0) throw ValidationError("scorer timeout must be positive");
  if (location.empty()) throw ValidationError("scorer location is empty");
  if (mode == Mode::kHttp) ParseEndpoint(location);
}

ScorerBinding ScorerBinding::FromJson(const nlohmann::json& doc) {
  ScorerBinding binding;
  try {
    const std::string mode = doc.value("mode", "file");
    if (mode == "file") {
      binding.mode = Mode::kFile;
    } else if (mode == "http") {
      binding.mode = Mode::kHttp;
    } else {
      throw ValidationError("unknown scorer mode '" + mode + "' (expected file or http)");
    }
    binding.location = doc.at("location").get<std::string>();
    binding.batch_size = doc.value("batch_size", binding.batch_size);
    binding.timeout = std::chrono::milliseconds(doc.value("timeout_ms", binding.timeout.count()));
    if (doc.contains("cache_path") && !doc["cache_path"].is_null()) {
      binding.cache_path = doc["cache_path"].get<std::string>();
    }
    binding.max_retries = doc.value("max_retries", binding.max_retries);
    binding.max_concurrency = doc.value("max_concurrency", binding.max_concurrency);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed scorer binding: ") + e.what());
  }
  binding.Validate();
  return binding;
}

nlohmann::json ScorerBinding::ToJson() const {
  nlohmann::json doc = {{"mode", mode == Mode::kFile ? "file" : "http"},
                        {"location", location},
                        {"batch_size", batch_size},
                        {"timeout_ms", timeout.count()},
                        {"max_retries", max_retries},
                        {"max_concurrency", max_concurrency}};
  doc["cache_path"] = cache_path ? nlohmann::json(cache_path->string()) : nlohmann::json(nullptr);
  return doc;
}

ScoreMap ReadScoreCache(const std::filesystem::path& path, std::string_view variant_key) {
  ScoreMap out;
  ForEachJsonLine(path, [&](std::size_t line, const nlohmann::json& record) {
    const std::string where = path.string() + ":" + std::to_string(line);
    if (!record.is_object() || !record.contains("id") || !record["id"].is_string()) {
      throw ValidationError(where + ": score record without an id");
    }
    const std::string variant = record.value("variant", std::string());
    if (variant != variant_key) return;
    // Later lines win so that re-scored entries supersede older ones.
    out[record["id"].get<std::string>()] = ParseScore(record, where);
  });
  return out;
}

void AppendScoreCache(const std::filesystem::path& path, const ScoreMap& scores,
                      std::span<const std::string> id_order, std::string_view variant_key) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw RuntimeFailure("cannot append to score cache " + path.string());
  for (const auto& id : id_order) {
    const auto it = scores.find(id);
    if (it == scores.end()) continue;
    nlohmann::json record = {{"id", id},
                             {"yes_score", it->second.yes_score},
                             {"no_score", it->second.no_score}};
    if (!variant_key.empty()) record["variant"] = std::string(variant_key);
    out << record.dump() << '\n';
  }
}

ScoreMap FetchScores(const ScorerBinding& binding, std::span<const PromptRequest> prompts,
                     std::string_view variant_key) {
  binding.Validate();
  if (binding.mode == ScorerBinding::Mode::kFile) {
    const ScoreMap cache = ReadScoreCache(binding.location, variant_key);
    ScoreMap out;
    std::vector<std::string> missing;
    for (const auto& request : prompts) {
      const auto it = cache.find(request.id);
      if (it == cache.end()) {
        missing.push_back(request.id);
      } else {
        out[request.id] = it->second;
      }
    }
    if (!missing.empty()) {
      std::string message = "score cache " + binding.location + " has no entry for";
      for (std::size_t i = 0; i < missing.size() && i < 20; ++i) message += " '" + missing[i] + "'";
      if (missing.size() > 20) message += " ...";
      if (!variant_key.empty()) message += " (variant " + std::string(variant_key) + ")";
      throw ValidationError(message);
    }
    return out;
  }

  const Endpoint endpoint = ParseEndpoint(binding.location);
  ScoreMap out;
  if (binding.cache_path && std::filesystem::exists(*binding.cache_path)) {
    const ScoreMap cached = ReadScoreCache(*binding.cache_path, variant_key);
    for (const auto& request : prompts) {
      const auto it = cached.find(request.id);
      if (it != cached.end()) out[request.id] = it->second;
    }
  }
  std::vector<PromptRequest> pending;
  for (const auto& request : prompts) {
    if (!out.count(request.id)) pending.push_back(request);
  }
  const std::size_t n_batches = (pending.size() + binding.batch_size - 1) / binding.batch_size;
  std::vector<ScoreMap> results(n_batches);
  std::vector<std::string> errors(n_batches);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t b = next++; b < n_batches; b = next++) {
      const std::size_t begin = b * binding.batch_size;
      const std::size_t end = std::min(pending.size(), begin + binding.batch_size);
      const std::span<const PromptRequest> batch(pending.data() + begin, end - begin);
      std::string last_error;
      int attempt = 0;
      for (; attempt <= binding.max_retries; ++attempt) {
        try {
          results[b] = PostBatch(binding, endpoint, batch);
          last_error.clear();
          break;
        } catch (const RuntimeFailure& e) {
          last_error = e.what();
        }
      }
      if (!last_error.empty()) {
        errors[b] = "scoring batch " + std::to_string(b) + " failed after " +
                    std::to_string(binding.max_retries) + " retries: " + last_error;
      }
    }
  };
  const std::size_t n_workers = std::min(binding.max_concurrency, n_batches);
  std::vector<std::thread> workers;
  for (std::size_t i = 0; i < n_workers; ++i) workers.emplace_back(worker);
  for (auto& thread : workers) thread.join();
  for (const auto& error : errors) {
    if (!error.empty()) throw RuntimeFailure(error);
  }

  ScoreMap fetched;
  std::vector<std::string> order;
  for (std::size_t b = 0; b < n_batches; ++b) {
    const std::size_t begin = b * binding.batch_size;
    const std::size_t end = std::min(pending.size(), begin + binding.batch_size);
    for (std::size_t i = begin; i < end; ++i) {
      fetched[pending[i].id] = results[b].at(pending[i].id);
      order.push_back(pending[i].id);
    }
  }
  if (binding.cache_path && !order.empty()) {
    AppendScoreCache(*binding.cache_path, fetched, order, variant_key);
  }
  out.merge(fetched);
  return out;
}

}  // namespace fairlm
