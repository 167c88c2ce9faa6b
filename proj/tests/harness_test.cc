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
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "fairlm/errors.h"
#include "fairlm/prompting.h"
#include "fairlm/report.h"
#include "fairlm/synthetic.h"
#include "fairlm/training.h"
#include "gtest/gtest.h"
#include "test_support.h"

namespace fairlm {
namespace {

using testing::MakeExample;
using testing::ScratchDir;

ParetoPoint Point(double auc, double unfairness, double lambda = 0.0) {
  ParetoPoint p;
  p.auc = auc;
  p.unfairness = unfairness;
  p.lambda = lambda;
  p.method = "test";
  return p;
}

std::vector<std::pair<double, double>> Coordinates(const std::vector<ParetoPoint>& points) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : points) out.emplace_back(p.auc, p.unfairness);
  return out;
}

const Dataset& SmallSynthetic() {
  static const Dataset dataset = [] {
    SyntheticSpec spec;
    spec.n_train = 2000;
    spec.n_test = 1000;
    return GenSynthetic(spec);
  }();
  return dataset;
}

SweepConfig SmallSweep(std::vector<double> lambdas) {
  SweepConfig config;
  config.lambdas = std::move(lambdas);
  config.pair = {"group", "majority"};
  config.base.epochs = 5;
  return config;
}

void ExpectSamePoint(const ParetoPoint& a, const ParetoPoint& b) {
  EXPECT_EQ(a.lambda, b.lambda);
  EXPECT_EQ(a.auc, b.auc);
  EXPECT_EQ(a.fpr_group, b.fpr_group);
  EXPECT_EQ(a.fpr_majority, b.fpr_majority);
  EXPECT_EQ(a.fpr_ratio, b.fpr_ratio);
  EXPECT_EQ(a.unfairness, b.unfairness);
}

TEST(Unfairness, SymmetricAndZeroOnlyAtOne) {
  EXPECT_EQ(Unfairness(1.0), 0.0);
  EXPECT_DOUBLE_EQ(Unfairness(2.0), Unfairness(0.5));
  EXPECT_GT(Unfairness(1.0 + 1e-12), 0.0);
  EXPECT_TRUE(std::isinf(Unfairness(std::numeric_limits<double>::quiet_NaN())));
  EXPECT_TRUE(std::isinf(Unfairness(0.0)));
}

TEST(ParetoFrontier, KeepsNonDominatedPointsByAucDescending) {
  const std::vector<ParetoPoint> points = {Point(0.8, 0.3), Point(0.9, 0.5), Point(0.85, 0.2)};
  const auto frontier = ParetoFrontier(points);
  const std::vector<std::pair<double, double>> expected = {{0.9, 0.5}, {0.85, 0.2}};
  EXPECT_EQ(Coordinates(frontier), expected);
}

TEST(ParetoFrontier, SinglePointAndDuplicates) {
  const std::vector<ParetoPoint> single = {Point(0.7, 0.1)};
  EXPECT_EQ(Coordinates(ParetoFrontier(single)), Coordinates(single));
  const std::vector<ParetoPoint> twice = {Point(0.7, 0.1, 0.0), Point(0.7, 0.1, 1.0)};
  const auto frontier = ParetoFrontier(twice);
  ASSERT_EQ(frontier.size(), 1u);
  EXPECT_EQ(frontier[0].lambda, 0.0);
}

TEST(ParetoFrontier, WeakDominanceInOneCoordinateSuffices) {
  const std::vector<ParetoPoint> points = {Point(0.9, 0.2), Point(0.9, 0.3), Point(0.8, 0.2)};
  EXPECT_EQ(Coordinates(ParetoFrontier(points)),
            (std::vector<std::pair<double, double>>{{0.9, 0.2}}));
}

// Random point clouds on a coarse grid (so ties occur) against an
// exhaustive pairwise dominance check.
TEST(ParetoFrontier, MatchesPairwiseOracleAndIsAFixedPoint) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> grid(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ParetoPoint> points;
    const int n = 1 + trial % 12;
    for (int i = 0; i < n; ++i) points.push_back(Point(0.5 + grid(rng) / 20.0, grid(rng) / 10.0));
    std::vector<std::pair<double, double>> oracle;
    for (const auto& p : points) {
      bool dominated = false;
      for (const auto& q : points) {
        dominated = dominated || (q.auc >= p.auc && q.unfairness <= p.unfairness &&
                                  (q.auc > p.auc || q.unfairness < p.unfairness));
      }
      const std::pair<double, double> xy{p.auc, p.unfairness};
      if (!dominated && std::find(oracle.begin(), oracle.end(), xy) == oracle.end()) {
        oracle.push_back(xy);
      }
    }
    std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    const auto frontier = ParetoFrontier(points);
    EXPECT_EQ(Coordinates(frontier), oracle);
    EXPECT_EQ(Coordinates(ParetoFrontier(frontier)), Coordinates(frontier));
    for (const auto& p : frontier) {
      EXPECT_TRUE(std::any_of(points.begin(), points.end(), [&](const auto& q) {
        return q.auc == p.auc && q.unfairness == p.unfairness;
      }));
    }
  }
}

TEST(SweepConfig, Validation) {
  EXPECT_NO_THROW(SmallSweep({0.0, 1.0}).Validate());
  EXPECT_THROW(SmallSweep({}).Validate(), ValidationError);
  EXPECT_THROW(SmallSweep({0.1, 1.0}).Validate(), ValidationError);
  EXPECT_THROW(SmallSweep({0.0, 1.0, 1.0}).Validate(), ValidationError);
  EXPECT_THROW(SmallSweep({0.0, 2.0, 1.0}).Validate(), ValidationError);
  EXPECT_THROW(SmallSweep({-1.0, 0.0}).Validate(), ValidationError);
  SweepConfig config = SmallSweep({0.0});
  config.pair = {"group", "group"};
  EXPECT_THROW(config.Validate(), ValidationError);
  config = SmallSweep({0.0, 0.3});
  config.method = Method::kPostProcessing;
  config.threads = 3;
  const SweepConfig parsed = SweepConfig::FromJson(config.ToJson());
  EXPECT_EQ(parsed.ToJson(), config.ToJson());
  EXPECT_THROW(ParseMethod("fine_tune"), ValidationError);
}

TEST(Sweep, SingleZeroLambdaEqualsDirectEvaluation) {
  const Dataset& dataset = SmallSynthetic();
  const SweepConfig config = SmallSweep({0.0});
  const auto points = Sweep(dataset, config);
  ASSERT_EQ(points.size(), 1u);
  RemediationConfig run = config.base;
  run.pair = config.pair;
  const TrainedHead head = TrainHead(dataset, run);
  const EvalReport report = Evaluate(dataset, Split::kTest,
                                     PredictSplit(head.model, dataset, Split::kTest),
                                     EvaluationPairs(dataset, config.pair));
  ExpectSamePoint(points[0], MakePoint(0.0, "in_processing", report, config.pair));
  EXPECT_TRUE(points[0].unremediated);
  EXPECT_EQ(points[0].method, "in_processing");
}

TEST(Sweep, PointsFollowConfiguredLambdasForAnyThreadCount) {
  const Dataset& dataset = SmallSynthetic();
  SweepConfig config = SmallSweep({0.0, 0.1, 1.0, 10.0});
  const auto serial = Sweep(dataset, config);
  config.threads = 4;
  const auto parallel = Sweep(dataset, config);
  ASSERT_EQ(serial.size(), config.lambdas.size());
  ASSERT_EQ(parallel.size(), config.lambdas.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].lambda, config.lambdas[i]);
    EXPECT_EQ(serial[i].unremediated, i == 0);
    ExpectSamePoint(serial[i], parallel[i]);
  }
}

TEST(Sweep, PostProcessingNeedsCoveringBaseline) {
  const Dataset& dataset = SmallSynthetic();
  SweepConfig config = SmallSweep({0.0, 1.0});
  config.method = Method::kPostProcessing;
  EXPECT_THROW(Sweep(dataset, config), ValidationError);
  PredictionMap baseline = PredictAll(TrainHead(dataset, config.base).model, dataset);
  const auto points = Sweep(dataset, config, &baseline);
  // The unremediated post-processing point is the baseline itself.
  const EvalReport direct = Evaluate(dataset, Split::kTest, baseline,
                                     EvaluationPairs(dataset, config.pair));
  ExpectSamePoint(points[0], MakePoint(0.0, "post_processing", direct, config.pair));
  baseline.erase(dataset.split(Split::kTest).front().id);
  try {
    Sweep(dataset, config, &baseline);
    FAIL() << "expected a coverage error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("baseline"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find(dataset.split(Split::kTest).front().id),
              std::string::npos);
  }
}

TEST(Sweep, TrainingFailureNamesTheLambda) {
  std::array<std::vector<Example>, 3> splits;
  splits[0] = {MakeExample("a", {1e10}, 0, {"g"}), MakeExample("b", {-1e10}, 1, {"m"})};
  splits[2] = splits[0];
  const Dataset dataset(1, std::move(splits), GroupConfig{{{"g", "m"}}});
  SweepConfig config;
  config.lambdas = {0.0};
  config.pair = {"g", "m"};
  config.base.learning_rate = 1e308;
  try {
    Sweep(dataset, config);
    FAIL() << "expected a runtime failure";
  } catch (const RuntimeFailure& e) {
    EXPECT_NE(std::string(e.what()).find("lambda=0"), std::string::npos) << e.what();
  }
}

TEST(TransferExperiment, IdenticalTargetGivesIdenticalSeries) {
  const Dataset& dataset = SmallSynthetic();
  SweepConfig config = SmallSweep({0.0, 1.0});
  config.method = Method::kPostProcessing;
  const PredictionMap source = PredictAll(TrainHead(dataset, config.base).model, dataset);
  const TransferFixture fixture = MakeTransferFixture(dataset, source, TransferFixtureSpec{});
  const TransferResult result =
      TransferExperiment(source, source, fixture.third_party, dataset, config);
  ASSERT_EQ(result.native.size(), 2u);
  ASSERT_EQ(result.transfer.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    ExpectSamePoint(result.native[i], result.transfer[i]);
    EXPECT_EQ(result.native[i].method, "native");
    EXPECT_EQ(result.transfer[i].method, "transfer");
  }
}

TEST(TransferExperiment, CoverageGapsNameTheSide) {
  const Dataset& dataset = SmallSynthetic();
  SweepConfig config = SmallSweep({0.0});
  const PredictionMap source = PredictAll(TrainHead(dataset, config.base).model, dataset);
  const TransferFixture fixture = MakeTransferFixture(dataset, source, TransferFixtureSpec{});
  const std::string missing = dataset.split(Split::kTest).back().id;
  const auto message = [&](const PredictionMap& s, const PredictionMap& t,
                           const EmbeddingTable& e) {
    try {
      TransferExperiment(s, t, e, dataset, config);
    } catch (const ValidationError& error) {
      return std::string(error.what());
    }
    return std::string();
  };
  PredictionMap partial = source;
  partial.erase(missing);
  EXPECT_NE(message(partial, source, fixture.third_party).find("source baseline"),
            std::string::npos);
  EXPECT_NE(message(source, partial, fixture.third_party).find("target baseline"),
            std::string::npos);
  EmbeddingTable embeddings = fixture.third_party;
  embeddings.vectors.erase(missing);
  EXPECT_NE(message(source, source, embeddings).find("third-party embeddings"),
            std::string::npos);
}

// Prompt-variant evaluation against a file-backed score cache.
class PromptVariantsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::vector<Example> examples;
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 40; ++i) {
      Example example = MakeExample("c" + std::to_string(i), {0.0}, i % 3 == 0 ? 1 : 0,
                                    {i % 2 == 0 ? "g" : "m"});
      example.text = "comment number " + std::to_string(i);
      examples.push_back(std::move(example));
      ids_.push_back("c" + std::to_string(i));
      base_[ids_.back()] = {normal(rng), normal(rng)};
      pbf_[ids_.back()] = {normal(rng), normal(rng)};
    }
    dataset_ = testing::TestOnlyDataset(1, std::move(examples), GroupConfig{{{"g", "m"}}});
    binding_.location = (dir_ / "scores.jsonl").string();
  }

  PredictionMap Probabilities(const ScoreMap& scores) const {
    PredictionMap out;
    for (const auto& [id, pair] : scores) out[id] = ScoresToProbs(pair).positive;
    return out;
  }

  ScratchDir dir_;
  Dataset dataset_;
  std::vector<std::string> ids_;
  ScoreMap base_;
  ScoreMap pbf_;
  ScorerBinding binding_;
};

void ExpectSameReport(const EvalReport& a, const EvalReport& b) {
  EXPECT_EQ(ToJson(a), ToJson(b));
}

TEST_F(PromptVariantsTest, BaseVariantComposesScoresAndEvaluate) {
  AppendScoreCache(binding_.location, base_, ids_, PromptVariant::Base().Key());
  const std::vector<PromptVariant> variants = {PromptVariant::Base()};
  const auto reports =
      EvaluatePromptVariants(dataset_, Split::kTest, binding_, variants, dataset_.group_table());
  ASSERT_EQ(reports.size(), 1u);
  ExpectSameReport(reports.at(PromptVariant::Base().Key()),
                   Evaluate(dataset_, Split::kTest, Probabilities(base_), dataset_.group_table()));
}

TEST_F(PromptVariantsTest, VariantsSharingACacheStayIndependent) {
  AppendScoreCache(binding_.location, base_, ids_, PromptVariant::Base().Key());
  AppendScoreCache(binding_.location, pbf_, ids_, PromptVariant::Pbf().Key());
  const std::vector<PromptVariant> variants = {PromptVariant::Base(), PromptVariant::Pbf()};
  const auto reports =
      EvaluatePromptVariants(dataset_, Split::kTest, binding_, variants, dataset_.group_table());
  ASSERT_EQ(reports.size(), 2u);
  ExpectSameReport(reports.at(PromptVariant::Base().Key()),
                   Evaluate(dataset_, Split::kTest, Probabilities(base_), dataset_.group_table()));
  ExpectSameReport(reports.at(PromptVariant::Pbf().Key()),
                   Evaluate(dataset_, Split::kTest, Probabilities(pbf_), dataset_.group_table()));
}

TEST_F(PromptVariantsTest, IdenticalScoresGiveIdenticalReports) {
  const std::vector<PromptVariant> variants = {PromptVariant::Base(), PromptVariant::Pbf(),
                                               PromptVariant::Pbf2Sg(), PromptVariant::Pbf2Tg()};
  for (const auto& variant : variants) {
    AppendScoreCache(binding_.location, base_, ids_, variant.Key());
  }
  const auto reports =
      EvaluatePromptVariants(dataset_, Split::kTest, binding_, variants, dataset_.group_table());
  ASSERT_EQ(reports.size(), variants.size());
  for (const auto& variant : variants) {
    ExpectSameReport(reports.at(variant.Key()), reports.at(PromptVariant::Base().Key()));
  }
}

TEST_F(PromptVariantsTest, MissingScoresCarryVariantContext) {
  AppendScoreCache(binding_.location, base_, ids_, PromptVariant::Base().Key());
  const std::vector<PromptVariant> variants = {PromptVariant::Base(), PromptVariant::Pbf()};
  try {
    EvaluatePromptVariants(dataset_, Split::kTest, binding_, variants, dataset_.group_table());
    FAIL() << "expected a missing-score error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(PromptVariant::Pbf().Key()), std::string::npos)
        << e.what();
  }
}

}  // namespace
}  // namespace fairlm
