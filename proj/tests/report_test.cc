// Copyright 2026 The IQS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "iqs/report.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "oracle/published_cards.hpp"
#include "test_util.hpp"

namespace iqs {
namespace {

namespace fs = std::filesystem;
using testing::PublishedScorecards;
using testing::SentimentTask;
using testing::SimilarityTask;

std::vector<std::string> Order(const RankingTable& t) {
  std::vector<std::string> ids;
  for (const auto& r : t.rows) ids.push_back(r.method_id);
  return ids;
}

MethodScorecard Card(std::string method, std::string task, double p, double s, double r) {
  MethodScorecard c;
  c.method_id = std::move(method);
  c.task_id = std::move(task);
  c.plausibility = p;
  c.simplicity = s;
  c.reproducibility = r;
  c.iqs = ComposeIqs({p, s, r}, c.weights);
  return c;
}

AnnotationRecord Answer(std::string sample, std::string method, std::string annotator,
                        Label q1) {
  AnnotationRecord a;
  a.sample_id = std::move(sample);
  a.method_id = std::move(method);
  a.annotator_id = std::move(annotator);
  a.q1_answer = std::move(q1);
  return a;
}

TEST(RankMethods, SentimentTableOrder) {
  const auto cards = PublishedScorecards("SST2");
  const auto table = RankMethods(cards, IQSWeights::Equal());
  EXPECT_EQ(table.task_id, "sst2");
  EXPECT_EQ(Order(table),
            (std::vector<std::string>{"input_x_gradient", "deeplift", "kernel_shap", "lime",
                                      "integrated_gradients", "guided_backprop"}));
  EXPECT_NEAR(table.rows[0].iqs, 0.7527, testing::kFourDecimals);
  EXPECT_NEAR(table.rows[0].scaled_plausibility, 0.2462, 1e-12);
}

TEST(RankMethods, RowsSumToIqs) {
  for (const char* task : {"SST2", "STSB", "QNLI"}) {
    const auto cards = PublishedScorecards(task);
    const IQSWeights w{0.5, 0.2, 0.3};
    for (const auto& r : RankMethods(cards, w).rows) {
      EXPECT_NEAR(r.scaled_plausibility + r.scaled_simplicity + r.scaled_reproducibility,
                  r.iqs, 1e-12);
    }
  }
}

TEST(RankMethods, SingleMethod) {
  const std::vector<MethodScorecard> cards{Card("m", "t", 0.4, 0.5, 0.6)};
  const auto table = RankMethods(cards, IQSWeights::Equal());
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_NEAR(table.rows[0].iqs, 0.5, 1e-15);
}

TEST(RankMethods, TiesBreakAlphabetically) {
  const std::vector<MethodScorecard> cards{Card("zeta", "t", 0.5, 0.5, 0.5),
                                           Card("alpha", "t", 0.5, 0.5, 0.5),
                                           Card("mid", "t", 0.9, 0.9, 0.9)};
  EXPECT_EQ(Order(RankMethods(cards, IQSWeights::Equal())),
            (std::vector<std::string>{"mid", "alpha", "zeta"}));
}

TEST(RankMethods, WeightsChangeOrder) {
  const std::vector<MethodScorecard> cards{Card("plausible", "t", 0.9, 0.1, 0.5),
                                           Card("simple", "t", 0.1, 0.9, 0.5)};
  EXPECT_EQ(Order(RankMethods(cards, {1.0, 0.0, 0.0})).front(), "plausible");
  EXPECT_EQ(Order(RankMethods(cards, {0.0, 1.0, 0.0})).front(), "simple");
}

TEST(RankMethods, Errors) {
  EXPECT_THROW(RankMethods({}, IQSWeights::Equal()), Error);
  const std::vector<MethodScorecard> mixed{Card("a", "t1", 0.5, 0.5, 0.5),
                                           Card("b", "t2", 0.5, 0.5, 0.5)};
  EXPECT_THROW(RankMethods(mixed, IQSWeights::Equal()), Error);
  const std::vector<MethodScorecard> one{Card("a", "t1", 0.5, 0.5, 0.5)};
  EXPECT_THROW(RankMethods(one, {0.5, 0.5, 0.5}), Error);
}

TEST(AgreementRate, SplitVote) {
  const TaskSpec task = SentimentTask();
  const std::vector<AnnotationRecord> anns{Answer("s1", "m", "a", "positive"),
                                           Answer("s1", "m", "b", "positive"),
                                           Answer("s1", "m", "c", "negative")};
  const auto r = AgreementRate(anns, task);
  EXPECT_EQ(r.n_pairs, 1u);
  EXPECT_EQ(r.unanimous_rate, 0.0);
  EXPECT_NEAR(r.pairwise_rate, 1.0 / 3.0, 1e-15);
}

TEST(AgreementRate, TwoPairs) {
  const TaskSpec task = SentimentTask();
  const std::vector<AnnotationRecord> anns{
      Answer("s1", "m", "a", "positive"), Answer("s1", "m", "b", "positive"),
      Answer("s1", "m", "c", "positive"), Answer("s2", "m", "a", "negative"),
      Answer("s2", "m", "b", "positive"), Answer("s2", "m", "c", "positive")};
  const auto r = AgreementRate(anns, task);
  EXPECT_EQ(r.n_pairs, 2u);
  EXPECT_EQ(r.unanimous_rate, 0.5);
  EXPECT_NEAR(r.pairwise_rate, (1.0 + 1.0 / 3.0) / 2.0, 1e-15);
}

TEST(AgreementRate, SingleAnnotatorPairsAreExcluded) {
  const TaskSpec task = SentimentTask();
  const std::vector<AnnotationRecord> anns{Answer("s1", "m", "a", "positive"),
                                           Answer("s2", "m", "a", "negative"),
                                           Answer("s2", "m", "b", "negative")};
  const auto r = AgreementRate(anns, task);
  EXPECT_EQ(r.n_pairs, 1u);
  EXPECT_EQ(r.unanimous_rate, 1.0);
  ASSERT_EQ(r.excluded.size(), 1u);
  EXPECT_EQ(r.excluded[0], (PairKey{"s1", "m"}));

  const auto none = AgreementRate(std::vector<AnnotationRecord>{anns[0]}, task);
  EXPECT_EQ(none.n_pairs, 0u);
  EXPECT_EQ(none.pairwise_rate, 0.0);
}

TEST(AgreementRate, RegressionUsesThresholdSide) {
  const TaskSpec task = SimilarityTask();
  const std::vector<AnnotationRecord> anns{Answer("s1", "m", "a", 3.1),
                                           Answer("s1", "m", "b", 4.9),
                                           Answer("s1", "m", "c", 2.5)};
  EXPECT_EQ(AgreementRate(anns, task).unanimous_rate, 1.0);
  EXPECT_EQ(EffectiveLabel(2.4, task), "below_threshold");
  EXPECT_THROW(EffectiveLabel(Label{"neutral"}, SentimentTask()), Error);
}

TEST(PerCriterionAverages, PublishedTable) {
  const auto averages = PerCriterionAverages(PublishedScorecards());
  ASSERT_EQ(averages.size(), 6u);
  const auto& ixg = *std::find_if(averages.begin(), averages.end(),
                                  [](const auto& a) { return a.method_id == "input_x_gradient"; });
  EXPECT_EQ(ixg.n_tasks, 3u);
  EXPECT_NEAR(ixg.plausibility, 0.7951, testing::kFourDecimals);
  EXPECT_NEAR(ixg.plausibility, (0.2462 + 0.2437 + 0.3052), 1e-12);
}

TEST(PerCriterionAverages, MissingCellIsUsageError) {
  auto cards = PublishedScorecards();
  cards.pop_back();
  try {
    PerCriterionAverages(cards);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
}

TEST(Render, EmptyTableHasHeaderOnly) {
  TextTable t{"", {"a", "b"}, {}};
  EXPECT_EQ(Render(t, OutputFormat::kTsv), "a\tb\n");
  EXPECT_EQ(Render(t, OutputFormat::kMarkdown), "| a | b |\n| --- | ---: |\n");
  EXPECT_EQ(Json::parse(Render(t, OutputFormat::kJsonDoc))["rows"].size(), 0u);
}

TEST(Render, CellFormatting) {
  TextTable t{"x", {"name", "value", "count"}, {{std::string("m"), 0.123456, 7LL}}};
  EXPECT_EQ(Render(t, OutputFormat::kTsv), "name\tvalue\tcount\nm\t0.1235\t7\n");
  const Json doc = Json::parse(Render(t, OutputFormat::kJsonDoc));
  EXPECT_EQ(doc["rows"][0]["value"].get<double>(), 0.123456);
  EXPECT_EQ(doc["rows"][0]["count"].get<long long>(), 7);
}

TEST(Render, Deterministic) {
  const auto table = ToTextTable(RankMethods(PublishedScorecards("QNLI"), IQSWeights::Equal()));
  for (auto format : {OutputFormat::kTsv, OutputFormat::kJsonDoc, OutputFormat::kMarkdown})
    EXPECT_EQ(Render(table, format), Render(table, format));
}

TEST(Render, MarkdownGolden) {
  const auto table = ToTextTable(RankMethods(PublishedScorecards("STSB"), IQSWeights::Equal()));
  const std::string actual = Render(table, OutputFormat::kMarkdown);
  const fs::path golden = fs::path(IQS_GOLDEN_DIR) / "stsb_ranking.md";
  if (std::getenv("IQS_UPDATE_GOLDEN") != nullptr) {
    std::ofstream(golden, std::ios::binary) << actual;
  }
  std::ifstream in(golden, std::ios::binary);
  ASSERT_TRUE(in) << golden;
  const std::string expected{std::istreambuf_iterator<char>(in), {}};
  EXPECT_EQ(actual, expected);
}

TEST(FileNames, RankingName) {
  EXPECT_EQ(RankingFileName("sst2", IQSWeights::Equal(), OutputFormat::kTsv),
            "sst2_0.3333-0.3333-0.3333.tsv");
  EXPECT_EQ(RankingFileName("qnli", {0.5, 0.25, 0.25}, OutputFormat::kMarkdown),
            "qnli_0.5000-0.2500-0.2500.md");
  EXPECT_THROW(ParseOutputFormat("xml"), Error);
}

TEST(Scorecards, DocumentRoundTrip) {
  const auto cards = PublishedScorecards();
  const fs::path dir = testing::TempDir("scorecards");
  std::ofstream(dir / "cards.json") << ScorecardsDocument(cards);
  const auto loaded = LoadScorecards(dir / "cards.json");
  ASSERT_EQ(loaded.size(), cards.size());
  for (std::size_t i = 0; i < cards.size(); ++i) {
    EXPECT_EQ(loaded[i].method_id, cards[i].method_id);
    EXPECT_EQ(loaded[i].plausibility, cards[i].plausibility);
    EXPECT_EQ(loaded[i].iqs, cards[i].iqs);
  }
}

TEST(Scorecards, InconsistentIqsIsRejected) {
  const fs::path dir = testing::TempDir("scorecards_bad");
  std::ofstream(dir / "cards.json")
      << R"({"scorecards": [{"method_id": "m", "task_id": "t", "plausibility": 0.3,
             "simplicity": 0.6, "reproducibility": 0.9, "iqs": 0.7}]})";
  EXPECT_THROW(LoadScorecards(dir / "cards.json"), Error);
  std::ofstream(dir / "range.json")
      << R"({"scorecards": [{"method_id": "m", "task_id": "t", "plausibility": 1.3,
             "simplicity": 0.6, "reproducibility": 0.9}]})";
  EXPECT_THROW(LoadScorecards(dir / "range.json"), Error);
}

}  // namespace
}  // namespace iqs
