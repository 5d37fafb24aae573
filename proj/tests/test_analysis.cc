// Copyright 2026 The Crossplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "crossplan/analysis.h"
#include "crossplan/config.h"
#include "crossplan/error.h"
#include "crossplan/pipeline.h"
#include "oracles.h"
#include "test_util.h"

namespace crossplan {
namespace {

std::vector<CorpusRecord> corpus(const ScenarioConfig& cfg, std::size_t n) {
  std::vector<CorpusRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(gen_scenario(cfg, i));
  return out;
}

std::vector<CorpusRecord> mixed_corpus(std::uint64_t seed) {
  ScenarioConfig a;
  a.seed = seed;
  a.dataset_id = "a";
  ScenarioConfig b = a;
  b.seed = seed + 100;
  b.dataset_id = "b";
  b.maneuver_mix = {0.1, 0.3, 0.3, 0.3};
  auto out = corpus(a, 300);
  for (CorpusRecord& r : corpus(b, 200)) out.push_back(std::move(r));
  return out;
}

TEST(TransitionMatrix, CountsMatchRecount) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto records = mixed_corpus(seed);
    const TransitionMatrix m = transition_matrix(records);
    EXPECT_EQ(m.counts, oracle::recount_transitions(records));
    EXPECT_EQ(m.total, records.size());
    EXPECT_NEAR(m.top7_coverage, oracle::top7_share(m.counts), 1e-15);
  }
}

TEST(TransitionMatrix, PerDatasetMatricesAddUp) {
  const auto records = mixed_corpus(4);
  const auto ms = transition_matrices(records);
  ASSERT_EQ(ms.size(), 3u);
  EXPECT_EQ(ms.back().dataset_id, kAllDatasets);
  std::vector<CorpusRecord> only_a;
  for (const CorpusRecord& r : records) {
    if (r.dataset_id == "a") only_a.push_back(r);
  }
  EXPECT_EQ(ms[0].dataset_id, "a");
  EXPECT_EQ(ms[0].counts, oracle::recount_transitions(only_a));
  for (int h = 0; h < 4; ++h) {
    for (int f = 0; f < 4; ++f) EXPECT_EQ(ms[0].counts[h][f] + ms[1].counts[h][f], ms[2].counts[h][f]);
  }
}

TEST(TransitionMatrix, RowsSumToOne) {
  const TransitionMatrix m = transition_matrix(mixed_corpus(5));
  for (int h = 0; h < 4; ++h) {
    double sum = 0.0;
    for (int f = 0; f < 4; ++f) sum += m.probabilities[h][f];
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(TransitionMatrix, ForwardOnlySingleCell) {
  std::vector<CorpusRecord> records;
  for (int i = 0; i < 5; ++i) {
    records.push_back(testing::make_record(testing::straight(20, 8.0), testing::straight(80, 8.0, TrajectoryKind::kFuture, 0.1, 16.0)));
  }
  const TransitionMatrix m = transition_matrix(records);
  const int fwd = static_cast<int>(ManeuverClass::kForward);
  EXPECT_EQ(m.counts[fwd][fwd], 5u);
  EXPECT_EQ(m.probabilities[fwd][fwd], 1.0);
  EXPECT_EQ(m.top7_coverage, 1.0);
  for (int h = 0; h < 4; ++h) {
    EXPECT_EQ(m.empty_row[h], h != fwd);
    if (h != fwd) {
      for (int f = 0; f < 4; ++f) EXPECT_EQ(m.probabilities[h][f], 0.25);
    }
  }
}

TEST(TransitionMatrix, EmptyCorpusIsRejected) {
  try {
    transition_matrix({});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateInput);
  }
  EXPECT_THROW(maneuver_distribution({}), Error);
}

TEST(TransitionMatrix, DefaultRegimeConcentratesOnFewCells) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    PipelineConfig cfg;
    cfg.seed = seed;
    const auto records = corpus(primary_scenario(cfg, "train"), 2000);
    const TransitionMatrix m = transition_matrix(records);
    EXPECT_GE(m.top7_coverage, 0.8) << "seed " << seed;
  }
}

TEST(TopKCoverage, SmallCases) {
  oracle::Counts4x4 c{};
  c[0][0] = 6;
  c[1][2] = 3;
  c[3][3] = 1;
  EXPECT_DOUBLE_EQ(top_k_coverage(c, 1), 0.6);
  EXPECT_DOUBLE_EQ(top_k_coverage(c, 2), 0.9);
  EXPECT_DOUBLE_EQ(top_k_coverage(c, 7), 1.0);
}

TEST(ManeuverDistribution, StationaryOnly) {
  std::vector<CorpusRecord> records;
  for (int i = 0; i < 4; ++i) {
    records.push_back(testing::make_record(testing::straight(20, 0.0), testing::straight(80, 0.0, TrajectoryKind::kFuture)));
  }
  const auto rows = maneuver_distribution(records);
  ASSERT_FALSE(rows.empty());
  const ManeuverDistribution& all = rows.back();
  EXPECT_EQ(all.dataset_id, kAllDatasets);
  EXPECT_EQ(all.total, 4u);
  EXPECT_EQ(all.shares, (std::array<double, 4>{1.0, 0.0, 0.0, 0.0}));
  EXPECT_EQ(normalized_entropy(all.shares), 0.0);
}

TEST(ManeuverDistribution, MatchesRecount) {
  const auto records = mixed_corpus(6);
  const auto rows = maneuver_distribution(records);
  const auto counts = oracle::recount_classes(records);
  const ManeuverDistribution& all = rows.back();
  double sum = 0.0;
  for (int c = 0; c < 4; ++c) {
    EXPECT_EQ(all.counts[c], counts[c]);
    EXPECT_DOUBLE_EQ(all.shares[c], double(counts[c]) / double(records.size()));
    sum += all.shares[c];
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(NormalizedEntropy, Extremes) {
  EXPECT_NEAR(normalized_entropy({0.25, 0.25, 0.25, 0.25}), 1.0, 1e-15);
  EXPECT_NEAR(normalized_entropy({0.5, 0.5, 0.0, 0.0}), 0.5, 1e-15);
}

TEST(WriteAnalysis, WritesThreeTables) {
  testing::TempDir dir("analysis");
  write_analysis(mixed_corpus(7), dir.path());
  for (const char* name : {"maneuver_distribution.tsv", "transition_matrix.tsv", "transition_summary.tsv"}) {
    std::ifstream in(dir.path() / name);
    ASSERT_TRUE(in.good()) << name;
    std::string header;
    std::getline(in, header);
    EXPECT_NE(header.find('\t'), std::string::npos) << name;
    int lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    EXPECT_GT(lines, 0) << name;
  }
  std::ifstream in(dir.path() / "transition_matrix.tsv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "dataset_id\thistory_class\tfuture_class\tcount\tprobability\tempty_row");
}

}  // namespace
}  // namespace crossplan
