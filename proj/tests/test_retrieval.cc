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

#include <numbers>

#include "crossplan/dictionary.h"
#include "crossplan/error.h"
#include "crossplan/retrieval.h"
#include "oracles.h"
#include "test_util.h"

namespace crossplan {
namespace {

TrajectoryDictionary dictionary_of(const std::vector<Trajectory>& histories) {
  TrajectoryDictionary d;
  for (std::size_t i = 0; i < histories.size(); ++i) {
    DictionaryEntry e;
    e.history = histories[i];
    e.future = testing::straight(80, 1.0 + i, TrajectoryKind::kFuture);
    e.record_index = i;
    d.entries.push_back(e);
  }
  return d;
}

TrajectoryDictionary random_dictionary(Rng& rng, std::size_t n) {
  std::vector<Trajectory> hs;
  for (std::size_t i = 0; i < n; ++i) hs.push_back(testing::random_walk(20, rng));
  return dictionary_of(hs);
}

std::vector<std::size_t> indices(const RetrievalResult& r) {
  std::vector<std::size_t> out;
  for (const ScoredEntry& e : r.ranked) out.push_back(e.index);
  return out;
}

TEST(Similarity, ExactMatchScoresAlpha) {
  Rng rng(1);
  TrajectoryDictionary d = random_dictionary(rng, 12);
  const Trajectory q = d.entries[5].history;
  const auto scores = similarity_scores(q, d, 0.3);
  EXPECT_DOUBLE_EQ(scores[5].score, 0.3);
  EXPECT_DOUBLE_EQ(scores[5].similarity, 1.0);
  EXPECT_EQ(scores[5].distance, 0.0);
  for (const ScoredEntry& s : scores) EXPECT_LE(s.score, scores[5].score);
}

TEST(Similarity, OrthogonalFarthestEntry) {
  // Query along +x, far entry along +y with a larger norm, near entry equal to
  // the query.
  Trajectory q = testing::straight(20, 1.0, TrajectoryKind::kHistory, 0.1, 1.0, 0.0);
  Trajectory far = testing::straight(20, 5.0, TrajectoryKind::kHistory, 0.1, 0.0, 1.0, std::numbers::pi / 2);
  const TrajectoryDictionary d = dictionary_of({q, far});
  const auto scores = similarity_scores(q, d, 0.3);
  EXPECT_NEAR(scores[1].similarity, 0.5, 1e-15);
  EXPECT_EQ(scores[1].distance, 1.0);
  EXPECT_NEAR(scores[1].score, 0.3 * 0.5 - 0.7 * 1.0, 1e-15);
}

TEST(Similarity, AlphaOneRanksByCosine) {
  Rng rng(2);
  const TrajectoryDictionary d = random_dictionary(rng, 40);
  const Trajectory q = testing::random_walk(20, rng);
  const auto scores = similarity_scores(q, d, 1.0);
  for (const ScoredEntry& s : scores) EXPECT_EQ(s.score, s.similarity);
}

TEST(Retrieve, TopOneReturnsMatchingEntry) {
  Rng rng(3);
  const TrajectoryDictionary d = random_dictionary(rng, 30);
  const RetrievalResult r = retrieve_top_k(d.entries[17].history, d, 1, 0.3);
  ASSERT_EQ(r.ranked.size(), 1u);
  EXPECT_EQ(r.ranked[0].index, 17u);
  EXPECT_EQ(d.entries[r.ranked[0].index].future, d.entries[17].future);
}

TEST(Retrieve, LargeKReturnsAllSorted) {
  Rng rng(4);
  const TrajectoryDictionary d = random_dictionary(rng, 15);
  const RetrievalResult r = retrieve_top_k(testing::random_walk(20, rng), d, 100, 0.3);
  ASSERT_EQ(r.ranked.size(), 15u);
  for (std::size_t i = 1; i < r.ranked.size(); ++i) EXPECT_GE(r.ranked[i - 1].score, r.ranked[i].score);
}

TEST(Retrieve, MatchesIndependentRanking) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const TrajectoryDictionary d = random_dictionary(rng, 50);
    const Trajectory q = testing::random_walk(20, rng);
    for (double alpha : {0.0, 0.3, 1.0}) {
      EXPECT_EQ(indices(retrieve_top_k(q, d, 9, alpha)), oracle::retrieval_ranking(q, d, 9, alpha));
    }
  }
}

TEST(Retrieve, EqualsLibraryBruteForce) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const TrajectoryDictionary d = random_dictionary(rng, 1 + rng.below(60));
    const Trajectory q = testing::random_walk(20, rng);
    const int k = 1 + static_cast<int>(rng.below(12));
    for (double alpha : {0.0, 0.3, 1.0}) EXPECT_EQ(retrieve_top_k(q, d, k, alpha), brute_force_oracle(q, d, k, alpha));
  }
}

TEST(Retrieve, TiesGoToLowerIndex) {
  Rng rng(7);
  const Trajectory a = testing::random_walk(20, rng);
  const Trajectory b = testing::random_walk(20, rng);
  const TrajectoryDictionary d = dictionary_of({b, a, a, b, a});
  const RetrievalResult r = retrieve_top_k(a, d, 5, 0.3);
  EXPECT_EQ(indices(r), (std::vector<std::size_t>{1, 2, 4, 0, 3}));
  EXPECT_EQ(indices(brute_force_oracle(a, d, 5, 0.3)), indices(r));
}

TEST(Retrieve, SingletonDictionary) {
  Rng rng(8);
  const TrajectoryDictionary d = random_dictionary(rng, 1);
  const RetrievalResult r = brute_force_oracle(testing::random_walk(20, rng), d, 9, 0.3);
  ASSERT_EQ(r.ranked.size(), 1u);
  EXPECT_EQ(r.ranked[0].index, 0u);
  EXPECT_EQ(r.ranked[0].distance, 0.0);
}

TEST(Retrieve, RigidTransformInvariance) {
  Rng rng(9);
  const TrajectoryDictionary d = random_dictionary(rng, 30);
  const Trajectory q = testing::random_walk(20, rng);
  // Rotation about the origin preserves norms, dot products and distances.
  const RigidTransform tf{0.0, 0.0, 1.1, false};
  TrajectoryDictionary rotated = d;
  for (DictionaryEntry& e : rotated.entries) e.history = tf.apply(e.history);
  const auto s0 = similarity_scores(q, d, 0.3);
  const auto s1 = similarity_scores(tf.apply(q), rotated, 0.3);
  for (std::size_t i = 0; i < s0.size(); ++i) EXPECT_NEAR(s0[i].score, s1[i].score, 1e-9);
  EXPECT_EQ(indices(retrieve_top_k(q, d, 9, 0.3)), indices(retrieve_top_k(tf.apply(q), rotated, 9, 0.3)));
}

TEST(Retrieve, HigherAlphaFavoursCosineAtEqualDistance) {
  // Entries 0 and 1 are equally far from the query; entry 1 points the same
  // way. Entry 2 is the farthest so distances normalize to 0.5 for both.
  Trajectory q = testing::straight(20, 1.0, TrajectoryKind::kHistory, 0.1, 2.0, 0.0);
  Trajectory same_dir = q;
  for (State& s : same_dir.points) s.x *= 1.5;
  std::vector<double> flat_q = flatten_positions(q);
  double dist = 0.0;
  for (std::size_t i = 0; i < flat_q.size(); ++i) dist += (0.5 * flat_q[i]) * (0.5 * flat_q[i]);
  // Rotate the query by the angle that yields the same distance as same_dir.
  double nq2 = 0.0;
  for (double v : flat_q) nq2 += v * v;
  const double angle = std::acos(1.0 - dist / (2.0 * nq2));
  Trajectory rotated = RigidTransform{0, 0, angle, false}.apply(q);
  Trajectory far = RigidTransform{0, 0, 3.0, false}.apply(q);
  for (State& s : far.points) s.x *= 3.0;
  const TrajectoryDictionary d = dictionary_of({rotated, same_dir, far});
  const auto sc = similarity_scores(q, d, 0.0);
  ASSERT_NEAR(sc[0].distance, sc[1].distance, 1e-9);
  for (double alpha : {0.1, 0.5, 0.9}) {
    const auto s = similarity_scores(q, d, alpha);
    EXPECT_GE(s[1].score, s[0].score - 1e-12);
  }
  EXPECT_EQ(retrieve_top_k(q, d, 1, 0.9).ranked[0].index, 1u);
}

TEST(Retrieve, RejectsBadArguments) {
  Rng rng(10);
  const TrajectoryDictionary d = random_dictionary(rng, 5);
  const Trajectory q = testing::random_walk(20, rng);
  EXPECT_THROW(retrieve_top_k(q, d, 0, 0.3), Error);
  EXPECT_THROW(retrieve_top_k(q, d, 3, 1.5), Error);
  EXPECT_THROW(retrieve_top_k(q, TrajectoryDictionary{}, 3, 0.3), Error);
  EXPECT_THROW(retrieve_top_k(testing::random_walk(10, rng), d, 3, 0.3), Error);
}

}  // namespace
}  // namespace crossplan
