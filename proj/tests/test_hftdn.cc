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

#include <algorithm>
#include <cstring>

#include "crossplan/error.h"
#include "crossplan/hftdn.h"
#include "crossplan/nn/grad_check.h"
#include "test_util.h"

namespace crossplan {
namespace {

HftdnConfig small_config() {
  HftdnConfig c;
  c.hidden = 8;
  c.context_dim = 6;
  c.future_stride = 4;
  return c;
}

std::vector<Trajectory> random_futures(Rng& rng, int n) {
  std::vector<Trajectory> out;
  for (int i = 0; i < n; ++i) out.push_back(testing::random_walk(80, rng, TrajectoryKind::kFuture));
  return out;
}

std::vector<const Trajectory*> ptrs(const std::vector<Trajectory>& ts) {
  std::vector<const Trajectory*> out;
  for (const Trajectory& t : ts) out.push_back(&t);
  return out;
}

void randomize(HftdnModel& m, Rng& rng) {
  for (nn::Parameter* p : m.params()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = rng.uniform(-0.5, 0.5);
  }
}

TEST(GroupSizes, Partition) {
  EXPECT_EQ(group_sizes(9, 3), (std::vector<int>{3, 3, 3}));
  EXPECT_EQ(group_sizes(10, 3), (std::vector<int>{4, 3, 3}));
  EXPECT_EQ(group_sizes(2, 3), (std::vector<int>{1, 1}));
  EXPECT_EQ(group_sizes(1, 1), (std::vector<int>{1}));
  EXPECT_THROW(group_sizes(0, 3), Error);
}

TEST(Udtgm, MatchesMeanThenMaxOracle) {
  Rng rng(1);
  HftdnModel m(small_config(), 2);
  const auto fut = random_futures(rng, 9);
  nn::Tape t;
  const Matrix enc = m.encode_futures(t, ptrs(fut)).value();
  RowVector expected = RowVector::Constant(enc.cols(), -INFINITY);
  for (int g = 0; g < 3; ++g) {
    RowVector mean = RowVector::Zero(enc.cols());
    for (int r = 0; r < 3; ++r) mean += enc.row(3 * g + r);
    mean /= 3.0;
    expected = expected.cwiseMax(mean);
  }
  const RowVector q = udtgm_aggregate(ptrs(fut), m);
  EXPECT_LT((q - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Udtgm, IdenticalCandidatesGiveSingleEncoding) {
  Rng rng(3);
  HftdnModel m(small_config(), 4);
  const auto one = random_futures(rng, 1);
  const std::vector<Trajectory> nine(9, one[0]);
  EXPECT_LT((udtgm_aggregate(ptrs(nine), m) - udtgm_aggregate(ptrs(one), m)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Udtgm, PermutationInvariance) {
  Rng rng(5);
  HftdnModel m(small_config(), 6);
  const auto fut = random_futures(rng, 9);
  const RowVector base = udtgm_aggregate(ptrs(fut), m);
  std::vector<Trajectory> within = fut;
  std::swap(within[0], within[2]);
  std::swap(within[4], within[5]);
  EXPECT_LT((udtgm_aggregate(ptrs(within), m) - base).cwiseAbs().maxCoeff(), 1e-14);
  std::vector<Trajectory> groups(fut.begin() + 6, fut.end());
  groups.insert(groups.end(), fut.begin(), fut.begin() + 6);
  EXPECT_LT((udtgm_aggregate(ptrs(groups), m) - base).cwiseAbs().maxCoeff(), 1e-14);
}

TrajectoryDictionary dictionary(Rng& rng, int n) {
  TrajectoryDictionary d;
  for (int i = 0; i < n; ++i) {
    DictionaryEntry e;
    e.history = testing::random_walk(20, rng);
    e.future = testing::random_walk(80, rng, TrajectoryKind::kFuture);
    e.record_index = static_cast<std::uint64_t>(i);
    d.entries.push_back(e);
  }
  return d;
}

Matrix random_context(Rng& rng, int rows, int cols) {
  Matrix c(rows, cols);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(-1, 1);
  return c;
}

TEST(HftdnForward, ZeroOutputProjectionIsIdentity) {
  Rng rng(7);
  HftdnModel m(small_config(), 8);
  const TrajectoryDictionary d = dictionary(rng, 20);
  const Matrix ctx = random_context(rng, 4, 6);
  const Matrix out = hftdn_forward(ctx, testing::random_walk(20, rng), d, m, 9, 0.3);
  ASSERT_EQ(out.rows(), 4);
  ASSERT_EQ(out.cols(), 6);
  EXPECT_EQ(std::memcmp(out.data(), ctx.data(), sizeof(double) * 24), 0);
}

TEST(HftdnForward, SingletonContextGetsProjectedValue) {
  Rng rng(9);
  HftdnModel m(small_config(), 10);
  randomize(m, rng);
  const TrajectoryDictionary d = dictionary(rng, 20);
  const Matrix ctx = random_context(rng, 1, 6);
  const Matrix expected =
      ctx + ((ctx * m.value.weight.value + m.value.bias.value) * m.output.weight.value + m.output.bias.value);
  for (int trial = 0; trial < 3; ++trial) {
    const Matrix out = hftdn_forward(ctx, testing::random_walk(20, rng), d, m, 9, 0.3);
    EXPECT_LT((out - expected).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(HftdnForward, ShapeAndDeterminism) {
  Rng rng(11);
  HftdnModel m(small_config(), 12);
  randomize(m, rng);
  const TrajectoryDictionary d = dictionary(rng, 30);
  const Matrix ctx = random_context(rng, 5, 6);
  const Trajectory q = testing::random_walk(20, rng);
  const Matrix a = hftdn_forward(ctx, q, d, m, 9, 0.3);
  const Matrix b = hftdn_forward(ctx, q, d, m, 9, 0.3);
  EXPECT_EQ(a.rows(), 5);
  EXPECT_EQ(a.cols(), 6);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, ctx);
}

TEST(HftdnForward, EmptyDictionaryPassesThrough) {
  Rng rng(13);
  HftdnModel m(small_config(), 14);
  randomize(m, rng);
  const Matrix ctx = random_context(rng, 3, 6);
  std::vector<std::string> warnings;
  auto previous = set_log_sink([&](LogLevel level, std::string_view msg) {
    if (level == LogLevel::kWarning) warnings.emplace_back(msg);
  });
  const Matrix out = hftdn_forward(ctx, testing::random_walk(20, rng), TrajectoryDictionary{}, m, 9, 0.3);
  set_log_sink(previous);
  EXPECT_EQ(out, ctx);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Hftdn, GradCheckThroughRefinement) {
  Rng rng(15);
  HftdnConfig cfg = small_config();
  cfg.future_stride = 16;
  HftdnModel m(cfg, 16);
  randomize(m, rng);
  const auto fut = random_futures(rng, 6);
  const Matrix ctx = random_context(rng, 5, 6);
  const Matrix target = random_context(rng, 5, 6);
  const auto report = nn::grad_check(m.params(), [&](nn::Tape& t) {
    nn::Var enc = m.encode_futures(t, ptrs(fut));
    nn::Var q = m.aggregate(t, enc, {{0, 1, 2}, {3, 4, 5}});
    return nn::huber_loss(m.refine(t, t.constant(ctx), {{0, 2}, {2, 3}}, q), target);
  });
  EXPECT_LE(report.max_rel_error(), 1e-6);
}

TEST(Hftdn, CheckpointRoundTrip) {
  Rng rng(17);
  HftdnModel m(small_config(), 18);
  randomize(m, rng);
  HftdnModel back = HftdnModel::from_checkpoint(nn::parse_checkpoint(nn::serialize_checkpoint(m.to_checkpoint())));
  EXPECT_EQ(back.current_hash(), m.current_hash());
  EXPECT_EQ(back.config().future_stride, 4);
}

TEST(Hftdn, RejectsBadConfig) {
  HftdnConfig c = small_config();
  c.alpha = 2.0;
  EXPECT_THROW(HftdnModel(c, 1), Error);
  c = small_config();
  c.future_stride = 0;
  EXPECT_THROW(HftdnModel(c, 1), Error);
}

}  // namespace
}  // namespace crossplan
