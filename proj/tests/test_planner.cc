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

#include <cmath>
#include <limits>

#include "crossplan/error.h"
#include "crossplan/planner.h"
#include "test_util.h"

namespace crossplan {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

std::vector<CorpusRecord> scenarios(std::size_t n, std::uint64_t seed, int max_neighbors = 4) {
  ScenarioConfig cfg;
  cfg.seed = seed;
  cfg.max_neighbors = max_neighbors;
  std::vector<CorpusRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(gen_scenario(cfg, i));
  return out;
}

PlannerConfig small_planner(bool gftm = true, bool s2d = true) {
  PlannerConfig c;
  c.model_dim = 16;
  c.prior_dim = 8;
  c.head_hidden = 32;
  c.use_gftm = gftm;
  c.use_s2d = s2d;
  return c;
}

GftmModel frozen_gftm(std::uint64_t seed) { return freeze_export(GftmModel(GftmConfig{8, 16, Schema{}}, seed)); }

CorpusRecord with_neighbors(const CorpusRecord& base, std::size_t n, std::uint64_t seed) {
  CorpusRecord r = base;
  r.neighbors.clear();
  r.neighbor_futures.clear();
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) r.neighbors.push_back(testing::random_walk(20, rng));
  return r;
}

TEST(EncodeContext, TokenCountFollowsNeighbors) {
  PlannerModel m(small_planner(false, false), 1);
  const CorpusRecord base = scenarios(1, 2)[0];
  for (std::size_t n : {0u, 1u, 3u}) {
    const PlanningContext ctx = encode_context(with_neighbors(base, n, 3), m, nullptr);
    EXPECT_EQ(ctx.tokens.rows(), static_cast<Eigen::Index>(n) + 1);
    EXPECT_EQ(ctx.tokens.cols(), 16);
    EXPECT_EQ(ctx.neighbors, static_cast<int>(n));
    ASSERT_EQ(ctx.presence.size(), 4u);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(ctx.presence[j], j < n);
  }
}

TEST(EncodeContext, EgoTokenIndependentOfNeighbors) {
  GftmModel g = frozen_gftm(4);
  PlannerModel m(small_planner(), 5);
  const CorpusRecord base = scenarios(1, 6)[0];
  const PlanningContext a = encode_context(with_neighbors(base, 1, 7), m, &g);
  const PlanningContext b = encode_context(with_neighbors(base, 3, 8), m, &g);
  EXPECT_EQ(a.tokens.row(0), b.tokens.row(0));
}

TEST(EncodeContext, FullyMaskedPriorEqualsZeroPrior) {
  GftmModel g = frozen_gftm(9);
  PlannerModel masked(small_planner(true, true), 10);
  masked.mask.fc.weight.value.setZero();
  masked.mask.fc.bias.value.setZero();
  PlannerModel zero(small_planner(false, false), 10);
  // Give the prior columns weight so that an unmasked prior would show.
  for (PlannerModel* m : {&masked, &zero}) m->fuse.weight.value.bottomRows(8).setConstant(0.3);
  const CorpusRecord r = scenarios(1, 11)[0];
  EXPECT_EQ(encode_context(r, masked, &g).tokens, encode_context(r, zero, nullptr).tokens);
  masked.mask.set_phase(S2dPhase::kInference);
  EXPECT_NE(encode_context(r, masked, &g).tokens, encode_context(r, zero, nullptr).tokens);
}

TEST(EncodeContext, PriorStartsInert) {
  GftmModel g = frozen_gftm(12);
  PlannerModel with(small_planner(true, false), 13);
  PlannerModel without(small_planner(false, false), 13);
  const CorpusRecord r = scenarios(1, 14)[0];
  EXPECT_EQ(encode_context(r, with, &g).tokens, encode_context(r, without, nullptr).tokens);
}

TEST(EncodeContext, RejectsSchemaViolation) {
  PlannerModel m(small_planner(false, false), 1);
  CorpusRecord r = scenarios(1, 2)[0];
  r.future.points.pop_back();
  EXPECT_NE(code_of([&] { encode_context(r, m, nullptr); }), ErrorCode::kOk);
}

TEST(Plan, ShapesAndDeterminism) {
  PlannerModel m(small_planner(false, false), 15);
  const CorpusRecord r = with_neighbors(scenarios(1, 16)[0], 2, 17);
  const PlanningContext ctx = encode_context(r, m, nullptr);
  const PlanOutput a = plan(ctx, m);
  const PlanOutput b = plan(ctx, m);
  EXPECT_EQ(a.ego_future.rows(), 80);
  EXPECT_EQ(a.ego_future.cols(), 3);
  ASSERT_EQ(a.neighbors.size(), 2u);
  for (const Matrix& n : a.neighbors) {
    EXPECT_EQ(n.rows(), 80);
    EXPECT_EQ(n.cols(), 4);
    EXPECT_TRUE(n.allFinite());
  }
  EXPECT_EQ(a.ego_future, b.ego_future);
  EXPECT_EQ(a.neighbors, b.neighbors);
}

TEST(Plan, ZeroInitHftdnChangesNothing) {
  PlannerModel m(small_planner(false, false), 18);
  HftdnConfig hc;
  hc.hidden = 8;
  hc.context_dim = 16;
  hc.future_stride = 8;
  HftdnModel h(hc, 19);
  const auto dict_records = scenarios(40, 20);
  const TrajectoryDictionary dict = build_dictionary(dict_records, DictionaryConfig{});
  ASSERT_FALSE(dict.empty());
  const PlanningContext ctx = encode_context(scenarios(1, 21)[0], m, nullptr);
  EXPECT_EQ(plan(ctx, m).ego_future, plan(ctx, m, &h, &dict).ego_future);
}

TEST(TrainMain, KeepsGftmAndFitsTinyCorpus) {
  GftmModel g = frozen_gftm(22);
  const std::string before = g.current_hash();
  PlannerConfig cfg;
  cfg.prior_dim = 8;
  PlannerModel m(cfg, 23);
  const auto train = scenarios(10, 24);
  TrainOptions opt;
  opt.epochs = 5000;
  opt.batch = 10;
  opt.lr = 2e-3;
  double best = std::numeric_limits<double>::infinity();
  opt.on_epoch = [&](const EpochLog& log) { best = std::min(best, log.val_loss); };
  const TrainResult r = train_main(m, &g, train, train, opt);
  EXPECT_EQ(g.current_hash(), before);
  EXPECT_GT(r.initial_val_loss, 1.0);
  EXPECT_LT(best, 1e-2);
}

TEST(TrainMain, MainLossEqualsPlanLossWithoutNeighbors) {
  PlannerModel m(small_planner(false, false), 25);
  const auto train = scenarios(12, 26, 0);
  for (const CorpusRecord& rec : train) ASSERT_TRUE(rec.neighbors.empty());
  TrainOptions opt;
  opt.epochs = 2;
  opt.batch = 12;
  opt.lr = 1e-3;
  std::vector<EpochLog> logs;
  opt.on_epoch = [&](const EpochLog& log) { logs.push_back(log); };
  train_main(m, nullptr, train, train, opt);
  // One batch per epoch: the epoch-2 training loss is the main loss at the
  // end of epoch 1, where the validation plan loss was measured.
  ASSERT_EQ(logs.size(), 2u);
  EXPECT_EQ(logs[1].train_loss, logs[0].val_loss);
}

TEST(TrainMain, PhaseOrderIsEnforced) {
  const auto train = scenarios(4, 27);
  TrainOptions opt;
  opt.epochs = 1;
  GftmModel unfrozen(GftmConfig{8, 16, Schema{}}, 28);
  PlannerModel m(small_planner(), 29);
  EXPECT_EQ(code_of([&] { train_main(m, &unfrozen, train, {}, opt); }), ErrorCode::kPhaseOrder);
  EXPECT_EQ(code_of([&] { train_main(m, nullptr, train, {}, opt); }), ErrorCode::kPhaseOrder);
  GftmModel g = frozen_gftm(30);
  m.mask.set_phase(S2dPhase::kInference);
  EXPECT_EQ(code_of([&] { train_main(m, &g, train, {}, opt); }), ErrorCode::kPhaseOrder);
  m.mask.set_phase(S2dPhase::kMainTraining);
  EXPECT_EQ(code_of([&] { train_main(m, &g, {}, {}, opt); }), ErrorCode::kDegenerateInput);
  m.freeze();
  EXPECT_EQ(code_of([&] { train_main(m, &g, train, {}, opt); }), ErrorCode::kPhaseOrder);
}

TEST(TrainMain, DetectsGftmTampering) {
  GftmModel g = frozen_gftm(31);
  g.params()[0]->value(0, 0) += 1.0;
  PlannerModel m(small_planner(), 32);
  TrainOptions opt;
  opt.epochs = 1;
  EXPECT_EQ(code_of([&] { train_main(m, &g, scenarios(4, 33), {}, opt); }), ErrorCode::kIsolation);
}

struct Phase3Fixture {
  GftmModel gftm = frozen_gftm(34);
  PlannerModel planner{small_planner(), 35};
  HftdnModel hftdn;
  TrajectoryDictionary dict;
  std::vector<CorpusRecord> train = scenarios(24, 36);

  Phase3Fixture() {
    HftdnConfig hc;
    hc.hidden = 8;
    hc.context_dim = 16;
    hc.future_stride = 8;
    hftdn = HftdnModel(hc, 37);
    dict = build_dictionary(scenarios(60, 38), DictionaryConfig{});
    TrainOptions opt;
    opt.epochs = 1;
    opt.batch = 8;
    train_main(planner, &gftm, train, {}, opt);
    planner.freeze();
    planner.mask.set_phase(S2dPhase::kHftdnTraining);
  }
  PlanningSystem system() { return {&gftm, &planner, &hftdn, &dict}; }
};

TEST(HftdnTrain, OnlyHftdnChanges) {
  Phase3Fixture f;
  const std::string planner_hash = f.planner.current_hash();
  const std::string gftm_hash = f.gftm.current_hash();
  const std::string hftdn_hash = f.hftdn.current_hash();
  PlanningSystem s = f.system();
  TrainOptions opt;
  opt.epochs = 2;
  opt.batch = 8;
  const TrainResult r = hftdn_train(s, f.train, {}, opt);
  EXPECT_EQ(f.planner.current_hash(), planner_hash);
  EXPECT_EQ(f.gftm.current_hash(), gftm_hash);
  EXPECT_NE(f.hftdn.current_hash(), hftdn_hash);
  EXPECT_EQ(r.epochs.size(), 2u);
}

TEST(HftdnTrain, StartMatchesFrozenPlanner) {
  Phase3Fixture f;
  PlanningSystem s = f.system();
  TrainOptions opt;
  opt.epochs = 0;
  const std::string before = f.hftdn.current_hash();
  const TrainResult r = hftdn_train(s, f.train, {}, opt);
  EXPECT_EQ(f.hftdn.current_hash(), before);
  EXPECT_TRUE(r.epochs.empty());
  f.planner.mask.set_phase(S2dPhase::kInference);
  PlanningSystem bare{&f.gftm, &f.planner, nullptr, nullptr};
  const Metrics with = evaluate(s, f.train);
  const Metrics without = evaluate(bare, f.train);
  EXPECT_EQ(with.ade, without.ade);
  EXPECT_NEAR(r.initial_val_loss, without.plan_loss, 1e-9);
}

TEST(HftdnTrain, Preconditions) {
  Phase3Fixture f;
  TrainOptions opt;
  opt.epochs = 1;
  PlanningSystem s = f.system();
  f.planner.mask.set_phase(S2dPhase::kMainTraining);
  EXPECT_EQ(code_of([&] { hftdn_train(s, f.train, {}, opt); }), ErrorCode::kPhaseOrder);
  f.planner.mask.set_phase(S2dPhase::kHftdnTraining);
  TrajectoryDictionary empty;
  PlanningSystem no_dict{&f.gftm, &f.planner, &f.hftdn, &empty};
  EXPECT_EQ(code_of([&] { hftdn_train(no_dict, f.train, {}, opt); }), ErrorCode::kDegenerateInput);
  f.planner.params()[0]->value(0, 0) += 1e-3;
  EXPECT_EQ(code_of([&] { hftdn_train(s, f.train, {}, opt); }), ErrorCode::kIsolation);
}

TEST(Evaluate, NeedsInferencePhase) {
  PlannerModel m(small_planner(false, false), 39);
  PlanningSystem s{nullptr, &m, nullptr, nullptr};
  EXPECT_EQ(code_of([&] { evaluate(s, scenarios(2, 40)); }), ErrorCode::kPhaseOrder);
  m.mask.set_phase(S2dPhase::kInference);
  EXPECT_EQ(code_of([&] { evaluate(s, {}); }), ErrorCode::kDegenerateInput);
}

Matrix plan_of(const Trajectory& t) {
  Matrix p(static_cast<Eigen::Index>(t.size()), 3);
  for (std::size_t s = 0; s < t.size(); ++s) p.row(static_cast<Eigen::Index>(s)) << t.points[s].x, t.points[s].y, t.points[s].psi;
  return p;
}

TEST(Metrics, PerfectPredictionIsZero) {
  const auto records = scenarios(5, 41);
  std::vector<Matrix> plans;
  for (const CorpusRecord& r : records) plans.push_back(plan_of(r.future));
  const Metrics m = plan_metrics(plans, records);
  EXPECT_EQ(m.ade, 0.0);
  EXPECT_EQ(m.fde, 0.0);
  EXPECT_EQ(m.yaw_mae, 0.0);
  EXPECT_EQ(m.plan_loss, 0.0);
  EXPECT_EQ(m.records, 5u);
}

TEST(Metrics, LateralOffsetOfOneMeter) {
  const auto records = scenarios(5, 42);
  std::vector<Matrix> plans;
  for (const CorpusRecord& r : records) {
    Matrix p = plan_of(r.future);
    for (Eigen::Index s = 0; s < p.rows(); ++s) {
      p(s, 0) -= std::sin(p(s, 2));
      p(s, 1) += std::cos(p(s, 2));
    }
    plans.push_back(p);
  }
  const Metrics m = plan_metrics(plans, records);
  EXPECT_NEAR(m.ade, 1.0, 1e-12);
  EXPECT_NEAR(m.fde, 1.0, 1e-12);
  EXPECT_EQ(m.yaw_mae, 0.0);
}

double huber(double e) { return std::abs(e) < 1.0 ? e * e / 2.0 : std::abs(e) - 0.5; }

TEST(Metrics, MatchesNaiveRecount) {
  const auto records = scenarios(20, 43);
  Rng rng(44);
  std::vector<Matrix> plans;
  for (const CorpusRecord& r : records) {
    Matrix p = plan_of(r.future);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] += rng.uniform(-3, 3);
    plans.push_back(p);
  }
  double ade = 0, fde = 0, yaw = 0, loss = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Trajectory& gt = records[i].future;
    double a = 0, y = 0, lx = 0, lp = 0;
    double prev_p = 0, prev_g = 0, off_p = 0, off_g = 0;
    for (std::size_t s = 0; s < gt.size(); ++s) {
      const double ex = plans[i](s, 0) - gt.points[s].x;
      const double ey = plans[i](s, 1) - gt.points[s].y;
      a += std::sqrt(ex * ex + ey * ey);
      if (s + 1 == gt.size()) fde += std::sqrt(ex * ex + ey * ey);
      lx += huber(ex) + huber(ey);
      lp += huber(plans[i](s, 2) - gt.points[s].psi);
      // Unwrap both yaw sequences by accumulating 2*pi jumps.
      double pp = plans[i](s, 2), gg = gt.points[s].psi;
      if (s > 0) {
        while (pp + off_p - prev_p > M_PI) off_p -= 2 * M_PI;
        while (pp + off_p - prev_p < -M_PI) off_p += 2 * M_PI;
        while (gg + off_g - prev_g > M_PI) off_g -= 2 * M_PI;
        while (gg + off_g - prev_g < -M_PI) off_g += 2 * M_PI;
      }
      prev_p = pp + off_p;
      prev_g = gg + off_g;
      y += std::abs(prev_p - prev_g);
    }
    ade += a / 80;
    yaw += y / 80;
    loss += lx / 160 + lp / 80;
  }
  const Metrics m = plan_metrics(plans, records);
  EXPECT_NEAR(m.ade, ade / 20, 1e-12);
  EXPECT_NEAR(m.fde, fde / 20, 1e-12);
  EXPECT_NEAR(m.yaw_mae, yaw / 20, 1e-12);
  EXPECT_NEAR(m.plan_loss, loss / 20, 1e-12);
}

TEST(Metrics, RigidTransformLeavesDisplacementUnchanged) {
  const auto records = scenarios(6, 45);
  Rng rng(46);
  std::vector<Matrix> plans;
  for (const CorpusRecord& r : records) {
    Matrix p = plan_of(r.future);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] += rng.uniform(-1, 1);
    plans.push_back(p);
  }
  const double a = 0.7, tx = 12.0, ty = -4.0;
  auto move = [&](double& x, double& y) {
    const double nx = std::cos(a) * x - std::sin(a) * y + tx;
    y = std::sin(a) * x + std::cos(a) * y + ty;
    x = nx;
  };
  std::vector<CorpusRecord> moved = records;
  std::vector<Matrix> moved_plans = plans;
  for (std::size_t i = 0; i < moved.size(); ++i) {
    for (State& s : moved[i].future.points) move(s.x, s.y);
    for (Eigen::Index s = 0; s < moved_plans[i].rows(); ++s) move(moved_plans[i](s, 0), moved_plans[i](s, 1));
  }
  const Metrics m0 = plan_metrics(plans, records);
  const Metrics m1 = plan_metrics(moved_plans, moved);
  EXPECT_NEAR(m0.ade, m1.ade, 1e-9);
  EXPECT_NEAR(m0.fde, m1.fde, 1e-9);
}

TEST(Metrics, RejectsMismatch) {
  const auto records = scenarios(2, 47);
  EXPECT_EQ(code_of([&] { plan_metrics({}, {}); }), ErrorCode::kDegenerateInput);
  EXPECT_EQ(code_of([&] { plan_metrics({Matrix::Zero(80, 3)}, records); }), ErrorCode::kValidation);
  EXPECT_EQ(code_of([&] { plan_metrics({Matrix::Zero(80, 3), Matrix::Zero(79, 3)}, records); }),
            ErrorCode::kValidation);
}

TEST(Planner, CheckpointRoundTripKeepsPhaseAndFreeze) {
  PlannerModel m(small_planner(), 48);
  m.freeze();
  m.mask.set_phase(S2dPhase::kHftdnTraining);
  PlannerModel back = PlannerModel::from_checkpoint(nn::parse_checkpoint(nn::serialize_checkpoint(m.to_checkpoint())));
  EXPECT_TRUE(back.frozen());
  EXPECT_EQ(back.current_hash(), m.current_hash());
  EXPECT_EQ(back.mask.phase(), S2dPhase::kHftdnTraining);
}

}  // namespace
}  // namespace crossplan
