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
#include <cstring>

#include "crossplan/encoding.h"
#include "crossplan/error.h"
#include "crossplan/gftm.h"
#include "crossplan/nn/grad_check.h"
#include "crossplan/nn/optim.h"
#include "test_util.h"

namespace crossplan {
namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<CorpusRecord> corpus(std::size_t n, std::uint64_t seed, const std::string& id = "synthetic",
                                 double noise = 0.02) {
  ScenarioConfig cfg;
  cfg.seed = seed;
  cfg.dataset_id = id;
  cfg.noise_std = noise;
  std::vector<CorpusRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(gen_scenario(cfg, i));
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

TEST(Gftm, OutputShapes) {
  GftmModel m(GftmConfig{}, 1);
  const CorpusRecord r = corpus(1, 2)[0];
  EXPECT_EQ(m.forward_prior(r.history).cols(), 64);
  const Matrix fut = m.forward_future(r.history);
  EXPECT_EQ(fut.rows(), 80);
  EXPECT_EQ(fut.cols(), 3);
  const GftmModel frozen = freeze_export(m);
  GftmModel f = frozen;
  EXPECT_EQ(f.forward_prior(r.history).cols(), 64);
  EXPECT_EQ(code_of([&] { f.forward_future(r.history); }), ErrorCode::kPhaseOrder);
}

TEST(Gftm, UnitHiddenMatchesHandArithmetic) {
  GftmConfig cfg;
  cfg.hidden = 1;
  cfg.head_hidden = 2;
  cfg.schema = Schema{3, 4, 0.1};
  GftmModel m(cfg, 3);
  Rng rng(4);
  for (nn::Parameter* p : m.encoder_params()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = rng.uniform(-1, 1);
  }
  Matrix x(3, 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);

  double h = 0.0, c = 0.0, g = 0.0;
  for (int t = 0; t < 3; ++t) {
    auto pre = [&](const nn::Parameter& w, const nn::Parameter& u, int gate, double state) {
      double s = 0.0;
      for (int k = 0; k < 5; ++k) s += x(t, k) * w.value(k, gate);
      return s + state * u.value(0, gate);
    };
    const auto& L = m.lstm;
    const double i = sig(pre(L.w, L.u, 0, h) + L.b.value(0, 0));
    const double f = sig(pre(L.w, L.u, 1, h) + L.b.value(0, 1));
    const double gg = std::tanh(pre(L.w, L.u, 2, h) + L.b.value(0, 2));
    const double o = sig(pre(L.w, L.u, 3, h) + L.b.value(0, 3));
    c = f * c + i * gg;
    h = o * std::tanh(c);

    const auto& G = m.gru;
    auto xin = [&](int gate) {
      double s = 0.0;
      for (int k = 0; k < 5; ++k) s += x(t, k) * G.w.value(k, gate);
      return s + G.b_in.value(0, gate);
    };
    const double z = sig(xin(0) + g * G.u.value(0, 0) + G.b_hid.value(0, 0));
    const double r = sig(xin(1) + g * G.u.value(0, 1) + G.b_hid.value(0, 1));
    const double n = std::tanh(xin(2) + r * (g * G.u.value(0, 2) + G.b_hid.value(0, 2)));
    g = (1 - z) * n + z * g;
  }
  const double expected = h * m.fusion.weight.value(0, 0) + g * m.fusion.weight.value(1, 0) + m.fusion.bias.value(0, 0);

  nn::Tape tape;
  std::vector<nn::Var> steps;
  for (int t = 0; t < 3; ++t) steps.push_back(tape.constant(x.row(t)));
  EXPECT_NEAR(m.prior(tape, steps).value()(0, 0), expected, 1e-12);
}

TEST(Gftm, GradCheckAtHiddenEight) {
  GftmConfig cfg;
  cfg.hidden = 8;
  cfg.head_hidden = 8;
  cfg.schema = Schema{5, 6, 0.1};
  GftmModel m(cfg, 5);
  std::vector<CorpusRecord> recs;
  ScenarioConfig sc;
  sc.schema = cfg.schema;
  for (int i = 0; i < 3; ++i) recs.push_back(gen_scenario(sc, i));
  std::vector<const Trajectory*> hs, fs;
  for (const auto& r : recs) {
    hs.push_back(&r.history);
    fs.push_back(&r.future);
  }
  const auto inputs = history_inputs(hs);
  const Matrix targets = future_targets(fs);
  const auto report = nn::grad_check(m.params(), [&](nn::Tape& t) {
    return plan_loss(m.predict_raw(t, as_constants(t, inputs)), targets);
  });
  EXPECT_LE(report.max_rel_error(), 1e-4);
  EXPECT_EQ(report.blocks.size(), m.params().size());
}

TEST(Gftm, FreezeExportKeepsPriorBitExact) {
  GftmModel m(GftmConfig{}, 6);
  const auto recs = corpus(5, 7);
  GftmModel a = freeze_export(m);
  GftmModel b = freeze_export(m);
  EXPECT_EQ(a.frozen_hash(), b.frozen_hash());
  EXPECT_EQ(a.frozen_hash(), a.current_hash());
  for (const auto& r : recs) {
    const RowVector p0 = m.forward_prior(r.history);
    const RowVector p1 = a.forward_prior(r.history);
    EXPECT_EQ(std::memcmp(p0.data(), p1.data(), sizeof(double) * p0.size()), 0);
  }
  EXPECT_EQ(code_of([&] { freeze_export(a); }), ErrorCode::kPhaseOrder);
}

TEST(Gftm, OptimizerCannotMoveFrozenModel) {
  GftmModel m = freeze_export(GftmModel(GftmConfig{}, 8));
  const std::string before = m.current_hash();
  for (nn::Parameter* p : m.params()) p->grad = Matrix::Ones(p->value.rows(), p->value.cols());
  nn::AdamState st;
  nn::adam_step(m.params(), st, {});
  EXPECT_EQ(m.current_hash(), before);
}

TEST(Gftm, CheckpointRoundTripAndTamperDetection) {
  GftmModel m = freeze_export(GftmModel(GftmConfig{}, 9));
  const auto text = nn::serialize_checkpoint(m.to_checkpoint());
  GftmModel back = GftmModel::from_checkpoint(nn::parse_checkpoint(text));
  EXPECT_EQ(back.mode(), GftmMode::kFrozen);
  EXPECT_EQ(back.current_hash(), m.frozen_hash());
  nn::Checkpoint ck = nn::parse_checkpoint(text);
  ck.tensors[0].value(0, 0) += 1e-9;
  EXPECT_EQ(code_of([&] { GftmModel::from_checkpoint(ck); }), ErrorCode::kChecksum);
}

TEST(GftmPretrain, SinglePairOverfits) {
  GftmConfig cfg;
  cfg.hidden = 16;
  GftmModel m(cfg, 10);
  const auto one = corpus(1, 11);
  TrainOptions opt;
  opt.epochs = 2000;
  opt.batch = 1;
  opt.lr = 2e-3;
  const TrainResult r = gftm_pretrain(m, one, one, opt);
  // One step per epoch; Adam at a fixed rate keeps bouncing around the
  // optimum afterwards, so look for the first time the loss gets there.
  double best = INFINITY;
  for (const EpochLog& e : r.epochs) best = std::min(best, e.val_loss);
  EXPECT_LT(best, 1e-3);
}

TEST(GftmPretrain, ConstantFutureReachesNoiseFloor) {
  // Stationary vehicles: the future stays at the last history pose.
  ScenarioConfig sc;
  sc.maneuver_mix = {1, 0, 0, 0};
  sc.noise_std = 0.01;
  sc.transition_prob = 0.0;
  std::vector<CorpusRecord> train, val;
  for (int i = 0; i < 200; ++i) train.push_back(gen_scenario(sc, i));
  for (int i = 200; i < 260; ++i) val.push_back(gen_scenario(sc, i));
  GftmConfig cfg;
  cfg.hidden = 16;
  GftmModel m(cfg, 12);
  TrainOptions opt;
  opt.epochs = 40;
  opt.batch = 32;
  const TrainResult r = gftm_pretrain(m, train, val, opt);
  // Noise of 1 cm per axis sets the floor; allow a few times it.
  EXPECT_LT(r.epochs.back().val_loss, 0.01);
}

TEST(GftmPretrain, ValidationLossDropsAcrossSeeds) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto train = corpus(600, 100 + seed);
    const auto val = corpus(150, 200 + seed);
    GftmModel m(GftmConfig{32, 64, Schema{}}, seed);
    TrainOptions opt;
    opt.epochs = 3;
    opt.seed = seed;
    const TrainResult r = gftm_pretrain(m, train, val, opt);
    EXPECT_LT(r.epochs.back().val_loss, r.initial_val_loss) << "seed " << seed;
  }
}

TEST(GftmPretrain, DeterministicAndRejectsEmpty) {
  auto run = [] {
    GftmModel m(GftmConfig{16, 32, Schema{}}, 13);
    TrainOptions opt;
    opt.epochs = 2;
    opt.seed = 13;
    gftm_pretrain(m, corpus(100, 14), corpus(20, 15), opt);
    return m.current_hash();
  };
  EXPECT_EQ(run(), run());
  GftmModel m(GftmConfig{}, 1);
  EXPECT_EQ(code_of([&] { gftm_pretrain(m, {}, corpus(5, 1), TrainOptions{}); }), ErrorCode::kDegenerateInput);
}

TEST(GftmPretrain, CrossSourceLossWithinTwiceOfSource) {
  const auto train = corpus(800, 21, "src_a", 0.03);
  const auto val_a = corpus(200, 22, "src_a", 0.03);
  const auto val_b = corpus(200, 23, "src_b", 0.05);
  GftmModel m(GftmConfig{32, 64, Schema{}}, 24);
  TrainOptions opt;
  opt.epochs = 5;
  gftm_pretrain(m, train, val_a, opt);
  EXPECT_LE(gftm_validation_loss(m, val_b), 2.0 * gftm_validation_loss(m, val_a));
}

}  // namespace
}  // namespace crossplan
