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

#include <cstring>

#include "crossplan/error.h"
#include "crossplan/nn/checkpoint.h"
#include "crossplan/nn/optim.h"
#include "crossplan/s2d.h"

namespace crossplan {
namespace {

Matrix random_prior(Rng& rng, Eigen::Index rows, Eigen::Index dim) {
  Matrix m(rows, dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-2, 2);
  return m;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

TEST(S2d, ZeroInitMaskZeroesPriorInMainTraining) {
  S2dMask mask(16, 1);
  mask.fc.weight.value.setZero();
  mask.fc.bias.value.setZero();
  Rng rng(2);
  const Matrix prior = random_prior(rng, 5, 16);
  const Matrix out = s2d_apply(prior, mask);
  EXPECT_TRUE(out.isZero(0.0));
}

TEST(S2d, DefaultInitAlsoStartsClosed) {
  S2dMask mask(64, 3);
  Rng rng(4);
  EXPECT_TRUE(s2d_apply(random_prior(rng, 20, 64), mask).isZero(0.0));
}

TEST(S2d, InactivePhasesAreBitExactIdentity) {
  S2dMask mask(16, 5);
  Rng rng(6);
  for (S2dPhase phase : {S2dPhase::kInference, S2dPhase::kHftdnTraining}) {
    s2d_set_phase(mask, phase);
    const Matrix prior = random_prior(rng, 4, 16);
    EXPECT_TRUE(bit_equal(s2d_apply(prior, mask), prior)) << s2d_phase_name(phase);
  }
}

TEST(S2d, SaturatedBiasPassesEverything) {
  S2dMask mask(16, 7);
  mask.fc.bias.value.setConstant(10.0);
  mask.fc.weight.value.setZero();
  Rng rng(8);
  const Matrix prior = random_prior(rng, 4, 16);
  EXPECT_TRUE(bit_equal(s2d_apply(prior, mask), prior));
}

TEST(S2d, OutputIsBinaryMaskOfInput) {
  S2dMask mask(32, 9);
  Rng rng(10);
  for (Eigen::Index i = 0; i < mask.fc.weight.value.size(); ++i) mask.fc.weight.value.data()[i] = rng.uniform(-1, 1);
  const Matrix prior = random_prior(rng, 10, 32);
  const Matrix out = s2d_apply(prior, mask);
  int kept = 0, dropped = 0;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double o = out.data()[i];
    EXPECT_TRUE(o == 0.0 || o == prior.data()[i]);
    (o == 0.0 ? dropped : kept) += 1;
  }
  EXPECT_GT(kept, 0);
  EXPECT_GT(dropped, 0);
}

TEST(S2d, PhaseRoundTripKeepsParameters) {
  S2dMask mask(8, 11);
  nn::ParamList ps;
  mask.append_params(ps);
  const std::string before = nn::parameters_hash(ps);
  for (S2dPhase p : {S2dPhase::kInference, S2dPhase::kHftdnTraining, S2dPhase::kMainTraining}) s2d_set_phase(mask, p);
  EXPECT_EQ(mask.phase(), S2dPhase::kMainTraining);
  EXPECT_EQ(nn::parameters_hash(ps), before);
  s2d_set_phase(mask, S2dPhase::kMainTraining);
  mask.fc.bias.value.setConstant(10.0);
  mask.fc.weight.value.setZero();
  Rng rng(12);
  const Matrix prior = random_prior(rng, 2, 8);
  EXPECT_TRUE(bit_equal(s2d_apply(prior, mask), prior));
}

TEST(S2d, StraightThroughGradientReachesTheta) {
  S2dMask mask(8, 13);
  nn::ParamList ps;
  mask.append_params(ps);
  Rng rng(14);
  nn::Parameter prior{"prior", random_prior(rng, 6, 8), Matrix(), false};
  const Matrix prior_before = prior.value;
  const Matrix theta_before = mask.theta.value;
  nn::Tape t;
  const nn::Var out = mask.apply(t, t.param(prior));
  ASSERT_TRUE(out.value().isZero(0.0));
  Matrix w(8, 1);
  for (int i = 0; i < 8; ++i) w(i, 0) = 1.0 + i;
  t.backward(nn::mean_rows(nn::matmul(out, t.constant(w))));
  ASSERT_GT(mask.theta.grad.size(), 0);
  EXPECT_GT(mask.theta.grad.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(prior.grad.size(), 0);
  nn::AdamState st;
  nn::adam_step(ps, st, {});
  EXPECT_NE(mask.theta.value, theta_before);
  EXPECT_TRUE(bit_equal(prior.value, prior_before));
}

TEST(S2d, RejectsBadArguments) {
  EXPECT_THROW(S2dMask(0, 1), Error);
  EXPECT_THROW(S2dMask(4, 1, 1.0), Error);
  EXPECT_THROW(S2dMask(4, 1, 0.0), Error);
  S2dMask mask(4, 1);
  EXPECT_THROW(s2d_apply(Matrix::Zero(2, 5), mask), Error);
}

}  // namespace
}  // namespace crossplan
