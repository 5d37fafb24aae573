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

#include "crossplan/s2d.h"

#include <cmath>

#include "crossplan/error.h"

namespace crossplan {

std::string_view s2d_phase_name(S2dPhase phase) {
  switch (phase) {
    case S2dPhase::kMainTraining:
      return "main_training";
    case S2dPhase::kHftdnTraining:
      return "hftdn_training";
    case S2dPhase::kInference:
      return "inference";
  }
  return "unknown";
}

S2dMask::S2dMask(int dim, std::uint64_t seed, double epsilon, bool start_open) : epsilon_(epsilon) {
  require(dim > 0, ErrorCode::kValidation, "s2d dimension must be positive");
  require(epsilon > 0.0 && epsilon < 1.0, ErrorCode::kValidation, "s2d epsilon must lie in (0, 1)");
  Rng rng(derive_seed({seed, 0x533244u}));
  theta = nn::Parameter{"s2d.theta", Matrix::Zero(1, dim), Matrix(), true};
  fc = nn::Linear("s2d.fc", dim, dim, rng, 0.1);
  if (start_open) {
    const double p = 0.5 * (1.0 + epsilon);
    fc.bias.value.setConstant(std::log(p / (1.0 - p)));
  }
}

nn::Var S2dMask::apply(nn::Tape& tape, nn::Var prior) {
  require(prior.cols() == dim(), ErrorCode::kValidation, "prior dimension does not match the s2d mask");
  if (phase_ != S2dPhase::kMainTraining) return prior;
  nn::Var p = nn::sigmoid(fc(tape, nn::add_row(prior, tape.param(theta))));
  return nn::mul(prior, nn::threshold_straight_through(p, epsilon_));
}

Matrix S2dMask::apply_values(const Matrix& prior) {
  nn::Tape tape;
  return apply(tape, tape.constant(prior)).value();
}

void S2dMask::append_params(nn::ParamList& out) {
  out.push_back(&theta);
  fc.append_params(out);
}

Matrix s2d_apply(const Matrix& prior, S2dMask& mask) { return mask.apply_values(prior); }

void s2d_set_phase(S2dMask& mask, S2dPhase phase) { mask.set_phase(phase); }

}  // namespace crossplan
