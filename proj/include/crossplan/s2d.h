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

#ifndef CROSSPLAN_S2D_H_
#define CROSSPLAN_S2D_H_

#include <cstdint>
#include <string_view>

#include "crossplan/nn/layers.h"

namespace crossplan {

enum class S2dPhase { kMainTraining, kHftdnTraining, kInference };

std::string_view s2d_phase_name(S2dPhase phase);

inline constexpr double kDefaultEpsilon = 0.7;

/// Adaptive binary mask over a prior vector. In MainTraining the output is
/// prior * [sigmoid(fc(prior + theta)) > epsilon] with a straight-through
/// gradient across the threshold; in the other phases it is the prior itself.
class S2dMask {
 public:
  S2dMask() = default;
  /// theta starts at zero and the fc weight small and random. The fc bias is
  /// zero (every element masked) unless `start_open`, which sets it so that
  /// p sits halfway between epsilon and 1 and every element passes.
  S2dMask(int dim, std::uint64_t seed, double epsilon = kDefaultEpsilon, bool start_open = false);

  /// prior: batch x dim. Outside MainTraining returns `prior` unchanged.
  nn::Var apply(nn::Tape& tape, nn::Var prior);
  Matrix apply_values(const Matrix& prior);

  void set_phase(S2dPhase phase) { phase_ = phase; }
  S2dPhase phase() const { return phase_; }
  double epsilon() const { return epsilon_; }
  int dim() const { return static_cast<int>(theta.value.cols()); }

  void append_params(nn::ParamList& out);

  nn::Parameter theta;  // 1 x dim
  nn::Linear fc;

 private:
  double epsilon_ = kDefaultEpsilon;
  S2dPhase phase_ = S2dPhase::kMainTraining;
};

Matrix s2d_apply(const Matrix& prior, S2dMask& mask);
void s2d_set_phase(S2dMask& mask, S2dPhase phase);

}  // namespace crossplan

#endif  // CROSSPLAN_S2D_H_
