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

#ifndef CROSSPLAN_NN_GRAD_CHECK_H_
#define CROSSPLAN_NN_GRAD_CHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "crossplan/nn/layers.h"

namespace crossplan::nn {

struct GradCheckBlock {
  std::string name;
  std::size_t count = 0;
  double max_abs_error = 0.0;
  /// max |analytic - numeric| / max(max |analytic|, max |numeric|, 1e-6)
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double max_rel_error() const;
  bool passed(double tolerance) const { return max_rel_error() <= tolerance; }
};

/// Builds a scalar loss on a fresh tape.
using LossFn = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients of `loss` against central differences
/// with the given step for every element of every parameter in `params`.
/// Inputs to check are passed as parameters too. Parameter values are
/// restored afterwards.
GradCheckReport grad_check(const ParamList& params, const LossFn& loss, double step = 1e-5);

}  // namespace crossplan::nn

#endif  // CROSSPLAN_NN_GRAD_CHECK_H_
