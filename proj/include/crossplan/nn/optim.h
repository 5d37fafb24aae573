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

#ifndef CROSSPLAN_NN_OPTIM_H_
#define CROSSPLAN_NN_OPTIM_H_

#include <cstdint>
#include <vector>

#include "crossplan/nn/layers.h"

namespace crossplan::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moments per parameter, aligned with the ParamList given to adam_step.
struct AdamState {
  std::int64_t step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

/// One bias-corrected Adam update. Frozen parameters and parameters without a
/// gradient buffer are skipped entirely. Does not clear gradients.
void adam_step(const ParamList& params, AdamState& state, const AdamOptions& options);

}  // namespace crossplan::nn

#endif  // CROSSPLAN_NN_OPTIM_H_
