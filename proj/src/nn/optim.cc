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

#include "crossplan/nn/optim.h"

#include <cmath>

#include "crossplan/error.h"

namespace crossplan::nn {

void adam_step(const ParamList& params, AdamState& state, const AdamOptions& options) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
  }
  require(state.m.size() == params.size(), ErrorCode::kValidation, "adam state does not match parameter list");
  ++state.step;
  const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (!p.trainable || p.grad.size() == 0) continue;
    require(p.grad.rows() == p.value.rows() && p.grad.cols() == p.value.cols(), ErrorCode::kInternal,
            "gradient shape differs from " + p.name);
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    if (m.size() == 0) {
      m = Matrix::Zero(p.value.rows(), p.value.cols());
      v = Matrix::Zero(p.value.rows(), p.value.cols());
    }
    m = options.beta1 * m + (1.0 - options.beta1) * p.grad;
    v = options.beta2 * v + (1.0 - options.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= options.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + options.eps);
  }
}

}  // namespace crossplan::nn
