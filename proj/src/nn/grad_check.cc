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

#include "crossplan/nn/grad_check.h"

#include <algorithm>
#include <cmath>

namespace crossplan::nn {
namespace {

double eval_loss(const LossFn& loss) {
  Tape tape;
  return loss(tape).value()(0, 0);
}

}  // namespace

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const GradCheckBlock& b : blocks) worst = std::max(worst, b.max_rel_error);
  return worst;
}

GradCheckReport grad_check(const ParamList& params, const LossFn& loss, double step) {
  std::vector<bool> trainable;
  for (Parameter* p : params) {
    trainable.push_back(p->trainable);
    p->trainable = true;
    p->zero_grad();
  }
  {
    Tape tape;
    tape.backward(loss(tape));
  }

  GradCheckReport report;
  for (Parameter* p : params) {
    const Matrix analytic = p->grad.size() ? p->grad : Matrix::Zero(p->value.rows(), p->value.cols());
    Matrix numeric(p->value.rows(), p->value.cols());
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& x = p->value.data()[i];
      const double saved = x;
      x = saved + step;
      const double plus = eval_loss(loss);
      x = saved - step;
      const double minus = eval_loss(loss);
      x = saved;
      numeric.data()[i] = (plus - minus) / (2.0 * step);
    }
    GradCheckBlock block{p->name, static_cast<std::size_t>(p->value.size()), 0.0, 0.0};
    if (block.count > 0) {
      block.max_abs_error = (analytic - numeric).cwiseAbs().maxCoeff();
      const double magnitude =
          std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-6});
      block.max_rel_error = block.max_abs_error / magnitude;
    }
    report.blocks.push_back(block);
  }

  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i]->zero_grad();
    params[i]->trainable = trainable[i];
  }
  return report;
}

}  // namespace crossplan::nn
