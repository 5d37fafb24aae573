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

#include "crossplan/nn/layers.h"

#include <cmath>

#include "crossplan/error.h"

namespace crossplan::nn {

Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng, double gain) {
  const double limit = gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
  }
  return m;
}

Linear::Linear(const std::string& name, int in, int out, Rng& rng, double gain) {
  require(in > 0 && out > 0, ErrorCode::kValidation, "linear layer sizes must be positive");
  weight = Parameter{name + ".weight", xavier_uniform(in, out, rng, gain), Matrix(), true};
  bias = Parameter{name + ".bias", Matrix::Zero(1, out), Matrix(), true};
}

Var Linear::operator()(Tape& tape, Var x) { return add_row(matmul(x, tape.param(weight)), tape.param(bias)); }

void Linear::append_params(ParamList& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

void Linear::set_trainable(bool trainable) {
  weight.trainable = trainable;
  bias.trainable = trainable;
}

Mlp::Mlp(const std::string& name, const std::vector<int>& sizes, Rng& rng) {
  require(sizes.size() >= 2, ErrorCode::kValidation, "mlp needs at least input and output sizes");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    layers.emplace_back(name + "." + std::to_string(i), sizes[i], sizes[i + 1], rng);
  }
}

Var Mlp::operator()(Tape& tape, Var x) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i](tape, x);
    if (i + 1 < layers.size()) x = relu(x);
  }
  return x;
}

void Mlp::append_params(ParamList& out) {
  for (Linear& l : layers) l.append_params(out);
}

void Mlp::set_trainable(bool trainable) {
  for (Linear& l : layers) l.set_trainable(trainable);
}

Lstm::Lstm(const std::string& name, int in, int hidden, Rng& rng) : hidden_(hidden) {
  require(in > 0 && hidden > 0, ErrorCode::kValidation, "lstm sizes must be positive");
  w = Parameter{name + ".w", xavier_uniform(in, 4 * hidden, rng), Matrix(), true};
  u = Parameter{name + ".u", xavier_uniform(hidden, 4 * hidden, rng), Matrix(), true};
  Matrix bias = Matrix::Zero(1, 4 * hidden);
  bias.middleCols(hidden, hidden).setOnes();
  b = Parameter{name + ".b", std::move(bias), Matrix(), true};
}

Var Lstm::encode(Tape& tape, const std::vector<Var>& steps) {
  require(!steps.empty(), ErrorCode::kValidation, "lstm needs at least one step");
  Var W = tape.param(w), U = tape.param(u), B = tape.param(b);
  Var hc = tape.constant(Matrix::Zero(steps[0].rows(), 2 * hidden_));
  for (const Var& x : steps) hc = lstm_step(x, hc, W, U, B);
  return slice_cols(hc, 0, hidden_);
}

void Lstm::append_params(ParamList& out) {
  out.push_back(&w);
  out.push_back(&u);
  out.push_back(&b);
}

void Lstm::set_trainable(bool trainable) {
  w.trainable = trainable;
  u.trainable = trainable;
  b.trainable = trainable;
}

Gru::Gru(const std::string& name, int in, int hidden, Rng& rng) : hidden_(hidden) {
  require(in > 0 && hidden > 0, ErrorCode::kValidation, "gru sizes must be positive");
  w = Parameter{name + ".w", xavier_uniform(in, 3 * hidden, rng), Matrix(), true};
  u = Parameter{name + ".u", xavier_uniform(hidden, 3 * hidden, rng), Matrix(), true};
  b_in = Parameter{name + ".b_in", Matrix::Zero(1, 3 * hidden), Matrix(), true};
  b_hid = Parameter{name + ".b_hid", Matrix::Zero(1, 3 * hidden), Matrix(), true};
}

Var Gru::encode(Tape& tape, const std::vector<Var>& steps) {
  require(!steps.empty(), ErrorCode::kValidation, "gru needs at least one step");
  Var W = tape.param(w), U = tape.param(u), Bi = tape.param(b_in), Bh = tape.param(b_hid);
  Var h = tape.constant(Matrix::Zero(steps[0].rows(), hidden_));
  for (const Var& x : steps) h = gru_step(x, h, W, U, Bi, Bh);
  return h;
}

void Gru::append_params(ParamList& out) {
  out.push_back(&w);
  out.push_back(&u);
  out.push_back(&b_in);
  out.push_back(&b_hid);
}

void Gru::set_trainable(bool trainable) {
  w.trainable = trainable;
  u.trainable = trainable;
  b_in.trainable = trainable;
  b_hid.trainable = trainable;
}

void set_trainable(const ParamList& params, bool trainable) {
  for (Parameter* p : params) p->trainable = trainable;
}

void zero_grads(const ParamList& params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace crossplan::nn
