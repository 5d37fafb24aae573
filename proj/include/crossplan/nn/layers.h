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

#ifndef CROSSPLAN_NN_LAYERS_H_
#define CROSSPLAN_NN_LAYERS_H_

#include <string>
#include <vector>

#include "crossplan/nn/tape.h"
#include "crossplan/rng.h"

namespace crossplan::nn {

using ParamList = std::vector<Parameter*>;

/// Uniform(-l, l) with l = sqrt(6 / (rows + cols)), scaled by `gain`.
Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng, double gain = 1.0);

/// y = x W + b with W: in x out.
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out, Rng& rng, double gain = 1.0);

  Var operator()(Tape& tape, Var x);
  void append_params(ParamList& out);
  void set_trainable(bool trainable);

  Parameter weight;
  Parameter bias;
};

/// Linear layers with ReLU between them (none after the last).
class Mlp {
 public:
  Mlp() = default;
  /// sizes = {in, hidden..., out}
  Mlp(const std::string& name, const std::vector<int>& sizes, Rng& rng);

  Var operator()(Tape& tape, Var x);
  void append_params(ParamList& out);
  void set_trainable(bool trainable);

  std::vector<Linear> layers;
};

/// Single-layer LSTM; the forget-gate bias starts at 1.
class Lstm {
 public:
  Lstm() = default;
  Lstm(const std::string& name, int in, int hidden, Rng& rng);

  /// Runs over `steps` (each batch x in) from a zero state and returns the
  /// final hidden state (batch x hidden).
  Var encode(Tape& tape, const std::vector<Var>& steps);
  void append_params(ParamList& out);
  void set_trainable(bool trainable);
  int hidden() const { return hidden_; }

  Parameter w;  // in x 4H
  Parameter u;  // H x 4H
  Parameter b;  // 1 x 4H

 private:
  int hidden_ = 0;
};

class Gru {
 public:
  Gru() = default;
  Gru(const std::string& name, int in, int hidden, Rng& rng);

  Var encode(Tape& tape, const std::vector<Var>& steps);
  void append_params(ParamList& out);
  void set_trainable(bool trainable);
  int hidden() const { return hidden_; }

  Parameter w;      // in x 3H
  Parameter u;      // H x 3H
  Parameter b_in;   // 1 x 3H
  Parameter b_hid;  // 1 x 3H

 private:
  int hidden_ = 0;
};

void set_trainable(const ParamList& params, bool trainable);
void zero_grads(const ParamList& params);

}  // namespace crossplan::nn

#endif  // CROSSPLAN_NN_LAYERS_H_
