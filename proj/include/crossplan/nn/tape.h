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

#ifndef CROSSPLAN_NN_TAPE_H_
#define CROSSPLAN_NN_TAPE_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "crossplan/matrix.h"

namespace crossplan::nn {

/// A named tensor. Frozen parameters (trainable == false) never receive
/// gradient and are skipped by optimizers.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;  // empty until a backward pass touches it
  bool trainable = true;

  std::vector<Eigen::Index> shape() const { return {value.rows(), value.cols()}; }
  void zero_grad() { grad.resize(0, 0); }
};

class Tape;

/// Handle to a node on a Tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recording of a computation. Nodes whose inputs need no
/// gradient do not record a backward function, so frozen sub-graphs cost a
/// forward pass only.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf for a parameter; repeated calls return the same node.
  Var param(Parameter& p);

  /// Seeds d(loss)/d(loss) = 1 and propagates; adds leaf gradients into the
  /// trainable parameters' grad buffers.
  void backward(Var loss);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Records an op. `backward` is dropped when no input needs gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Matrix value, const std::vector<Var>& inputs, Backward backward);

  /// Adds `g` into the gradient of `v` if it requires one.
  template <typename Expr>
  void accumulate(Var v, const Expr& g) {
    Node& n = nodes_[v.id_];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
    Parameter* param = nullptr;
  };
  std::deque<Node> nodes_;
  std::unordered_map<Parameter*, std::size_t> param_nodes_;
};

// Elementary differentiable ops. Shapes are checked and mismatches throw
// Error(kValidation).
Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
/// Adds a 1 x c row to every row of `a`.
Var add_row(Var a, Var row);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var gather_rows(Var a, const std::vector<Eigen::Index>& rows);
Var softmax_rows(Var a);
/// Column-wise mean over rows -> 1 x c.
Var mean_rows(Var a);
/// Column-wise max over rows -> 1 x c. The gradient goes to the first row
/// attaining the maximum.
Var max_rows(Var a);

/// Single-head scaled dot-product attention softmax(q k^T / sqrt(d)) v.
Var softmax_attention(Var q, Var k, Var v);

/// Contiguous row range.
struct Segment {
  Eigen::Index start = 0;
  Eigen::Index count = 0;
};

/// Batched attention over variable-size groups: for each i, the rows
/// q_segments[i] of q attend over the rows kv_segments[i] of k and v. Output
/// rows follow q; rows outside every query segment are zero.
Var segment_attention(Var q, Var k, Var v, const std::vector<Segment>& q_segments,
                      const std::vector<Segment>& kv_segments);

/// Forward: 1 where p > threshold, else 0. Backward passes the gradient
/// through unchanged (straight-through estimator).
Var threshold_straight_through(Var p, double threshold);

/// Fused LSTM cell on the packed state [h | c]. W: in x 4H, U: H x 4H,
/// b: 1 x 4H with gate order input, forget, cell, output.
Var lstm_step(Var x, Var hc, Var W, Var U, Var b);
/// Fused GRU cell. W: in x 3H, U: H x 3H, b_in/b_hid: 1 x 3H with gate order
/// update, reset, candidate; n = tanh(x W_n + b_in_n + r * (h U_n + b_hid_n)).
Var gru_step(Var x, Var h, Var W, Var U, Var b_in, Var b_hid);

/// Mean over elements of 0.5 e^2 (|e| <= delta) or delta (|e| - 0.5 delta).
Var huber_loss(Var pred, const Matrix& target, double delta = 1.0);
/// Mean over elements of 0.5 (logvar + (target - mean)^2 exp(-logvar) + log 2 pi).
Var gaussian_nll(Var mean, Var logvar, const Matrix& target);

}  // namespace crossplan::nn

#endif  // CROSSPLAN_NN_TAPE_H_
