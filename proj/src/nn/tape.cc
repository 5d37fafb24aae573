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

#include "crossplan/nn/tape.h"

#include <cmath>
#include <numbers>

#include "crossplan/error.h"

namespace crossplan::nn {
namespace {

void check(bool ok, const char* what) {
  if (!ok) fail(ErrorCode::kValidation, std::string("shape mismatch in ") + what);
}

Matrix sigmoid_of(const Matrix& m) { return (1.0 + (-m.array()).exp()).inverse().matrix(); }

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), false, nullptr, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  nodes_.push_back(Node{p.value, Matrix(), p.trainable, nullptr, &p});
  param_nodes_[&p] = nodes_.size() - 1;
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  for (const Var& v : inputs) needs = needs || nodes_[v.id_].requires_grad;
  nodes_.push_back(Node{std::move(value), Matrix(), needs, needs ? std::move(backward) : nullptr, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, Backward backward) {
  bool needs = false;
  for (const Var& v : inputs) needs = needs || nodes_[v.id_].requires_grad;
  nodes_.push_back(Node{std::move(value), Matrix(), needs, needs ? std::move(backward) : nullptr, nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  require(loss.tape_ == this, ErrorCode::kInternal, "loss belongs to another tape");
  Node& root = nodes_[loss.id_];
  check(root.value.rows() == 1 && root.value.cols() == 1, "backward (loss must be 1x1)");
  if (!root.requires_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) {
      n.backward(*this, n.grad);
    } else if (n.param != nullptr && n.param->trainable) {
      if (n.param->grad.size() == 0) {
        n.param->grad = n.grad;
      } else {
        n.param->grad += n.grad;
      }
    }
  }
}

Var matmul(Var a, Var b) {
  check(a.cols() == b.rows(), "matmul");
  Tape& t = *a.tape();
  return t.record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g * b.value().transpose());
    if (b.requires_grad()) t.accumulate(b, a.value().transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  check(a.cols() == b.cols(), "matmul_nt");
  Tape& t = *a.tape();
  return t.record(a.value() * b.value().transpose(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g * b.value());
    if (b.requires_grad()) t.accumulate(b, g.transpose() * a.value());
  });
}

Var add(Var a, Var b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "add");
  return a.tape()->record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var add_row(Var a, Var row) {
  check(row.rows() == 1 && row.cols() == a.cols(), "add_row");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return a.tape()->record(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (row.requires_grad()) t.accumulate(row, g.colwise().sum());
  });
}

Var sub(Var a, Var b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "sub");
  return a.tape()->record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (b.requires_grad()) t.accumulate(b, -g);
  });
}

Var mul(Var a, Var b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "mul");
  return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g.cwiseProduct(b.value()));
    if (b.requires_grad()) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var scale(Var a, double s) {
  return a.tape()->record(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var sigmoid(Var a) {
  Matrix y = sigmoid_of(a.value());
  return a.tape()->record(y, {a}, [a, y](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
  });
}

Var tanh(Var a) {
  Matrix y = a.value().array().tanh().matrix();
  return a.tape()->record(y, {a}, [a, y](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var relu(Var a) {
  Matrix y = a.value().cwiseMax(0.0);
  return a.tape()->record(std::move(y), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, (a.value().array() > 0.0).select(g, 0.0).matrix());
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  check(!parts.empty(), "concat_cols");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    check(p.rows() == rows, "concat_cols");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return parts[0].tape()->record(std::move(out), parts, [parts](Tape& t, const Matrix& g) {
    Eigen::Index c = 0;
    for (const Var& p : parts) {
      if (p.requires_grad()) t.accumulate(p, g.middleCols(c, p.cols()));
      c += p.cols();
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  check(!parts.empty(), "concat_rows");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    check(p.cols() == cols, "concat_rows");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return parts[0].tape()->record(std::move(out), parts, [parts](Tape& t, const Matrix& g) {
    Eigen::Index r = 0;
    for (const Var& p : parts) {
      if (p.requires_grad()) t.accumulate(p, g.middleRows(r, p.rows()));
      r += p.rows();
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  check(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols");
  return a.tape()->record(a.value().middleCols(start, count), {a}, [a, start, count](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.middleCols(start, count) = g;
    t.accumulate(a, full);
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  check(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows");
  return a.tape()->record(a.value().middleRows(start, count), {a}, [a, start, count](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.middleRows(start, count) = g;
    t.accumulate(a, full);
  });
}

Var gather_rows(Var a, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    check(rows[i] >= 0 && rows[i] < a.rows(), "gather_rows");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  return a.tape()->record(std::move(out), {a}, [a, rows](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) full.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
    t.accumulate(a, full);
  });
}

Var softmax_rows(Var a) {
  Matrix y = a.value();
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return a.tape()->record(y, {a}, [a, y](Tape& t, const Matrix& g) {
    const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
    Matrix dx = g;
    dx.colwise() -= dots;
    t.accumulate(a, dx.cwiseProduct(y));
  });
}

Var mean_rows(Var a) {
  check(a.rows() > 0, "mean_rows");
  const double n = static_cast<double>(a.rows());
  return a.tape()->record(a.value().colwise().sum() / n, {a}, [a, n](Tape& t, const Matrix& g) {
    Matrix full(a.rows(), a.cols());
    full.rowwise() = g.row(0) / n;
    t.accumulate(a, full);
  });
}

Var max_rows(Var a) {
  check(a.rows() > 0, "max_rows");
  const Matrix& v = a.value();
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(v.cols()), 0);
  Matrix out(1, v.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < v.rows(); ++r) {
      if (v(r, c) > v(best, c)) best = r;
    }
    arg[static_cast<std::size_t>(c)] = best;
    out(0, c) = v(best, c);
  }
  return a.tape()->record(std::move(out), {a}, [a, arg](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    for (Eigen::Index c = 0; c < a.cols(); ++c) full(arg[static_cast<std::size_t>(c)], c) = g(0, c);
    t.accumulate(a, full);
  });
}

Var softmax_attention(Var q, Var k, Var v) {
  check(q.cols() == k.cols() && k.rows() == v.rows(), "softmax_attention");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  return matmul(softmax_rows(scale(matmul_nt(q, k), inv_sqrt_d)), v);
}

Var segment_attention(Var q, Var k, Var v, const std::vector<Segment>& q_segments,
                      const std::vector<Segment>& kv_segments) {
  check(q.cols() == k.cols() && k.rows() == v.rows() && q_segments.size() == kv_segments.size(),
        "segment_attention");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  const Matrix& qv = q.value();
  const Matrix& kv = k.value();
  const Matrix& vv = v.value();
  Matrix out = Matrix::Zero(q.rows(), v.cols());
  std::vector<Matrix> weights(q_segments.size());
  for (std::size_t s = 0; s < q_segments.size(); ++s) {
    const Segment qs = q_segments[s], ks = kv_segments[s];
    check(qs.start >= 0 && qs.start + qs.count <= q.rows() && ks.start >= 0 && ks.start + ks.count <= k.rows() &&
              (qs.count == 0 || ks.count > 0),
          "segment_attention");
    if (qs.count == 0) continue;
    Matrix w = qv.middleRows(qs.start, qs.count) * kv.middleRows(ks.start, ks.count).transpose() * inv_sqrt_d;
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      const double m = w.row(r).maxCoeff();
      w.row(r) = (w.row(r).array() - m).exp().matrix();
      w.row(r) /= w.row(r).sum();
    }
    out.middleRows(qs.start, qs.count) = w * vv.middleRows(ks.start, ks.count);
    weights[s] = std::move(w);
  }
  return q.tape()->record(
      std::move(out), {q, k, v},
      [q, k, v, q_segments, kv_segments, weights = std::move(weights), inv_sqrt_d](Tape& t, const Matrix& g) {
        Matrix dq = Matrix::Zero(q.rows(), q.cols());
        Matrix dk = Matrix::Zero(k.rows(), k.cols());
        Matrix dv = Matrix::Zero(v.rows(), v.cols());
        for (std::size_t s = 0; s < q_segments.size(); ++s) {
          const Segment qs = q_segments[s], ks = kv_segments[s];
          if (qs.count == 0) continue;
          const Matrix& w = weights[s];
          const auto go = g.middleRows(qs.start, qs.count);
          dv.middleRows(ks.start, ks.count).noalias() += w.transpose() * go;
          Matrix dw = go * v.value().middleRows(ks.start, ks.count).transpose();
          const Eigen::VectorXd dots = dw.cwiseProduct(w).rowwise().sum();
          dw.colwise() -= dots;
          dw = dw.cwiseProduct(w) * inv_sqrt_d;
          dq.middleRows(qs.start, qs.count).noalias() += dw * k.value().middleRows(ks.start, ks.count);
          dk.middleRows(ks.start, ks.count).noalias() += dw.transpose() * q.value().middleRows(qs.start, qs.count);
        }
        if (q.requires_grad()) t.accumulate(q, dq);
        if (k.requires_grad()) t.accumulate(k, dk);
        if (v.requires_grad()) t.accumulate(v, dv);
      });
}

Var threshold_straight_through(Var p, double threshold) {
  Matrix m = (p.value().array() > threshold).cast<double>().matrix();
  return p.tape()->record(std::move(m), {p}, [p](Tape& t, const Matrix& g) { t.accumulate(p, g); });
}

Var lstm_step(Var x, Var hc, Var W, Var U, Var b) {
  const Eigen::Index H = U.rows();
  check(hc.cols() == 2 * H && x.rows() == hc.rows() && W.rows() == x.cols() && W.cols() == 4 * H &&
            U.cols() == 4 * H && b.rows() == 1 && b.cols() == 4 * H,
        "lstm_step");
  const Matrix& hcv = hc.value();
  Matrix pre = x.value() * W.value();
  pre.noalias() += hcv.leftCols(H) * U.value();
  pre.rowwise() += b.value().row(0);

  Matrix gates(pre.rows(), 4 * H);
  gates.leftCols(2 * H) = sigmoid_of(pre.leftCols(2 * H));
  gates.middleCols(2 * H, H) = pre.middleCols(2 * H, H).array().tanh().matrix();
  gates.rightCols(H) = sigmoid_of(pre.rightCols(H));

  Matrix out(pre.rows(), 2 * H);
  out.rightCols(H) = gates.middleCols(H, H).cwiseProduct(hcv.rightCols(H)) +
                     gates.leftCols(H).cwiseProduct(gates.middleCols(2 * H, H));
  Matrix tc = out.rightCols(H).array().tanh().matrix();
  out.leftCols(H) = gates.rightCols(H).cwiseProduct(tc);

  return x.tape()->record(
      std::move(out), {x, hc, W, U, b},
      [x, hc, W, U, b, H, gates = std::move(gates), tc = std::move(tc)](Tape& t, const Matrix& g) {
        const auto i = gates.leftCols(H).array();
        const auto f = gates.middleCols(H, H).array();
        const auto gg = gates.middleCols(2 * H, H).array();
        const auto o = gates.rightCols(H).array();
        const auto dh = g.leftCols(H).array();
        const Eigen::ArrayXXd dc = g.rightCols(H).array() + dh * o * (1.0 - tc.array().square());

        Matrix dpre(g.rows(), 4 * H);
        dpre.leftCols(H) = (dc * gg * i * (1.0 - i)).matrix();
        dpre.middleCols(H, H) = (dc * hc.value().rightCols(H).array() * f * (1.0 - f)).matrix();
        dpre.middleCols(2 * H, H) = (dc * i * (1.0 - gg.square())).matrix();
        dpre.rightCols(H) = (dh * tc.array() * o * (1.0 - o)).matrix();

        if (W.requires_grad()) t.accumulate(W, x.value().transpose() * dpre);
        if (U.requires_grad()) t.accumulate(U, hc.value().leftCols(H).transpose() * dpre);
        if (b.requires_grad()) t.accumulate(b, dpre.colwise().sum());
        if (x.requires_grad()) t.accumulate(x, dpre * W.value().transpose());
        if (hc.requires_grad()) {
          Matrix dhc(g.rows(), 2 * H);
          dhc.leftCols(H) = dpre * U.value().transpose();
          dhc.rightCols(H) = (dc * f).matrix();
          t.accumulate(hc, dhc);
        }
      });
}

Var gru_step(Var x, Var h, Var W, Var U, Var b_in, Var b_hid) {
  const Eigen::Index H = U.rows();
  check(h.cols() == H && x.rows() == h.rows() && W.rows() == x.cols() && W.cols() == 3 * H && U.cols() == 3 * H &&
            b_in.rows() == 1 && b_in.cols() == 3 * H && b_hid.rows() == 1 && b_hid.cols() == 3 * H,
        "gru_step");
  Matrix gx = x.value() * W.value();
  gx.rowwise() += b_in.value().row(0);
  Matrix gh = h.value() * U.value();
  gh.rowwise() += b_hid.value().row(0);

  Matrix zr = sigmoid_of(gx.leftCols(2 * H) + gh.leftCols(2 * H));
  Matrix ghn = gh.rightCols(H);
  Matrix n = (gx.rightCols(H).array() + zr.rightCols(H).array() * ghn.array()).tanh().matrix();
  const auto z = zr.leftCols(H).array();
  Matrix out = ((1.0 - z) * n.array() + z * h.value().array()).matrix();

  return x.tape()->record(
      std::move(out), {x, h, W, U, b_in, b_hid},
      [x, h, W, U, b_in, b_hid, H, zr = std::move(zr), n = std::move(n), ghn = std::move(ghn)](Tape& t,
                                                                                            const Matrix& g) {
        const auto z = zr.leftCols(H).array();
        const auto r = zr.rightCols(H).array();
        const auto dh = g.array();
        const Eigen::ArrayXXd dn_pre = dh * (1.0 - z) * (1.0 - n.array().square());
        Matrix dgx(g.rows(), 3 * H);
        dgx.leftCols(H) = (dh * (h.value().array() - n.array()) * z * (1.0 - z)).matrix();
        dgx.middleCols(H, H) = (dn_pre * ghn.array() * r * (1.0 - r)).matrix();
        dgx.rightCols(H) = dn_pre.matrix();
        Matrix dgh = dgx;
        dgh.rightCols(H) = (dn_pre * r).matrix();

        if (W.requires_grad()) t.accumulate(W, x.value().transpose() * dgx);
        if (b_in.requires_grad()) t.accumulate(b_in, dgx.colwise().sum());
        if (U.requires_grad()) t.accumulate(U, h.value().transpose() * dgh);
        if (b_hid.requires_grad()) t.accumulate(b_hid, dgh.colwise().sum());
        if (x.requires_grad()) t.accumulate(x, dgx * W.value().transpose());
        if (h.requires_grad()) t.accumulate(h, (dh * z).matrix() + dgh * U.value().transpose());
      });
}

Var huber_loss(Var pred, const Matrix& target, double delta) {
  check(pred.rows() == target.rows() && pred.cols() == target.cols(), "huber_loss");
  require(delta > 0.0, ErrorCode::kValidation, "huber delta must be positive");
  const Eigen::ArrayXXd e = pred.value().array() - target.array();
  const double n = static_cast<double>(e.size());
  const Eigen::ArrayXXd a = e.abs();
  const double total = (a <= delta).select(0.5 * e.square(), delta * (a - 0.5 * delta)).sum();
  Matrix out(1, 1);
  out(0, 0) = total / n;
  return pred.tape()->record(std::move(out), {pred}, [pred, e, delta, n](Tape& t, const Matrix& g) {
    const Eigen::ArrayXXd d = (e.abs() <= delta).select(e, delta * e.sign());
    t.accumulate(pred, (d * (g(0, 0) / n)).matrix());
  });
}

Var gaussian_nll(Var mean, Var logvar, const Matrix& target) {
  check(mean.rows() == target.rows() && mean.cols() == target.cols() && logvar.rows() == target.rows() &&
            logvar.cols() == target.cols(),
        "gaussian_nll");
  const Eigen::ArrayXXd e = target.array() - mean.value().array();
  const Eigen::ArrayXXd inv_var = (-logvar.value().array()).exp();
  const double n = static_cast<double>(e.size());
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  Matrix out(1, 1);
  out(0, 0) = 0.5 * (logvar.value().array() + e.square() * inv_var + log_two_pi).sum() / n;
  return mean.tape()->record(std::move(out), {mean, logvar}, [mean, logvar, e, inv_var, n](Tape& t, const Matrix& g) {
    const double s = g(0, 0) / n;
    if (mean.requires_grad()) t.accumulate(mean, (-e * inv_var * s).matrix());
    if (logvar.requires_grad()) t.accumulate(logvar, (0.5 * (1.0 - e.square() * inv_var) * s).matrix());
  });
}

}  // namespace crossplan::nn
