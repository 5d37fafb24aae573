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

#include "crossplan/encoding.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crossplan/error.h"
#include "crossplan/rng.h"

namespace crossplan {

std::vector<Matrix> history_inputs(const std::vector<const Trajectory*>& batch) {
  require(!batch.empty(), ErrorCode::kValidation, "empty batch");
  const std::size_t steps = batch[0]->size();
  const auto rows = static_cast<Eigen::Index>(batch.size());
  std::vector<Matrix> out(steps, Matrix(rows, 5));
  for (Eigen::Index b = 0; b < rows; ++b) {
    const Trajectory& t = *batch[static_cast<std::size_t>(b)];
    require(t.size() == steps, ErrorCode::kValidation, "histories in a batch differ in length");
    for (std::size_t s = 0; s < steps; ++s) {
      const State& p = t.points[s];
      require(p.v.has_value() && p.omega.has_value(), ErrorCode::kValidation, "history state lacks v or omega");
      out[s].row(b) << p.x / kPositionScale, p.y / kPositionScale, p.psi, *p.v / kPositionScale, *p.omega;
    }
  }
  return out;
}

std::vector<Matrix> future_inputs(const std::vector<const Trajectory*>& batch, int stride) {
  require(!batch.empty() && stride >= 1, ErrorCode::kValidation, "empty batch or bad stride");
  const std::size_t steps = batch[0]->size();
  const auto rows = static_cast<Eigen::Index>(batch.size());
  std::vector<Matrix> out;
  // Sample back from the final step so it is always included.
  std::vector<std::size_t> picks;
  for (std::size_t s = steps; s >= static_cast<std::size_t>(stride); s -= static_cast<std::size_t>(stride)) {
    picks.push_back(s - 1);
  }
  std::reverse(picks.begin(), picks.end());
  for (std::size_t s : picks) {
    Matrix m(rows, 3);
    for (Eigen::Index b = 0; b < rows; ++b) {
      const Trajectory& t = *batch[static_cast<std::size_t>(b)];
      require(t.size() == steps, ErrorCode::kValidation, "futures in a batch differ in length");
      const State& p = t.points[s];
      m.row(b) << p.x / kPositionScale, p.y / kPositionScale, p.psi;
    }
    out.push_back(std::move(m));
  }
  return out;
}

Matrix future_targets(const std::vector<const Trajectory*>& batch) {
  require(!batch.empty(), ErrorCode::kValidation, "empty batch");
  const auto steps = static_cast<Eigen::Index>(batch[0]->size());
  Matrix out(static_cast<Eigen::Index>(batch.size()), 3 * steps);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Trajectory& t = *batch[b];
    require(static_cast<Eigen::Index>(t.size()) == steps, ErrorCode::kValidation, "futures differ in length");
    const auto r = static_cast<Eigen::Index>(b);
    for (Eigen::Index s = 0; s < steps; ++s) {
      const State& p = t.points[static_cast<std::size_t>(s)];
      out(r, 2 * s) = p.x;
      out(r, 2 * s + 1) = p.y;
      out(r, 2 * steps + s) = p.psi;
    }
  }
  return out;
}

nn::Var plan_loss(nn::Var raw, const Matrix& targets) {
  require(raw.cols() % 3 == 0 && raw.cols() == targets.cols(), ErrorCode::kValidation, "plan output width");
  const Eigen::Index steps = raw.cols() / 3;
  nn::Var xy = nn::scale(nn::slice_cols(raw, 0, 2 * steps), kPositionScale);
  nn::Var psi = nn::slice_cols(raw, 2 * steps, steps);
  return nn::add(nn::huber_loss(xy, targets.leftCols(2 * steps)), nn::huber_loss(psi, targets.rightCols(steps)));
}

Matrix decode_plan(const Matrix& raw) {
  const Eigen::Index steps = raw.cols() / 3;
  Matrix out = raw;
  out.leftCols(2 * steps) *= kPositionScale;
  return out;
}

Trajectory plan_row_to_trajectory(const Eigen::Ref<const RowVector>& row, double dt) {
  const Eigen::Index steps = row.cols() / 3;
  Trajectory t;
  t.dt = dt;
  t.kind = TrajectoryKind::kFuture;
  for (Eigen::Index s = 0; s < steps; ++s) {
    State p;
    p.x = row(2 * s);
    p.y = row(2 * s + 1);
    p.psi = row(2 * steps + s);
    t.points.push_back(p);
  }
  return t;
}

std::vector<nn::Var> as_constants(nn::Tape& tape, const std::vector<Matrix>& steps) {
  std::vector<nn::Var> out;
  out.reserve(steps.size());
  for (const Matrix& m : steps) out.push_back(tape.constant(m));
  return out;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, int batch, std::uint64_t seed, int epoch) {
  require(batch > 0, ErrorCode::kValidation, "batch size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(epoch), 0x5348u}));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(batch)) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + static_cast<std::size_t>(batch))));
  }
  return out;
}

void split_records(const std::vector<CorpusRecord>& records, double val_fraction, std::uint64_t seed,
                   std::vector<CorpusRecord>& train, std::vector<CorpusRecord>& val) {
  require(val_fraction >= 0.0 && val_fraction < 1.0, ErrorCode::kValidation, "validation fraction out of range");
  require(!records.empty(), ErrorCode::kDegenerateInput, "cannot split an empty corpus");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed({seed, 0x53504c4954u}));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(records.size())));
  n_val = std::min(n_val, records.size() - 1);
  std::vector<bool> is_val(records.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
  train.clear();
  val.clear();
  // Keep original order inside each part.
  for (std::size_t i = 0; i < records.size(); ++i) (is_val[i] ? val : train).push_back(records[i]);
}

}  // namespace crossplan
