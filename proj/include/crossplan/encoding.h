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

#ifndef CROSSPLAN_ENCODING_H_
#define CROSSPLAN_ENCODING_H_

#include <cstdint>
#include <vector>

#include "crossplan/corpus.h"
#include "crossplan/matrix.h"
#include "crossplan/nn/tape.h"

namespace crossplan {

/// Positions and speeds enter the networks divided by this, and predicted
/// positions leave multiplied by it.
inline constexpr double kPositionScale = 10.0;

/// One batch x 5 matrix per history step with columns
/// (x, y, psi, v, omega), positions and speed scaled down.
std::vector<Matrix> history_inputs(const std::vector<const Trajectory*>& batch);
/// One batch x 3 matrix per future step with columns (x, y, psi).
std::vector<Matrix> future_inputs(const std::vector<const Trajectory*>& batch, int stride = 1);

/// Target rows [x0, y0, ..., x_{T-1}, y_{T-1}, psi_0, ..., psi_{T-1}] in
/// meters and radians.
Matrix future_targets(const std::vector<const Trajectory*>& batch);

/// Huber on positions plus Huber on heading, each a mean over its elements.
/// `raw` is the head output laid out like future_targets with positions in
/// scaled units.
nn::Var plan_loss(nn::Var raw, const Matrix& targets);
/// Head output to meters and radians, same layout as future_targets.
Matrix decode_plan(const Matrix& raw);
/// One decoded row to a future trajectory.
Trajectory plan_row_to_trajectory(const Eigen::Ref<const RowVector>& row, double dt);

std::vector<nn::Var> as_constants(nn::Tape& tape, const std::vector<Matrix>& steps);

/// Deterministic per-epoch shuffle cut into batches (the last may be short).
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, int batch, std::uint64_t seed, int epoch);

/// Deterministic shuffled split; the validation part takes round(n * fraction)
/// records but leaves at least one for training.
void split_records(const std::vector<CorpusRecord>& records, double val_fraction, std::uint64_t seed,
                   std::vector<CorpusRecord>& train, std::vector<CorpusRecord>& val);

}  // namespace crossplan

#endif  // CROSSPLAN_ENCODING_H_
