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

#ifndef CROSSPLAN_PLANNER_H_
#define CROSSPLAN_PLANNER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "crossplan/corpus.h"
#include "crossplan/dictionary.h"
#include "crossplan/gftm.h"
#include "crossplan/hftdn.h"
#include "crossplan/nn/checkpoint.h"
#include "crossplan/nn/layers.h"
#include "crossplan/s2d.h"

namespace crossplan {

struct PlannerConfig {
  int model_dim = 64;   // D
  int prior_dim = 64;   // must match the GFTM hidden size
  int head_hidden = 128;
  int max_neighbors = 4;
  /// Without a GFTM the prior slot is a zero vector.
  bool use_gftm = true;
  /// Without S2D the prior passes unmasked in every phase.
  bool use_s2d = true;
  double epsilon = kDefaultEpsilon;
  /// Start with every prior element passing the mask (see S2dMask).
  bool s2d_start_open = true;
  Schema schema{};
};

/// Agent tokens of one record before self-attention. Token 0 is the ego.
struct PlanningContext {
  Matrix tokens;  // M x D
  int neighbors = 0;
  /// One flag per neighbor slot (max_neighbors); the first `neighbors` are set.
  std::vector<bool> presence;
  Trajectory ego_history;
};

struct PlanOutput {
  Matrix ego_future;               // future_steps x 3 (x, y, psi)
  std::vector<Matrix> neighbors;   // each future_steps x 4 (mean x, mean y, logvar x, logvar y)
};

/// Token rows of a batch in record-major order.
struct EncodedBatch {
  nn::Var tokens;
  std::vector<nn::Segment> segments;
  std::vector<Eigen::Index> ego_rows;
  std::vector<Eigen::Index> neighbor_rows;
  /// (record, neighbor) for every entry of neighbor_rows.
  std::vector<std::pair<std::size_t, std::size_t>> neighbor_ids;
};

/// Shared LSTM agent encoder, prior fusion into the ego token, one block of
/// per-record self-attention, and decoder heads for the ego plan and the
/// neighbor Gaussians. Owns the S2D mask.
class PlannerModel {
 public:
  PlannerModel() = default;
  PlannerModel(const PlannerConfig& config, std::uint64_t seed);

  const PlannerConfig& config() const { return config_; }

  /// priors: batch x prior_dim, ignored when use_gftm is off.
  EncodedBatch encode(nn::Tape& tape, const std::vector<const CorpusRecord*>& records, const Matrix& priors);
  /// One residual self-attention block within each segment.
  nn::Var attend(nn::Tape& tape, nn::Var tokens, const std::vector<nn::Segment>& segments);
  nn::Var ego_head_raw(nn::Tape& tape, nn::Var ego_tokens) { return ego_head(tape, ego_tokens); }
  nn::Var neighbor_head_raw(nn::Tape& tape, nn::Var tokens) { return neighbor_head(tape, tokens); }

  nn::ParamList params();

  /// Marks every parameter non-trainable and records the hash.
  void freeze();
  bool frozen() const { return !frozen_hash_.empty(); }
  const std::string& frozen_hash() const { return frozen_hash_; }
  std::string current_hash() { return nn::parameters_hash(params()); }

  nn::Checkpoint to_checkpoint();
  static PlannerModel from_checkpoint(const nn::Checkpoint& ckpt);

  nn::Lstm agent_encoder;
  nn::Linear fuse;
  nn::Linear attn_q;
  nn::Linear attn_k;
  nn::Linear attn_v;
  nn::Linear attn_o;
  nn::Mlp ego_head;
  nn::Mlp neighbor_head;
  S2dMask mask;

 private:
  PlannerConfig config_;
  std::string frozen_hash_;
};

/// The models taking part in a forward pass. `gftm` is needed when the
/// planner uses priors; `hftdn` is optional and needs `dictionary`.
struct PlanningSystem {
  GftmModel* gftm = nullptr;
  PlannerModel* planner = nullptr;
  HftdnModel* hftdn = nullptr;
  const TrajectoryDictionary* dictionary = nullptr;
};

/// GFTM priors of the records' histories (zeros when the planner does not
/// use them).
Matrix compute_priors(const PlanningSystem& system, const std::vector<const CorpusRecord*>& records);

PlanningContext encode_context(const CorpusRecord& record, PlannerModel& model, GftmModel* gftm);
PlanOutput plan(const PlanningContext& context, PlannerModel& model, HftdnModel* hftdn = nullptr,
                const TrajectoryDictionary* dictionary = nullptr);

/// Phase II. Requires a frozen GFTM when priors are used and the mask in
/// MainTraining when S2D is on. Trains planner and mask parameters on
/// plan loss plus neighbor NLL; aborts with kIsolation if the GFTM changes.
TrainResult train_main(PlannerModel& planner, GftmModel* gftm, const std::vector<CorpusRecord>& train,
                       const std::vector<CorpusRecord>& val, const TrainOptions& options);

/// Phase III. Requires a frozen planner with the mask in HftdnTraining and a
/// non-empty dictionary; only HFTDN parameters change. Any change to a frozen
/// parameter throws kIsolation.
TrainResult hftdn_train(PlanningSystem& system, const std::vector<CorpusRecord>& train,
                        const std::vector<CorpusRecord>& val, const TrainOptions& options);

struct Metrics {
  double ade = 0.0;
  double fde = 0.0;
  double yaw_mae = 0.0;
  double plan_loss = 0.0;
  std::size_t records = 0;
};

/// Decoded ego plans (future_steps x 3), one per record.
std::vector<Matrix> predict_plans(PlanningSystem& system, const std::vector<CorpusRecord>& records);
/// Per-record ADE, FDE, unwrapped yaw MAE and plan loss, averaged in record
/// order.
Metrics plan_metrics(const std::vector<Matrix>& plans, const std::vector<CorpusRecord>& records);
/// Requires the mask in Inference. Throws kDegenerateInput on no records.
Metrics evaluate(PlanningSystem& system, const std::vector<CorpusRecord>& records);

}  // namespace crossplan

#endif  // CROSSPLAN_PLANNER_H_
