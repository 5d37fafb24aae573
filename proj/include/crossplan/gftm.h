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

#ifndef CROSSPLAN_GFTM_H_
#define CROSSPLAN_GFTM_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "crossplan/corpus.h"
#include "crossplan/nn/checkpoint.h"
#include "crossplan/nn/layers.h"
#include "crossplan/nn/optim.h"

namespace crossplan {

struct GftmConfig {
  int hidden = 64;        // D_g, also the prior size
  int head_hidden = 128;  // two hidden layers
  Schema schema{};
};

enum class GftmMode { kPretraining, kFrozen };

/// Dual-branch recurrent history encoder. An LSTM and a GRU read the same
/// history; their final hidden states are concatenated and projected to the
/// prior. In pretraining mode an MLP head maps the prior to a future.
class GftmModel {
 public:
  GftmModel() = default;
  GftmModel(const GftmConfig& config, std::uint64_t seed);

  const GftmConfig& config() const { return config_; }
  GftmMode mode() const { return mode_; }

  /// steps: history_inputs of a batch. Returns batch x hidden.
  nn::Var prior(nn::Tape& tape, const std::vector<nn::Var>& steps);
  /// Head output (batch x 3 * future_steps, scaled positions). Pretraining
  /// mode only.
  nn::Var predict_raw(nn::Tape& tape, const std::vector<nn::Var>& steps);

  /// Values-only helpers.
  Matrix prior_values(const std::vector<const Trajectory*>& histories);
  RowVector forward_prior(const Trajectory& history);
  /// future_steps x 3 (x, y, psi). Pretraining mode only.
  Matrix forward_future(const Trajectory& history);

  /// Encoder parameters plus, in pretraining mode, the head.
  nn::ParamList params();
  nn::ParamList encoder_params();

  /// Drops the head, freezes every parameter and records the hash.
  void freeze();
  /// Hash recorded by freeze(); empty in pretraining mode.
  const std::string& frozen_hash() const { return frozen_hash_; }
  std::string current_hash() { return nn::parameters_hash(encoder_params()); }

  nn::Checkpoint to_checkpoint();
  static GftmModel from_checkpoint(const nn::Checkpoint& ckpt);

  nn::Lstm lstm;
  nn::Gru gru;
  nn::Linear fusion;
  nn::Mlp head;

 private:
  GftmConfig config_;
  GftmMode mode_ = GftmMode::kPretraining;
  std::string frozen_hash_;
};

/// Frozen copy of a pretraining-mode model.
GftmModel freeze_export(const GftmModel& model);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainOptions {
  int epochs = 50;
  int batch = 64;
  double lr = 2e-3;
  std::uint64_t seed = 0;
  /// When set, a checkpoint is rewritten here after every epoch.
  std::filesystem::path checkpoint_path;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  /// Validation loss before the first update.
  double initial_val_loss = 0.0;
  std::vector<EpochLog> epochs;
};

/// Minimizes the plan loss of the head output. Throws kDegenerateInput on an
/// empty training set and kDiverged on a non-finite loss.
TrainResult gftm_pretrain(GftmModel& model, const std::vector<CorpusRecord>& train,
                          const std::vector<CorpusRecord>& val, const TrainOptions& options);

/// Mean plan loss over records (batched, record-weighted).
double gftm_validation_loss(GftmModel& model, const std::vector<CorpusRecord>& records, int batch = 256);

}  // namespace crossplan

#endif  // CROSSPLAN_GFTM_H_
