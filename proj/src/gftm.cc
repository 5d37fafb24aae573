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

#include "crossplan/gftm.h"

#include <cmath>

#include "crossplan/encoding.h"
#include "crossplan/error.h"
#include "file_util.h"

namespace crossplan {

GftmModel::GftmModel(const GftmConfig& config, std::uint64_t seed) : config_(config) {
  config_.schema.validate();
  require(config.hidden > 0 && config.head_hidden > 0, ErrorCode::kValidation, "gftm sizes must be positive");
  Rng rng(derive_seed({seed, 0x4746544du}));
  lstm = nn::Lstm("gftm.lstm", 5, config.hidden, rng);
  gru = nn::Gru("gftm.gru", 5, config.hidden, rng);
  fusion = nn::Linear("gftm.fusion", 2 * config.hidden, config.hidden, rng);
  head = nn::Mlp("gftm.head", {config.hidden, config.head_hidden, config.head_hidden, 3 * config.schema.future_steps},
                 rng);
}

nn::Var GftmModel::prior(nn::Tape& tape, const std::vector<nn::Var>& steps) {
  require(static_cast<int>(steps.size()) == config_.schema.history_steps, ErrorCode::kValidation,
          "gftm input has the wrong number of history steps");
  require(!steps.empty() && steps[0].cols() == 5, ErrorCode::kValidation, "gftm input must have 5 features");
  nn::Var a = lstm.encode(tape, steps);
  nn::Var b = gru.encode(tape, steps);
  return fusion(tape, nn::concat_cols({a, b}));
}

nn::Var GftmModel::predict_raw(nn::Tape& tape, const std::vector<nn::Var>& steps) {
  require(mode_ == GftmMode::kPretraining, ErrorCode::kPhaseOrder, "frozen gftm has no prediction head");
  return head(tape, prior(tape, steps));
}

Matrix GftmModel::prior_values(const std::vector<const Trajectory*>& histories) {
  for (const Trajectory* h : histories) validate_trajectory(*h, config_.schema.history_steps);
  nn::Tape tape;
  return prior(tape, as_constants(tape, history_inputs(histories))).value();
}

RowVector GftmModel::forward_prior(const Trajectory& history) { return prior_values({&history}).row(0); }

Matrix GftmModel::forward_future(const Trajectory& history) {
  validate_trajectory(history, config_.schema.history_steps);
  nn::Tape tape;
  const Matrix decoded = decode_plan(predict_raw(tape, as_constants(tape, history_inputs({&history}))).value());
  const int steps = config_.schema.future_steps;
  Matrix out(steps, 3);
  for (int s = 0; s < steps; ++s) out.row(s) << decoded(0, 2 * s), decoded(0, 2 * s + 1), decoded(0, 2 * steps + s);
  return out;
}

nn::ParamList GftmModel::encoder_params() {
  nn::ParamList out;
  lstm.append_params(out);
  gru.append_params(out);
  fusion.append_params(out);
  return out;
}

nn::ParamList GftmModel::params() {
  nn::ParamList out = encoder_params();
  if (mode_ == GftmMode::kPretraining) head.append_params(out);
  return out;
}

void GftmModel::freeze() {
  head = nn::Mlp();
  mode_ = GftmMode::kFrozen;
  nn::set_trainable(encoder_params(), false);
  nn::zero_grads(encoder_params());
  frozen_hash_ = current_hash();
}

nn::Checkpoint GftmModel::to_checkpoint() {
  std::map<std::string, std::string> meta{
      {"kind", "gftm"},
      {"mode", mode_ == GftmMode::kFrozen ? "frozen" : "pretraining"},
      {"hidden", std::to_string(config_.hidden)},
      {"head_hidden", std::to_string(config_.head_hidden)},
      {"history_steps", std::to_string(config_.schema.history_steps)},
      {"future_steps", std::to_string(config_.schema.future_steps)},
      {"dt", internal::format_double(config_.schema.dt)},
  };
  if (mode_ == GftmMode::kFrozen) meta["frozen_hash"] = frozen_hash_;
  return nn::make_checkpoint(params(), std::move(meta));
}

GftmModel GftmModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  require(ckpt.meta_at("kind") == "gftm", ErrorCode::kMalformed, "not a gftm checkpoint");
  GftmConfig cfg;
  cfg.hidden = ckpt.meta_int("hidden");
  cfg.head_hidden = ckpt.meta_int("head_hidden");
  cfg.schema.history_steps = ckpt.meta_int("history_steps");
  cfg.schema.future_steps = ckpt.meta_int("future_steps");
  cfg.schema.dt = ckpt.meta_double("dt");
  GftmModel model(cfg, 0);
  const bool frozen = ckpt.meta_at("mode") == "frozen";
  if (frozen) {
    model.head = nn::Mlp();
    model.mode_ = GftmMode::kFrozen;
  }
  ckpt.load_into(model.params());
  if (frozen) {
    model.frozen_hash_ = ckpt.meta_at("frozen_hash");
    require(model.current_hash() == model.frozen_hash_, ErrorCode::kChecksum,
            "frozen gftm parameters do not match their recorded hash");
  }
  return model;
}

GftmModel freeze_export(const GftmModel& model) {
  require(model.mode() == GftmMode::kPretraining, ErrorCode::kPhaseOrder, "gftm is already frozen");
  GftmModel frozen = model;
  frozen.freeze();
  return frozen;
}

namespace {

struct Batch {
  std::vector<const Trajectory*> histories;
  std::vector<const Trajectory*> futures;
};

Batch make_batch(const std::vector<CorpusRecord>& records, const std::vector<std::size_t>& idx) {
  Batch b;
  for (std::size_t i : idx) {
    b.histories.push_back(&records[i].history);
    b.futures.push_back(&records[i].future);
  }
  return b;
}

void check_finite(double loss, const std::string& where) {
  require(std::isfinite(loss), ErrorCode::kDiverged, "loss became non-finite " + where);
}

}  // namespace

double gftm_validation_loss(GftmModel& model, const std::vector<CorpusRecord>& records, int batch) {
  require(!records.empty(), ErrorCode::kDegenerateInput, "validation set is empty");
  double total = 0.0;
  for (std::size_t start = 0; start < records.size(); start += static_cast<std::size_t>(batch)) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(records.size(), start + static_cast<std::size_t>(batch)); ++i) {
      idx.push_back(i);
    }
    const Batch b = make_batch(records, idx);
    nn::Tape tape;
    const double loss =
        plan_loss(model.predict_raw(tape, as_constants(tape, history_inputs(b.histories))), future_targets(b.futures))
            .value()(0, 0);
    total += loss * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(records.size());
}

TrainResult gftm_pretrain(GftmModel& model, const std::vector<CorpusRecord>& train,
                          const std::vector<CorpusRecord>& val, const TrainOptions& options) {
  require(model.mode() == GftmMode::kPretraining, ErrorCode::kPhaseOrder, "cannot pretrain a frozen gftm");
  require(!train.empty(), ErrorCode::kDegenerateInput, "gftm pretraining corpus is empty");
  require(options.epochs >= 0 && options.batch > 0 && options.lr > 0.0, ErrorCode::kValidation,
          "bad gftm training options");
  for (const CorpusRecord& r : train) validate_record(r, model.config().schema);
  const std::vector<CorpusRecord>& val_set = val.empty() ? train : val;

  TrainResult result;
  result.initial_val_loss = gftm_validation_loss(model, val_set);
  nn::ParamList params = model.params();
  nn::AdamState state;
  const nn::AdamOptions adam{options.lr};
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& idx : epoch_batches(train.size(), options.batch, options.seed, epoch)) {
      const Batch b = make_batch(train, idx);
      nn::zero_grads(params);
      nn::Tape tape;
      nn::Var loss =
          plan_loss(model.predict_raw(tape, as_constants(tape, history_inputs(b.histories))), future_targets(b.futures));
      const double value = loss.value()(0, 0);
      check_finite(value, "in gftm pretraining at epoch " + std::to_string(epoch + 1));
      tape.backward(loss);
      nn::adam_step(params, state, adam);
      total += value * static_cast<double>(idx.size());
    }
    EpochLog log{epoch + 1, total / static_cast<double>(train.size()), gftm_validation_loss(model, val_set)};
    check_finite(log.val_loss, "in gftm validation at epoch " + std::to_string(epoch + 1));
    result.epochs.push_back(log);
    if (!options.checkpoint_path.empty()) nn::write_checkpoint(options.checkpoint_path, model.to_checkpoint());
    if (options.on_epoch) options.on_epoch(log);
  }
  nn::zero_grads(params);
  return result;
}

}  // namespace crossplan
