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

#include "crossplan/planner.h"

#include <cmath>
#include <map>
#include <numbers>
#include <optional>

#include "crossplan/encoding.h"
#include "crossplan/error.h"
#include "file_util.h"

namespace crossplan {
namespace {

constexpr std::size_t kEvalBatch = 256;

std::vector<const CorpusRecord*> pointers(const std::vector<CorpusRecord>& records,
                                          const std::vector<std::size_t>& idx) {
  std::vector<const CorpusRecord*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&records[i]);
  return out;
}

std::vector<std::vector<std::size_t>> sequential_batches(std::size_t n, std::size_t batch) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(n, start + batch); ++i) idx.push_back(i);
    out.push_back(std::move(idx));
  }
  return out;
}

Matrix gather_matrix_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

std::vector<const Trajectory*> futures_of(const std::vector<const CorpusRecord*>& records) {
  std::vector<const Trajectory*> out;
  for (const CorpusRecord* r : records) out.push_back(&r->future);
  return out;
}

void check_finite(double loss, const std::string& where) {
  require(std::isfinite(loss), ErrorCode::kDiverged, "loss became non-finite " + where);
}

struct BatchLoss {
  nn::Var total;
  nn::Var plan;
};

// Plan loss on the ego rows plus neighbor NLL where neighbor futures exist.
BatchLoss main_loss(nn::Tape& tape, PlannerModel& planner, const std::vector<const CorpusRecord*>& records,
                    const Matrix& priors) {
  EncodedBatch enc = planner.encode(tape, records, priors);
  nn::Var ctx = planner.attend(tape, enc.tokens, enc.segments);
  nn::Var raw = planner.ego_head_raw(tape, nn::gather_rows(ctx, enc.ego_rows));
  nn::Var plan = plan_loss(raw, future_targets(futures_of(records)));

  std::vector<Eigen::Index> rows;
  std::vector<const Trajectory*> targets;
  for (std::size_t k = 0; k < enc.neighbor_rows.size(); ++k) {
    const auto [r, j] = enc.neighbor_ids[k];
    const CorpusRecord& rec = *records[r];
    if (rec.neighbor_futures.size() != rec.neighbors.size()) continue;
    rows.push_back(enc.neighbor_rows[k]);
    targets.push_back(&rec.neighbor_futures[j]);
  }
  if (rows.empty()) return {plan, plan};
  const int steps = planner.config().schema.future_steps;
  Matrix t = future_targets(targets).leftCols(2 * steps) / kPositionScale;
  nn::Var out = planner.neighbor_head_raw(tape, nn::gather_rows(ctx, rows));
  nn::Var pred = nn::gaussian_nll(nn::slice_cols(out, 0, 2 * steps), nn::slice_cols(out, 2 * steps, 2 * steps), t);
  return {nn::add(plan, pred), plan};
}

double main_validation_loss(PlannerModel& planner, const std::vector<CorpusRecord>& records, const Matrix& priors) {
  double total = 0.0;
  for (const auto& idx : sequential_batches(records.size(), kEvalBatch)) {
    nn::Tape tape;
    total += main_loss(tape, planner, pointers(records, idx), gather_matrix_rows(priors, idx)).plan.value()(0, 0) *
             static_cast<double>(idx.size());
  }
  return total / static_cast<double>(records.size());
}

void check_gftm_isolation(GftmModel* gftm, const std::string& when) {
  if (gftm == nullptr) return;
  require(gftm->current_hash() == gftm->frozen_hash(), ErrorCode::kIsolation,
          "gftm parameters changed " + when);
}

}  // namespace

PlannerModel::PlannerModel(const PlannerConfig& config, std::uint64_t seed) : config_(config) {
  config_.schema.validate();
  require(config.model_dim > 0 && config.prior_dim > 0 && config.head_hidden > 0 && config.max_neighbors >= 0,
          ErrorCode::kValidation, "planner sizes must be positive");
  Rng rng(derive_seed({seed, 0x504c414eu}));
  const int d = config.model_dim;
  const int steps = config.schema.future_steps;
  agent_encoder = nn::Lstm("planner.agent_encoder", 5, d, rng);
  fuse = nn::Linear("planner.fuse", d + config.prior_dim, d, rng);
  // The prior enters through zero weights, so every variant starts from the
  // same function and prior elements the mask never passes stay inert.
  fuse.weight.value.bottomRows(config.prior_dim).setZero();
  attn_q = nn::Linear("planner.attn_q", d, d, rng);
  attn_k = nn::Linear("planner.attn_k", d, d, rng);
  attn_v = nn::Linear("planner.attn_v", d, d, rng);
  attn_o = nn::Linear("planner.attn_o", d, d, rng);
  ego_head = nn::Mlp("planner.ego_head", {d, config.head_hidden, 3 * steps}, rng);
  neighbor_head = nn::Mlp("planner.neighbor_head", {d, config.head_hidden, 4 * steps}, rng);
  mask = S2dMask(config.prior_dim, derive_seed({seed, 1}), config.epsilon, config.s2d_start_open);
}

EncodedBatch PlannerModel::encode(nn::Tape& tape, const std::vector<const CorpusRecord*>& records,
                                  const Matrix& priors) {
  require(!records.empty(), ErrorCode::kValidation, "empty batch");
  const auto batch = static_cast<Eigen::Index>(records.size());
  EncodedBatch out;
  std::vector<const Trajectory*> histories;
  std::vector<Eigen::Index> perm;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const CorpusRecord& r = *records[i];
    const auto start = static_cast<Eigen::Index>(histories.size());
    const auto n = std::min<std::size_t>(r.neighbors.size(), static_cast<std::size_t>(config_.max_neighbors));
    out.ego_rows.push_back(start);
    perm.push_back(static_cast<Eigen::Index>(i));
    histories.push_back(&r.history);
    for (std::size_t j = 0; j < n; ++j) {
      out.neighbor_rows.push_back(static_cast<Eigen::Index>(histories.size()));
      out.neighbor_ids.emplace_back(i, j);
      perm.push_back(batch + static_cast<Eigen::Index>(out.neighbor_rows.size()) - 1);
      histories.push_back(&r.neighbors[j]);
    }
    out.segments.push_back({start, static_cast<Eigen::Index>(n) + 1});
  }

  nn::Var h = agent_encoder.encode(tape, as_constants(tape, history_inputs(histories)));
  nn::Var ego = nn::gather_rows(h, out.ego_rows);
  nn::Var prior;
  if (config_.use_gftm) {
    require(priors.rows() == batch && priors.cols() == config_.prior_dim, ErrorCode::kValidation,
            "prior batch has the wrong shape");
    prior = tape.constant(priors);
    if (config_.use_s2d) prior = mask.apply(tape, prior);
  } else {
    prior = tape.constant(Matrix::Zero(batch, config_.prior_dim));
  }
  nn::Var ego_token = fuse(tape, nn::concat_cols({ego, prior}));
  if (out.neighbor_rows.empty()) {
    out.tokens = ego_token;
  } else {
    nn::Var stacked = nn::concat_rows({ego_token, nn::gather_rows(h, out.neighbor_rows)});
    out.tokens = nn::gather_rows(stacked, perm);
  }
  return out;
}

nn::Var PlannerModel::attend(nn::Tape& tape, nn::Var tokens, const std::vector<nn::Segment>& segments) {
  nn::Var att =
      nn::segment_attention(attn_q(tape, tokens), attn_k(tape, tokens), attn_v(tape, tokens), segments, segments);
  return nn::add(tokens, attn_o(tape, att));
}

nn::ParamList PlannerModel::params() {
  nn::ParamList out;
  agent_encoder.append_params(out);
  fuse.append_params(out);
  attn_q.append_params(out);
  attn_k.append_params(out);
  attn_v.append_params(out);
  attn_o.append_params(out);
  ego_head.append_params(out);
  neighbor_head.append_params(out);
  mask.append_params(out);
  return out;
}

void PlannerModel::freeze() {
  nn::set_trainable(params(), false);
  nn::zero_grads(params());
  frozen_hash_ = current_hash();
}

nn::Checkpoint PlannerModel::to_checkpoint() {
  std::map<std::string, std::string> meta{
      {"kind", "planner"},
      {"model_dim", std::to_string(config_.model_dim)},
      {"prior_dim", std::to_string(config_.prior_dim)},
      {"head_hidden", std::to_string(config_.head_hidden)},
      {"max_neighbors", std::to_string(config_.max_neighbors)},
      {"use_gftm", config_.use_gftm ? "1" : "0"},
      {"use_s2d", config_.use_s2d ? "1" : "0"},
      {"epsilon", internal::format_double(config_.epsilon)},
      {"history_steps", std::to_string(config_.schema.history_steps)},
      {"future_steps", std::to_string(config_.schema.future_steps)},
      {"dt", internal::format_double(config_.schema.dt)},
      {"s2d_phase", std::string(s2d_phase_name(mask.phase()))},
  };
  if (frozen()) meta["frozen_hash"] = frozen_hash_;
  return nn::make_checkpoint(params(), std::move(meta));
}

PlannerModel PlannerModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  require(ckpt.meta_at("kind") == "planner", ErrorCode::kMalformed, "not a planner checkpoint");
  PlannerConfig cfg;
  cfg.model_dim = ckpt.meta_int("model_dim");
  cfg.prior_dim = ckpt.meta_int("prior_dim");
  cfg.head_hidden = ckpt.meta_int("head_hidden");
  cfg.max_neighbors = ckpt.meta_int("max_neighbors");
  cfg.use_gftm = ckpt.meta_int("use_gftm") != 0;
  cfg.use_s2d = ckpt.meta_int("use_s2d") != 0;
  cfg.epsilon = ckpt.meta_double("epsilon");
  cfg.schema.history_steps = ckpt.meta_int("history_steps");
  cfg.schema.future_steps = ckpt.meta_int("future_steps");
  cfg.schema.dt = ckpt.meta_double("dt");
  PlannerModel model(cfg, 0);
  ckpt.load_into(model.params());
  const std::string& phase = ckpt.meta_at("s2d_phase");
  for (S2dPhase p : {S2dPhase::kMainTraining, S2dPhase::kHftdnTraining, S2dPhase::kInference}) {
    if (phase == s2d_phase_name(p)) model.mask.set_phase(p);
  }
  auto it = ckpt.meta.find("frozen_hash");
  if (it != ckpt.meta.end()) {
    model.frozen_hash_ = it->second;
    require(model.current_hash() == model.frozen_hash_, ErrorCode::kChecksum,
            "frozen planner parameters do not match their recorded hash");
  }
  return model;
}

Matrix compute_priors(const PlanningSystem& system, const std::vector<const CorpusRecord*>& records) {
  require(system.planner != nullptr, ErrorCode::kValidation, "planning system lacks a planner");
  const PlannerConfig& cfg = system.planner->config();
  if (!cfg.use_gftm) return Matrix::Zero(static_cast<Eigen::Index>(records.size()), cfg.prior_dim);
  require(system.gftm != nullptr, ErrorCode::kPhaseOrder, "planner uses priors but no gftm was given");
  require(system.gftm->mode() == GftmMode::kFrozen, ErrorCode::kPhaseOrder, "gftm must be frozen before use as prior");
  require(system.gftm->config().hidden == cfg.prior_dim, ErrorCode::kValidation,
          "gftm hidden size does not match the planner prior size");
  Matrix out(static_cast<Eigen::Index>(records.size()), cfg.prior_dim);
  for (std::size_t start = 0; start < records.size(); start += kEvalBatch) {
    std::vector<const Trajectory*> h;
    for (std::size_t i = start; i < std::min(records.size(), start + kEvalBatch); ++i) h.push_back(&records[i]->history);
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(h.size())) =
        system.gftm->prior_values(h);
  }
  return out;
}

PlanningContext encode_context(const CorpusRecord& record, PlannerModel& model, GftmModel* gftm) {
  validate_record(record, model.config().schema);
  PlanningSystem system{gftm, &model, nullptr, nullptr};
  nn::Tape tape;
  EncodedBatch enc = model.encode(tape, {&record}, compute_priors(system, {&record}));
  PlanningContext ctx;
  ctx.tokens = enc.tokens.value();
  ctx.neighbors = static_cast<int>(enc.neighbor_rows.size());
  ctx.presence.assign(static_cast<std::size_t>(model.config().max_neighbors), false);
  for (int j = 0; j < ctx.neighbors; ++j) ctx.presence[static_cast<std::size_t>(j)] = true;
  ctx.ego_history = record.history;
  return ctx;
}

PlanOutput plan(const PlanningContext& context, PlannerModel& model, HftdnModel* hftdn,
                const TrajectoryDictionary* dictionary) {
  require(context.tokens.rows() == 1 + context.neighbors && context.tokens.cols() == model.config().model_dim,
          ErrorCode::kValidation, "planning context has the wrong shape");
  nn::Tape tape;
  const std::vector<nn::Segment> segments{{0, context.tokens.rows()}};
  Matrix ctx = model.attend(tape, tape.constant(context.tokens), segments).value();
  if (hftdn != nullptr) {
    require(dictionary != nullptr, ErrorCode::kValidation, "hftdn refinement needs a dictionary");
    ctx = hftdn_forward(ctx, context.ego_history, *dictionary, *hftdn, hftdn->config().top_k, hftdn->config().alpha);
  }
  const int steps = model.config().schema.future_steps;
  PlanOutput out;
  const Matrix ego = decode_plan(model.ego_head_raw(tape, tape.constant(ctx.topRows(1))).value());
  out.ego_future.resize(steps, 3);
  for (int s = 0; s < steps; ++s) out.ego_future.row(s) << ego(0, 2 * s), ego(0, 2 * s + 1), ego(0, 2 * steps + s);
  if (context.neighbors > 0) {
    const Matrix raw = model.neighbor_head_raw(tape, tape.constant(ctx.bottomRows(context.neighbors))).value();
    // logvar is predicted for scaled coordinates; shift it to meters.
    const double shift = 2.0 * std::log(kPositionScale);
    for (Eigen::Index n = 0; n < raw.rows(); ++n) {
      Matrix m(steps, 4);
      for (int s = 0; s < steps; ++s) {
        m.row(s) << raw(n, 2 * s) * kPositionScale, raw(n, 2 * s + 1) * kPositionScale,
            raw(n, 2 * steps + 2 * s) + shift, raw(n, 2 * steps + 2 * s + 1) + shift;
      }
      out.neighbors.push_back(std::move(m));
    }
  }
  return out;
}

TrainResult train_main(PlannerModel& planner, GftmModel* gftm, const std::vector<CorpusRecord>& train,
                       const std::vector<CorpusRecord>& val, const TrainOptions& options) {
  const PlannerConfig& cfg = planner.config();
  require(!planner.frozen(), ErrorCode::kPhaseOrder, "planner is frozen");
  if (cfg.use_gftm) {
    require(gftm != nullptr && gftm->mode() == GftmMode::kFrozen, ErrorCode::kPhaseOrder,
            "main training needs a frozen gftm");
    check_gftm_isolation(gftm, "before main training");
  } else {
    gftm = nullptr;
  }
  if (cfg.use_gftm && cfg.use_s2d) {
    require(planner.mask.phase() == S2dPhase::kMainTraining, ErrorCode::kPhaseOrder,
            "main training needs the s2d mask in the main-training phase");
  }
  require(!train.empty(), ErrorCode::kDegenerateInput, "main training corpus is empty");
  require(options.epochs >= 0 && options.batch > 0 && options.lr > 0.0, ErrorCode::kValidation,
          "bad main training options");
  for (const CorpusRecord& r : train) validate_record(r, cfg.schema);
  const std::vector<CorpusRecord>& val_set = val.empty() ? train : val;

  PlanningSystem system{gftm, &planner, nullptr, nullptr};
  auto all = [](const std::vector<CorpusRecord>& rs) {
    std::vector<const CorpusRecord*> out;
    for (const CorpusRecord& r : rs) out.push_back(&r);
    return out;
  };
  const Matrix train_priors = compute_priors(system, all(train));
  const Matrix val_priors = compute_priors(system, all(val_set));

  TrainResult result;
  result.initial_val_loss = main_validation_loss(planner, val_set, val_priors);
  nn::ParamList params = planner.params();
  nn::AdamState state;
  const nn::AdamOptions adam{options.lr};
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& idx : epoch_batches(train.size(), options.batch, options.seed, epoch)) {
      nn::zero_grads(params);
      nn::Tape tape;
      BatchLoss loss = main_loss(tape, planner, pointers(train, idx), gather_matrix_rows(train_priors, idx));
      const double value = loss.total.value()(0, 0);
      check_finite(value, "in main training at epoch " + std::to_string(epoch + 1));
      tape.backward(loss.total);
      nn::adam_step(params, state, adam);
      total += value * static_cast<double>(idx.size());
    }
    check_gftm_isolation(gftm, "during main training");
    EpochLog log{epoch + 1, total / static_cast<double>(train.size()),
                 main_validation_loss(planner, val_set, val_priors)};
    check_finite(log.val_loss, "in main validation at epoch " + std::to_string(epoch + 1));
    result.epochs.push_back(log);
    if (!options.checkpoint_path.empty()) nn::write_checkpoint(options.checkpoint_path, planner.to_checkpoint());
    if (options.on_epoch) options.on_epoch(log);
  }
  nn::zero_grads(params);
  return result;
}

namespace {

// Frozen-planner state cached for phase III: attended context tokens and
// retrieval candidates per record.
struct ContextCache {
  std::vector<Matrix> context;  // per record, M x D
  std::vector<std::vector<std::size_t>> candidates;
};

ContextCache build_cache(PlanningSystem& system, const std::vector<CorpusRecord>& records,
                         const RetrievalIndex& index) {
  PlannerModel& planner = *system.planner;
  const HftdnConfig& hcfg = system.hftdn->config();
  ContextCache cache;
  for (const auto& idx : sequential_batches(records.size(), kEvalBatch)) {
    const auto batch = pointers(records, idx);
    nn::Tape tape;
    EncodedBatch enc = planner.encode(tape, batch, compute_priors(system, batch));
    const Matrix ctx = planner.attend(tape, enc.tokens, enc.segments).value();
    for (const nn::Segment& s : enc.segments) cache.context.push_back(ctx.middleRows(s.start, s.count));
    std::vector<const Trajectory*> queries;
    for (const CorpusRecord* r : batch) queries.push_back(&r->history);
    for (auto& c : retrieve_candidates(index, queries, hcfg.top_k, hcfg.alpha)) cache.candidates.push_back(std::move(c));
  }
  return cache;
}

// Ego head output after HFTDN refinement for the records `idx` of a cache.
nn::Var refined_ego_raw(nn::Tape& tape, PlanningSystem& system, const ContextCache& cache,
                        const std::vector<std::size_t>& idx) {
  HftdnModel& hftdn = *system.hftdn;
  const TrajectoryDictionary& dict = *system.dictionary;
  Eigen::Index rows = 0;
  for (std::size_t i : idx) rows += cache.context[i].rows();
  Matrix ctx(rows, system.planner->config().model_dim);
  std::vector<nn::Segment> segments;
  std::vector<Eigen::Index> ego_rows;
  Eigen::Index at = 0;
  for (std::size_t i : idx) {
    const Matrix& c = cache.context[i];
    ctx.middleRows(at, c.rows()) = c;
    segments.push_back({at, c.rows()});
    ego_rows.push_back(at);
    at += c.rows();
  }
  std::map<std::size_t, Eigen::Index> unique;
  for (std::size_t i : idx) {
    for (std::size_t e : cache.candidates[i]) unique.emplace(e, 0);
  }
  std::vector<const Trajectory*> futures;
  for (auto& [entry, row] : unique) {
    row = static_cast<Eigen::Index>(futures.size());
    futures.push_back(&dict.entries[entry].future);
  }
  std::vector<std::vector<Eigen::Index>> lists;
  for (std::size_t i : idx) {
    std::vector<Eigen::Index> l;
    for (std::size_t e : cache.candidates[i]) l.push_back(unique.at(e));
    lists.push_back(std::move(l));
  }
  nn::Var q = hftdn.aggregate(tape, hftdn.encode_futures(tape, futures), lists);
  nn::Var refined = hftdn.refine(tape, tape.constant(std::move(ctx)), segments, q);
  return system.planner->ego_head_raw(tape, nn::gather_rows(refined, ego_rows));
}

double hftdn_validation_loss(PlanningSystem& system, const ContextCache& cache,
                             const std::vector<CorpusRecord>& records) {
  double total = 0.0;
  for (const auto& idx : sequential_batches(records.size(), kEvalBatch)) {
    nn::Tape tape;
    total += plan_loss(refined_ego_raw(tape, system, cache, idx), future_targets(futures_of(pointers(records, idx))))
                 .value()(0, 0) *
             static_cast<double>(idx.size());
  }
  return total / static_cast<double>(records.size());
}

void check_phase3_system(PlanningSystem& system) {
  require(system.planner != nullptr && system.hftdn != nullptr, ErrorCode::kValidation,
          "hftdn training needs a planner and an hftdn model");
  PlannerModel& planner = *system.planner;
  require(planner.frozen(), ErrorCode::kPhaseOrder, "hftdn training needs a frozen phase II planner");
  require(planner.mask.phase() == S2dPhase::kHftdnTraining, ErrorCode::kPhaseOrder,
          "hftdn training needs the s2d mask in the hftdn-training phase");
  require(system.dictionary != nullptr && !system.dictionary->empty(), ErrorCode::kDegenerateInput,
          "hftdn training needs a non-empty dictionary");
  require(system.hftdn->config().context_dim == planner.config().model_dim, ErrorCode::kValidation,
          "hftdn context width does not match the planner");
}

void check_phase3_isolation(PlanningSystem& system, const std::string& when) {
  require(system.planner->current_hash() == system.planner->frozen_hash(), ErrorCode::kIsolation,
          "frozen planner parameters changed " + when);
  if (system.planner->config().use_gftm) check_gftm_isolation(system.gftm, when);
}

}  // namespace

TrainResult hftdn_train(PlanningSystem& system, const std::vector<CorpusRecord>& train,
                        const std::vector<CorpusRecord>& val, const TrainOptions& options) {
  check_phase3_system(system);
  require(!train.empty(), ErrorCode::kDegenerateInput, "hftdn training corpus is empty");
  require(options.epochs >= 0 && options.batch > 0 && options.lr > 0.0, ErrorCode::kValidation,
          "bad hftdn training options");
  for (const CorpusRecord& r : train) validate_record(r, system.planner->config().schema);
  check_phase3_isolation(system, "before hftdn training");
  const std::vector<CorpusRecord>& val_set = val.empty() ? train : val;

  const RetrievalIndex index(*system.dictionary);
  const ContextCache train_cache = build_cache(system, train, index);
  const ContextCache val_cache = build_cache(system, val_set, index);

  TrainResult result;
  result.initial_val_loss = hftdn_validation_loss(system, val_cache, val_set);
  nn::ParamList params = system.hftdn->params();
  nn::AdamState state;
  const nn::AdamOptions adam{options.lr};
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& idx : epoch_batches(train.size(), options.batch, options.seed, epoch)) {
      nn::zero_grads(params);
      nn::Tape tape;
      nn::Var loss = plan_loss(refined_ego_raw(tape, system, train_cache, idx),
                               future_targets(futures_of(pointers(train, idx))));
      const double value = loss.value()(0, 0);
      check_finite(value, "in hftdn training at epoch " + std::to_string(epoch + 1));
      tape.backward(loss);
      nn::adam_step(params, state, adam);
      total += value * static_cast<double>(idx.size());
    }
    check_phase3_isolation(system, "during hftdn training");
    EpochLog log{epoch + 1, total / static_cast<double>(train.size()),
                 hftdn_validation_loss(system, val_cache, val_set)};
    check_finite(log.val_loss, "in hftdn validation at epoch " + std::to_string(epoch + 1));
    result.epochs.push_back(log);
    if (!options.checkpoint_path.empty()) nn::write_checkpoint(options.checkpoint_path, system.hftdn->to_checkpoint());
    if (options.on_epoch) options.on_epoch(log);
  }
  nn::zero_grads(params);
  return result;
}

std::vector<Matrix> predict_plans(PlanningSystem& system, const std::vector<CorpusRecord>& records) {
  require(system.planner != nullptr, ErrorCode::kValidation, "planning system lacks a planner");
  PlannerModel& planner = *system.planner;
  const int steps = planner.config().schema.future_steps;
  const bool guided = system.hftdn != nullptr && system.dictionary != nullptr && !system.dictionary->empty();
  if (system.hftdn != nullptr && !guided) {
    log_message(LogLevel::kWarning, "dictionary is empty; guidance unavailable, planning without it");
  }
  std::vector<Matrix> plans;
  plans.reserve(records.size());
  std::optional<RetrievalIndex> index;
  if (guided) index.emplace(*system.dictionary);
  for (const auto& idx : sequential_batches(records.size(), kEvalBatch)) {
    const auto batch = pointers(records, idx);
    nn::Tape tape;
    Matrix raw;
    if (guided) {
      std::vector<std::size_t> local(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) local[i] = i;
      ContextCache cache;
      EncodedBatch enc = planner.encode(tape, batch, compute_priors(system, batch));
      const Matrix ctx = planner.attend(tape, enc.tokens, enc.segments).value();
      for (const nn::Segment& s : enc.segments) cache.context.push_back(ctx.middleRows(s.start, s.count));
      std::vector<const Trajectory*> queries;
      for (const CorpusRecord* r : batch) queries.push_back(&r->history);
      cache.candidates =
          retrieve_candidates(*index, queries, system.hftdn->config().top_k, system.hftdn->config().alpha);
      raw = refined_ego_raw(tape, system, cache, local).value();
    } else {
      EncodedBatch enc = planner.encode(tape, batch, compute_priors(system, batch));
      nn::Var ctx = planner.attend(tape, enc.tokens, enc.segments);
      raw = planner.ego_head_raw(tape, nn::gather_rows(ctx, enc.ego_rows)).value();
    }
    const Matrix decoded = decode_plan(raw);
    for (Eigen::Index b = 0; b < decoded.rows(); ++b) {
      Matrix p(steps, 3);
      for (int s = 0; s < steps; ++s) p.row(s) << decoded(b, 2 * s), decoded(b, 2 * s + 1), decoded(b, 2 * steps + s);
      plans.push_back(std::move(p));
    }
  }
  return plans;
}

Metrics plan_metrics(const std::vector<Matrix>& plans, const std::vector<CorpusRecord>& records) {
  require(!records.empty(), ErrorCode::kDegenerateInput, "cannot evaluate on an empty corpus");
  require(plans.size() == records.size(), ErrorCode::kValidation, "one plan per record is required");
  Metrics m;
  m.records = records.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Matrix& p = plans[i];
    const Trajectory& gt = records[i].future;
    const auto steps = static_cast<Eigen::Index>(gt.size());
    require(p.rows() == steps && p.cols() == 3, ErrorCode::kValidation, "plan shape does not match the future");
    std::vector<double> pred_psi, gt_psi;
    double disp = 0.0, huber_xy = 0.0, huber_psi = 0.0;
    auto huber = [](double e) { return std::abs(e) <= 1.0 ? 0.5 * e * e : std::abs(e) - 0.5; };
    for (Eigen::Index s = 0; s < steps; ++s) {
      const State& g = gt.points[static_cast<std::size_t>(s)];
      const double dx = p(s, 0) - g.x, dy = p(s, 1) - g.y;
      disp += std::hypot(dx, dy);
      huber_xy += huber(dx) + huber(dy);
      huber_psi += huber(p(s, 2) - g.psi);
      pred_psi.push_back(p(s, 2));
      gt_psi.push_back(g.psi);
      if (s + 1 == steps) m.fde += std::hypot(dx, dy);
    }
    const auto pu = unwrap_angles(pred_psi);
    const auto gu = unwrap_angles(gt_psi);
    double yaw = 0.0;
    for (std::size_t s = 0; s < pu.size(); ++s) yaw += std::abs(pu[s] - gu[s]);
    m.ade += disp / static_cast<double>(steps);
    m.yaw_mae += yaw / static_cast<double>(steps);
    m.plan_loss += huber_xy / static_cast<double>(2 * steps) + huber_psi / static_cast<double>(steps);
  }
  const auto n = static_cast<double>(records.size());
  m.ade /= n;
  m.fde /= n;
  m.yaw_mae /= n;
  m.plan_loss /= n;
  return m;
}

Metrics evaluate(PlanningSystem& system, const std::vector<CorpusRecord>& records) {
  require(system.planner != nullptr, ErrorCode::kValidation, "planning system lacks a planner");
  require(system.planner->mask.phase() == S2dPhase::kInference, ErrorCode::kPhaseOrder,
          "evaluation needs the s2d mask in the inference phase");
  require(!records.empty(), ErrorCode::kDegenerateInput, "cannot evaluate on an empty corpus");
  for (const CorpusRecord& r : records) validate_record(r, system.planner->config().schema);
  return plan_metrics(predict_plans(system, records), records);
}

}  // namespace crossplan
