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

#include "crossplan/hftdn.h"

#include <algorithm>

#include "crossplan/encoding.h"
#include "crossplan/error.h"
#include "file_util.h"

namespace crossplan {
namespace {

// Mean within each group, then max across groups, one output row per list.
nn::Var pool_groups(nn::Var enc, const std::vector<std::vector<Eigen::Index>>& lists, int groups) {
  const Eigen::Index width = enc.cols();
  const Matrix& v = enc.value();
  std::vector<std::vector<std::vector<Eigen::Index>>> split(lists.size());
  Matrix out(static_cast<Eigen::Index>(lists.size()), width);
  // winners[list][col] -> group index
  std::vector<std::vector<int>> winners(lists.size(), std::vector<int>(static_cast<std::size_t>(width), 0));
  for (std::size_t l = 0; l < lists.size(); ++l) {
    const auto& rows = lists[l];
    require(!rows.empty(), ErrorCode::kValidation, "guidance needs at least one candidate");
    std::size_t pos = 0;
    for (int size : group_sizes(static_cast<int>(rows.size()), groups)) {
      split[l].emplace_back(rows.begin() + static_cast<std::ptrdiff_t>(pos),
                            rows.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(size)));
      pos += static_cast<std::size_t>(size);
    }
    Matrix means(static_cast<Eigen::Index>(split[l].size()), width);
    for (std::size_t g = 0; g < split[l].size(); ++g) {
      RowVector sum = RowVector::Zero(width);
      for (Eigen::Index r : split[l][g]) {
        require(r >= 0 && r < v.rows(), ErrorCode::kValidation, "candidate row out of range");
        sum += v.row(r);
      }
      means.row(static_cast<Eigen::Index>(g)) = sum / static_cast<double>(split[l][g].size());
    }
    for (Eigen::Index c = 0; c < width; ++c) {
      int best = 0;
      for (Eigen::Index g = 1; g < means.rows(); ++g) {
        if (means(g, c) > means(best, c)) best = static_cast<int>(g);
      }
      winners[l][static_cast<std::size_t>(c)] = best;
      out(static_cast<Eigen::Index>(l), c) = means(best, c);
    }
  }
  return enc.tape()->record(std::move(out), {enc}, [enc, split, winners](nn::Tape& t, const Matrix& g) {
    Matrix d = Matrix::Zero(enc.rows(), enc.cols());
    for (std::size_t l = 0; l < split.size(); ++l) {
      for (Eigen::Index c = 0; c < enc.cols(); ++c) {
        const auto& rows = split[l][static_cast<std::size_t>(winners[l][static_cast<std::size_t>(c)])];
        const double share = g(static_cast<Eigen::Index>(l), c) / static_cast<double>(rows.size());
        for (Eigen::Index r : rows) d(r, c) += share;
      }
    }
    t.accumulate(enc, d);
  });
}

}  // namespace

std::vector<int> group_sizes(int k, int n) {
  require(k >= 1 && n >= 1, ErrorCode::kValidation, "group sizes need k >= 1 and n >= 1");
  const int groups = std::min(k, n);
  std::vector<int> sizes(static_cast<std::size_t>(groups), k / groups);
  for (int i = 0; i < k % groups; ++i) ++sizes[static_cast<std::size_t>(i)];
  return sizes;
}

HftdnModel::HftdnModel(const HftdnConfig& config, std::uint64_t seed) : config_(config) {
  require(config.hidden > 0 && config.groups > 0 && config.top_k > 0 && config.context_dim > 0 &&
              config.future_stride > 0,
          ErrorCode::kValidation, "hftdn sizes must be positive");
  require(config.alpha >= 0.0 && config.alpha <= 1.0, ErrorCode::kValidation, "alpha must lie in [0, 1]");
  Rng rng(derive_seed({seed, 0x4846544du}));
  encoder = nn::Lstm("hftdn.encoder", 3, config.hidden, rng);
  query = nn::Linear("hftdn.query", config.hidden, config.context_dim, rng);
  key = nn::Linear("hftdn.key", config.context_dim, config.context_dim, rng);
  value = nn::Linear("hftdn.value", config.context_dim, config.context_dim, rng);
  output = nn::Linear("hftdn.output", config.context_dim, config.context_dim, rng);
  output.weight.value.setZero();
}

nn::Var HftdnModel::encode_futures(nn::Tape& tape, const std::vector<const Trajectory*>& futures) {
  return encoder.encode(tape, as_constants(tape, future_inputs(futures, config_.future_stride)));
}

nn::Var HftdnModel::aggregate(nn::Tape&, nn::Var encodings, const std::vector<std::vector<Eigen::Index>>& candidates) {
  return pool_groups(encodings, candidates, config_.groups);
}

nn::Var HftdnModel::refine(nn::Tape& tape, nn::Var context, const std::vector<nn::Segment>& segments,
                           nn::Var guidance) {
  require(guidance.rows() == static_cast<Eigen::Index>(segments.size()), ErrorCode::kValidation,
          "one guidance row per context segment");
  require(context.cols() == config_.context_dim, ErrorCode::kValidation, "context width does not match hftdn");
  std::vector<nn::Segment> q_segments;
  std::vector<Eigen::Index> owner(static_cast<std::size_t>(context.rows()), 0);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    q_segments.push_back({static_cast<Eigen::Index>(i), 1});
    for (Eigen::Index r = 0; r < segments[i].count; ++r) {
      owner[static_cast<std::size_t>(segments[i].start + r)] = static_cast<Eigen::Index>(i);
    }
  }
  nn::Var q = query(tape, guidance);
  nn::Var attended = nn::segment_attention(q, key(tape, context), value(tape, context), q_segments, segments);
  nn::Var delta = output(tape, attended);
  return nn::add(context, nn::gather_rows(delta, owner));
}

nn::ParamList HftdnModel::params() {
  nn::ParamList out;
  encoder.append_params(out);
  query.append_params(out);
  key.append_params(out);
  value.append_params(out);
  output.append_params(out);
  return out;
}

nn::Checkpoint HftdnModel::to_checkpoint() {
  return nn::make_checkpoint(params(), {{"kind", "hftdn"},
                                        {"hidden", std::to_string(config_.hidden)},
                                        {"groups", std::to_string(config_.groups)},
                                        {"top_k", std::to_string(config_.top_k)},
                                        {"alpha", internal::format_double(config_.alpha)},
                                        {"context_dim", std::to_string(config_.context_dim)},
                                        {"future_stride", std::to_string(config_.future_stride)}});
}

HftdnModel HftdnModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  require(ckpt.meta_at("kind") == "hftdn", ErrorCode::kMalformed, "not an hftdn checkpoint");
  HftdnConfig cfg;
  cfg.hidden = ckpt.meta_int("hidden");
  cfg.groups = ckpt.meta_int("groups");
  cfg.top_k = ckpt.meta_int("top_k");
  cfg.alpha = ckpt.meta_double("alpha");
  cfg.context_dim = ckpt.meta_int("context_dim");
  cfg.future_stride = ckpt.meta_int("future_stride");
  HftdnModel model(cfg, 0);
  ckpt.load_into(model.params());
  return model;
}

RowVector udtgm_aggregate(const std::vector<const Trajectory*>& futures, HftdnModel& model) {
  require(!futures.empty(), ErrorCode::kValidation, "guidance needs at least one candidate");
  nn::Tape tape;
  nn::Var enc = model.encode_futures(tape, futures);
  std::vector<Eigen::Index> rows(futures.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<Eigen::Index>(i);
  return model.aggregate(tape, enc, {rows}).value().row(0);
}

std::vector<std::vector<std::size_t>> retrieve_candidates(const RetrievalIndex& index,
                                                          const std::vector<const Trajectory*>& queries, int k,
                                                          double alpha) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(queries.size());
  for (const Trajectory* q : queries) {
    std::vector<std::size_t> ids;
    for (const ScoredEntry& e : index.retrieve_top_k(*q, k, alpha).ranked) ids.push_back(e.index);
    out.push_back(std::move(ids));
  }
  return out;
}

Matrix hftdn_forward(const Matrix& context, const Trajectory& h_q, const TrajectoryDictionary& dict,
                     HftdnModel& model, int k, double alpha) {
  require(context.rows() >= 1, ErrorCode::kValidation, "context has no tokens");
  if (dict.empty()) {
    log_message(LogLevel::kWarning, "dictionary is empty; guidance unavailable, context passed through");
    return context;
  }
  const RetrievalIndex index(dict);
  const auto ids = retrieve_candidates(index, {&h_q}, k, alpha)[0];
  std::vector<const Trajectory*> futures;
  for (std::size_t id : ids) futures.push_back(&dict.entries[id].future);
  nn::Tape tape;
  nn::Var enc = model.encode_futures(tape, futures);
  std::vector<Eigen::Index> rows(ids.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<Eigen::Index>(i);
  nn::Var q = model.aggregate(tape, enc, {rows});
  return model.refine(tape, tape.constant(context), {{0, context.rows()}}, q).value();
}

}  // namespace crossplan
