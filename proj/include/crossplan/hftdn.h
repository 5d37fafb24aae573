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

#ifndef CROSSPLAN_HFTDN_H_
#define CROSSPLAN_HFTDN_H_

#include <cstdint>
#include <string>
#include <vector>

#include "crossplan/dictionary.h"
#include "crossplan/nn/checkpoint.h"
#include "crossplan/nn/layers.h"
#include "crossplan/retrieval.h"

namespace crossplan {

struct HftdnConfig {
  int hidden = 64;       // D_h, size of the guidance vector
  int groups = 3;        // n
  int top_k = kDefaultTopK;
  double alpha = kDefaultAlpha;
  int context_dim = 64;  // planner token width
  /// Every stride-th future step (ending at the last) enters the encoder.
  int future_stride = 1;
};

/// Sizes of `n` rank-contiguous groups over `k` candidates, as equal as
/// possible with the larger groups first. Uses min(k, n) groups.
std::vector<int> group_sizes(int k, int n);

struct GuidanceVector {
  RowVector q;
  /// Dictionary entry indices in retrieval rank order.
  std::vector<std::size_t> provenance;
};

/// Guidance generation and its cross-attention injection. The output
/// projection starts at zero so an untrained model leaves the context as is.
class HftdnModel {
 public:
  HftdnModel() = default;
  HftdnModel(const HftdnConfig& config, std::uint64_t seed);

  const HftdnConfig& config() const { return config_; }

  /// Final encoder state of each future: n x hidden.
  nn::Var encode_futures(nn::Tape& tape, const std::vector<const Trajectory*>& futures);
  /// One guidance row per candidate list. Each list holds rows of
  /// `encodings` in rank order; it is split into rank-contiguous groups,
  /// mean-pooled within groups and max-pooled across them.
  nn::Var aggregate(nn::Tape& tape, nn::Var encodings, const std::vector<std::vector<Eigen::Index>>& candidates);
  /// Cross-attention of guidance row i over the context rows segments[i];
  /// the projected result is added to every row of that segment.
  nn::Var refine(nn::Tape& tape, nn::Var context, const std::vector<nn::Segment>& segments, nn::Var guidance);

  nn::ParamList params();
  std::string current_hash() { return nn::parameters_hash(params()); }
  nn::Checkpoint to_checkpoint();
  static HftdnModel from_checkpoint(const nn::Checkpoint& ckpt);

  nn::Lstm encoder;
  nn::Linear query;
  nn::Linear key;
  nn::Linear value;
  nn::Linear output;

 private:
  HftdnConfig config_;
};

/// Pools the encodings of `futures` (rank order) into the guidance vector.
RowVector udtgm_aggregate(const std::vector<const Trajectory*>& futures, HftdnModel& model);

/// Retrieves the top-K futures for `h_q`, aggregates them and refines the
/// M x D `context`. An empty dictionary returns the context unchanged and
/// logs a warning.
Matrix hftdn_forward(const Matrix& context, const Trajectory& h_q, const TrajectoryDictionary& dict,
                     HftdnModel& model, int k, double alpha);

/// Candidate entry indices per query history, in rank order.
std::vector<std::vector<std::size_t>> retrieve_candidates(const RetrievalIndex& index,
                                                          const std::vector<const Trajectory*>& queries, int k,
                                                          double alpha);

}  // namespace crossplan

#endif  // CROSSPLAN_HFTDN_H_
