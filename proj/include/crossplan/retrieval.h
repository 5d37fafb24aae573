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

#ifndef CROSSPLAN_RETRIEVAL_H_
#define CROSSPLAN_RETRIEVAL_H_

#include <cstddef>
#include <vector>

#include "crossplan/dictionary.h"

namespace crossplan {

inline constexpr double kDefaultAlpha = 0.3;
inline constexpr int kDefaultTopK = 9;

/// Hybrid score of one dictionary entry against a query history:
/// score = alpha * similarity - (1 - alpha) * distance, where similarity is
/// the cosine mapped to [0, 1] and distance is the L2 distance min-max
/// normalized over the dictionary for this query.
struct ScoredEntry {
  std::size_t index = 0;
  double score = 0.0;
  double similarity = 0.0;
  double distance = 0.0;

  friend bool operator==(const ScoredEntry&, const ScoredEntry&) = default;
};

/// Ranked by score, ties by entry index ascending.
struct RetrievalResult {
  std::vector<ScoredEntry> ranked;

  friend bool operator==(const RetrievalResult&, const RetrievalResult&) = default;
};

/// Precomputes flattened entry histories and their norms. Holds a reference
/// to the dictionary, which must outlive it.
class RetrievalIndex {
 public:
  explicit RetrievalIndex(const TrajectoryDictionary& dict);

  /// One score per entry, in entry order.
  std::vector<ScoredEntry> similarity_scores(const Trajectory& query, double alpha) const;
  RetrievalResult retrieve_top_k(const Trajectory& query, int k, double alpha) const;

  const TrajectoryDictionary& dictionary() const { return *dict_; }
  std::size_t size() const { return norms_.size(); }

 private:
  const TrajectoryDictionary* dict_;
  std::size_t dim_ = 0;
  std::vector<double> flat_;  // size() x dim_
  std::vector<double> norms_;
};

std::vector<ScoredEntry> similarity_scores(const Trajectory& query, const TrajectoryDictionary& dict, double alpha);
RetrievalResult retrieve_top_k(const Trajectory& query, const TrajectoryDictionary& dict, int k, double alpha);

/// Scores every entry from scratch and stable-sorts. Reference for testing
/// retrieve_top_k.
RetrievalResult brute_force_oracle(const Trajectory& query, const TrajectoryDictionary& dict, int k, double alpha);

}  // namespace crossplan

#endif  // CROSSPLAN_RETRIEVAL_H_
