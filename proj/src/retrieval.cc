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

#include "crossplan/retrieval.h"

#include <algorithm>
#include <cmath>

#include "crossplan/error.h"

namespace crossplan {
namespace {

void check_inputs(const TrajectoryDictionary& dict, double alpha) {
  require(!dict.empty(), ErrorCode::kValidation, "retrieval needs a non-empty dictionary");
  require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::kValidation, "alpha must lie in [0, 1]");
}

double cosine_to_unit(double dot, double nq, double nh) {
  if (nq == 0.0 || nh == 0.0) return 0.5;
  const double c = std::clamp(dot / (nq * nh), -1.0, 1.0);
  return 0.5 * (c + 1.0);
}

bool ranks_before(const ScoredEntry& a, const ScoredEntry& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.index < b.index;
}

}  // namespace

RetrievalIndex::RetrievalIndex(const TrajectoryDictionary& dict) : dict_(&dict) {
  if (dict.empty()) return;
  dim_ = 2 * dict.entries.front().history.points.size();
  flat_.reserve(dict.size() * dim_);
  for (const DictionaryEntry& e : dict.entries) {
    const std::vector<double> v = flatten_positions(e.history);
    require(v.size() == dim_, ErrorCode::kValidation, "dictionary histories differ in length");
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    norms_.push_back(std::sqrt(n2));
    flat_.insert(flat_.end(), v.begin(), v.end());
  }
}

std::vector<ScoredEntry> RetrievalIndex::similarity_scores(const Trajectory& query, double alpha) const {
  check_inputs(*dict_, alpha);
  const std::vector<double> q = flatten_positions(query);
  require(q.size() == dim_, ErrorCode::kValidation, "query history length does not match the dictionary");
  double nq2 = 0.0;
  for (double x : q) nq2 += x * x;
  const double nq = std::sqrt(nq2);

  std::vector<ScoredEntry> scores(size());
  std::vector<double> raw(size());
  double lo = INFINITY;
  double hi = -INFINITY;
  for (std::size_t i = 0; i < size(); ++i) {
    const double* h = flat_.data() + i * dim_;
    double dot = 0.0;
    double d2 = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      dot += q[j] * h[j];
      const double d = q[j] - h[j];
      d2 += d * d;
    }
    scores[i].index = i;
    scores[i].similarity = cosine_to_unit(dot, nq, norms_[i]);
    raw[i] = std::sqrt(d2);
    lo = std::min(lo, raw[i]);
    hi = std::max(hi, raw[i]);
  }
  const double span = hi - lo;
  for (std::size_t i = 0; i < size(); ++i) {
    scores[i].distance = span > 0.0 ? (raw[i] - lo) / span : 0.0;
    scores[i].score = alpha * scores[i].similarity - (1.0 - alpha) * scores[i].distance;
  }
  return scores;
}

RetrievalResult RetrievalIndex::retrieve_top_k(const Trajectory& query, int k, double alpha) const {
  require(k >= 1, ErrorCode::kValidation, "K must be >= 1");
  std::vector<ScoredEntry> scores = similarity_scores(query, alpha);
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), scores.size());
  std::partial_sort(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(keep), scores.end(), ranks_before);
  scores.resize(keep);
  return {std::move(scores)};
}

std::vector<ScoredEntry> similarity_scores(const Trajectory& query, const TrajectoryDictionary& dict, double alpha) {
  check_inputs(dict, alpha);
  return RetrievalIndex(dict).similarity_scores(query, alpha);
}

RetrievalResult retrieve_top_k(const Trajectory& query, const TrajectoryDictionary& dict, int k, double alpha) {
  check_inputs(dict, alpha);
  return RetrievalIndex(dict).retrieve_top_k(query, k, alpha);
}

RetrievalResult brute_force_oracle(const Trajectory& query, const TrajectoryDictionary& dict, int k, double alpha) {
  check_inputs(dict, alpha);
  require(k >= 1, ErrorCode::kValidation, "K must be >= 1");
  const std::size_t n = dict.size();
  const std::size_t steps = query.points.size();

  double nq2 = 0.0;
  for (const State& s : query.points) {
    nq2 += s.x * s.x;
    nq2 += s.y * s.y;
  }
  const double nq = std::sqrt(nq2);

  std::vector<double> sim(n), dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pts = dict.entries[i].history.points;
    require(pts.size() == steps, ErrorCode::kValidation, "query history length does not match the dictionary");
    double nh2 = 0.0;
    double dot = 0.0;
    double d2 = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      nh2 += pts[t].x * pts[t].x;
      nh2 += pts[t].y * pts[t].y;
    }
    for (std::size_t t = 0; t < steps; ++t) {
      const double qx = query.points[t].x;
      const double qy = query.points[t].y;
      dot += qx * pts[t].x;
      d2 += (qx - pts[t].x) * (qx - pts[t].x);
      dot += qy * pts[t].y;
      d2 += (qy - pts[t].y) * (qy - pts[t].y);
    }
    const double nh = std::sqrt(nh2);
    if (nq == 0.0 || nh == 0.0) {
      sim[i] = 0.5;
    } else {
      double c = dot / (nq * nh);
      if (c > 1.0) c = 1.0;
      if (c < -1.0) c = -1.0;
      sim[i] = 0.5 * (c + 1.0);
    }
    dist[i] = std::sqrt(d2);
  }
  const double lo = *std::min_element(dist.begin(), dist.end());
  const double hi = *std::max_element(dist.begin(), dist.end());

  std::vector<ScoredEntry> all(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d_norm = hi > lo ? (dist[i] - lo) / (hi - lo) : 0.0;
    all[i] = {i, alpha * sim[i] - (1.0 - alpha) * d_norm, sim[i], d_norm};
  }
  std::stable_sort(all.begin(), all.end(), [](const ScoredEntry& a, const ScoredEntry& b) { return a.score > b.score; });
  all.resize(std::min<std::size_t>(static_cast<std::size_t>(k), n));
  return {std::move(all)};
}

}  // namespace crossplan
