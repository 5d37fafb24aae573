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

#include "crossplan/kmeans.h"

#include <cmath>
#include <limits>

#include "crossplan/error.h"
#include "crossplan/rng.h"

namespace crossplan {
namespace {

double squared_distance(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double d = a(i, c) - b(j, c);
    s += d * d;
  }
  return s;
}

Matrix plus_plus_init(const Matrix& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<bool> chosen(n, false);
  Eigen::Index first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  centroids.row(0) = points.row(first);
  chosen[first] = true;
  std::vector<double> d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = squared_distance(points, i, centroids, 0);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      (void)rng.uniform();
      for (Eigen::Index i = 0; i < n && pick < 0; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    centroids.row(c) = points.row(pick);
    chosen[pick] = true;
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points, i, centroids, c));
  }
  return centroids;
}

double assign(const Matrix& points, const Matrix& centroids, std::vector<int>& assignments,
              std::vector<double>& distances) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    int best = 0;
    double best_d = squared_distance(points, i, centroids, 0);
    for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
      const double d = squared_distance(points, i, centroids, c);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    assignments[i] = best;
    distances[i] = best_d;
    inertia += best_d;
  }
  return inertia;
}

void recompute_means(const Matrix& points, const std::vector<int>& assignments, Matrix& centroids,
                     std::vector<int>& counts) {
  centroids.setZero();
  std::fill(counts.begin(), counts.end(), 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    centroids.row(assignments[i]) += points.row(i);
    ++counts[assignments[i]];
  }
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    if (counts[c] > 0) centroids.row(c) /= static_cast<double>(counts[c]);
  }
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options) {
  require(points.rows() > 0, ErrorCode::kDegenerateInput, "kmeans needs at least one point");
  require(k >= 1, ErrorCode::kValidation, "kmeans needs k >= 1");
  const Eigen::Index n = points.rows();
  KMeansResult result;
  result.assignments.resize(n);
  if (k >= n) {
    result.centroids = points;
    for (Eigen::Index i = 0; i < n; ++i) result.assignments[i] = static_cast<int>(i);
    return result;
  }

  Rng rng(seed);
  Matrix centroids = plus_plus_init(points, k, rng);
  std::vector<double> distances(n);
  std::vector<int> counts(k);
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0;; ++it) {
    const double inertia = assign(points, centroids, result.assignments, distances);
    result.iterations = it + 1;
    result.inertia = inertia;
    const bool converged =
        inertia == 0.0 || (it > 0 && std::abs(previous - inertia) <= options.tolerance * previous);
    if (converged || it + 1 >= options.max_iterations) break;
    previous = inertia;

    recompute_means(points, result.assignments, centroids, counts);
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      Eigen::Index far = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (counts[result.assignments[i]] <= 1) continue;
        const double d = squared_distance(points, i, centroids, result.assignments[i]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) continue;
      result.assignments[far] = c;
      recompute_means(points, result.assignments, centroids, counts);
    }
  }
  result.centroids = std::move(centroids);
  return result;
}

}  // namespace crossplan
