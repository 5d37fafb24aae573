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

#ifndef CROSSPLAN_KMEANS_H_
#define CROSSPLAN_KMEANS_H_

#include <cstdint>
#include <vector>

#include "crossplan/matrix.h"

namespace crossplan {

struct KMeansOptions {
  int max_iterations = 100;
  /// Stop when the relative inertia change drops below this.
  double tolerance = 1e-6;
};

struct KMeansResult {
  std::vector<int> assignments;
  Matrix centroids;  // k x d
  double inertia = 0.0;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Points are rows. When k is at
/// least the number of points every point becomes its own centroid. An empty
/// cluster takes over the point farthest from its current centroid. All ties
/// resolve to the lowest index.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options = {});

}  // namespace crossplan

#endif  // CROSSPLAN_KMEANS_H_
