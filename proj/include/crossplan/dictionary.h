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

#ifndef CROSSPLAN_DICTIONARY_H_
#define CROSSPLAN_DICTIONARY_H_

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crossplan/corpus.h"
#include "crossplan/trajectory.h"

namespace crossplan {

using Resolution = std::array<double, 5>;

inline constexpr Resolution kDefaultResolution{2.0, 1.0, 0.02, 0.1, 0.1};

/// Feature cell: floor(F / r) componentwise.
struct BinIndex {
  std::array<std::int64_t, 5> cell{};
  auto operator<=>(const BinIndex&) const = default;
};

BinIndex bin_index(const MotionFeatures& features, const Resolution& resolution);

/// Seed of the per-bin clustering run; `which` is 0 for histories, 1 for
/// futures. Depends only on the build seed and the bin.
std::uint64_t bin_cluster_seed(std::uint64_t seed, const BinIndex& bin, int which);

/// (x, y) per step, concatenated.
std::vector<double> flatten_positions(const Trajectory& traj);

struct DictionaryEntry {
  Trajectory history;
  Trajectory future;
  MotionFeatures features;
  BinIndex bin;
  std::string source_dataset;
  std::string scenario_id;
  /// Position of the pair in the concatenated build input.
  std::uint64_t record_index = 0;

  friend bool operator==(const DictionaryEntry&, const DictionaryEntry&) = default;
};

struct SourceManifest {
  std::string name;
  std::string sha256;
  std::uint64_t records = 0;
  friend bool operator==(const SourceManifest&, const SourceManifest&) = default;
};

struct DictionaryConfig {
  Resolution resolution = kDefaultResolution;
  int n_clusters = 2;
  std::uint64_t seed = 0;
  FeatureLimits limits{};
  Schema schema{};
};

struct TrajectoryDictionary {
  Resolution resolution = kDefaultResolution;
  int n_clusters = 2;
  std::uint64_t seed = 0;
  Schema schema{};
  std::vector<SourceManifest> sources;
  std::uint64_t total_records = 0;
  std::uint64_t bin_count = 0;
  std::vector<DictionaryEntry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
  friend bool operator==(const TrajectoryDictionary&, const TrajectoryDictionary&) = default;
};

/// Bins pairs by clipped history features, clusters histories and futures of
/// every non-empty bin separately, keeps the pair nearest each centroid, and
/// de-duplicates the union.
TrajectoryDictionary build_dictionary(const std::vector<CorpusRecord>& records, const DictionaryConfig& config,
                                      std::vector<SourceManifest> sources = {});
TrajectoryDictionary build_dictionary(const std::vector<std::filesystem::path>& corpora,
                                      const DictionaryConfig& config);

inline constexpr int kDictionaryFormatVersion = 1;

void persist_dictionary(const TrajectoryDictionary& dict, const std::filesystem::path& path);
/// Throws kVersionMismatch, kChecksum or kMalformed; never returns a partial
/// dictionary.
TrajectoryDictionary load_dictionary(const std::filesystem::path& path);

std::string serialize_dictionary(const TrajectoryDictionary& dict);
TrajectoryDictionary parse_dictionary(const std::string& text);

}  // namespace crossplan

#endif  // CROSSPLAN_DICTIONARY_H_
