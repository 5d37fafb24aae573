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

#ifndef CROSSPLAN_ANALYSIS_H_
#define CROSSPLAN_ANALYSIS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crossplan/corpus.h"
#include "crossplan/dictionary.h"

namespace crossplan {

/// Label of the rows that aggregate every dataset.
inline constexpr const char* kAllDatasets = "all";

struct ManeuverDistribution {
  std::string dataset_id;
  std::uint64_t total = 0;
  std::array<std::uint64_t, kNumManeuverClasses> counts{};
  std::array<double, kNumManeuverClasses> shares{};
};

/// History classes per dataset_id (sorted), followed by the "all" row.
/// Throws kDegenerateInput on an empty corpus.
std::vector<ManeuverDistribution> maneuver_distribution(const std::vector<CorpusRecord>& records,
                                                        const ManeuverThresholds& thresholds = {});

/// Classes of the dictionary entries' histories as a single distribution.
ManeuverDistribution dictionary_distribution(const TrajectoryDictionary& dict,
                                             const ManeuverThresholds& thresholds = {});

/// Shannon entropy of the shares divided by log(number of classes).
double normalized_entropy(const std::array<double, kNumManeuverClasses>& shares);

struct TransitionMatrix {
  std::string dataset_id;
  std::uint64_t total = 0;
  /// counts[history][future]
  std::array<std::array<std::uint64_t, kNumManeuverClasses>, kNumManeuverClasses> counts{};
  /// Row-normalized counts; a row without observations is uniform and flagged.
  std::array<std::array<double, kNumManeuverClasses>, kNumManeuverClasses> probabilities{};
  std::array<bool, kNumManeuverClasses> empty_row{};
  /// Share of all transitions in the seven most frequent cells.
  double top7_coverage = 0.0;
};

/// History-to-future class transitions over the whole corpus.
TransitionMatrix transition_matrix(const std::vector<CorpusRecord>& records, const ManeuverThresholds& thresholds = {});
/// Per dataset_id (sorted), followed by the "all" matrix.
std::vector<TransitionMatrix> transition_matrices(const std::vector<CorpusRecord>& records,
                                                  const ManeuverThresholds& thresholds = {});

/// Share of the total held by the k largest cells (ties do not matter for
/// the sum).
double top_k_coverage(const std::array<std::array<std::uint64_t, kNumManeuverClasses>, kNumManeuverClasses>& counts,
                      int k);

/// Tab-separated tables with a header row.
std::string distribution_tsv(const std::vector<ManeuverDistribution>& rows);
std::string transition_tsv(const std::vector<TransitionMatrix>& matrices);
std::string transition_summary_tsv(const std::vector<TransitionMatrix>& matrices);

/// Writes maneuver_distribution.tsv, transition_matrix.tsv and
/// transition_summary.tsv into `out_dir`.
void write_analysis(const std::vector<CorpusRecord>& records, const std::filesystem::path& out_dir);

}  // namespace crossplan

#endif  // CROSSPLAN_ANALYSIS_H_
