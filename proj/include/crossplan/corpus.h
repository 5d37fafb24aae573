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

#ifndef CROSSPLAN_CORPUS_H_
#define CROSSPLAN_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crossplan/trajectory.h"

namespace crossplan {

/// One history-future pair plus optional neighbor tracks, all in the ego
/// frame of the last history pose.
struct CorpusRecord {
  std::string dataset_id;
  std::string scenario_id;
  double dt = 0.1;
  Trajectory history;
  Trajectory future;
  std::vector<Trajectory> neighbors;         // histories, each with v/omega
  std::vector<Trajectory> neighbor_futures;  // same count as neighbors, or empty

  TrajectoryPair pair() const { return {history, future}; }
  friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

void validate_record(const CorpusRecord& record, const Schema& schema);

struct ScenarioConfig {
  /// Shares of Stationary, Forward, LeftTurn, RightTurn.
  std::array<double, 4> maneuver_mix{0.25, 0.55, 0.12, 0.08};
  std::array<double, 2> speed_range{3.0, 15.0};
  std::array<double, 2> turn_radius_range{8.0, 40.0};
  double noise_std = 0.02;
  std::string dataset_id = "synthetic";
  std::uint64_t seed = 0;
  /// Probability of drawing a new maneuver at the history/future boundary.
  double transition_prob = 0.3;
  int max_neighbors = 4;
  Schema schema{};

  void validate() const;
};

/// Deterministic in (cfg.seed, index): the geometry stream ignores dataset_id
/// and noise_std, and the noise stream is separate, so two configs that differ
/// only in those share the noiseless geometry.
CorpusRecord gen_scenario(const ScenarioConfig& cfg, std::uint64_t index);

struct Corpus {
  std::string manifest_json;  // empty when the file carries no manifest
  std::vector<CorpusRecord> records;
};

/// Writes `count` records with a leading manifest line.
void gen_corpus(const ScenarioConfig& cfg, std::size_t count, const std::filesystem::path& path);

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records,
                  const std::string& manifest_json = {});
Corpus read_corpus(const std::filesystem::path& path, const Schema& schema = {});

/// Concatenates the records of several corpus files in argument order.
std::vector<CorpusRecord> read_corpora(const std::vector<std::filesystem::path>& paths, const Schema& schema = {});

std::string record_to_json(const CorpusRecord& record);
CorpusRecord record_from_json(const std::string& line, const Schema& schema);

}  // namespace crossplan

#endif  // CROSSPLAN_CORPUS_H_
