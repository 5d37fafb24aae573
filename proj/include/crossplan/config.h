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

#ifndef CROSSPLAN_CONFIG_H_
#define CROSSPLAN_CONFIG_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crossplan/corpus.h"
#include "crossplan/dictionary.h"

namespace crossplan {

struct PhaseOptions {
  int epochs = 30;
  int batch = 64;
  double lr = 1e-3;
};

/// Settings of the full three-phase run. Text form is one `key = value` per
/// line; `#` starts a comment; lists are comma-separated.
struct PipelineConfig {
  std::uint64_t seed = 0;

  // Synthetic corpora.
  std::vector<std::string> aux_datasets{"aux_a", "aux_b"};
  std::vector<double> aux_noise_std{0.03, 0.05};
  int aux_records = 1500;
  std::string primary_dataset = "primary";
  double noise_std = 0.02;
  int train_records = 1200;
  int val_records = 300;
  int test_records = 400;
  std::array<double, 4> maneuver_mix{0.25, 0.55, 0.12, 0.08};
  double transition_prob = 0.3;

  Schema schema{};
  FeatureLimits limits{};

  // Dictionary and retrieval.
  Resolution resolution = kDefaultResolution;
  int n_clusters = 2;
  double alpha = 0.3;
  int top_k = 9;
  int group_n = 3;
  int future_stride = 1;

  double epsilon = 0.7;
  bool s2d_start_open = true;

  // Model sizes.
  int gftm_hidden = 64;
  int gftm_head_hidden = 128;
  int model_dim = 64;
  int head_hidden = 128;
  int hftdn_hidden = 64;

  PhaseOptions gftm{30, 64, 2e-3};
  PhaseOptions main{30, 64, 2e-4};
  PhaseOptions hftdn{30, 64, 1e-4};
  double gftm_val_fraction = 0.1;

  /// Train every (GFTM, S2D, HFTDN) combination; when false only the
  /// no-prior baseline and the full system.
  bool full_ablation = true;

  void validate() const;
};

PipelineConfig parse_pipeline_config(const std::string& text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
/// Canonical text; parse_pipeline_config(serialize(c)) == c.
std::string serialize_pipeline_config(const PipelineConfig& config);

}  // namespace crossplan

#endif  // CROSSPLAN_CONFIG_H_
