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

#ifndef CROSSPLAN_PIPELINE_H_
#define CROSSPLAN_PIPELINE_H_

#include <filesystem>
#include <string>
#include <vector>

#include "crossplan/config.h"
#include "crossplan/gftm.h"
#include "crossplan/planner.h"

namespace crossplan {

/// File locations under a pipeline output directory.
class PipelineLayout {
 public:
  explicit PipelineLayout(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path config() const { return root_ / "config.txt"; }
  std::filesystem::path corpora_dir() const { return root_ / "corpora"; }
  std::filesystem::path aux_corpus(const std::string& dataset) const { return corpora_dir() / (dataset + ".jsonl"); }
  std::filesystem::path split_corpus(const std::string& split) const {
    return corpora_dir() / ("primary_" + split + ".jsonl");
  }
  std::filesystem::path analysis_dir() const { return root_ / "analysis"; }
  std::filesystem::path dictionary() const { return root_ / "dictionary.dict"; }
  std::filesystem::path checkpoints_dir() const { return root_ / "checkpoints"; }
  std::filesystem::path gftm_pretrain() const { return checkpoints_dir() / "gftm_pretrain.ckpt"; }
  std::filesystem::path gftm_frozen() const { return checkpoints_dir() / "gftm_frozen.ckpt"; }
  std::filesystem::path planner(const std::string& tag) const { return checkpoints_dir() / ("main_" + tag + ".ckpt"); }
  std::filesystem::path hftdn(const std::string& tag) const { return checkpoints_dir() / ("hftdn_" + tag + ".ckpt"); }
  std::filesystem::path logs_dir() const { return root_ / "logs"; }
  std::filesystem::path metrics() const { return root_ / "metrics.tsv"; }
  std::filesystem::path report() const { return root_ / "report.txt"; }

 private:
  std::filesystem::path root_;
};

/// Which prior path a Phase II model uses.
struct MainVariant {
  bool use_gftm = true;
  bool use_s2d = true;
  std::string tag() const;
};

ScenarioConfig aux_scenario(const PipelineConfig& config, std::size_t index);
ScenarioConfig primary_scenario(const PipelineConfig& config, const std::string& split);

/// Stages read their inputs from and write their outputs to the layout, so
/// they can run in separate processes.
void stage_generate(const PipelineConfig& config, const PipelineLayout& layout);
void stage_analyze(const PipelineConfig& config, const PipelineLayout& layout);
void stage_build_dictionary(const PipelineConfig& config, const PipelineLayout& layout);
/// Phase I, then freeze_export.
TrainResult stage_pretrain_gftm(const PipelineConfig& config, const PipelineLayout& layout);
/// Phase II; writes the frozen planner.
TrainResult stage_train_main(const PipelineConfig& config, const PipelineLayout& layout, const MainVariant& variant);
/// Phase III on top of the variant's frozen planner.
TrainResult stage_train_hftdn(const PipelineConfig& config, const PipelineLayout& layout, const MainVariant& variant);
/// Evaluates on a primary split ("train", "val" or "test"). `hftdn` selects
/// the trained HFTDN; `fresh_hftdn` uses an untrained one instead.
Metrics stage_evaluate(const PipelineConfig& config, const PipelineLayout& layout, const MainVariant& variant,
                       bool hftdn, const std::string& split = "test", bool fresh_hftdn = false);

struct AblationRow {
  bool gftm = false;
  bool s2d = false;
  bool hftdn = false;
  Metrics metrics;
};

struct PipelineReport {
  std::vector<AblationRow> rows;
  /// Largest metric difference between a Phase II model and the same model
  /// with an untrained HFTDN attached.
  double continuity_gap = 0.0;
  std::vector<std::string> notes;
};

std::string metrics_tsv(const std::vector<AblationRow>& rows);

/// gen -> analyze -> build-dict -> Phase I -> Phase II/III per variant ->
/// ablation table and report.
PipelineReport run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir);

}  // namespace crossplan

#endif  // CROSSPLAN_PIPELINE_H_
