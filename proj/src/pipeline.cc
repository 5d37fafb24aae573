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

#include "crossplan/pipeline.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <tuple>

#include "crossplan/analysis.h"
#include "crossplan/encoding.h"
#include "crossplan/error.h"
#include "crossplan/rng.h"
#include "file_util.h"

namespace crossplan {
namespace {

using internal::format_double;

std::uint64_t split_index(const std::string& split) {
  if (split == "train") return 0;
  if (split == "val") return 1;
  if (split == "test") return 2;
  fail(ErrorCode::kValidation, "unknown split '" + split + "'");
}

std::size_t split_count(const PipelineConfig& config, const std::string& split) {
  switch (split_index(split)) {
    case 0:
      return static_cast<std::size_t>(config.train_records);
    case 1:
      return static_cast<std::size_t>(config.val_records);
    default:
      return static_cast<std::size_t>(config.test_records);
  }
}

std::vector<CorpusRecord> load_split(const PipelineConfig& config, const PipelineLayout& layout,
                                     const std::string& split) {
  return read_corpus(layout.split_corpus(split), config.schema).records;
}

std::vector<std::filesystem::path> aux_paths(const PipelineConfig& config, const PipelineLayout& layout) {
  std::vector<std::filesystem::path> out;
  for (const std::string& id : config.aux_datasets) out.push_back(layout.aux_corpus(id));
  return out;
}

PlannerConfig planner_config(const PipelineConfig& config, const MainVariant& variant) {
  PlannerConfig pc;
  pc.model_dim = config.model_dim;
  pc.prior_dim = config.gftm_hidden;
  pc.head_hidden = config.head_hidden;
  pc.use_gftm = variant.use_gftm;
  pc.use_s2d = variant.use_s2d;
  pc.epsilon = config.epsilon;
  pc.s2d_start_open = config.s2d_start_open;
  pc.schema = config.schema;
  return pc;
}

HftdnConfig hftdn_config(const PipelineConfig& config) {
  HftdnConfig hc;
  hc.hidden = config.hftdn_hidden;
  hc.groups = config.group_n;
  hc.top_k = config.top_k;
  hc.alpha = config.alpha;
  hc.context_dim = config.model_dim;
  hc.future_stride = config.future_stride;
  return hc;
}

TrainOptions train_options(const PhaseOptions& phase, std::uint64_t seed) {
  TrainOptions o;
  o.epochs = phase.epochs;
  o.batch = phase.batch;
  o.lr = phase.lr;
  o.seed = seed;
  return o;
}

void write_log(const std::filesystem::path& path, const TrainResult& result) {
  std::ostringstream out;
  out << "epoch\ttrain_loss\tval_loss\n";
  out << "0\t-\t" << format_double(result.initial_val_loss) << "\n";
  for (const EpochLog& e : result.epochs) {
    out << e.epoch << '\t' << format_double(e.train_loss) << '\t' << format_double(e.val_loss) << '\n';
  }
  internal::write_file(path, out.str(), "training log");
}

std::function<void(const EpochLog&)> progress(const std::string& phase) {
  return [phase](const EpochLog& e) {
    log_message(LogLevel::kInfo, phase + " epoch " + std::to_string(e.epoch) + " train " +
                                     format_double(e.train_loss) + " val " + format_double(e.val_loss));
  };
}

GftmModel load_frozen_gftm(const PipelineLayout& layout) {
  require(std::filesystem::exists(layout.gftm_frozen()), ErrorCode::kPhaseOrder,
          "no frozen gftm checkpoint; run Phase I first");
  GftmModel g = GftmModel::from_checkpoint(nn::read_checkpoint(layout.gftm_frozen()));
  require(g.mode() == GftmMode::kFrozen, ErrorCode::kPhaseOrder, "gftm checkpoint is not frozen");
  return g;
}

PlannerModel load_frozen_planner(const PipelineLayout& layout, const MainVariant& variant) {
  require(std::filesystem::exists(layout.planner(variant.tag())), ErrorCode::kPhaseOrder,
          "no Phase II checkpoint for " + variant.tag() + "; run main training first");
  PlannerModel p = PlannerModel::from_checkpoint(nn::read_checkpoint(layout.planner(variant.tag())));
  require(p.frozen(), ErrorCode::kPhaseOrder, "planner checkpoint is not frozen");
  return p;
}

double metric_gap(const Metrics& a, const Metrics& b) {
  return std::max({std::abs(a.ade - b.ade), std::abs(a.fde - b.fde), std::abs(a.yaw_mae - b.yaw_mae),
                   std::abs(a.plan_loss - b.plan_loss)});
}

}  // namespace

std::string MainVariant::tag() const {
  return std::string("g") + (use_gftm ? "1" : "0") + "_s" + (use_s2d ? "1" : "0");
}

ScenarioConfig aux_scenario(const PipelineConfig& config, std::size_t index) {
  require(index < config.aux_datasets.size(), ErrorCode::kValidation, "auxiliary dataset index out of range");
  ScenarioConfig sc;
  sc.maneuver_mix = config.maneuver_mix;
  sc.transition_prob = config.transition_prob;
  sc.noise_std = config.aux_noise_std[index];
  sc.dataset_id = config.aux_datasets[index];
  sc.seed = derive_seed({config.seed, 1, index});
  sc.schema = config.schema;
  return sc;
}

ScenarioConfig primary_scenario(const PipelineConfig& config, const std::string& split) {
  ScenarioConfig sc;
  sc.maneuver_mix = config.maneuver_mix;
  sc.transition_prob = config.transition_prob;
  sc.noise_std = config.noise_std;
  sc.dataset_id = config.primary_dataset;
  sc.seed = derive_seed({config.seed, 2, split_index(split)});
  sc.schema = config.schema;
  return sc;
}

void stage_generate(const PipelineConfig& config, const PipelineLayout& layout) {
  config.validate();
  internal::write_file(layout.config(), serialize_pipeline_config(config), "config");
  for (std::size_t i = 0; i < config.aux_datasets.size(); ++i) {
    gen_corpus(aux_scenario(config, i), static_cast<std::size_t>(config.aux_records),
               layout.aux_corpus(config.aux_datasets[i]));
  }
  for (const char* split : {"train", "val", "test"}) {
    gen_corpus(primary_scenario(config, split), split_count(config, split), layout.split_corpus(split));
  }
}

void stage_analyze(const PipelineConfig& config, const PipelineLayout& layout) {
  std::vector<std::filesystem::path> paths = aux_paths(config, layout);
  for (const char* split : {"train", "val", "test"}) paths.push_back(layout.split_corpus(split));
  write_analysis(read_corpora(paths, config.schema), layout.analysis_dir());
}

void stage_build_dictionary(const PipelineConfig& config, const PipelineLayout& layout) {
  DictionaryConfig dc;
  dc.resolution = config.resolution;
  dc.n_clusters = config.n_clusters;
  dc.seed = derive_seed({config.seed, 3});
  dc.limits = config.limits;
  dc.schema = config.schema;
  const TrajectoryDictionary dict = build_dictionary(aux_paths(config, layout), dc);
  persist_dictionary(dict, layout.dictionary());

  // Corpus versus dictionary class mix.
  auto rows = maneuver_distribution(read_corpora(aux_paths(config, layout), config.schema));
  ManeuverDistribution source = rows.back();
  source.dataset_id = "sources";
  std::ostringstream out;
  out << "distribution\tclass\tcount\tshare\tnormalized_entropy\n";
  for (const ManeuverDistribution& d : {source, dictionary_distribution(dict)}) {
    for (int k = 0; k < kNumManeuverClasses; ++k) {
      out << d.dataset_id << '\t' << maneuver_name(static_cast<ManeuverClass>(k)) << '\t' << d.counts[k] << '\t'
          << format_double(d.shares[k]) << '\t' << format_double(normalized_entropy(d.shares)) << '\n';
    }
  }
  internal::write_file(layout.analysis_dir() / "dictionary_distribution.tsv", out.str(), "analysis table");
}

TrainResult stage_pretrain_gftm(const PipelineConfig& config, const PipelineLayout& layout) {
  std::vector<CorpusRecord> train, val;
  split_records(read_corpora(aux_paths(config, layout), config.schema), config.gftm_val_fraction,
                derive_seed({config.seed, 4, 1}), train, val);
  GftmConfig gc;
  gc.hidden = config.gftm_hidden;
  gc.head_hidden = config.gftm_head_hidden;
  gc.schema = config.schema;
  GftmModel model(gc, derive_seed({config.seed, 4}));
  TrainOptions options = train_options(config.gftm, derive_seed({config.seed, 5}));
  options.checkpoint_path = layout.gftm_pretrain();
  options.on_epoch = progress("phase I");
  TrainResult result = gftm_pretrain(model, train, val, options);
  nn::write_checkpoint(layout.gftm_pretrain(), model.to_checkpoint());
  GftmModel frozen = freeze_export(model);
  nn::write_checkpoint(layout.gftm_frozen(), frozen.to_checkpoint());
  write_log(layout.logs_dir() / "phase1_gftm.tsv", result);
  return result;
}

TrainResult stage_train_main(const PipelineConfig& config, const PipelineLayout& layout, const MainVariant& variant) {
  std::optional<GftmModel> gftm;
  if (variant.use_gftm) gftm.emplace(load_frozen_gftm(layout));
  const auto train = load_split(config, layout, "train");
  const auto val = load_split(config, layout, "val");
  PlannerModel planner(planner_config(config, variant), derive_seed({config.seed, 6}));
  planner.mask.set_phase(S2dPhase::kMainTraining);
  TrainOptions options = train_options(config.main, derive_seed({config.seed, 7}));
  options.on_epoch = progress("phase II " + variant.tag());
  TrainResult result = train_main(planner, gftm ? &*gftm : nullptr, train, val, options);
  if (gftm) {
    // The checkpoint on disk is the reference for the isolation contract.
    const GftmModel reference = load_frozen_gftm(layout);
    require(gftm->current_hash() == GftmModel(reference).current_hash(), ErrorCode::kIsolation,
            "gftm differs from its frozen checkpoint after Phase II");
  }
  planner.freeze();
  nn::write_checkpoint(layout.planner(variant.tag()), planner.to_checkpoint());
  write_log(layout.logs_dir() / ("phase2_" + variant.tag() + ".tsv"), result);
  return result;
}

TrainResult stage_train_hftdn(const PipelineConfig& config, const PipelineLayout& layout,
                              const MainVariant& variant) {
  PlannerModel planner = load_frozen_planner(layout, variant);
  std::optional<GftmModel> gftm;
  if (variant.use_gftm) gftm.emplace(load_frozen_gftm(layout));
  const TrajectoryDictionary dict = load_dictionary(layout.dictionary());
  const auto train = load_split(config, layout, "train");
  const auto val = load_split(config, layout, "val");
  planner.mask.set_phase(S2dPhase::kHftdnTraining);
  HftdnModel hftdn(hftdn_config(config), derive_seed({config.seed, 8}));
  PlanningSystem system{gftm ? &*gftm : nullptr, &planner, &hftdn, &dict};
  TrainOptions options = train_options(config.hftdn, derive_seed({config.seed, 9}));
  options.on_epoch = progress("phase III " + variant.tag());
  TrainResult result = hftdn_train(system, train, val, options);
  const PlannerModel reference = load_frozen_planner(layout, variant);
  require(planner.current_hash() == PlannerModel(reference).current_hash(), ErrorCode::kIsolation,
          "planner differs from its Phase II checkpoint after Phase III");
  nn::write_checkpoint(layout.hftdn(variant.tag()), hftdn.to_checkpoint());
  write_log(layout.logs_dir() / ("phase3_" + variant.tag() + ".tsv"), result);
  return result;
}

Metrics stage_evaluate(const PipelineConfig& config, const PipelineLayout& layout, const MainVariant& variant,
                       bool hftdn, const std::string& split, bool fresh_hftdn) {
  split_index(split);
  PlannerModel planner = load_frozen_planner(layout, variant);
  planner.mask.set_phase(S2dPhase::kInference);
  std::optional<GftmModel> gftm;
  if (variant.use_gftm) gftm.emplace(load_frozen_gftm(layout));
  std::optional<HftdnModel> guide;
  std::optional<TrajectoryDictionary> dict;
  if (hftdn) {
    dict.emplace(load_dictionary(layout.dictionary()));
    if (fresh_hftdn) {
      guide.emplace(hftdn_config(config), derive_seed({config.seed, 8}));
    } else {
      require(std::filesystem::exists(layout.hftdn(variant.tag())), ErrorCode::kPhaseOrder,
              "no Phase III checkpoint for " + variant.tag());
      guide.emplace(HftdnModel::from_checkpoint(nn::read_checkpoint(layout.hftdn(variant.tag()))));
    }
  }
  PlanningSystem system{gftm ? &*gftm : nullptr, &planner, guide ? &*guide : nullptr, dict ? &*dict : nullptr};
  return evaluate(system, load_split(config, layout, split));
}

std::string metrics_tsv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "gftm\ts2d\thftdn\tade\tfde\tyaw_mae\tplan_loss\trecords\n";
  for (const AblationRow& r : rows) {
    out << (r.gftm ? 1 : 0) << '\t' << (r.s2d ? 1 : 0) << '\t' << (r.hftdn ? 1 : 0) << '\t'
        << format_double(r.metrics.ade) << '\t' << format_double(r.metrics.fde) << '\t'
        << format_double(r.metrics.yaw_mae) << '\t' << format_double(r.metrics.plan_loss) << '\t'
        << r.metrics.records << '\n';
  }
  return out.str();
}

PipelineReport run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  const PipelineLayout layout(out_dir);
  PipelineReport report;
  auto note = [&report](const std::string& s) {
    report.notes.push_back(s);
    log_message(LogLevel::kInfo, s);
  };

  stage_generate(config, layout);
  stage_analyze(config, layout);
  stage_build_dictionary(config, layout);
  note("dictionary entries: " + std::to_string(load_dictionary(layout.dictionary()).size()));

  const TrainResult phase1 = stage_pretrain_gftm(config, layout);
  note("phase I validation loss: " + format_double(phase1.initial_val_loss) + " -> " +
       format_double(phase1.epochs.empty() ? phase1.initial_val_loss : phase1.epochs.back().val_loss));

  std::vector<MainVariant> variants;
  if (config.full_ablation) {
    variants = {{false, false}, {false, true}, {true, false}, {true, true}};
  } else {
    variants = {{false, false}, {true, true}};
  }
  for (const MainVariant& v : variants) {
    stage_train_main(config, layout, v);
    note("phase II " + v.tag() + ": gftm isolation check passed");
    const Metrics phase2 = stage_evaluate(config, layout, v, false);
    report.rows.push_back({v.use_gftm, v.use_s2d, false, phase2});

    const bool with_hftdn = config.full_ablation || (v.use_gftm && v.use_s2d);
    if (!with_hftdn) continue;
    const Metrics start = stage_evaluate(config, layout, v, true, "test", true);
    const double gap = metric_gap(phase2, start);
    report.continuity_gap = std::max(report.continuity_gap, gap);
    note("phase III " + v.tag() + ": start-of-phase metric gap " + format_double(gap));
    stage_train_hftdn(config, layout, v);
    note("phase III " + v.tag() + ": planner and gftm isolation checks passed");
    report.rows.push_back({v.use_gftm, v.use_s2d, true, stage_evaluate(config, layout, v, true)});
  }
  std::sort(report.rows.begin(), report.rows.end(), [](const AblationRow& a, const AblationRow& b) {
    return std::tuple(a.hftdn, a.gftm, a.s2d) < std::tuple(b.hftdn, b.gftm, b.s2d);
  });
  internal::write_file(layout.metrics(), metrics_tsv(report.rows), "metrics");

  std::ostringstream text;
  text << "crossplan pipeline report\n\n";
  for (const std::string& n : report.notes) text << n << "\n";
  text << "max phase III start gap: " << format_double(report.continuity_gap) << "\n\n" << metrics_tsv(report.rows);
  internal::write_file(layout.report(), text.str(), "report");
  return report;
}

}  // namespace crossplan
