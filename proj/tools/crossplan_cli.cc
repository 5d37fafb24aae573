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

// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crossplan/crossplan.h"

namespace {

struct Globals {
  std::string config_path;
  std::optional<long long> seed;
  std::string out = "crossplan_out";
  std::vector<std::string> overrides;
  bool verbose = false;
};

int exit_code(cp_status status) {
  if (status == CP_OK) return 0;
  return status == CP_ERR_ISOLATION ? 2 : 1;
}

int report_failure(cp_status status) {
  std::cerr << "crossplan: " << cp_status_name(status) << ": " << cp_last_error() << "\n";
  return exit_code(status);
}

class ConfigHandle {
 public:
  ~ConfigHandle() { cp_config_free(ptr_); }
  cp_status open(const Globals& g) {
    cp_status s = g.config_path.empty() ? cp_config_default(&ptr_) : cp_config_load(g.config_path.c_str(), &ptr_);
    if (s != CP_OK) return s;
    if (g.seed) {
      s = cp_config_set(ptr_, "seed", std::to_string(*g.seed).c_str());
      if (s != CP_OK) return s;
    }
    for (const std::string& kv : g.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::cerr << "crossplan: --set expects KEY=VALUE, got '" << kv << "'\n";
        return CP_ERR_VALIDATION;
      }
      s = cp_config_set(ptr_, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
      if (s != CP_OK) return s;
    }
    return CP_OK;
  }
  const cp_config* get() const { return ptr_; }

 private:
  cp_config* ptr_ = nullptr;
};

void print_metrics(const cp_metrics& m) {
  std::printf("ade\tfde\tyaw_mae\tplan_loss\trecords\n%.6f\t%.6f\t%.6f\t%.6f\t%zu\n", m.ade, m.fde, m.yaw_mae,
              m.plan_loss, m.records);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crossplan: cross-dataset trajectory planning toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Pipeline config file (key = value lines)");
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--set", g.overrides, "Override a config key, KEY=VALUE (repeatable)");
  app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");

  auto* gen = app.add_subcommand("gen", "Generate synthetic corpora");
  auto* analyze = app.add_subcommand("analyze", "Maneuver distribution and transition tables");
  std::vector<std::string> analyze_corpora;
  analyze->add_option("--corpus", analyze_corpora, "Analyze these corpus files instead of the generated ones");
  auto* build_dict = app.add_subcommand("build-dict", "Build the trajectory dictionary");
  auto* retrieve = app.add_subcommand("retrieve", "Top-k dictionary lookup for one record");
  std::size_t retrieve_index = 0;
  std::string retrieve_corpus, retrieve_dict;
  int retrieve_k = 9;
  double retrieve_alpha = 0.3;
  retrieve->add_option("--index", retrieve_index, "Record index in the corpus")->required();
  retrieve->add_option("--corpus", retrieve_corpus, "Corpus file (default: primary test split under --out)");
  retrieve->add_option("--dict", retrieve_dict, "Dictionary file (default: dictionary under --out)");
  retrieve->add_option("--k", retrieve_k, "Number of results")->capture_default_str();
  retrieve->add_option("--alpha", retrieve_alpha, "Weight of the similarity term")->capture_default_str();
  auto* pretrain = app.add_subcommand("pretrain-gftm", "Phase I: pretrain and freeze the prior model");

  bool no_gftm = false, no_s2d = false;
  auto variant_flags = [&](CLI::App* sub) {
    sub->add_flag("--no-gftm", no_gftm, "Planner variant without the pretrained prior");
    sub->add_flag("--no-s2d", no_s2d, "Planner variant without the sparse mask");
  };
  auto* train_main = app.add_subcommand("train-main", "Phase II: train the planner");
  variant_flags(train_main);
  auto* train_hftdn = app.add_subcommand("train-hftdn", "Phase III: train the refinement network");
  variant_flags(train_hftdn);
  auto* eval = app.add_subcommand("eval", "Evaluate a trained planner");
  variant_flags(eval);
  bool eval_hftdn = false;
  std::string eval_split = "test";
  eval->add_flag("--hftdn", eval_hftdn, "Include the Phase III refinement");
  eval->add_option("--split", eval_split, "train, val or test")->capture_default_str();
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage and the ablation grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  cp_set_verbose(g.verbose ? 1 : 0);
  const char* out = g.out.c_str();
  const int use_gftm = no_gftm ? 0 : 1;
  const int use_s2d = no_s2d ? 0 : 1;

  if (analyze->parsed() && !analyze_corpora.empty()) {
    std::vector<const char*> paths;
    for (const auto& p : analyze_corpora) paths.push_back(p.c_str());
    const std::string dir = g.out + "/analysis";
    const cp_status s = cp_analyze_files(paths.data(), paths.size(), dir.c_str());
    return s == CP_OK ? 0 : report_failure(s);
  }

  if (retrieve->parsed()) {
    if (retrieve_dict.empty()) retrieve_dict = g.out + "/dictionary.dict";
    if (retrieve_corpus.empty()) retrieve_corpus = g.out + "/corpora/primary_test.jsonl";
    cp_dictionary* dict = nullptr;
    cp_status s = cp_dictionary_load(retrieve_dict.c_str(), &dict);
    if (s != CP_OK) return report_failure(s);
    cp_string* json = nullptr;
    s = cp_retrieve(dict, retrieve_corpus.c_str(), retrieve_index, retrieve_k, retrieve_alpha, &json);
    cp_dictionary_free(dict);
    if (s != CP_OK) return report_failure(s);
    std::fwrite(cp_string_data(json), 1, cp_string_size(json), stdout);
    cp_string_free(json);
    return 0;
  }

  ConfigHandle config;
  cp_status s = config.open(g);
  if (s != CP_OK) return report_failure(s);
  const cp_config* cfg = config.get();

  if (gen->parsed()) {
    s = cp_generate(cfg, out);
  } else if (analyze->parsed()) {
    s = cp_analyze(cfg, out);
  } else if (build_dict->parsed()) {
    s = cp_build_dictionary(cfg, out);
  } else if (pretrain->parsed()) {
    s = cp_pretrain_gftm(cfg, out);
  } else if (train_main->parsed()) {
    s = cp_train_main(cfg, out, use_gftm, use_s2d);
  } else if (train_hftdn->parsed()) {
    s = cp_train_hftdn(cfg, out, use_gftm, use_s2d);
  } else if (eval->parsed()) {
    cp_metrics m{};
    s = cp_evaluate(cfg, out, use_gftm, use_s2d, eval_hftdn ? 1 : 0, eval_split.c_str(), &m);
    if (s == CP_OK) print_metrics(m);
  } else if (pipeline->parsed()) {
    cp_string* report = nullptr;
    s = cp_run_pipeline(cfg, out, &report);
    if (s == CP_OK) {
      std::fwrite(cp_string_data(report), 1, cp_string_size(report), stdout);
      cp_string_free(report);
    }
  }
  return s == CP_OK ? 0 : report_failure(s);
}
