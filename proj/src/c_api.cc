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

#include "crossplan/crossplan.h"

#include <fstream>
#include <iostream>
#include <iterator>
#include <new>
#include <string>

#include "crossplan/analysis.h"
#include "crossplan/config.h"
#include "crossplan/dictionary.h"
#include "crossplan/error.h"
#include "crossplan/pipeline.h"
#include "crossplan/retrieval.h"
#include "json.hpp"

struct cp_config {
  crossplan::PipelineConfig value;
};

struct cp_dictionary {
  crossplan::TrajectoryDictionary value;
};

struct cp_string {
  std::string value;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
cp_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return CP_OK;
  } catch (const crossplan::Error& e) {
    g_last_error = e.what();
    return static_cast<cp_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return CP_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  crossplan::require(p != nullptr, crossplan::ErrorCode::kValidation, std::string(what) + " must not be NULL");
}

crossplan::MainVariant variant(int use_gftm, int use_s2d) { return {use_gftm != 0, use_s2d != 0}; }

}  // namespace

extern "C" {

const char* cp_version(void) { return "0.1.0"; }

const char* cp_status_name(cp_status status) {
  if (status < CP_OK || status > CP_ERR_INTERNAL) return "unknown";
  return crossplan::error_code_name(static_cast<crossplan::ErrorCode>(status)).data();
}

const char* cp_last_error(void) { return g_last_error.c_str(); }

void cp_set_verbose(int verbose) {
  crossplan::set_log_sink([verbose](crossplan::LogLevel level, std::string_view msg) {
    if (verbose || level == crossplan::LogLevel::kWarning) {
      std::cerr << (level == crossplan::LogLevel::kWarning ? "warning: " : "") << msg << std::endl;
    }
  });
}

const char* cp_string_data(const cp_string* s) { return s ? s->value.c_str() : ""; }
size_t cp_string_size(const cp_string* s) { return s ? s->value.size() : 0; }
void cp_string_free(cp_string* s) { delete s; }

cp_status cp_config_default(cp_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new cp_config{};
  });
}

cp_status cp_config_load(const char* path, cp_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cp_config{crossplan::load_pipeline_config(path)};
  });
}

cp_status cp_config_set(cp_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    // Appending to the canonical text reuses the file parser and its checks.
    const std::string line = std::string(key) + " = " + value;
    crossplan::require(line.find('\n') == std::string::npos && line.find('#') == std::string::npos,
                       crossplan::ErrorCode::kValidation, "config values cannot contain newlines or '#'");
    config->value =
        crossplan::parse_pipeline_config(crossplan::serialize_pipeline_config(config->value) + line + "\n");
  });
}

cp_status cp_config_to_string(const cp_config* config, cp_string** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = new cp_string{crossplan::serialize_pipeline_config(config->value)};
  });
}

void cp_config_free(cp_config* config) { delete config; }

cp_status cp_generate(const cp_config* config, const char* out_dir) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    crossplan::stage_generate(config->value, crossplan::PipelineLayout(out_dir));
  });
}

cp_status cp_analyze(const cp_config* config, const char* out_dir) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    crossplan::stage_analyze(config->value, crossplan::PipelineLayout(out_dir));
  });
}

cp_status cp_analyze_files(const char* const* corpus_paths, size_t count, const char* out_dir) {
  return guarded([&] {
    need(corpus_paths, "corpus_paths");
    need(out_dir, "out_dir");
    std::vector<std::filesystem::path> paths;
    for (size_t i = 0; i < count; ++i) {
      need(corpus_paths[i], "corpus path");
      paths.emplace_back(corpus_paths[i]);
    }
    crossplan::write_analysis(crossplan::read_corpora(paths), out_dir);
  });
}

cp_status cp_build_dictionary(const cp_config* config, const char* out_dir) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    crossplan::stage_build_dictionary(config->value, crossplan::PipelineLayout(out_dir));
  });
}

cp_status cp_pretrain_gftm(const cp_config* config, const char* out_dir) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    crossplan::stage_pretrain_gftm(config->value, crossplan::PipelineLayout(out_dir));
  });
}

cp_status cp_train_main(const cp_config* config, const char* out_dir, int use_gftm, int use_s2d) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    crossplan::stage_train_main(config->value, crossplan::PipelineLayout(out_dir), variant(use_gftm, use_s2d));
  });
}

cp_status cp_train_hftdn(const cp_config* config, const char* out_dir, int use_gftm, int use_s2d) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    crossplan::stage_train_hftdn(config->value, crossplan::PipelineLayout(out_dir), variant(use_gftm, use_s2d));
  });
}

cp_status cp_evaluate(const cp_config* config, const char* out_dir, int use_gftm, int use_s2d, int with_hftdn,
                      const char* split, cp_metrics* out) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    need(out, "out");
    const crossplan::Metrics m =
        crossplan::stage_evaluate(config->value, crossplan::PipelineLayout(out_dir), variant(use_gftm, use_s2d),
                                  with_hftdn != 0, split ? split : "test");
    *out = cp_metrics{m.ade, m.fde, m.yaw_mae, m.plan_loss, m.records};
  });
}

cp_status cp_run_pipeline(const cp_config* config, const char* out_dir, cp_string** report) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    crossplan::run_pipeline(config->value, out_dir);
    if (report != nullptr) {
      std::ifstream in(crossplan::PipelineLayout(out_dir).report());
      *report = new cp_string{std::string(std::istreambuf_iterator<char>(in), {})};
    }
  });
}

cp_status cp_dictionary_load(const char* path, cp_dictionary** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cp_dictionary{crossplan::load_dictionary(path)};
  });
}

cp_status cp_dictionary_save(const cp_dictionary* dict, const char* path) {
  return guarded([&] {
    need(dict, "dict");
    need(path, "path");
    crossplan::persist_dictionary(dict->value, path);
  });
}

size_t cp_dictionary_size(const cp_dictionary* dict) { return dict ? dict->value.size() : 0; }

void cp_dictionary_free(cp_dictionary* dict) { delete dict; }

cp_status cp_retrieve(const cp_dictionary* dict, const char* corpus_path, size_t record_index, int k, double alpha,
                      cp_string** json_out) {
  return guarded([&] {
    need(dict, "dict");
    need(corpus_path, "corpus_path");
    need(json_out, "json_out");
    const crossplan::Corpus corpus = crossplan::read_corpus(corpus_path, dict->value.schema);
    crossplan::require(record_index < corpus.records.size(), crossplan::ErrorCode::kValidation,
                       "record index out of range");
    const crossplan::CorpusRecord& rec = corpus.records[record_index];
    const auto result = crossplan::retrieve_top_k(rec.history, dict->value, k, alpha);
    nlohmann::json doc = {{"query", {{"scenario_id", rec.scenario_id}, {"dataset_id", rec.dataset_id}}},
                          {"k", k},
                          {"alpha", alpha}};
    nlohmann::json ranked = nlohmann::json::array();
    for (const auto& e : result.ranked) {
      const auto& entry = dict->value.entries[e.index];
      ranked.push_back({{"index", e.index},
                        {"score", e.score},
                        {"similarity", e.similarity},
                        {"distance", e.distance},
                        {"scenario_id", entry.scenario_id},
                        {"source_dataset", entry.source_dataset}});
    }
    doc["ranked"] = ranked;
    *json_out = new cp_string{doc.dump(2) + "\n"};
  });
}

}  // extern "C"
