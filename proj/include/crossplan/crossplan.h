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

/* C interface to the crossplan library. Every function that can fail returns
 * a cp_status; on failure cp_last_error() describes the problem for the
 * calling thread. Objects are opaque and owned by the caller, who releases
 * them with the matching *_free function. */
#ifndef CROSSPLAN_CROSSPLAN_H_
#define CROSSPLAN_CROSSPLAN_H_

#include <stddef.h>

#if defined(CROSSPLAN_BUILDING_LIBRARY)
#define CP_API __attribute__((visibility("default")))
#else
#define CP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cp_status {
  CP_OK = 0,
  CP_ERR_VALIDATION = 1,
  CP_ERR_ISOLATION = 2,
  CP_ERR_DEGENERATE_INPUT = 3,
  CP_ERR_IO = 4,
  CP_ERR_MALFORMED = 5,
  CP_ERR_VERSION_MISMATCH = 6,
  CP_ERR_CHECKSUM = 7,
  CP_ERR_DIVERGED = 8,
  CP_ERR_PHASE_ORDER = 9,
  CP_ERR_INTERNAL = 10
} cp_status;

typedef struct cp_config cp_config;
typedef struct cp_dictionary cp_dictionary;
typedef struct cp_string cp_string;

typedef struct cp_metrics {
  double ade;
  double fde;
  double yaw_mae;
  double plan_loss;
  size_t records;
} cp_metrics;

CP_API const char* cp_version(void);
CP_API const char* cp_status_name(cp_status status);
/* Message of the last failure on this thread; empty after a success. */
CP_API const char* cp_last_error(void);
/* Non-zero sends progress messages to stderr. */
CP_API void cp_set_verbose(int verbose);

CP_API const char* cp_string_data(const cp_string* s);
CP_API size_t cp_string_size(const cp_string* s);
CP_API void cp_string_free(cp_string* s);

CP_API cp_status cp_config_default(cp_config** out);
CP_API cp_status cp_config_load(const char* path, cp_config** out);
/* Sets one key as it would appear in a config file. */
CP_API cp_status cp_config_set(cp_config* config, const char* key, const char* value);
CP_API cp_status cp_config_to_string(const cp_config* config, cp_string** out);
CP_API void cp_config_free(cp_config* config);

/* Pipeline stages over an output directory. */
CP_API cp_status cp_generate(const cp_config* config, const char* out_dir);
CP_API cp_status cp_analyze(const cp_config* config, const char* out_dir);
/* Analysis of arbitrary corpus files; tables go to out_dir. */
CP_API cp_status cp_analyze_files(const char* const* corpus_paths, size_t count, const char* out_dir);
CP_API cp_status cp_build_dictionary(const cp_config* config, const char* out_dir);
CP_API cp_status cp_pretrain_gftm(const cp_config* config, const char* out_dir);
CP_API cp_status cp_train_main(const cp_config* config, const char* out_dir, int use_gftm, int use_s2d);
CP_API cp_status cp_train_hftdn(const cp_config* config, const char* out_dir, int use_gftm, int use_s2d);
/* split is "train", "val" or "test". */
CP_API cp_status cp_evaluate(const cp_config* config, const char* out_dir, int use_gftm, int use_s2d, int with_hftdn,
                             const char* split, cp_metrics* out);
/* Full run; `report` (may be NULL) receives the report text. */
CP_API cp_status cp_run_pipeline(const cp_config* config, const char* out_dir, cp_string** report);

CP_API cp_status cp_dictionary_load(const char* path, cp_dictionary** out);
CP_API cp_status cp_dictionary_save(const cp_dictionary* dict, const char* path);
CP_API size_t cp_dictionary_size(const cp_dictionary* dict);
CP_API void cp_dictionary_free(cp_dictionary* dict);
/* Top-k entries for the history of record `record_index` in a corpus file,
 * as a JSON document. */
CP_API cp_status cp_retrieve(const cp_dictionary* dict, const char* corpus_path, size_t record_index, int k,
                             double alpha, cp_string** json_out);

#ifdef __cplusplus
}
#endif

#endif /* CROSSPLAN_CROSSPLAN_H_ */
