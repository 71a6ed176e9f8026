// Copyright 2026 The HSCJN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the HSCJN dialogue model: training, checkpoints, response
 * generation, evaluation and the ablation grid.
 *
 * Every call returns an hscjn_status. On failure hscjn_last_error() describes
 * the problem; the message is per-thread and valid until the next failing
 * call on that thread. Strings returned through char** are owned by the
 * caller and released with hscjn_string_free().
 */

#ifndef HSCJN_HSCJN_H_
#define HSCJN_HSCJN_H_

#include <stddef.h>

#if defined(_WIN32)
#if defined(HSCJN_BUILDING_LIBRARY)
#define HSCJN_API __declspec(dllexport)
#else
#define HSCJN_API __declspec(dllimport)
#endif
#elif defined(HSCJN_BUILDING_LIBRARY)
#define HSCJN_API __attribute__((visibility("default")))
#else
#define HSCJN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hscjn_status {
  HSCJN_OK = 0,
  HSCJN_ERROR_USAGE = 1,    /* bad argument, unknown key, invalid value */
  HSCJN_ERROR_IO = 2,       /* file missing or unwritable */
  HSCJN_ERROR_FORMAT = 3,   /* malformed corpus or checkpoint */
  HSCJN_ERROR_NUMERIC = 4,  /* non-finite loss during training */
  HSCJN_ERROR_INTERNAL = 5
} hscjn_status;

typedef struct hscjn_config hscjn_config;
typedef struct hscjn_model hscjn_model;

HSCJN_API const char* hscjn_version(void);
HSCJN_API const char* hscjn_last_error(void);
HSCJN_API void hscjn_string_free(char* s);

/* Configuration: string keys and values, e.g. "alpha" = "0.5". */
HSCJN_API hscjn_status hscjn_config_create(hscjn_config** out);
HSCJN_API void hscjn_config_destroy(hscjn_config* config);
HSCJN_API hscjn_status hscjn_config_set(hscjn_config* config, const char* key, const char* value);
HSCJN_API hscjn_status hscjn_config_get(const hscjn_config* config, const char* key, char** out);
/* `key=value` lines, `#` comments. */
HSCJN_API hscjn_status hscjn_config_load_file(hscjn_config* config, const char* path);
/* HSCJN_SEED replaces the seed when set. */
HSCJN_API hscjn_status hscjn_config_apply_environment(hscjn_config* config);
/* All keys, newline-separated. */
HSCJN_API hscjn_status hscjn_config_keys(char** out);
/* Range checks across all fields. */
HSCJN_API hscjn_status hscjn_config_validate(const hscjn_config* config);

/* Trains from the configured corpus paths. Writes the checkpoint and log when
 * configured. out_model and out_summary (JSON) may be NULL. */
HSCJN_API hscjn_status hscjn_train(const hscjn_config* config, hscjn_model** out_model, char** out_summary);

HSCJN_API hscjn_status hscjn_model_load(const char* path, hscjn_model** out);
HSCJN_API hscjn_status hscjn_model_save(const hscjn_model* model, const char* path);
HSCJN_API void hscjn_model_destroy(hscjn_model* model);
/* JSON: model dimensions, vocabulary size, parameter count, step, epoch. */
HSCJN_API hscjn_status hscjn_model_info(const hscjn_model* model, char** out);

/* One response to a dialogue context written as utterances separated by
 * `__eou__`. Decoding settings (beam_width, max_len, length_norm) come from
 * config, which may be NULL for the checkpoint's own settings. */
HSCJN_API hscjn_status hscjn_generate(const hscjn_model* model, const hscjn_config* config, const char* context,
                                      char** out_response);
/* One response per input line; every utterance of a line is context. */
HSCJN_API hscjn_status hscjn_generate_file(const hscjn_model* model, const hscjn_config* config,
                                           const char* input_path, const char* output_path);

/* Decodes the examples of a corpus file (mode from config) and scores them
 * against their targets. Responses are written to output_path when non-NULL.
 * out_report receives the JSON report. */
HSCJN_API hscjn_status hscjn_evaluate_corpus(const hscjn_model* model, const hscjn_config* config,
                                             const char* corpus_path, const char* output_path, char** out_report);
/* Scores a responses file against a references file, one line each. */
HSCJN_API hscjn_status hscjn_evaluate_files(const char* responses_path, const char* references_path,
                                            int sentence_bleu, char** out_report);
/* `rank<TAB>token<TAB>frequency` lines for the top_k words of a responses file. */
HSCJN_API hscjn_status hscjn_frequency_table(const char* responses_path, size_t top_k, int exclude_punct,
                                             char** out);

/* Trains and evaluates HSCJN, HSCJN(w/o ME), HSCJN(w/o PN) and HRED under one
 * seed. Artifacts go under the configured out_dir; out_summary is a JSON array. */
HSCJN_API hscjn_status hscjn_ablate(const hscjn_config* config, char** out_summary);

#ifdef __cplusplus
}
#endif

#endif  /* HSCJN_HSCJN_H_ */
