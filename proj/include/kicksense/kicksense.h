/*
 * Copyright 2026 The KickSense Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the kicksense library. Every call that can fail returns a
 * ks_status; on failure ks_last_error() describes the problem for the calling
 * thread until its next failing call. Handles are opaque and owned by the
 * caller, who releases them with the matching destroy function. */

#ifndef KICKSENSE_KICKSENSE_H
#define KICKSENSE_KICKSENSE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define KS_API __declspec(dllexport)
#else
#define KS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ks_status {
  KS_OK = 0,
  KS_ERR_INVALID_ARGUMENT = 1,
  KS_ERR_GEOMETRY = 2,
  KS_ERR_CONFIG = 3,
  KS_ERR_IO = 4,
  KS_ERR_PARSE = 5,
  KS_ERR_SCHEMA = 6,
  KS_ERR_VALIDATION = 7,
  KS_ERR_STATE = 8,
  KS_ERR_INTERNAL = 9
} ks_status;

typedef enum ks_split { KS_SPLIT_TRAIN = 1, KS_SPLIT_VAL = 2, KS_SPLIT_TEST = 3 } ks_split;

typedef enum ks_task { KS_TASK_CLASSIFY = 0, KS_TASK_LOCALIZE = 1 } ks_task;

typedef enum ks_variant {
  KS_VARIANT_FUSION = 0,
  KS_VARIANT_TIME = 1,
  KS_VARIANT_FREQ = 2,
  KS_VARIANT_FFT_MLP = 3,
  KS_VARIANT_STATS_MLP = 4
} ks_variant;

typedef struct ks_config ks_config;
typedef struct ks_dataset ks_dataset;
typedef struct ks_model ks_model;

/* Progress messages from long-running commands. */
typedef void (*ks_log_fn)(const char* message, void* user);

KS_API const char* ks_version(void);
KS_API const char* ks_status_string(ks_status status);
KS_API const char* ks_last_error(void);

/* ---- configuration ---------------------------------------------------- */

KS_API ks_status ks_config_create(ks_config** out);
/* Defaults overlaid with the keys of a sectioned key = value file. */
KS_API ks_status ks_config_load(const char* path, ks_config** out);
KS_API ks_status ks_config_set(ks_config* config, const char* key, const char* value);
/* String outputs: writes up to `capacity` bytes including the terminator and
 * stores the full length (without terminator) in `*needed` when non-null.
 * A null buffer with non-null `needed` is a size query and returns KS_OK; a
 * buffer that is too small yields KS_ERR_INVALID_ARGUMENT. */
KS_API ks_status ks_config_get(const ks_config* config, const char* key, char* buffer,
                               size_t capacity, size_t* needed);
KS_API ks_status ks_config_dump(const ks_config* config, char* buffer, size_t capacity,
                                size_t* needed);
KS_API ks_status ks_config_validate(const ks_config* config);
KS_API void ks_config_destroy(ks_config* config);

/* ---- workflow commands ------------------------------------------------ */

KS_API ks_status ks_simulate(const ks_config* config, ks_log_fn log, void* user);
KS_API ks_status ks_train(const ks_config* config, ks_log_fn log, void* user);
KS_API ks_status ks_eval(const ks_config* config, ks_log_fn log, void* user);
KS_API ks_status ks_ablate(const ks_config* config, ks_log_fn log, void* user);
KS_API ks_status ks_stream(const ks_config* config, ks_log_fn log, void* user);

/* ---- datasets --------------------------------------------------------- */

KS_API ks_status ks_dataset_load(const char* manifest_path, ks_dataset** out);
KS_API ks_status ks_dataset_runs(const ks_dataset* dataset, size_t* out);
KS_API ks_status ks_dataset_count(const ks_dataset* dataset, ks_split split, size_t* out);
KS_API void ks_dataset_destroy(ks_dataset* dataset);

/* ---- models ----------------------------------------------------------- */

KS_API ks_status ks_model_load(const char* checkpoint_path, ks_model** out);
KS_API ks_status ks_model_info(const ks_model* model, ks_task* task, ks_variant* variant,
                               uint64_t* seed);
/* Expected window shape: `window_len` samples of `sensors` pressures. */
KS_API ks_status ks_model_window_shape(const ks_model* model, size_t* window_len,
                                       size_t* sensors);
/* `window` is row-major [window_len][sensors] in Pa with the rest baseline
 * removed. Classification writes 6 class probabilities; localization writes
 * (L_x, L_y) in mm. `*written` receives the number of values. */
KS_API ks_status ks_model_predict(const ks_model* model, const double* window,
                                  size_t window_len, size_t sensors, double* out,
                                  size_t capacity, size_t* written);
KS_API void ks_model_destroy(ks_model* model);

#ifdef __cplusplus
}
#endif

#endif /* KICKSENSE_KICKSENSE_H */
