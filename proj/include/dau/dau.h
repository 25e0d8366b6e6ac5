/*
 * Copyright 2026 The DAU-Net Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DAU_DAU_H_
#define DAU_DAU_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DAU_API __declspec(dllexport)
#else
#define DAU_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dau_status {
  DAU_OK = 0,
  DAU_E_INVALID_ARGUMENT = 1,
  DAU_E_SHAPE = 2,
  DAU_E_IO = 3,
  DAU_E_FORMAT = 4,
  DAU_E_CHECKSUM = 5,
  DAU_E_VERSION = 6,
  DAU_E_NUMERIC = 7,
  DAU_E_CHECK_FAILED = 8,
  DAU_E_INTERNAL = 9
} dau_status;

typedef struct dau_config dau_config;
typedef struct dau_dataset dau_dataset;
typedef struct dau_model dau_model;

typedef struct dau_epoch_metrics {
  int epoch;
  uint64_t iteration;
  double train_loss;
  double eval_acc; /* NaN without an evaluation split */
  double lr;
} dau_epoch_metrics;

/* Called after every epoch. A non-OK return aborts training with that status. */
typedef dau_status (*dau_epoch_callback)(const dau_epoch_metrics* metrics, dau_model* model,
                                         void* user);

DAU_API const char* dau_version(void);
/* "E_IO", "E_FORMAT", ...; "OK" for DAU_OK. */
DAU_API const char* dau_status_name(dau_status status);
/* Message of the last failed call on this thread; "" if none. */
DAU_API const char* dau_last_error(void);
/* Strings returned through char** out-parameters are owned by the caller. */
DAU_API void dau_string_free(char* s);

DAU_API dau_status dau_set_threads(int threads);
DAU_API int dau_get_threads(void);

/* Configuration: flat key=value text, e.g. "net.layer1.kind=dau". */
DAU_API dau_status dau_config_create(dau_config** out);
DAU_API dau_status dau_config_load(const char* path, dau_config** out);
DAU_API dau_status dau_config_parse(const char* text, dau_config** out);
DAU_API dau_status dau_config_set(dau_config* cfg, const char* key, const char* value);
/* "key=value" */
DAU_API dau_status dau_config_apply(dau_config* cfg, const char* assignment);
/* Validates and returns every key with its effective value. */
DAU_API dau_status dau_config_resolved_text(const dau_config* cfg, char** text);
DAU_API void dau_config_free(dau_config* cfg);

/* CIFAR-10 binary batches; a limit of 0 reads everything. */
DAU_API dau_status dau_dataset_load_cifar10(const char* dir, size_t train_limit, size_t test_limit,
                                            dau_dataset** train, dau_dataset** test);
DAU_API size_t dau_dataset_size(const dau_dataset* ds);
DAU_API void dau_dataset_free(dau_dataset* ds);

DAU_API dau_status dau_model_build(const dau_config* cfg, dau_model** out);
DAU_API dau_status dau_model_load(const char* path, dau_model** out);
DAU_API dau_status dau_model_save(const dau_model* model, const char* path);
/* Training-side overrides (train.* and data.* keys) on a loaded model. */
DAU_API dau_status dau_model_apply(dau_model* model, const char* assignment);
DAU_API dau_status dau_model_config_text(const dau_model* model, char** text);
DAU_API int dau_model_epochs_done(const dau_model* model);
DAU_API int dau_model_total_epochs(const dau_model* model);
DAU_API size_t dau_model_train_limit(const dau_model* model);
DAU_API size_t dau_model_test_limit(const dau_model* model);
DAU_API void dau_model_free(dau_model* model);

/* Trains up to the configured epoch count; eval may be NULL. */
DAU_API dau_status dau_train(dau_model* model, const dau_dataset* train, const dau_dataset* eval,
                             dau_epoch_callback callback, void* user);
DAU_API dau_status dau_evaluate(dau_model* model, const dau_dataset* ds, double* accuracy);

DAU_API const char* dau_metrics_csv_header(void);
DAU_API dau_status dau_metrics_csv_row(const dau_epoch_metrics* metrics, char** row);

/* Verification harnesses; *passed is 1 when every check is within tolerance. */
DAU_API dau_status dau_gradcheck(uint64_t seed, int instances, int analytic, int corrupt,
                                 char** report, int* passed);
DAU_API dau_status dau_oraclecheck(uint64_t seed, int cases, int integer_only, int verbose,
                                   char** report, int* passed);

/* Block ids (1-based) of the DAU layers; returns the count, writes at most capacity. */
DAU_API dau_status dau_model_dau_layers(const dau_model* model, int* ids, int capacity, int* count);
/* Histogram, scatter and initialization-point CSVs for one layer and retained fraction.
   Any output pointer may be NULL. */
DAU_API dau_status dau_analyze(const dau_model* model, int layer, double fraction, double bin_width,
                               char** histogram_csv, char** scatter_csv, char** init_csv,
                               double* total_mass);
/* policy: "layer-max" (default when NULL), "global-max" or "filter-max". */
DAU_API dau_status dau_prune(const dau_model* model, double tau, const char* policy,
                             dau_model** pruned, char** report_text, char** report_json);
DAU_API dau_status dau_parameter_report(const dau_model* model, char** text, char** json);

#ifdef __cplusplus
}
#endif

#endif  // DAU_DAU_H_
