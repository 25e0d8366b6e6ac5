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

#include "dau/dau.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "dau/analysis.hpp"
#include "dau/checkpoint.hpp"
#include "dau/parallel.hpp"
#include "dau/trainer.hpp"
#include "dau/verify.hpp"

struct dau_config {
  dau::Config cfg;
};

struct dau_dataset {
  dau::DatasetSplit split;
};

struct dau_model {
  dau::Model model;
};

namespace {

thread_local std::string g_last_error;

dau_status to_status(dau::ErrorCode code) {
  switch (code) {
    case dau::ErrorCode::kInvalidArgument: return DAU_E_INVALID_ARGUMENT;
    case dau::ErrorCode::kShapeMismatch: return DAU_E_SHAPE;
    case dau::ErrorCode::kIo: return DAU_E_IO;
    case dau::ErrorCode::kFormat: return DAU_E_FORMAT;
    case dau::ErrorCode::kChecksum: return DAU_E_CHECKSUM;
    case dau::ErrorCode::kVersion: return DAU_E_VERSION;
    case dau::ErrorCode::kNumeric: return DAU_E_NUMERIC;
    case dau::ErrorCode::kCheckFailed: return DAU_E_CHECK_FAILED;
    case dau::ErrorCode::kInternal: return DAU_E_INTERNAL;
  }
  return DAU_E_INTERNAL;
}

// Carries a callback's status through the C++ training loop.
struct CallbackAbort {
  dau_status status;
};

template <typename Fn>
dau_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return DAU_OK;
  } catch (const dau::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const CallbackAbort& a) {
    if (g_last_error.empty()) g_last_error = "training aborted by epoch callback";
    return a.status;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DAU_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DAU_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return DAU_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  dau::require(p != nullptr, dau::ErrorCode::kInvalidArgument, std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out != nullptr) *out = dup(s);
}

dau_epoch_metrics to_c(const dau::EpochMetrics& m) {
  return {m.epoch, m.iter, m.train_loss, m.eval_acc, m.lr};
}

}  // namespace

extern "C" {

const char* dau_version(void) { return "1.0.0"; }

const char* dau_status_name(dau_status status) {
  switch (status) {
    case DAU_OK: return "OK";
    case DAU_E_INVALID_ARGUMENT: return dau::error_code_name(dau::ErrorCode::kInvalidArgument);
    case DAU_E_SHAPE: return dau::error_code_name(dau::ErrorCode::kShapeMismatch);
    case DAU_E_IO: return dau::error_code_name(dau::ErrorCode::kIo);
    case DAU_E_FORMAT: return dau::error_code_name(dau::ErrorCode::kFormat);
    case DAU_E_CHECKSUM: return dau::error_code_name(dau::ErrorCode::kChecksum);
    case DAU_E_VERSION: return dau::error_code_name(dau::ErrorCode::kVersion);
    case DAU_E_NUMERIC: return dau::error_code_name(dau::ErrorCode::kNumeric);
    case DAU_E_CHECK_FAILED: return dau::error_code_name(dau::ErrorCode::kCheckFailed);
    case DAU_E_INTERNAL: return dau::error_code_name(dau::ErrorCode::kInternal);
  }
  return "E_UNKNOWN";
}

const char* dau_last_error(void) { return g_last_error.c_str(); }

void dau_string_free(char* s) { std::free(s); }

dau_status dau_set_threads(int threads) {
  return guarded([&] { dau::set_num_threads(threads); });
}

int dau_get_threads(void) { return dau::num_threads(); }

dau_status dau_config_create(dau_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new dau_config{};
  });
}

dau_status dau_config_load(const char* path, dau_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new dau_config{dau::Config::load_file(path)};
  });
}

dau_status dau_config_parse(const char* text, dau_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new dau_config{dau::Config::parse(text)};
  });
}

dau_status dau_config_set(dau_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    cfg->cfg.set(key, value);
  });
}

dau_status dau_config_apply(dau_config* cfg, const char* assignment) {
  return guarded([&] {
    need(cfg, "config");
    need(assignment, "assignment");
    cfg->cfg.apply_override(assignment);
  });
}

dau_status dau_config_resolved_text(const dau_config* cfg, char** text) {
  return guarded([&] {
    need(cfg, "config");
    need(text, "text");
    *text = dup(dau::RunSettings::from_config(cfg->cfg).to_config().to_text());
  });
}

void dau_config_free(dau_config* cfg) { delete cfg; }

dau_status dau_dataset_load_cifar10(const char* dir, size_t train_limit, size_t test_limit,
                                    dau_dataset** train, dau_dataset** test) {
  return guarded([&] {
    need(dir, "dir");
    need(train, "train");
    need(test, "test");
    auto [tr, te] = dau::load_cifar10(dir, train_limit, test_limit);
    auto* a = new dau_dataset{std::move(tr)};
    auto* b = new (std::nothrow) dau_dataset{std::move(te)};
    if (b == nullptr) {
      delete a;
      throw std::bad_alloc();
    }
    *train = a;
    *test = b;
  });
}

size_t dau_dataset_size(const dau_dataset* ds) { return ds == nullptr ? 0 : ds->split.size(); }

void dau_dataset_free(dau_dataset* ds) { delete ds; }

dau_status dau_model_build(const dau_config* cfg, dau_model** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = new dau_model{dau::build_model(dau::RunSettings::from_config(cfg->cfg))};
  });
}

dau_status dau_model_load(const char* path, dau_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new dau_model{dau::load_checkpoint(path)};
  });
}

dau_status dau_model_save(const dau_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    dau::save_checkpoint(model->model, path);
  });
}

dau_status dau_model_apply(dau_model* model, const char* assignment) {
  return guarded([&] {
    need(model, "model");
    need(assignment, "assignment");
    const std::string a = assignment;
    dau::require(a.rfind("train.", 0) == 0 || a.rfind("data.", 0) == 0, dau::ErrorCode::kInvalidArgument,
                 "only train.* and data.* keys can change on an existing model: " + a);
    dau::Config cfg = model->model.settings.to_config();
    cfg.apply_override(a);
    model->model.settings = dau::RunSettings::from_config(cfg);
  });
}

dau_status dau_model_config_text(const dau_model* model, char** text) {
  return guarded([&] {
    need(model, "model");
    need(text, "text");
    *text = dup(model->model.settings.to_config().to_text());
  });
}

int dau_model_epochs_done(const dau_model* model) { return model == nullptr ? 0 : model->model.epochs_done; }

int dau_model_total_epochs(const dau_model* model) {
  return model == nullptr ? 0 : model->model.settings.train.epochs;
}

size_t dau_model_train_limit(const dau_model* model) {
  return model == nullptr ? 0 : static_cast<size_t>(model->model.settings.data.train_limit);
}

size_t dau_model_test_limit(const dau_model* model) {
  return model == nullptr ? 0 : static_cast<size_t>(model->model.settings.data.test_limit);
}

void dau_model_free(dau_model* model) { delete model; }

dau_status dau_train(dau_model* model, const dau_dataset* train, const dau_dataset* eval,
                     dau_epoch_callback callback, void* user) {
  return guarded([&] {
    need(model, "model");
    need(train, "train");
    dau::EpochCallback cb;
    if (callback != nullptr) {
      cb = [&](const dau::EpochMetrics& m, const dau::Model&) {
        const dau_epoch_metrics cm = to_c(m);
        g_last_error.clear();
        const dau_status st = callback(&cm, model, user);
        if (st != DAU_OK) throw CallbackAbort{st};
      };
    }
    dau::train(model->model, train->split, eval == nullptr ? nullptr : &eval->split, cb);
  });
}

dau_status dau_evaluate(dau_model* model, const dau_dataset* ds, double* accuracy) {
  return guarded([&] {
    need(model, "model");
    need(ds, "dataset");
    need(accuracy, "accuracy");
    *accuracy = dau::evaluate(model->model.net, ds->split);
  });
}

const char* dau_metrics_csv_header(void) {
  static const std::string header = dau::metrics_csv_header();
  return header.c_str();
}

dau_status dau_metrics_csv_row(const dau_epoch_metrics* metrics, char** row) {
  return guarded([&] {
    need(metrics, "metrics");
    need(row, "row");
    dau::EpochMetrics m;
    m.epoch = metrics->epoch;
    m.iter = metrics->iteration;
    m.train_loss = metrics->train_loss;
    m.eval_acc = metrics->eval_acc;
    m.lr = metrics->lr;
    *row = dup(dau::metrics_csv_row(m));
  });
}

dau_status dau_gradcheck(uint64_t seed, int instances, int analytic, int corrupt, char** report,
                         int* passed) {
  return guarded([&] {
    dau::GradcheckOptions opts;
    opts.seed = seed;
    opts.instances = instances;
    opts.analytic = analytic != 0;
    opts.corrupt = corrupt != 0;
    const auto rep = dau::run_gradcheck(opts);
    put(report, rep.to_text());
    if (passed != nullptr) *passed = rep.pass() ? 1 : 0;
  });
}

dau_status dau_oraclecheck(uint64_t seed, int cases, int integer_only, int verbose, char** report,
                           int* passed) {
  return guarded([&] {
    dau::OraclecheckOptions opts;
    opts.seed = seed;
    opts.cases = cases;
    opts.integer_only = integer_only != 0;
    const auto rep = dau::run_oraclecheck(opts);
    std::string text;
    if (verbose != 0) {
      for (std::size_t i = 0; i < rep.cases.size(); ++i) {
        const auto& c = rep.cases[i];
        text += "case " + std::to_string(i) + ": input " + c.input.str() + " F=" + std::to_string(c.features) +
                " K=" + std::to_string(c.units) + " sigma=" + std::to_string(c.sigma) +
                (c.integer_mu ? " integer" : " sub-pixel") + " margin=" + std::to_string(c.margin) +
                " max_diff=" + std::to_string(c.max_diff) + "\n";
      }
    }
    put(report, text + rep.to_text());
    if (passed != nullptr) *passed = rep.pass() ? 1 : 0;
  });
}

dau_status dau_model_dau_layers(const dau_model* model, int* ids, int capacity, int* count) {
  return guarded([&] {
    need(model, "model");
    need(count, "count");
    const auto v = model->model.net.dau_block_ids();
    *count = static_cast<int>(v.size());
    for (int i = 0; i < capacity && i < *count; ++i) ids[i] = v[static_cast<std::size_t>(i)];
  });
}

dau_status dau_analyze(const dau_model* model, int layer, double fraction, double bin_width,
                       char** histogram_csv, char** scatter_csv, char** init_csv, double* total_mass) {
  return guarded([&] {
    need(model, "model");
    const auto stats = dau::distance_histogram(model->model.net, layer, fraction, bin_width);
    const auto scatter = dau::scatter_export(model->model.net, layer, fraction);
    // Allocate everything before handing out ownership.
    std::string h = dau::histogram_csv(stats), s = dau::scatter_csv(scatter), i = dau::init_points_csv(scatter);
    put(histogram_csv, h);
    put(scatter_csv, s);
    put(init_csv, i);
    if (total_mass != nullptr) *total_mass = stats.total_mass();
  });
}

dau_status dau_prune(const dau_model* model, double tau, const char* policy, dau_model** pruned,
                     char** report_text, char** report_json) {
  return guarded([&] {
    need(model, "model");
    need(pruned, "pruned");
    const auto pol = policy == nullptr ? dau::ThresholdPolicy::kPerLayerMax : dau::parse_threshold_policy(policy);
    auto [m, rep] = dau::prune_model(model->model, tau, pol);
    auto* out = new dau_model{std::move(m)};
    try {
      put(report_text, rep.to_text());
      put(report_json, rep.to_json());
    } catch (...) {
      delete out;
      throw;
    }
    *pruned = out;
  });
}

dau_status dau_parameter_report(const dau_model* model, char** text, char** json) {
  return guarded([&] {
    need(model, "model");
    const auto rep = dau::parameter_report(model->model.net);
    put(text, rep.to_text());
    put(json, rep.to_json());
  });
}

}  // extern "C"
