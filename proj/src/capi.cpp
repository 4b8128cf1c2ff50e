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

#include "kicksense/kicksense.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "kicksense/config.hpp"
#include "kicksense/error.hpp"
#include "kicksense/pipeline.hpp"

struct ks_config {
  kicksense::ExperimentConfig value;
};

struct ks_dataset {
  kicksense::Dataset value;
};

struct ks_model {
  std::unique_ptr<kicksense::KickModel> value;
};

namespace {

thread_local std::string g_last_error;

ks_status status_of(kicksense::ErrorCode code) {
  using kicksense::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return KS_ERR_INVALID_ARGUMENT;
    case ErrorCode::InvalidGeometry: return KS_ERR_GEOMETRY;
    case ErrorCode::Config: return KS_ERR_CONFIG;
    case ErrorCode::Io: return KS_ERR_IO;
    case ErrorCode::Parse: return KS_ERR_PARSE;
    case ErrorCode::Schema: return KS_ERR_SCHEMA;
    case ErrorCode::Validation: return KS_ERR_VALIDATION;
    case ErrorCode::State: return KS_ERR_STATE;
  }
  return KS_ERR_INTERNAL;
}

ks_status set_error(ks_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
ks_status guarded(F&& body) {
  try {
    body();
    return KS_OK;
  } catch (const kicksense::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(KS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(KS_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(KS_ERR_INTERNAL, "unknown error");
  }
}

#define KS_REQUIRE_ARG(cond, what)                                  \
  do {                                                              \
    if (!(cond)) return set_error(KS_ERR_INVALID_ARGUMENT, (what)); \
  } while (0)

ks_status copy_out(const std::string& text, char* buffer, size_t capacity, size_t* needed) {
  if (needed) *needed = text.size();
  if (!buffer) {
    return needed ? KS_OK : set_error(KS_ERR_INVALID_ARGUMENT, "null buffer");
  }
  if (capacity < text.size() + 1) {
    if (capacity) buffer[0] = '\0';
    return set_error(KS_ERR_INVALID_ARGUMENT,
                     "buffer too small: need " + std::to_string(text.size() + 1) + " bytes");
  }
  std::memcpy(buffer, text.c_str(), text.size() + 1);
  return KS_OK;
}

kicksense::LogFn logger(ks_log_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const std::string& msg) { fn(msg.c_str(), user); };
}

}  // namespace

extern "C" {

const char* ks_version(void) { return "0.1.0"; }

const char* ks_status_string(ks_status status) {
  switch (status) {
    case KS_OK: return "ok";
    case KS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case KS_ERR_GEOMETRY: return "invalid geometry";
    case KS_ERR_CONFIG: return "configuration error";
    case KS_ERR_IO: return "i/o error";
    case KS_ERR_PARSE: return "parse error";
    case KS_ERR_SCHEMA: return "schema error";
    case KS_ERR_VALIDATION: return "validation error";
    case KS_ERR_STATE: return "invalid state";
    case KS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ks_last_error(void) { return g_last_error.c_str(); }

ks_status ks_config_create(ks_config** out) {
  KS_REQUIRE_ARG(out, "null output pointer");
  *out = nullptr;
  return guarded([&] { *out = new ks_config{}; });
}

ks_status ks_config_load(const char* path, ks_config** out) {
  KS_REQUIRE_ARG(out, "null output pointer");
  KS_REQUIRE_ARG(path, "null path");
  *out = nullptr;
  return guarded([&] {
    auto cfg = std::make_unique<ks_config>();
    cfg->value = kicksense::ExperimentConfig::load(path);
    *out = cfg.release();
  });
}

ks_status ks_config_set(ks_config* config, const char* key, const char* value) {
  KS_REQUIRE_ARG(config && key && value, "null argument");
  return guarded([&] { config->value.set(key, value); });
}

ks_status ks_config_get(const ks_config* config, const char* key, char* buffer, size_t capacity,
                        size_t* needed) {
  KS_REQUIRE_ARG(config && key, "null argument");
  std::string text;
  const ks_status s = guarded([&] { text = config->value.get(key); });
  return s == KS_OK ? copy_out(text, buffer, capacity, needed) : s;
}

ks_status ks_config_dump(const ks_config* config, char* buffer, size_t capacity, size_t* needed) {
  KS_REQUIRE_ARG(config, "null config");
  std::string text;
  const ks_status s = guarded([&] { text = config->value.dump(); });
  return s == KS_OK ? copy_out(text, buffer, capacity, needed) : s;
}

ks_status ks_config_validate(const ks_config* config) {
  KS_REQUIRE_ARG(config, "null config");
  return guarded([&] { config->value.validate(); });
}

void ks_config_destroy(ks_config* config) { delete config; }

ks_status ks_simulate(const ks_config* config, ks_log_fn log, void* user) {
  KS_REQUIRE_ARG(config, "null config");
  return guarded([&] { kicksense::cmd_simulate(config->value, logger(log, user)); });
}

ks_status ks_train(const ks_config* config, ks_log_fn log, void* user) {
  KS_REQUIRE_ARG(config, "null config");
  return guarded([&] { kicksense::cmd_train(config->value, logger(log, user)); });
}

ks_status ks_eval(const ks_config* config, ks_log_fn log, void* user) {
  KS_REQUIRE_ARG(config, "null config");
  return guarded([&] { kicksense::cmd_eval(config->value, logger(log, user)); });
}

ks_status ks_ablate(const ks_config* config, ks_log_fn log, void* user) {
  KS_REQUIRE_ARG(config, "null config");
  return guarded([&] { kicksense::cmd_ablate(config->value, logger(log, user)); });
}

ks_status ks_stream(const ks_config* config, ks_log_fn log, void* user) {
  KS_REQUIRE_ARG(config, "null config");
  return guarded([&] { kicksense::cmd_stream(config->value, logger(log, user)); });
}

ks_status ks_dataset_load(const char* manifest_path, ks_dataset** out) {
  KS_REQUIRE_ARG(out, "null output pointer");
  KS_REQUIRE_ARG(manifest_path, "null path");
  *out = nullptr;
  return guarded([&] {
    auto ds = std::make_unique<ks_dataset>();
    ds->value = kicksense::load_dataset(manifest_path);
    *out = ds.release();
  });
}

ks_status ks_dataset_runs(const ks_dataset* dataset, size_t* out) {
  KS_REQUIRE_ARG(dataset && out, "null argument");
  *out = dataset->value.runs.size();
  return KS_OK;
}

ks_status ks_dataset_count(const ks_dataset* dataset, ks_split split, size_t* out) {
  KS_REQUIRE_ARG(dataset && out, "null argument");
  kicksense::Split s;
  switch (split) {
    case KS_SPLIT_TRAIN: s = kicksense::Split::Train; break;
    case KS_SPLIT_VAL: s = kicksense::Split::Val; break;
    case KS_SPLIT_TEST: s = kicksense::Split::Test; break;
    default: return set_error(KS_ERR_INVALID_ARGUMENT, "unknown split");
  }
  *out = dataset->value.count(s);
  return KS_OK;
}

void ks_dataset_destroy(ks_dataset* dataset) { delete dataset; }

ks_status ks_model_load(const char* checkpoint_path, ks_model** out) {
  KS_REQUIRE_ARG(out, "null output pointer");
  KS_REQUIRE_ARG(checkpoint_path, "null path");
  *out = nullptr;
  return guarded([&] {
    auto m = std::make_unique<ks_model>();
    m->value = kicksense::KickModel::load(checkpoint_path);
    *out = m.release();
  });
}

ks_status ks_model_info(const ks_model* model, ks_task* task, ks_variant* variant,
                        uint64_t* seed) {
  KS_REQUIRE_ARG(model, "null model");
  if (task) *task = static_cast<ks_task>(static_cast<int>(model->value->task()));
  if (variant) *variant = static_cast<ks_variant>(static_cast<int>(model->value->variant()));
  if (seed) *seed = model->value->seed();
  return KS_OK;
}

ks_status ks_model_window_shape(const ks_model* model, size_t* window_len, size_t* sensors) {
  KS_REQUIRE_ARG(model, "null model");
  if (window_len) *window_len = model->value->arch().window_len;
  if (sensors) *sensors = model->value->arch().sensors;
  return KS_OK;
}

ks_status ks_model_predict(const ks_model* model, const double* window, size_t window_len,
                           size_t sensors, double* out, size_t capacity, size_t* written) {
  KS_REQUIRE_ARG(model && window && out, "null argument");
  return guarded([&] {
    const auto& m = *model->value;
    Eigen::MatrixXd w(static_cast<Eigen::Index>(window_len), static_cast<Eigen::Index>(sensors));
    for (size_t r = 0; r < window_len; ++r) {
      for (size_t c = 0; c < sensors; ++c) {
        w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = window[r * sensors + c];
      }
    }
    const auto pred = m.predict(w);
    const size_t n = m.output_size();
    kicksense::require(capacity >= n, kicksense::ErrorCode::InvalidArgument,
                       "output buffer holds " + std::to_string(capacity) + " values, need " +
                           std::to_string(n));
    if (pred.task == kicksense::Task::Classify) {
      for (size_t i = 0; i < n; ++i) out[i] = pred.class_probs[i];
    } else {
      out[0] = pred.l_x;
      out[1] = pred.l_y;
    }
    if (written) *written = n;
  });
}

void ks_model_destroy(ks_model* model) { delete model; }

}  // extern "C"
