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

// Exercises the shared library through its C interface only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "kicksense/kicksense.h"

namespace fs = std::filesystem;

namespace {

std::string config_get(const ks_config* c, const char* key) {
  size_t needed = 0;
  REQUIRE(ks_config_get(c, key, nullptr, 0, &needed) == KS_OK);
  std::string s(needed + 1, '\0');
  if (needed > 0) {
    CHECK(ks_config_get(c, key, s.data(), needed, nullptr) == KS_ERR_INVALID_ARGUMENT);
    CHECK(s[0] == '\0');
  }
  REQUIRE(ks_config_get(c, key, s.data(), s.size(), &needed) == KS_OK);
  s.resize(needed);
  return s;
}

void collect(const char* message, void* user) {
  static_cast<std::vector<std::string>*>(user)->push_back(message);
}

}  // namespace

TEST_CASE("library identity and status strings") {
  CHECK(std::strlen(ks_version()) > 0);
  CHECK(std::string(ks_status_string(KS_OK)) == "ok");
  for (int s = KS_OK; s <= KS_ERR_INTERNAL; ++s)
    CHECK(std::strlen(ks_status_string(static_cast<ks_status>(s))) > 0);
}

TEST_CASE("configuration handles") {
  ks_config* c = nullptr;
  REQUIRE(ks_config_create(&c) == KS_OK);
  REQUIRE(c != nullptr);
  CHECK(config_get(c, "train.epochs") == "30");
  CHECK(ks_config_set(c, "train.epochs", "7") == KS_OK);
  CHECK(config_get(c, "train.epochs") == "7");

  CHECK(ks_config_set(c, "train.nope", "1") == KS_ERR_CONFIG);
  CHECK(std::string(ks_last_error()).find("train.nope") != std::string::npos);
  CHECK(ks_config_set(c, "train.epochs", "x") == KS_ERR_CONFIG);
  CHECK(ks_config_set(c, nullptr, "1") == KS_ERR_INVALID_ARGUMENT);
  CHECK(ks_config_create(nullptr) == KS_ERR_INVALID_ARGUMENT);

  size_t needed = 0;
  CHECK(ks_config_dump(c, nullptr, 0, &needed) == KS_OK);
  CHECK(ks_config_dump(c, nullptr, 0, nullptr) == KS_ERR_INVALID_ARGUMENT);
  std::string dump(needed + 1, '\0');
  CHECK(ks_config_dump(c, dump.data(), dump.size(), &needed) == KS_OK);
  dump.resize(needed);
  CHECK(dump.find("epochs = 7") != std::string::npos);

  CHECK(ks_config_validate(c) == KS_OK);
  CHECK(ks_config_set(c, "dataset.split_train", "0.95") == KS_OK);
  CHECK(ks_config_validate(c) == KS_ERR_CONFIG);

  ks_config* loaded = nullptr;
  CHECK(ks_config_load("/nonexistent/cfg.ini", &loaded) == KS_ERR_IO);
  CHECK(loaded == nullptr);
  ks_config_destroy(c);
  ks_config_destroy(nullptr);
}

TEST_CASE("workflow through the C interface") {
  const fs::path root = fs::temp_directory_path() / "kicksense-tests" / "capi";
  fs::remove_all(root);
  unsetenv("KICKSENSE_OUTPUT_ROOT");
  ks_config* c = nullptr;
  REQUIRE(ks_config_create(&c) == KS_OK);
  const std::pair<const char*, const char*> settings[] = {
      {"paths.output_root", root.c_str()},
      {"simulate.patterns", "s2,s5"},
      {"simulate.l_y_levels_mm", "60"},
      {"simulate.repetitions", "3"},
      {"dataset.split_train", "0.3333333333333333"},
      {"dataset.split_val", "0.3333333333333333"},
      {"dataset.split_test", "0.3333333333333334"},
      {"train.epochs", "1"},
      {"train.batch_size", "16"},
      {"train.max_windows_per_epoch", "32"},
      {"train.val_max_windows", "16"},
  };
  for (const auto& [k, v] : settings) REQUIRE(ks_config_set(c, k, v) == KS_OK);

  CHECK(ks_train(c, nullptr, nullptr) == KS_ERR_IO);
  std::vector<std::string> messages;
  REQUIRE(ks_simulate(c, collect, &messages) == KS_OK);
  CHECK_FALSE(messages.empty());
  REQUIRE(ks_train(c, collect, &messages) == KS_OK);
  REQUIRE(ks_eval(c, nullptr, nullptr) == KS_OK);
  CHECK(fs::exists(root / "reports" / "eval-classify-fusion-seed1" / "summary.txt"));

  ks_dataset* ds = nullptr;
  REQUIRE(ks_dataset_load((root / "dataset" / "manifest.ini").c_str(), &ds) == KS_OK);
  size_t runs = 0, train = 0, test = 0;
  CHECK(ks_dataset_runs(ds, &runs) == KS_OK);
  CHECK(runs == 6);
  CHECK(ks_dataset_count(ds, KS_SPLIT_TRAIN, &train) == KS_OK);
  CHECK(ks_dataset_count(ds, KS_SPLIT_TEST, &test) == KS_OK);
  CHECK(train == 2 * 240);
  CHECK(test == 2 * 240);
  CHECK(ks_dataset_count(ds, static_cast<ks_split>(9), &test) == KS_ERR_INVALID_ARGUMENT);
  ks_dataset_destroy(ds);

  ks_model* m = nullptr;
  const fs::path ckpt = root / "models" / "classify-fusion-seed1.ckpt";
  REQUIRE(ks_model_load(ckpt.c_str(), &m) == KS_OK);
  ks_task task;
  ks_variant variant;
  uint64_t seed = 0;
  CHECK(ks_model_info(m, &task, &variant, &seed) == KS_OK);
  CHECK(task == KS_TASK_CLASSIFY);
  CHECK(variant == KS_VARIANT_FUSION);
  CHECK(seed == 1);
  size_t len = 0, sensors = 0;
  CHECK(ks_model_window_shape(m, &len, &sensors) == KS_OK);
  CHECK(len == 100);
  CHECK(sensors == 3);

  std::vector<double> window(len * sensors);
  for (size_t i = 0; i < window.size(); ++i) window[i] = std::sin(0.1 * static_cast<double>(i));
  double out[6];
  size_t written = 0;
  REQUIRE(ks_model_predict(m, window.data(), len, sensors, out, 6, &written) == KS_OK);
  CHECK(written == 6);
  double sum = 0.0;
  for (double p : out) {
    CHECK(p >= 0.0);
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ks_model_predict(m, window.data(), len, sensors, out, 2, &written) ==
        KS_ERR_INVALID_ARGUMENT);
  CHECK(ks_model_predict(m, window.data(), len - 1, sensors, out, 6, &written) ==
        KS_ERR_INVALID_ARGUMENT);
  window[5] = NAN;
  CHECK(ks_model_predict(m, window.data(), len, sensors, out, 6, &written) != KS_OK);
  ks_model_destroy(m);

  CHECK(ks_model_load((root / "missing.ckpt").c_str(), &m) == KS_ERR_IO);
  CHECK(ks_config_set(c, "train.task", "localize") == KS_OK);
  CHECK(ks_stream(c, nullptr, nullptr) == KS_ERR_IO);
  ks_config_destroy(c);
}
