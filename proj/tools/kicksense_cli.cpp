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

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "kicksense/kicksense.h"

namespace {

int exit_code(ks_status s) {
  switch (s) {
    case KS_OK: return 0;
    case KS_ERR_CONFIG:
    case KS_ERR_INVALID_ARGUMENT:
    case KS_ERR_GEOMETRY: return 2;
    case KS_ERR_IO: return 3;
    case KS_ERR_PARSE:
    case KS_ERR_SCHEMA:
    case KS_ERR_VALIDATION: return 4;
    default: return 1;
  }
}

struct CliError {
  ks_status status;
};

void check(ks_status s) {
  if (s != KS_OK) throw CliError{s};
}

void log_line(const char* msg, void*) { std::fprintf(stderr, "%s\n", msg); }

struct Overrides {
  std::vector<std::pair<std::string, std::string>> items;
  void add(const std::string& key, const std::string& value) { items.emplace_back(key, value); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic lateral-line kick sensing: simulate, train, evaluate."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ks_version()));

  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("-c,--config", config_path, "Sectioned key = value config file")
      ->check(CLI::ExistingFile);
  app.add_option("-s,--set", sets, "Override one config key, section.key=value (repeatable)");

  Overrides ov;
  auto opt = [&ov](CLI::App* sub, const std::string& flag, const std::string& key,
                   const std::string& help) {
    sub->add_option_function<std::string>(
        flag, [&ov, key](const std::string& v) { ov.add(key, v); }, help + " (" + key + ")");
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate the run matrix and write CSVs + manifest");
  opt(simulate, "--reps", "simulate.repetitions", "Repetitions per configuration");
  opt(simulate, "--seed", "simulate.seed", "Base simulator seed");
  opt(simulate, "--noise", "simulate.noise_std_pa", "Sensor noise std in Pa");
  opt(simulate, "--dataset-dir", "paths.dataset_dir", "Output directory");

  auto add_model_opts = [&](CLI::App* sub) {
    opt(sub, "--task", "train.task", "classify or localize");
    opt(sub, "--variant", "train.variant", "fusion, time, freq, fft-mlp or stats-mlp");
    opt(sub, "--seed", "train.seed", "Training seed");
    opt(sub, "--checkpoint", "paths.checkpoint", "Checkpoint path");
    opt(sub, "--manifest", "paths.manifest", "Dataset manifest");
  };
  auto* train = app.add_subcommand("train", "Train one model variant");
  add_model_opts(train);
  opt(train, "--epochs", "train.epochs", "Classification epochs");
  opt(train, "--steps", "train.steps", "Localization steps");
  opt(train, "--batch-size", "train.batch_size", "Batch size");
  opt(train, "--lr", "train.learning_rate", "Learning rate");
  opt(train, "--max-windows", "train.max_windows_per_epoch", "Windows sampled per epoch, 0 = all");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  add_model_opts(eval);
  opt(eval, "--band", "eval.band_mm", "Tolerance band in mm");

  auto* ablate = app.add_subcommand("ablate", "Train and compare variants over several seeds");
  opt(ablate, "--seeds", "ablate.seeds", "Comma-separated seeds");
  opt(ablate, "--variants", "ablate.variants", "Comma-separated variants");
  opt(ablate, "--tasks", "ablate.tasks", "Comma-separated tasks");
  opt(ablate, "--max-windows", "train.max_windows_per_epoch", "Windows sampled per epoch, 0 = all");
  opt(ablate, "--manifest", "paths.manifest", "Dataset manifest");

  auto* stream = app.add_subcommand("stream", "Streaming recognition over pattern switches");
  add_model_opts(stream);
  opt(stream, "--transitions", "stream.transitions", "Comma-separated from>to pairs");
  opt(stream, "--noise", "stream.noise_std_pa", "Stream noise std in Pa");

  auto* print_config = app.add_subcommand("print-config", "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  ks_config* cfg = nullptr;
  try {
    check(config_path.empty() ? ks_config_create(&cfg) : ks_config_load(config_path.c_str(), &cfg));
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "error: --set expects section.key=value, got '%s'\n", kv.c_str());
        ks_config_destroy(cfg);
        return 2;
      }
      check(ks_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
    }
    for (const auto& [key, value] : ov.items) check(ks_config_set(cfg, key.c_str(), value.c_str()));
    check(ks_config_validate(cfg));

    if (*print_config) {
      std::size_t n = 0;
      check(ks_config_dump(cfg, nullptr, 0, &n));
      std::string text(n + 1, '\0');
      check(ks_config_dump(cfg, text.data(), text.size(), &n));
      text.resize(n);
      std::cout << text;
    } else if (*simulate) {
      check(ks_simulate(cfg, log_line, nullptr));
    } else if (*train) {
      check(ks_train(cfg, log_line, nullptr));
    } else if (*eval) {
      check(ks_eval(cfg, log_line, nullptr));
    } else if (*ablate) {
      check(ks_ablate(cfg, log_line, nullptr));
    } else if (*stream) {
      check(ks_stream(cfg, log_line, nullptr));
    }
  } catch (const CliError& e) {
    std::fprintf(stderr, "error (%s): %s\n", ks_status_string(e.status), ks_last_error());
    ks_config_destroy(cfg);
    return exit_code(e.status);
  }
  ks_config_destroy(cfg);
  return 0;
}
