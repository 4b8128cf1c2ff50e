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

#include "kicksense/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "kicksense/error.hpp"
#include "kicksense/util.hpp"

namespace kicksense {

namespace fs = std::filesystem;

namespace {

void say(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

void make_dirs(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorCode::Io,
          "cannot create directory '" + dir.string() + "'" + (ec ? ": " + ec.message() : ""));
}

template <typename F>
void write_file(const fs::path& path, F body) {
  make_dirs(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  body(out);
  out.flush();
  require(static_cast<bool>(out), ErrorCode::Io, "failed writing '" + path.string() + "'");
}

void write_snapshot(const fs::path& path, const ExperimentConfig& config) {
  write_file(path, [&](std::ostream& out) { out << config.dump(); });
}

Dataset open_dataset(const ExperimentConfig& config) {
  const std::string manifest = config.manifest_path();
  require(fs::exists(manifest), ErrorCode::Io,
          "dataset manifest '" + manifest + "' not found; run simulate first");
  return load_dataset(manifest);
}

std::string seed_list(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) out += (i ? "," : "") + std::to_string(seeds[i]);
  return out;
}

// Provenance header shared by every summary: the seeds and the split used.
void write_provenance(std::ostream& out, const ExperimentConfig& config, const Dataset& ds,
                      const std::vector<std::uint64_t>& seeds) {
  const auto test_ids = ds.indices(Split::Test);
  out << "manifest: " << fs::path(config.manifest_path()).filename().string() << "\n";
  out << "runs: " << ds.runs.size() << ", records: " << ds.records.size() << "\n";
  out << "split seed: " << ds.split_seed << "; train " << ds.count(Split::Train) << ", val "
      << ds.count(Split::Val) << ", test " << ds.count(Split::Test) << "\n";
  out << "test records fnv1a64: " << hex64(record_ids_hash(test_ids)) << "\n";
  out << "seeds: " << seed_list(seeds) << "\n";
}

std::string stem_for(const ExperimentConfig& c, std::uint64_t seed) {
  return std::string(task_name(c.task)) + "-" + variant_name(c.variant) + "-seed" +
         std::to_string(seed);
}

void write_log_csv(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,step,lr,train_loss,train_metric,val_metric\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << e.step << ',' << format_double(e.lr) << ','
        << format_double(e.train_loss) << ',' << format_double(e.train_metric) << ','
        << format_double(e.val_metric) << '\n';
  }
}

}  // namespace

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex64(fnv1a64(bytes));
}

StreamOptions stream_options(const ExperimentConfig& config) {
  StreamOptions opts = config.stream.options;
  opts.sim = config.build.sim;
  opts.sim.noise_std_pa = config.stream.options.sim.noise_std_pa;
  opts.geometry = config.build.geometry;
  return opts;
}

SimulateSummary cmd_simulate(const ExperimentConfig& config, const LogFn& log) {
  config.validate();
  const std::string dir = config.dataset_dir();
  make_dirs(dir);
  say(log, "simulating " + std::to_string(config.build.patterns.size() *
                                          config.build.l_y_levels.size() *
                                          static_cast<std::size_t>(config.build.repetitions)) +
               " runs");
  const auto raw = simulate_runs(config.build);
  const auto manifest = export_runs(raw, dir, config.build.windowing,
                                    config.build.sim.sample_rate_hz, config.split_seed,
                                    config.split);
  write_snapshot(fs::path(dir) / "config.ini", config);

  SimulateSummary summary;
  summary.manifest = config.manifest_path();
  summary.runs = manifest.runs.size();
  const Dataset ds = assemble_dataset(raw, config.build.windowing, config.build.sim.sample_rate_hz);
  summary.records = ds.records.size();
  say(log, "wrote " + std::to_string(summary.runs) + " runs (" + std::to_string(summary.records) +
               " windows) to " + dir);
  return summary;
}

TrainSummary cmd_train(const ExperimentConfig& config, const LogFn& log) {
  config.validate();
  const Dataset ds = open_dataset(config);
  const DatasetSource train(ds, Split::Train);
  const DatasetSource val(ds, Split::Val);
  require(train.size() > 0, ErrorCode::Validation, "dataset has no training records");
  say(log, "training " + stem_for(config, config.train.seed) + " on " +
               std::to_string(train.size()) + " windows");

  auto result = train_model(
      train, val.size() ? &val : nullptr, config.task, config.variant, config.arch, config.train,
      ds.sample_rate_hz, [&](const EpochLog& e) {
        std::ostringstream msg;
        msg << (config.task == Task::Classify ? "epoch " : "step ")
            << (config.task == Task::Classify ? e.epoch : e.step) << " lr "
            << format_double(e.lr) << " loss " << format_double(e.train_loss) << " val "
            << format_double(e.val_metric);
        say(log, msg.str());
      });

  TrainSummary summary;
  summary.checkpoint = config.checkpoint_path();
  make_dirs(fs::path(summary.checkpoint).parent_path());
  result.model->save(summary.checkpoint);
  summary.checkpoint_hash = file_hash(summary.checkpoint);
  summary.log = std::move(result.log);
  write_file(summary.checkpoint + ".log.csv",
             [&](std::ostream& out) { write_log_csv(out, summary.log); });
  write_snapshot(summary.checkpoint + ".config.ini", config);
  say(log, "saved " + summary.checkpoint + " (" + summary.checkpoint_hash + ")");
  return summary;
}

EvalSummary cmd_eval(const ExperimentConfig& config, const LogFn& log) {
  config.validate();
  const std::string ckpt = config.checkpoint_path();
  require(fs::exists(ckpt), ErrorCode::Io, "checkpoint '" + ckpt + "' not found");
  const auto model = KickModel::load(ckpt);
  const Dataset ds = open_dataset(config);
  const DatasetSource test(ds, Split::Test);
  require(test.size() > 0, ErrorCode::Validation, "dataset has no test records");

  EvalSummary summary;
  summary.task = model->task();
  summary.checkpoint_hash = file_hash(ckpt);
  summary.test_records_hash = record_ids_hash(test.record_ids());
  const std::string stem = std::string(task_name(model->task())) + "-" +
                           variant_name(model->variant()) + "-seed" +
                           std::to_string(model->seed());
  const fs::path dir = fs::path(config.report_dir()) / ("eval-" + stem);
  summary.report_dir = dir.string();
  say(log, "evaluating " + stem + " on " + std::to_string(test.size()) + " test windows");

  if (summary.task == Task::Classify) {
    summary.confusion = evaluate_classifier(*model, test);
    write_file(dir / "confusion.csv",
               [&](std::ostream& out) { write_confusion_csv(out, summary.confusion); });
  } else {
    summary.rmse = evaluate_regressor(*model, test, config.band_mm);
    write_file(dir / "rmse.csv", [&](std::ostream& out) { write_rmse_csv(out, summary.rmse); });
  }
  write_file(dir / "summary.txt", [&](std::ostream& out) {
    out << "checkpoint: " << fs::path(ckpt).filename().string() << "\n";
    out << "checkpoint fnv1a64: " << summary.checkpoint_hash << "\n";
    out << "task: " << task_name(model->task()) << ", variant: " << variant_name(model->variant())
        << "\n";
    write_provenance(out, config, ds, {model->seed()});
    if (summary.task == Task::Classify) {
      write_classification_summary(out, summary.confusion);
    } else {
      write_regression_summary(out, summary.rmse);
    }
  });
  say(log, "wrote " + summary.report_dir);
  return summary;
}

AblationReport cmd_ablate(const ExperimentConfig& config, const LogFn& log) {
  config.validate();
  const Dataset ds = open_dataset(config);
  AblationOptions opts = config.ablate;
  opts.arch = config.arch;
  opts.train = config.train;
  opts.band_mm = config.band_mm;
  auto report = ablation_suite(ds, opts, [&](const AblationEntry& e) {
    std::ostringstream msg;
    msg << task_name(e.task) << ' ' << variant_name(e.variant) << " seed " << e.seed << ": ";
    if (e.task == Task::Classify) {
      msg << "accuracy " << format_double(e.confusion.overall_accuracy());
    } else {
      msg << "rmse x " << format_double(e.rmse.pooled.rmse_x()) << " y "
          << format_double(e.rmse.pooled.rmse_y());
    }
    say(log, msg.str());
  });

  const fs::path dir(config.report_dir());
  write_file(dir / "ablation.csv", [&](std::ostream& out) { write_ablation_csv(out, report); });
  write_file(dir / "ablation_by_ly.csv", [&](std::ostream& out) {
    out << "variant,seed,l_y_mm,rmse_x_mm,rmse_y_mm\n";
    for (const auto& e : report.entries) {
      if (e.task != Task::Localize) continue;
      for (long long ly : e.rmse.l_y_levels()) {
        out << variant_name(e.variant) << ',' << e.seed << ',' << ly << ','
            << format_double(e.rmse.mean_rmse_x_at(ly)) << ','
            << format_double(e.rmse.mean_rmse_y_at(ly)) << '\n';
      }
    }
  });
  write_file(dir / "ablation_summary.txt", [&](std::ostream& out) {
    write_provenance(out, config, ds, opts.seeds);
    for (Variant v : opts.variants) {
      out << variant_name(v) << ":";
      if (opts.classify) out << " accuracy " << format_double(report.mean_accuracy(v));
      if (opts.localize) {
        out << " rmse_x " << format_double(report.mean_rmse_x(v)) << " mm, rmse_y "
            << format_double(report.mean_rmse_y(v)) << " mm";
      }
      out << "\n";
    }
  });
  write_snapshot(dir / "ablation.config.ini", config);
  say(log, "wrote " + dir.string());
  return report;
}

StreamSummary cmd_stream(const ExperimentConfig& config, const LogFn& log) {
  config.validate();
  const std::string ckpt = config.checkpoint_path();
  require(fs::exists(ckpt), ErrorCode::Io, "checkpoint '" + ckpt + "' not found");
  const auto model = KickModel::load(ckpt);
  require(model->task() == Task::Classify, ErrorCode::State,
          "streaming recognition needs a classification checkpoint");
  const StreamOptions opts = stream_options(config);

  StreamSummary summary;
  for (const auto& sc : config.stream.transitions) {
    summary.results.push_back(run_stream_scenario(*model, sc, opts));
    const auto& r = summary.results.back();
    say(log, pattern_name(sc.from) + " -> " + pattern_name(sc.to) + ": transient " +
                 format_double(r.transient_s) + " s");
  }
  const fs::path dir = fs::path(config.report_dir()) / "stream";
  summary.report_dir = dir.string();
  write_file(dir / "trace.csv",
             [&](std::ostream& out) { write_stream_csv(out, summary.results); });
  write_file(dir / "summary.txt", [&](std::ostream& out) {
    out << "checkpoint: " << fs::path(ckpt).filename().string() << "\n";
    out << "checkpoint fnv1a64: " << file_hash(ckpt) << "\n";
    out << "stream seed: " << opts.seed << ", noise " << format_double(opts.sim.noise_std_pa)
        << " Pa, L_x " << format_double(opts.l_x_mm) << " mm, L_y " << format_double(opts.l_y_mm)
        << " mm\n";
    for (const auto& r : summary.results) {
      out << pattern_name(r.scenario.from) << " -> " << pattern_name(r.scenario.to)
          << ": transient "
          << (std::isnan(r.transient_s) ? std::string("not settled")
                                        : format_double(r.transient_s) + " s")
          << "\n";
    }
  });
  write_snapshot(dir / "config.ini", config);
  return summary;
}

}  // namespace kicksense
