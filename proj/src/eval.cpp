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

#include "kicksense/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "kicksense/error.hpp"
#include "kicksense/util.hpp"

namespace kicksense {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_class(int c) {
  require(c >= 0 && c < kPatternCount, ErrorCode::InvalidArgument,
          "class index " + std::to_string(c) + " out of range");
}

std::size_t at(int c) { return static_cast<std::size_t>(c); }

// Fills `windows` for a slice of the source and returns pointers to them.
std::vector<const Eigen::MatrixXd*> load_slice(const SampleSource& src, std::size_t start,
                                               std::size_t n, std::vector<Eigen::MatrixXd>& windows) {
  windows.resize(std::max(windows.size(), n));
  std::vector<const Eigen::MatrixXd*> ptrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    src.window(start + i, windows[i]);
    ptrs[i] = &windows[i];
  }
  return ptrs;
}

}  // namespace

// ----------------------------------------------------------- confusion

void ConfusionMatrix::add(int truth, int predicted) {
  check_class(truth);
  check_class(predicted);
  ++counts[at(truth)][at(predicted)];
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) {
    for (auto c : row) n += c;
  }
  return n;
}

std::size_t ConfusionMatrix::correct() const {
  std::size_t n = 0;
  for (int c = 0; c < kPatternCount; ++c) n += counts[at(c)][at(c)];
  return n;
}

std::size_t ConfusionMatrix::row_total(int truth) const {
  check_class(truth);
  std::size_t n = 0;
  for (auto c : counts[at(truth)]) n += c;
  return n;
}

double ConfusionMatrix::overall_accuracy() const {
  const std::size_t n = total();
  return n == 0 ? kNaN : static_cast<double>(correct()) / static_cast<double>(n);
}

std::array<double, kPatternCount> ConfusionMatrix::per_class_accuracy() const {
  std::array<double, kPatternCount> out{};
  for (int c = 0; c < kPatternCount; ++c) {
    const std::size_t n = row_total(c);
    out[at(c)] = n == 0 ? kNaN : static_cast<double>(counts[at(c)][at(c)]) / static_cast<double>(n);
  }
  return out;
}

ConfusionMatrix confusion_from_predictions(std::span<const int> truth,
                                           std::span<const int> predicted) {
  require(truth.size() == predicted.size(), ErrorCode::InvalidArgument,
          "truth and prediction counts differ");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

ConfusionMatrix evaluate_classifier(const KickModel& model, const SampleSource& source,
                                    std::size_t batch_size) {
  require(model.task() == Task::Classify, ErrorCode::State, "model is not a classifier");
  require(batch_size > 0, ErrorCode::InvalidArgument, "batch_size must be > 0");
  ConfusionMatrix cm;
  std::vector<Eigen::MatrixXd> windows;
  for (std::size_t start = 0; start < source.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, source.size() - start);
    const auto ptrs = load_slice(source, start, n, windows);
    const auto preds = model.predict(ptrs);
    for (std::size_t i = 0; i < n; ++i) cm.add(source.label(start + i), preds[i].predicted_class());
  }
  return cm;
}

// ---------------------------------------------------------------- RMSE

void ErrorAccumulator::add(double err_x, double err_y, double band_mm) {
  sum_sq_x += err_x * err_x;
  sum_sq_y += err_y * err_y;
  ++count;
  if (std::abs(err_x) <= band_mm) ++within_x;
  if (std::abs(err_y) <= band_mm) ++within_y;
}

void ErrorAccumulator::merge(const ErrorAccumulator& other) {
  sum_sq_x += other.sum_sq_x;
  sum_sq_y += other.sum_sq_y;
  count += other.count;
  within_x += other.within_x;
  within_y += other.within_y;
}

double ErrorAccumulator::rmse_x() const {
  return count == 0 ? kNaN : std::sqrt(sum_sq_x / static_cast<double>(count));
}

double ErrorAccumulator::rmse_y() const {
  return count == 0 ? kNaN : std::sqrt(sum_sq_y / static_cast<double>(count));
}

double ErrorAccumulator::band_fraction_x() const {
  return count == 0 ? kNaN : static_cast<double>(within_x) / static_cast<double>(count);
}

double ErrorAccumulator::band_fraction_y() const {
  return count == 0 ? kNaN : static_cast<double>(within_y) / static_cast<double>(count);
}

std::vector<long long> RmseReport::l_y_levels() const {
  std::vector<long long> out;
  for (const auto& [key, acc] : stratified) out.push_back(key.second);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

double mean_over_patterns(const RmseReport& r, long long l_y, bool x_axis) {
  double sum = 0.0;
  int n = 0;
  for (int p = 0; p < kPatternCount; ++p) {
    const auto it = r.stratified.find({p, l_y});
    if (it == r.stratified.end() || it->second.count == 0) continue;
    sum += x_axis ? it->second.rmse_x() : it->second.rmse_y();
    ++n;
  }
  return n == 0 ? kNaN : sum / n;
}

}  // namespace

double RmseReport::mean_rmse_x_at(long long l_y_mm) const {
  return mean_over_patterns(*this, l_y_mm, true);
}

double RmseReport::mean_rmse_y_at(long long l_y_mm) const {
  return mean_over_patterns(*this, l_y_mm, false);
}

RmseReport rmse_from_samples(std::span<const RegressionSample> samples, double band_mm) {
  require(band_mm >= 0.0, ErrorCode::InvalidArgument, "tolerance band must be >= 0");
  RmseReport r;
  r.band_mm = band_mm;
  for (const auto& s : samples) {
    check_class(s.pattern);
    const double ex = s.pred_x - s.l_x, ey = s.pred_y - s.l_y;
    r.per_pattern[at(s.pattern)].add(ex, ey, band_mm);
    r.stratified[{s.pattern, std::llround(s.l_y)}].add(ex, ey, band_mm);
    r.pooled.add(ex, ey, band_mm);
  }
  return r;
}

RmseReport evaluate_regressor(const KickModel& model, const SampleSource& source, double band_mm,
                              std::size_t batch_size) {
  require(model.task() == Task::Localize, ErrorCode::State, "model is not a regressor");
  require(batch_size > 0, ErrorCode::InvalidArgument, "batch_size must be > 0");
  std::vector<RegressionSample> samples;
  samples.reserve(source.size());
  std::vector<Eigen::MatrixXd> windows;
  for (std::size_t start = 0; start < source.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, source.size() - start);
    const auto ptrs = load_slice(source, start, n, windows);
    const auto preds = model.predict(ptrs);
    for (std::size_t i = 0; i < n; ++i) {
      const auto t = source.target(start + i);
      samples.push_back({source.label(start + i), t[0], t[1], preds[i].l_x, preds[i].l_y});
    }
  }
  return rmse_from_samples(samples, band_mm);
}

// ------------------------------------------------------------ ablation

std::uint64_t record_ids_hash(std::span<const std::size_t> ids) {
  std::string bytes;
  bytes.reserve(ids.size() * 8);
  for (auto id : ids) {
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<char>((id >> (8 * b)) & 0xFF));
  }
  return fnv1a64(bytes);
}

const AblationEntry* AblationReport::find(Variant variant, Task task, std::uint64_t seed) const {
  for (const auto& e : entries) {
    if (e.variant == variant && e.task == task && e.seed == seed) return &e;
  }
  return nullptr;
}

namespace {

template <typename F>
double mean_of(const AblationReport& r, Variant v, Task task, F metric) {
  double sum = 0.0;
  int n = 0;
  for (const auto& e : r.entries) {
    if (e.variant != v || e.task != task) continue;
    sum += metric(e);
    ++n;
  }
  return n == 0 ? kNaN : sum / n;
}

}  // namespace

double AblationReport::mean_accuracy(Variant variant) const {
  return mean_of(*this, variant, Task::Classify,
                 [](const AblationEntry& e) { return e.confusion.overall_accuracy(); });
}

double AblationReport::mean_rmse_x(Variant variant) const {
  return mean_of(*this, variant, Task::Localize,
                 [](const AblationEntry& e) { return e.rmse.pooled.rmse_x(); });
}

double AblationReport::mean_rmse_y(Variant variant) const {
  return mean_of(*this, variant, Task::Localize,
                 [](const AblationEntry& e) { return e.rmse.pooled.rmse_y(); });
}

AblationReport ablation_suite(const Dataset& dataset, const AblationOptions& options,
                              const AblationProgress& progress) {
  require(!options.seeds.empty(), ErrorCode::Config, "ablation needs at least one seed");
  require(!options.variants.empty(), ErrorCode::Config, "ablation needs at least one variant");
  const DatasetSource train(dataset, Split::Train);
  const DatasetSource val(dataset, Split::Val);
  const DatasetSource test(dataset, Split::Test);
  require(train.size() > 0 && test.size() > 0, ErrorCode::Validation,
          "dataset has no train or test records; was it split?");
  AblationReport report;
  report.test_records = test.size();
  report.test_records_hash = record_ids_hash(test.record_ids());

  std::vector<Task> tasks;
  if (options.classify) tasks.push_back(Task::Classify);
  if (options.localize) tasks.push_back(Task::Localize);
  for (Task task : tasks) {
    for (auto seed : options.seeds) {
      for (Variant variant : options.variants) {
        TrainOptions opts = options.train;
        opts.seed = seed;
        const auto start = std::chrono::steady_clock::now();
        auto result = train_model(train, val.size() ? &val : nullptr, task, variant,
                                  options.arch, opts, dataset.sample_rate_hz);
        AblationEntry entry;
        entry.variant = variant;
        entry.task = task;
        entry.seed = seed;
        entry.train_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        entry.log = std::move(result.log);
        entry.checkpoint_hash =
            hex64(fnv1a64(nn::serialize_checkpoint(result.model->to_checkpoint())));
        if (task == Task::Classify) {
          entry.confusion = evaluate_classifier(*result.model, test);
        } else {
          entry.rmse = evaluate_regressor(*result.model, test, options.band_mm);
        }
        if (options.keep_models) entry.model = std::move(result.model);
        if (progress) progress(entry);
        report.entries.push_back(std::move(entry));
      }
    }
  }
  return report;
}

// ----------------------------------------------------------- streaming

std::vector<StreamScenario> default_transitions() {
  using P = PatternId;
  const std::pair<P, P> pairs[] = {{P::S6, P::S4}, {P::S4, P::S2}, {P::S2, P::S4},
                                   {P::S4, P::S3}, {P::S3, P::S5}, {P::S5, P::S1}};
  std::vector<StreamScenario> out;
  for (const auto& [a, b] : pairs) {
    StreamScenario s;
    s.from = a;
    s.to = b;
    out.push_back(s);
  }
  return out;
}

double measure_transient(std::span<const StreamPoint> trace, double switch_time_s, int target,
                         std::size_t consecutive) {
  require(consecutive >= 1, ErrorCode::InvalidArgument, "consecutive must be >= 1");
  std::size_t run = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].t < switch_time_s - 1e-9) continue;
    run = trace[i].predicted == target ? run + 1 : 0;
    if (run == consecutive) return trace[i + 1 - consecutive].t - switch_time_s;
  }
  return kNaN;
}

StreamResult streaming_recognition(const KickModel& model, const Run& corrected,
                                   const StreamScenario& scenario, std::size_t consecutive) {
  require(model.task() == Task::Classify, ErrorCode::State, "streaming needs a classifier");
  corrected.validate();
  const std::size_t len = model.arch().window_len;
  const std::size_t first = corrected.rest_rows + len - 1;
  require(corrected.rows() > first, ErrorCode::Validation,
          "stream is shorter than one window after kick start");
  StreamResult result;
  result.scenario = scenario;
  constexpr std::size_t kBatch = 256;
  std::vector<Eigen::MatrixXd> windows(kBatch);
  std::vector<const Eigen::MatrixXd*> ptrs;
  for (std::size_t row = first; row < corrected.rows(); row += kBatch) {
    const std::size_t n = std::min(kBatch, corrected.rows() - row);
    ptrs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      windows[i] = corrected.pressure.middleRows(static_cast<Eigen::Index>(row + i + 1 - len),
                                                 static_cast<Eigen::Index>(len));
      ptrs.push_back(&windows[i]);
    }
    const auto preds = model.predict(ptrs);
    for (std::size_t i = 0; i < n; ++i) {
      StreamPoint p;
      p.t = corrected.t[row + i];
      p.truth = pattern_index(corrected.pattern[row + i]);
      p.predicted = preds[i].predicted_class();
      p.confidence = preds[i].class_probs[static_cast<std::size_t>(p.predicted)];
      result.trace.push_back(p);
    }
  }
  result.transient_s = measure_transient(result.trace, scenario.switch_time_s,
                                         pattern_index(scenario.to), consecutive);
  return result;
}

Run simulate_stream(const StreamScenario& scenario, const StreamOptions& options) {
  require(scenario.switch_time_s >= 0.0 && scenario.duration_s > scenario.switch_time_s,
          ErrorCode::Config, "stream switch time must lie inside the stream duration");
  SimConfig sim = options.sim;
  sim.seed = mix_seed(options.seed, static_cast<std::uint64_t>(pattern_index(scenario.from) * 8 +
                                                               pattern_index(scenario.to)));
  Trajectory traj;
  const auto n = static_cast<std::size_t>(std::llround(scenario.duration_s * sim.sample_rate_hz));
  for (std::size_t k = 0; k < n; ++k) {
    traj.samples.push_back(
        {static_cast<double>(k) / sim.sample_rate_hz, options.l_x_mm, options.l_y_mm});
  }
  std::vector<PatternSegment> schedule{{0.0, scenario.from}};
  if (scenario.to != scenario.from) schedule.push_back({scenario.switch_time_s, scenario.to});
  return subtract_baseline(simulate_schedule(schedule, options.geometry, sim, traj));
}

StreamResult run_stream_scenario(const KickModel& model, const StreamScenario& scenario,
                                 const StreamOptions& options) {
  return streaming_recognition(model, simulate_stream(scenario, options), scenario,
                               options.consecutive);
}

// -------------------------------------------------------------- writers

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  out << "true_pattern,predicted_pattern,count\n";
  for (int t = 0; t < kPatternCount; ++t) {
    for (int p = 0; p < kPatternCount; ++p) {
      out << pattern_name(pattern_from_index(t)) << ',' << pattern_name(pattern_from_index(p))
          << ',' << cm.counts[at(t)][at(p)] << '\n';
    }
  }
}

void write_rmse_csv(std::ostream& out, const RmseReport& report) {
  out << "pattern,l_y_mm,count,rmse_x_mm,rmse_y_mm,within_band_x,within_band_y\n";
  auto row = [&](const std::string& pattern, const std::string& level, const ErrorAccumulator& a) {
    out << pattern << ',' << level << ',' << a.count << ',' << format_double(a.rmse_x()) << ','
        << format_double(a.rmse_y()) << ',' << format_double(a.band_fraction_x()) << ','
        << format_double(a.band_fraction_y()) << '\n';
  };
  for (const auto& [key, acc] : report.stratified) {
    row(pattern_name(pattern_from_index(key.first)), std::to_string(key.second), acc);
  }
  for (int p = 0; p < kPatternCount; ++p) {
    if (report.per_pattern[at(p)].count) {
      row(pattern_name(pattern_from_index(p)), "all", report.per_pattern[at(p)]);
    }
  }
  row("all", "all", report.pooled);
}

void write_stream_csv(std::ostream& out, std::span<const StreamResult> results) {
  out << "transition,t_s,true_pattern,predicted_pattern,confidence\n";
  for (const auto& r : results) {
    const std::string name =
        pattern_name(r.scenario.from) + "->" + pattern_name(r.scenario.to);
    for (const auto& p : r.trace) {
      out << name << ',' << format_double(p.t) << ','
          << pattern_name(pattern_from_index(p.truth)) << ','
          << pattern_name(pattern_from_index(p.predicted)) << ',' << format_double(p.confidence)
          << '\n';
    }
  }
}

void write_ablation_csv(std::ostream& out, const AblationReport& report) {
  out << "task,variant,seed,accuracy,rmse_x_mm,rmse_y_mm,checkpoint_hash\n";
  for (const auto& e : report.entries) {
    const bool cls = e.task == Task::Classify;
    out << task_name(e.task) << ',' << variant_name(e.variant) << ',' << e.seed << ','
        << (cls ? format_double(e.confusion.overall_accuracy()) : "") << ','
        << (cls ? "" : format_double(e.rmse.pooled.rmse_x())) << ','
        << (cls ? "" : format_double(e.rmse.pooled.rmse_y())) << ',' << e.checkpoint_hash << '\n';
  }
}

namespace {

std::string pct(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * v);
  return buf;
}

std::string mm(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f mm", v);
  return buf;
}

}  // namespace

void write_classification_summary(std::ostream& out, const ConfusionMatrix& cm) {
  out << "samples: " << cm.total() << "\n";
  out << "overall accuracy: " << pct(cm.overall_accuracy()) << " (" << cm.correct() << "/"
      << cm.total() << ")\n";
  const auto per = cm.per_class_accuracy();
  for (int c = 0; c < kPatternCount; ++c) {
    out << "  " << pattern_name(pattern_from_index(c)) << ": " << pct(per[at(c)]) << " of "
        << cm.row_total(c) << "\n";
  }
}

void write_regression_summary(std::ostream& out, const RmseReport& report) {
  out << "samples: " << report.pooled.count << "\n";
  out << "pooled RMSE: L_x " << mm(report.pooled.rmse_x()) << ", L_y "
      << mm(report.pooled.rmse_y()) << "\n";
  out << "within " << format_double(report.band_mm) << " mm: L_x "
      << pct(report.pooled.band_fraction_x()) << ", L_y " << pct(report.pooled.band_fraction_y())
      << "\n";
  for (int p = 0; p < kPatternCount; ++p) {
    const auto& a = report.per_pattern[at(p)];
    if (!a.count) continue;
    out << "  " << pattern_name(pattern_from_index(p)) << ": L_x " << mm(a.rmse_x()) << ", L_y "
        << mm(a.rmse_y()) << " (" << a.count << ")\n";
  }
}

}  // namespace kicksense
