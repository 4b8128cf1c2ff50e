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

#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "kicksense/eval.hpp"
#include "support.hpp"

using namespace kicksense;
using kstest::expect_error;

namespace {

std::vector<StreamPoint> trace_of(std::initializer_list<int> predicted, double dt = 1.0) {
  std::vector<StreamPoint> out;
  double t = 0.0;
  for (int p : predicted) {
    out.push_back({t, 0, p, 1.0});
    t += dt;
  }
  return out;
}

}  // namespace

TEST_CASE("confusion matrix agrees with a direct recount") {
  Rng rng(3);
  std::vector<int> truth(5000), pred(5000);
  std::map<std::pair<int, int>, std::size_t> oracle;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = static_cast<int>(rng.below(6));
    pred[i] = rng.uniform(0, 1) < 0.7 ? truth[i] : static_cast<int>(rng.below(6));
    ++oracle[{truth[i], pred[i]}];
  }
  const auto cm = confusion_from_predictions(truth, pred);
  std::size_t diag = 0;
  for (int t = 0; t < kPatternCount; ++t) {
    std::size_t row = 0;
    for (int p = 0; p < kPatternCount; ++p) {
      CHECK(cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] ==
            oracle[{t, p}]);
      row += oracle[{t, p}];
    }
    CHECK(cm.row_total(t) == row);
    diag += oracle[{t, t}];
    const auto per = cm.per_class_accuracy();
    CHECK(per[static_cast<std::size_t>(t)] ==
          doctest::Approx(static_cast<double>(oracle[{t, t}]) / static_cast<double>(row)));
  }
  CHECK(cm.total() == truth.size());
  CHECK(cm.correct() == diag);
  CHECK(cm.overall_accuracy() == doctest::Approx(static_cast<double>(diag) / 5000.0));
}

TEST_CASE("uniform random predictions score near chance") {
  Rng rng(11);
  std::vector<int> truth(60000), pred(60000);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = static_cast<int>(i % 6);
    pred[i] = static_cast<int>(rng.below(6));
  }
  const auto cm = confusion_from_predictions(truth, pred);
  CHECK(std::abs(cm.overall_accuracy() - 1.0 / 6.0) <= 0.03);
  for (double a : cm.per_class_accuracy()) CHECK(std::abs(a - 1.0 / 6.0) <= 0.03);
}

TEST_CASE("confusion edge cases") {
  ConfusionMatrix cm;
  const double empty = cm.overall_accuracy();
  CHECK((std::isnan(empty) || empty == 0.0));
  cm.add(2, 2);
  const auto per = cm.per_class_accuracy();
  CHECK(per[2] == 1.0);
  CHECK(std::isnan(per[0]));
  CHECK(expect_error([&] { cm.add(6, 0); }, ErrorCode::InvalidArgument) != "no error thrown");
  const std::vector<int> a{0, 1}, b{0};
  CHECK(expect_error([&] { confusion_from_predictions(a, b); }, ErrorCode::InvalidArgument) !=
        "no error thrown");

  std::ostringstream out;
  write_confusion_csv(out, cm);
  const std::string s = out.str();
  CHECK(s.rfind("true_pattern,predicted_pattern,count\n", 0) == 0);
  CHECK(s.find("s3,s3,1\n") != std::string::npos);
  CHECK(std::count(s.begin(), s.end(), '\n') == 37);
}

TEST_CASE("rmse identities") {
  Rng rng(5);
  std::vector<RegressionSample> perfect, constant;
  double mean_x = 0.0;
  std::vector<double> xs;
  for (int i = 0; i < 3000; ++i) {
    RegressionSample s;
    s.pattern = i % 6;
    s.l_y = 20.0 * static_cast<double>(1 + (i / 6) % 10);
    s.l_x = rng.uniform(-100, 100);
    s.pred_x = s.l_x;
    s.pred_y = s.l_y;
    perfect.push_back(s);
    xs.push_back(s.l_x);
    mean_x += s.l_x;
  }
  mean_x /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean_x) * (x - mean_x);
  const double pop_std = std::sqrt(var / static_cast<double>(xs.size()));

  const auto zero = rmse_from_samples(perfect);
  CHECK(zero.pooled.rmse_x() == 0.0);
  CHECK(zero.pooled.rmse_y() == 0.0);
  CHECK(zero.pooled.band_fraction_x() == 1.0);

  constant = perfect;
  for (auto& s : constant) s.pred_x = mean_x;
  const auto rep = rmse_from_samples(constant, 20.0);
  CHECK(rep.pooled.rmse_x() == doctest::Approx(pop_std).epsilon(1e-12));

  // Pooled mean square is the count-weighted mean of the strata.
  double weighted = 0.0;
  std::size_t n = 0;
  for (const auto& [key, acc] : rep.stratified) {
    weighted += acc.rmse_x() * acc.rmse_x() * static_cast<double>(acc.count);
    n += acc.count;
  }
  CHECK(n == constant.size());
  CHECK(rep.stratified.size() == 60);
  CHECK(std::sqrt(weighted / static_cast<double>(n)) ==
        doctest::Approx(rep.pooled.rmse_x()).epsilon(1e-12));
  CHECK(rep.l_y_levels().size() == 10);

  // Mean over patterns at one level.
  double sum = 0.0;
  for (int p = 0; p < 6; ++p) sum += rep.stratified.at({p, 100}).rmse_x();
  CHECK(rep.mean_rmse_x_at(100) == doctest::Approx(sum / 6.0));
  CHECK(std::isnan(rep.mean_rmse_x_at(30)));

  // Band fraction counts |error| <= band.
  std::size_t inside = 0;
  for (double x : xs) inside += std::abs(x - mean_x) <= 20.0;
  CHECK(rep.pooled.within_x == inside);
}

TEST_CASE("error accumulators merge additively") {
  ErrorAccumulator a, b, all;
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const double ex = 10.0 * rng.normal(), ey = 5.0 * rng.normal();
    (i < 40 ? a : b).add(ex, ey, 20.0);
    all.add(ex, ey, 20.0);
  }
  a.merge(b);
  CHECK(a.count == all.count);
  CHECK(a.rmse_x() == doctest::Approx(all.rmse_x()));
  CHECK(a.within_y == all.within_y);
  CHECK(std::isnan(ErrorAccumulator{}.rmse_x()));
}

TEST_CASE("transient measurement") {
  // Switch at t=2, target 1, three in a row needed.
  const auto t1 = trace_of({0, 0, 0, 1, 0, 1, 1, 1, 1});
  CHECK(measure_transient(t1, 2.0, 1, 3) == doctest::Approx(3.0));
  // Correct predictions before the switch do not count.
  const auto t2 = trace_of({1, 1, 1, 1, 1});
  CHECK(measure_transient(t2, 2.0, 1, 3) == doctest::Approx(0.0));
  // Never settles.
  const auto t3 = trace_of({0, 1, 1, 0, 1, 1});
  CHECK(std::isnan(measure_transient(t3, 0.0, 1, 3)));
  // Window exactly at the end.
  const auto t4 = trace_of({0, 0, 1, 1});
  CHECK(measure_transient(t4, 0.0, 1, 2) == doctest::Approx(2.0));
  CHECK(expect_error([&] { measure_transient(t4, 0.0, 1, 0); }, ErrorCode::InvalidArgument) !=
        "no error thrown");
}

TEST_CASE("streaming predictions only use past samples") {
  StreamOptions opts;
  StreamScenario sc{PatternId::S2, PatternId::S5, 6.0, 12.0};
  const Run run = simulate_stream(sc, opts);
  CHECK(run.rest_rows > 0);
  CHECK(run.pattern.back() == PatternId::S5);
  CHECK(run.pattern[run.rest_rows] == PatternId::S2);

  ArchConfig arch;
  KickModel model(Task::Classify, Variant::TimeOnly, arch, 4);
  const auto base = streaming_recognition(model, run, sc, 10);
  CHECK(base.trace.size() == run.rows() - run.rest_rows - arch.window_len + 1);
  CHECK(base.trace.front().t == doctest::Approx(static_cast<double>(arch.window_len - 1) / 25.0));

  Run altered = run;
  const std::size_t cut = run.rows() - 40;
  altered.pressure.bottomRows(40).array() += 50.0;
  const auto changed = streaming_recognition(model, altered, sc, 10);
  REQUIRE(changed.trace.size() == base.trace.size());
  std::size_t later_diff = 0;
  for (std::size_t i = 0; i < base.trace.size(); ++i) {
    if (base.trace[i].t < run.t[cut] - 1e-9) {
      CHECK(base.trace[i].confidence == changed.trace[i].confidence);
    } else {
      if (base.trace[i].confidence != changed.trace[i].confidence) ++later_diff;
    }
  }
  CHECK(later_diff > 0);

  // A stream without a switch reports a transient from time zero.
  const StreamScenario same{PatternId::S3, PatternId::S3, 0.0, 10.0};
  const auto r = run_stream_scenario(model, same, opts);
  for (const auto& p : r.trace) CHECK(p.truth == 2);

  KickModel reg(Task::Localize, Variant::TimeOnly, arch, 4);
  CHECK(expect_error([&] { streaming_recognition(reg, run, sc, 10); }, ErrorCode::State) !=
        "no error thrown");
  CHECK(default_transitions().size() == 6);
}

TEST_CASE("ablation scores every model on the same test records") {
  BuildConfig bc;
  bc.patterns = {PatternId::S1, PatternId::S2};
  bc.l_y_levels = {40, 160};
  bc.repetitions = 3;
  Dataset ds = build_dataset(bc);
  split_dataset(ds, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 7);

  AblationOptions opt;
  opt.seeds = {1, 2};
  opt.variants = {Variant::Fusion, Variant::StatsMlp};
  opt.train.epochs = 1;
  opt.train.steps = 3;
  opt.train.max_windows_per_epoch = 64;
  opt.train.batch_size = 32;
  opt.train.val_max_windows = 32;
  std::size_t seen = 0;
  const auto rep = ablation_suite(ds, opt, [&](const AblationEntry&) { ++seen; });
  CHECK(rep.entries.size() == 8);
  CHECK(seen == 8);
  CHECK(rep.test_records == ds.count(Split::Test));
  const auto test_ids = ds.indices(Split::Test);
  CHECK(rep.test_records_hash == record_ids_hash(test_ids));
  for (const auto& e : rep.entries) {
    if (e.task == Task::Classify) {
      CHECK(e.confusion.total() == rep.test_records);
    } else {
      CHECK(e.rmse.pooled.count == rep.test_records);
    }
    CHECK(e.checkpoint_hash.size() == 16);
  }
  REQUIRE(rep.find(Variant::Fusion, Task::Classify, 2) != nullptr);
  CHECK(rep.find(Variant::TimeOnly, Task::Classify, 1) == nullptr);
  CHECK(std::isnan(rep.mean_accuracy(Variant::FreqOnly)));
  const double acc1 = rep.find(Variant::Fusion, Task::Classify, 1)->confusion.overall_accuracy();
  const double acc2 = rep.find(Variant::Fusion, Task::Classify, 2)->confusion.overall_accuracy();
  CHECK(rep.mean_accuracy(Variant::Fusion) == doctest::Approx((acc1 + acc2) / 2.0));

  std::ostringstream csv;
  write_ablation_csv(csv, rep);
  const std::string s = csv.str();
  CHECK(s.rfind("task,variant,seed,accuracy,rmse_x_mm,rmse_y_mm,checkpoint_hash\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 9);

  // Reruns are bit-identical.
  const auto again = ablation_suite(ds, opt);
  std::ostringstream csv2;
  write_ablation_csv(csv2, again);
  CHECK(csv2.str() == s);
}

TEST_CASE("record hash is order sensitive") {
  const std::vector<std::size_t> a{1, 2, 3}, b{3, 2, 1};
  CHECK(record_ids_hash(a) != record_ids_hash(b));
  CHECK(record_ids_hash(a) == record_ids_hash(a));
}
