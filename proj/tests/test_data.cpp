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

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "kicksense/data.hpp"
#include "support.hpp"

using namespace kicksense;
using kstest::expect_error;

namespace {

BuildConfig small_config() {
  BuildConfig c;
  c.patterns = {PatternId::S1, PatternId::S4};
  c.l_y_levels = {20, 200};
  c.repetitions = 3;
  return c;
}

// End rows a window of `len` with `stride` may end on, filtered by rest and
// lateral clipping, computed from the run labels alone.
std::vector<std::size_t> expected_end_rows(const Run& run, const WindowingOptions& w) {
  std::vector<std::size_t> out;
  for (std::size_t e = w.window_len - 1; e < run.rows(); e += w.stride) {
    if (run.t[e] < 0.0) continue;
    if (w.clip_to_effective_region && std::abs(run.l_x[e]) > 100.0) continue;
    out.push_back(e);
  }
  return out;
}

const Dataset& full_dataset() {
  static const Dataset ds = [] {
    Dataset d = build_dataset(BuildConfig{});
    split_dataset(d, SplitFractions{}, 7);
    return d;
  }();
  return ds;
}

std::string csv_text(const std::string& header, const std::vector<std::string>& rows) {
  std::string s = header + "\n";
  for (const auto& r : rows) s += r + "\n";
  return s;
}

}  // namespace

TEST_CASE("windowing matches the label-based count") {
  const auto raw = simulate_runs(small_config());
  REQUIRE(raw.size() == 12);
  const Dataset ds = assemble_dataset(raw, WindowingOptions{}, 25.0);
  std::size_t k = 0;
  for (std::size_t r = 0; r < ds.runs.size(); ++r) {
    const auto ends = expected_end_rows(ds.runs[r], ds.windowing);
    CHECK(ends.size() == 240);
    for (std::size_t e : ends) {
      REQUIRE(k < ds.records.size());
      const auto& rec = ds.records[k++];
      CHECK(rec.run == r);
      CHECK(rec.end_row == e);
      CHECK(rec.l_x == ds.runs[r].l_x[e]);
      CHECK(rec.l_y == ds.runs[r].l_y[e]);
      CHECK(rec.pattern == ds.runs[r].pattern[e]);
      CHECK(std::abs(rec.l_x) <= 100.0);
    }
  }
  CHECK(k == ds.records.size());

  WindowingOptions unclipped;
  unclipped.clip_to_effective_region = false;
  const Dataset wide = assemble_dataset(raw, unclipped, 25.0);
  CHECK(wide.records.size() == 12 * expected_end_rows(wide.runs[0], unclipped).size());
  CHECK(wide.records.size() > ds.records.size());
}

TEST_CASE("windows are baseline corrected copies of the run") {
  const auto raw = simulate_runs(small_config());
  const Dataset ds = assemble_dataset(raw, WindowingOptions{}, 25.0);
  const auto& rec = ds.records[37];
  const PressureWindow w = ds.window(rec);
  REQUIRE(w.data.rows() == 100);
  REQUIRE(w.data.cols() == 3);
  const Run& run = ds.runs[rec.run];
  for (Eigen::Index i = 0; i < 100; ++i)
    for (Eigen::Index s = 0; s < 3; ++s)
      CHECK(w.data(i, s) ==
            run.pressure(static_cast<Eigen::Index>(rec.end_row) - 99 + i, s));
  // Rest rows average to zero after correction.
  const auto rest = ds.runs[0].pressure.topRows(static_cast<Eigen::Index>(ds.runs[0].rest_rows));
  CHECK(rest.colwise().mean().cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("full dataset has the expected size and split") {
  const Dataset& ds = full_dataset();
  CHECK(ds.runs.size() == 600);
  CHECK(ds.records.size() == 144000);
  CHECK(ds.count(Split::Train) == 115200);
  CHECK(ds.count(Split::Val) == 14400);
  CHECK(ds.count(Split::Test) == 14400);
  CHECK(ds.count(Split::Unassigned) == 0);

  // Whole repetitions go to one split: 8/1/1 of each configuration.
  std::map<std::pair<int, long long>, std::array<int, 3>> per_config;
  std::map<std::tuple<int, long long, int>, std::set<Split>> per_run;
  for (const auto& rec : ds.records) {
    per_run[{pattern_index(rec.pattern), std::llround(ds.info[rec.run].l_y),
             rec.repetition}]
        .insert(rec.split);
  }
  for (const auto& [key, splits] : per_run) {
    REQUIRE(splits.size() == 1);
    const Split s = *splits.begin();
    auto& c = per_config[{std::get<0>(key), std::get<1>(key)}];
    c[s == Split::Train ? 0 : s == Split::Val ? 1 : 2]++;
  }
  CHECK(per_config.size() == 60);
  for (const auto& [key, c] : per_config) {
    CHECK(c[0] == 8);
    CHECK(c[1] == 1);
    CHECK(c[2] == 1);
  }
}

TEST_CASE("splits depend only on the seed") {
  Dataset a = build_dataset(small_config());
  Dataset b = a;
  SplitFractions f{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  split_dataset(a, f, 7);
  split_dataset(b, f, 7);
  CHECK(a.records == b.records);
  CHECK(a.indices(Split::Test) == b.indices(Split::Test));

  bool differs = false;
  for (std::uint64_t seed = 8; seed < 20 && !differs; ++seed) {
    Dataset c = a;
    split_dataset(c, f, seed);
    differs = c.indices(Split::Test) != a.indices(Split::Test);
  }
  CHECK(differs);

  Dataset one = build_dataset([] {
    auto c = small_config();
    c.repetitions = 1;
    return c;
  }());
  split_dataset(one, SplitFractions{}, 7);
  CHECK(one.count(Split::Train) == one.records.size());

  Dataset bad = a;
  CHECK(expect_error([&] { split_dataset(bad, {0.5, 0.5, 0.5}, 1); }, ErrorCode::Config)
            .find("sum to 1") != std::string::npos);
}

TEST_CASE("simulation is reproducible from the seed") {
  auto c = small_config();
  c.repetitions = 1;
  const auto a = simulate_runs(c);
  const auto b = simulate_runs(c);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].run == b[i].run);
  c.seed += 1;
  const auto d = simulate_runs(c);
  CHECK_FALSE(a[0].run == d[0].run);
  CHECK(run_seed(5, PatternId::S2, 40, 1) != run_seed(5, PatternId::S2, 40, 2));
  CHECK(run_seed(5, PatternId::S2, 40, 1) != run_seed(5, PatternId::S3, 40, 1));
}

TEST_CASE("export and reload reproduce the dataset exactly") {
  const auto dir = kstest::scratch_dir("data-roundtrip");
  const auto raw = simulate_runs(small_config());
  const SplitFractions f{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  const Manifest m = export_runs(raw, dir.string(), WindowingOptions{}, 25.0, 7, f);
  CHECK(m.runs.size() == raw.size());
  CHECK(std::filesystem::exists(dir / "manifest.ini"));
  CHECK(std::filesystem::exists(dir / run_file_name(raw[0].info)));

  Dataset expected = assemble_dataset(raw, WindowingOptions{}, 25.0);
  split_dataset(expected, f, 7);
  const Dataset loaded = load_dataset((dir / "manifest.ini").string());
  CHECK(loaded == expected);
  CHECK(loaded.split_seed == 7);

  const Manifest back = read_manifest((dir / "manifest.ini").string());
  CHECK(back.runs.size() == m.runs.size());
  CHECK(back.fractions.val == doctest::Approx(1.0 / 3.0));

  // Ingest without a manifest recovers repetitions from the file names.
  std::vector<std::string> paths;
  for (const auto& r : m.runs) paths.push_back((dir / r.source).string());
  const auto reread = read_runs(paths);
  REQUIRE(reread.size() == raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    CHECK(reread[i].info.same_config(raw[i].info));
    CHECK(reread[i].run == raw[i].run);
  }
}

TEST_CASE("manifest mismatches are reported") {
  const auto dir = kstest::scratch_dir("data-manifest");
  auto c = small_config();
  c.repetitions = 1;
  const auto raw = simulate_runs(c);
  export_runs(raw, dir.string(), WindowingOptions{}, 25.0, 7, SplitFractions{});
  const std::string path = (dir / "manifest.ini").string();

  std::string text;
  {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  {
    std::ofstream out(path, std::ios::trunc);
    std::string t = text;
    t.replace(t.find("run_count = 4"), 13, "run_count = 5");
    out << t;
  }
  CHECK(expect_error([&] { read_manifest(path); }, ErrorCode::Validation).find("run_count") !=
        std::string::npos);
  std::filesystem::remove(path);
  CHECK(expect_error([&] { load_dataset(path); }, ErrorCode::Io) != "no error thrown");
}

TEST_CASE("run CSV errors name the problem") {
  const std::string header = "t,p1,p2,p3,L_x,L_y,pattern_id";
  const std::string row0 = "-1,1,2,3,0,20,s1";

  SUBCASE("missing column") {
    std::istringstream in(csv_text("t,p1,p2,p3,L_x,pattern_id", {row0}));
    const auto msg = expect_error([&] { read_run_csv(in, "x.csv"); }, ErrorCode::Schema);
    CHECK(msg.find("L_y") != std::string::npos);
    CHECK(msg.find("x.csv") != std::string::npos);
  }
  SUBCASE("empty file") {
    std::istringstream in("");
    CHECK(expect_error([&] { read_run_csv(in); }, ErrorCode::Schema) != "no error thrown");
  }
  SUBCASE("malformed number") {
    std::istringstream in(csv_text(header, {row0, "-0.96,1,abc,3,0,20,s1"}));
    const auto msg = expect_error([&] { read_run_csv(in, "x.csv"); }, ErrorCode::Parse);
    CHECK(msg.find("x.csv:3") != std::string::npos);
  }
  SUBCASE("wrong field count") {
    std::istringstream in(csv_text(header, {row0, "-0.96,1,2,3,0,20"}));
    const auto msg = expect_error([&] { read_run_csv(in, "x.csv"); }, ErrorCode::Parse);
    CHECK(msg.find("x.csv:3") != std::string::npos);
  }
  SUBCASE("unknown pattern") {
    std::istringstream in(csv_text(header, {row0, "-0.96,1,2,3,0,20,s9"}));
    CHECK(expect_error([&] { read_run_csv(in, "x.csv"); }, ErrorCode::Parse)
              .find("x.csv:3") != std::string::npos);
  }
  SUBCASE("time goes backwards") {
    std::istringstream in(csv_text(header, {row0, "-0.96,1,2,3,0,20,s1", "-0.98,1,2,3,0,20,s1"}));
    const auto msg = expect_error([&] { read_run_csv(in, "x.csv"); }, ErrorCode::Validation);
    CHECK(msg.find("x.csv:4") != std::string::npos);
  }
  SUBCASE("no rest rows") {
    std::istringstream in(csv_text(header, {"0,1,2,3,0,20,s1", "0.04,1,2,3,0,20,s1"}));
    CHECK(expect_error([&] { read_run_csv(in); }, ErrorCode::Validation).find("rest") !=
          std::string::npos);
  }
  SUBCASE("valid file") {
    std::istringstream in(csv_text(header, {row0, "0,4,5,6,1.5,20,s1"}));
    const Run run = read_run_csv(in);
    CHECK(run.rows() == 2);
    CHECK(run.rest_rows == 1);
    CHECK(run.pressure(1, 2) == 6.0);
    CHECK(run.l_x[1] == 1.5);
  }
}
