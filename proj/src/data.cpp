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

#include "kicksense/data.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <regex>
#include <sstream>

#include "kicksense/error.hpp"
#include "kicksense/kvfile.hpp"
#include "kicksense/util.hpp"

namespace fs = std::filesystem;

namespace kicksense {

const char* split_name(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::Unassigned: break;
  }
  return "unassigned";
}

PressureWindow Dataset::window(const DatasetRecord& record) const {
  require(record.run < runs.size(), ErrorCode::InvalidArgument, "record refers to unknown run");
  return extract_window(runs[record.run], record.end_row, windowing.window_len, sample_rate_hz);
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].split == split) out.push_back(i);
  }
  return out;
}

std::size_t Dataset::count(Split split) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [&](const DatasetRecord& r) { return r.split == split; }));
}

bool Dataset::operator==(const Dataset& other) const {
  if (runs.size() != other.runs.size() || info.size() != other.info.size()) return false;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!(runs[i] == other.runs[i]) || !info[i].same_config(other.info[i])) return false;
  }
  return records == other.records && windowing.window_len == other.windowing.window_len &&
         windowing.stride == other.windowing.stride &&
         windowing.clip_to_effective_region == other.windowing.clip_to_effective_region &&
         sample_rate_hz == other.sample_rate_hz;
}

std::uint64_t run_seed(std::uint64_t base, PatternId pattern, double l_y, int repetition) {
  std::uint64_t s = mix_seed(base, static_cast<std::uint64_t>(pattern_index(pattern)));
  s = mix_seed(s, static_cast<std::uint64_t>(std::llround(l_y * 1000.0)));
  return mix_seed(s, static_cast<std::uint64_t>(repetition));
}

std::string run_file_name(const RunInfo& info) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "run_%s_ly%03lld_rep%02d.csv", pattern_name(info.pattern).c_str(),
                static_cast<long long>(std::llround(info.l_y)), info.repetition);
  return buf;
}

std::vector<RawRun> simulate_runs(const BuildConfig& config) {
  require(config.repetitions >= 1, ErrorCode::Config, "repetitions must be >= 1");
  std::vector<RawRun> out;
  out.reserve(config.patterns.size() * config.l_y_levels.size() *
              static_cast<std::size_t>(config.repetitions));
  for (PatternId p : config.patterns) {
    for (double l_y : config.l_y_levels) {
      for (int rep = 0; rep < config.repetitions; ++rep) {
        RawRun raw;
        raw.info = {p, l_y, rep, run_seed(config.seed, p, l_y, rep), {}};
        raw.info.source = run_file_name(raw.info);
        SimConfig sim = config.sim;
        sim.seed = raw.info.seed;
        try {
          raw.run = sweep_experiment(pattern_for(p), config.geometry, sim, l_y);
        } catch (const Error& e) {
          throw Error(e.code(), "simulating " + pattern_name(p) + " at L_y=" +
                                    format_double(l_y) + " rep " + std::to_string(rep) + ": " +
                                    e.what());
        }
        out.push_back(std::move(raw));
      }
    }
  }
  return out;
}

Dataset assemble_dataset(const std::vector<RawRun>& raw, const WindowingOptions& windowing,
                         double sample_rate_hz) {
  Dataset ds;
  ds.windowing = windowing;
  ds.sample_rate_hz = sample_rate_hz;
  ds.runs.reserve(raw.size());
  for (const auto& r : raw) {
    Run corrected = subtract_baseline(r.run);
    const WindowSet set = sliding_windows(corrected, windowing);
    const std::size_t run_index = ds.runs.size();
    for (const auto& span : set.spans) {
      ds.records.push_back({run_index, span.end_row, span.label.pattern, span.label.l_x,
                            span.label.l_y, r.info.repetition, Split::Unassigned});
    }
    ds.runs.push_back(std::move(corrected));
    ds.info.push_back(r.info);
  }
  return ds;
}

Dataset build_dataset(const BuildConfig& config) {
  return assemble_dataset(simulate_runs(config), config.windowing, config.sim.sample_rate_hz);
}

namespace {

// Largest-remainder apportionment of n items over three fractions.
std::array<std::size_t, 3> apportion(std::size_t n, const SplitFractions& f) {
  const double fr[3] = {f.train, f.val, f.test};
  std::array<std::size_t, 3> counts{};
  double rem[3];
  std::size_t used = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = fr[i] * static_cast<double>(n);
    counts[static_cast<std::size_t>(i)] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[i] = exact - static_cast<double>(counts[static_cast<std::size_t>(i)]);
    used += counts[static_cast<std::size_t>(i)];
  }
  while (used < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i) {
      if (rem[i] > rem[best] + 1e-12) best = i;
    }
    ++counts[static_cast<std::size_t>(best)];
    rem[best] = -1.0;
    ++used;
  }
  return counts;
}

}  // namespace

void split_dataset(Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed) {
  require(fractions.train >= 0 && fractions.val >= 0 && fractions.test >= 0 &&
              std::abs(fractions.train + fractions.val + fractions.test - 1.0) < 1e-9,
          ErrorCode::Config, "split fractions must be non-negative and sum to 1");
  std::map<std::pair<int, long long>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.info.size(); ++i) {
    const auto& info = dataset.info[i];
    groups[{pattern_index(info.pattern), std::llround(info.l_y * 1000.0)}].push_back(i);
  }
  std::vector<Split> run_split(dataset.runs.size(), Split::Unassigned);
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return dataset.info[a].repetition < dataset.info[b].repetition;
    });
    Rng rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(key.first)),
                     static_cast<std::uint64_t>(key.second)));
    rng.shuffle(members.begin(), members.end());
    const auto counts = apportion(members.size(), fractions);
    std::size_t k = 0;
    for (std::size_t i = 0; i < counts[0]; ++i) run_split[members[k++]] = Split::Train;
    for (std::size_t i = 0; i < counts[1]; ++i) run_split[members[k++]] = Split::Val;
    for (std::size_t i = 0; i < counts[2]; ++i) run_split[members[k++]] = Split::Test;
  }
  for (auto& r : dataset.records) r.split = run_split[r.run];
  dataset.split_seed = seed;
}

// ---------------------------------------------------------------- CSV

Run read_run_csv(std::istream& in, const std::string& source) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::Schema,
          source + ": empty file, expected a header row");
  const auto header = split(trim(line), ',');
  std::vector<std::string> names;
  for (auto h : header) names.emplace_back(trim(h));
  auto find = [&](const std::string& col) -> std::size_t {
    const auto it = std::find(names.begin(), names.end(), col);
    require(it != names.end(), ErrorCode::Schema,
            source + ": schema error, missing column '" + col + "'");
    return static_cast<std::size_t>(it - names.begin());
  };
  const std::size_t c_t = find("t");
  const std::size_t c_lx = find("L_x");
  const std::size_t c_ly = find("L_y");
  const std::size_t c_pat = find("pattern_id");
  std::vector<std::size_t> c_p;
  for (std::size_t s = 1;; ++s) {
    const auto it = std::find(names.begin(), names.end(), "p" + std::to_string(s));
    if (it == names.end()) break;
    c_p.push_back(static_cast<std::size_t>(it - names.begin()));
  }
  require(!c_p.empty(), ErrorCode::Schema, source + ": schema error, missing column 'p1'");
  require(names.size() == c_p.size() + 4, ErrorCode::Schema,
          source + ": schema error, unexpected extra columns in header");

  Run run;
  std::vector<double> pressures;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto fields = split(text, ',');
    require(fields.size() == names.size(), ErrorCode::Parse,
            source + ":" + std::to_string(line_no) + ": expected " +
                std::to_string(names.size()) + " fields, got " + std::to_string(fields.size()));
    try {
      const double t = parse_double(fields[c_t], line_no);
      require(std::isfinite(t), ErrorCode::Parse, "non-finite time");
      if (!run.t.empty()) {
        require(t > run.t.back(), ErrorCode::Validation,
                source + ":" + std::to_string(line_no) +
                    ": timestamps must be strictly increasing");
      }
      run.t.push_back(t);
      for (auto c : c_p) pressures.push_back(parse_double(fields[c], line_no));
      run.l_x.push_back(parse_double(fields[c_lx], line_no));
      run.l_y.push_back(parse_double(fields[c_ly], line_no));
      run.pattern.push_back(parse_pattern_name(trim(fields[c_pat])));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Validation) throw;
      throw Error(ErrorCode::Parse,
                  source + ":" + std::to_string(line_no) + ": " + std::string(e.what()));
    }
  }
  const std::size_t n = run.t.size(), ns = c_p.size();
  run.pressure.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ns));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < ns; ++s) {
      run.pressure(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) =
          pressures[i * ns + s];
    }
  }
  run.rest_rows = static_cast<std::size_t>(
      std::count_if(run.t.begin(), run.t.end(), [](double t) { return t < 0.0; }));
  require(n > 0, ErrorCode::Validation, source + ": no data rows");
  require(run.rest_rows > 0, ErrorCode::Validation,
          source + ": no at-rest rows (t < 0) for baseline estimation");
  run.validate();
  return run;
}

namespace {

Run read_run_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open run file '" + path + "'");
  return read_run_csv(in, path);
}

RunInfo info_from_run(const Run& run) {
  RunInfo info;
  info.pattern = run.run_pattern();
  info.l_y = run.l_y[std::min(run.rest_rows, run.rows() - 1)];
  return info;
}

}  // namespace

std::vector<RawRun> read_runs(const std::vector<std::string>& paths) {
  static const std::regex rep_re("_rep([0-9]+)\\.csv$");
  std::map<std::pair<int, long long>, int> next_rep;
  std::vector<RawRun> out;
  for (const auto& path : paths) {
    RawRun raw;
    raw.run = read_run_file(path);
    raw.info = info_from_run(raw.run);
    raw.info.source = fs::path(path).filename().string();
    std::smatch m;
    const auto key = std::make_pair(pattern_index(raw.info.pattern),
                                    std::llround(raw.info.l_y * 1000.0));
    if (std::regex_search(raw.info.source, m, rep_re)) {
      raw.info.repetition = std::stoi(m[1].str());
    } else {
      raw.info.repetition = next_rep[key]++;
    }
    out.push_back(std::move(raw));
  }
  return out;
}

Dataset ingest_csv(const std::vector<std::string>& paths, const WindowingOptions& windowing,
                   double sample_rate_hz) {
  return assemble_dataset(read_runs(paths), windowing, sample_rate_hz);
}

// ----------------------------------------------------------- manifest

void write_manifest(const std::string& path, const Manifest& manifest) {
  KvFile kv;
  kv.set("dataset.format", "kicksense-runs-1");
  kv.set("dataset.sample_rate_hz", format_double(manifest.sample_rate_hz));
  kv.set("dataset.window_len", std::to_string(manifest.windowing.window_len));
  kv.set("dataset.stride", std::to_string(manifest.windowing.stride));
  kv.set("dataset.clip_to_effective_region",
         manifest.windowing.clip_to_effective_region ? "true" : "false");
  kv.set("dataset.split_seed", std::to_string(manifest.split_seed));
  kv.set("dataset.split_train", format_double(manifest.fractions.train));
  kv.set("dataset.split_val", format_double(manifest.fractions.val));
  kv.set("dataset.split_test", format_double(manifest.fractions.test));
  kv.set("dataset.run_count", std::to_string(manifest.runs.size()));
  for (const auto& r : manifest.runs) {
    kv.set("runs." + r.source, pattern_name(r.pattern) + " " + format_double(r.l_y) + " " +
                                   std::to_string(r.repetition) + " " + std::to_string(r.seed));
  }
  kv.save(path);
}

Manifest read_manifest(const std::string& path) {
  const KvFile kv = KvFile::load(path);
  auto need = [&](const std::string& key) {
    const auto v = kv.get(key);
    require(v.has_value(), ErrorCode::Schema, path + ": manifest lacks '" + key + "'");
    return *v;
  };
  require(need("dataset.format") == "kicksense-runs-1", ErrorCode::Schema,
          path + ": unsupported manifest format");
  Manifest m;
  m.sample_rate_hz = parse_double(need("dataset.sample_rate_hz"));
  m.windowing.window_len = static_cast<std::size_t>(parse_int(need("dataset.window_len")));
  m.windowing.stride = static_cast<std::size_t>(parse_int(need("dataset.stride")));
  m.windowing.clip_to_effective_region = need("dataset.clip_to_effective_region") == "true";
  m.split_seed = static_cast<std::uint64_t>(std::stoull(need("dataset.split_seed")));
  m.fractions.train = parse_double(need("dataset.split_train"));
  m.fractions.val = parse_double(need("dataset.split_val"));
  m.fractions.test = parse_double(need("dataset.split_test"));
  for (const auto& [file, value] : kv.section("runs")) {
    std::istringstream fields(value);
    std::string pat, l_y, rep, seed;
    fields >> pat >> l_y >> rep >> seed;
    require(!seed.empty(), ErrorCode::Parse, path + ": malformed run entry for '" + file + "'");
    RunInfo info;
    info.pattern = parse_pattern_name(pat);
    info.l_y = parse_double(l_y);
    info.repetition = static_cast<int>(parse_int(rep));
    info.seed = static_cast<std::uint64_t>(std::stoull(seed));
    info.source = file;
    m.runs.push_back(info);
  }
  require(std::to_string(m.runs.size()) == need("dataset.run_count"), ErrorCode::Validation,
          path + ": run_count does not match the listed runs");
  return m;
}

Dataset load_dataset(const std::string& manifest_path) {
  const Manifest m = read_manifest(manifest_path);
  const fs::path dir = fs::path(manifest_path).parent_path();
  std::vector<RawRun> raw;
  raw.reserve(m.runs.size());
  for (const auto& info : m.runs) {
    RawRun r;
    r.info = info;
    r.run = read_run_file((dir / info.source).string());
    const RunInfo seen = info_from_run(r.run);
    require(seen.pattern == info.pattern && seen.l_y == info.l_y, ErrorCode::Validation,
            info.source + ": contents do not match the manifest entry");
    raw.push_back(std::move(r));
  }
  Dataset ds = assemble_dataset(raw, m.windowing, m.sample_rate_hz);
  split_dataset(ds, m.fractions, m.split_seed);
  return ds;
}

Manifest export_runs(const std::vector<RawRun>& runs, const std::string& dir,
                     const WindowingOptions& windowing, double sample_rate_hz,
                     std::uint64_t split_seed, const SplitFractions& fractions) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorCode::Io,
          "cannot create output directory '" + dir + "'");
  Manifest m;
  m.windowing = windowing;
  m.sample_rate_hz = sample_rate_hz;
  m.split_seed = split_seed;
  m.fractions = fractions;
  for (const auto& r : runs) {
    RunInfo info = r.info;
    if (info.source.empty()) info.source = run_file_name(info);
    const std::string path = (fs::path(dir) / info.source).string();
    std::ofstream out(path, std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write '" + path + "'");
    write_run_csv(out, r.run);
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing '" + path + "'");
    m.runs.push_back(info);
  }
  write_manifest((fs::path(dir) / "manifest.ini").string(), m);
  return m;
}

}  // namespace kicksense
