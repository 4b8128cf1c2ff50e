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
#include <numeric>

#include "kicksense/error.hpp"
#include "kicksense/models.hpp"
#include "support.hpp"

using namespace kicksense;

namespace {

Eigen::MatrixXd random_window(Rng& rng, double scale = 20.0) {
  Eigen::MatrixXd w(100, 3);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-scale, scale);
  return w;
}

Eigen::MatrixXd tone_window(double f, double amp, double fs = 25.0) {
  Eigen::MatrixXd w(100, 3);
  for (Eigen::Index i = 0; i < 100; ++i)
    for (Eigen::Index s = 0; s < 3; ++s)
      w(i, s) = amp * std::sin(2.0 * kPi * f * static_cast<double>(i) / fs + static_cast<double>(s));
  return w;
}

}  // namespace

TEST_CASE("attention with zero parameters is uniform") {
  Rng rng(41);
  std::vector<double> ft(64), ftf(64);
  for (double& v : ft) v = rng.uniform(-3, 3);
  for (double& v : ftf) v = rng.uniform(-3, 3);
  const std::vector<double> w(128 * 128, 0.0), beta(128, 0.0);
  const FusedFeature f = attention_fuse(ft, ftf, w, beta);
  REQUIRE(f.f_concat.size() == 128);
  for (std::size_t i = 0; i < 128; ++i) {
    CHECK(f.weights[i] == doctest::Approx(1.0 / 128.0).epsilon(1e-14));
    CHECK(f.f_weighted[i] == doctest::Approx(f.f_concat[i] / 128.0).epsilon(1e-13));
    CHECK(f.f_concat[i] == (i < 64 ? ft[i] : ftf[i - 64]));
  }
}

TEST_CASE("attention matches a scalar recomputation and stays on the simplex") {
  Rng rng(42);
  const std::size_t n = 10;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> ft(4), ftf(6), w(n * n), beta(n);
    for (double& v : ft) v = rng.uniform(-5, 5);
    for (double& v : ftf) v = rng.uniform(-5, 5);
    for (double& v : w) v = rng.uniform(-1, 1);
    for (double& v : beta) v = rng.uniform(-1, 1);
    const FusedFeature f = attention_fuse(ft, ftf, w, beta);
    std::vector<double> F(ft);
    F.insert(F.end(), ftf.begin(), ftf.end());
    std::vector<double> z(n);
    double zmax = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = beta[i];
      for (std::size_t j = 0; j < n; ++j) z[i] += w[j * n + i] * F[j];
      zmax = std::max(zmax, z[i]);
    }
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - zmax);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double omega = std::exp(z[i] - zmax) / denom;
      CHECK(std::abs(f.weights[i] - omega) < 1e-12);
      CHECK(std::abs(f.f_weighted[i] - F[i] * omega) < 1e-12);
      CHECK(f.weights[i] > 0.0);
      CHECK(f.weights[i] < 1.0);
      sum += f.weights[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-6);
  }
}

TEST_CASE("attention rejects non-finite input") {
  std::vector<double> ft{1.0, NAN}, ftf{1.0}, w(9, 0.0), beta(3, 0.0);
  CHECK_THROWS_AS(attention_fuse(ft, ftf, w, beta), Error);
  ft[1] = 0.0;
  w.pop_back();
  CHECK_THROWS_AS(attention_fuse(ft, ftf, w, beta), Error);
}

TEST_CASE("fft baseline features") {
  const auto f = fft_features(tone_window(2.0, 7.0), 25.0);
  REQUIRE(f.size() == kFftFeatureCount);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(f[s * 4 + 0] == doctest::Approx(2.0));
    CHECK(f[s * 4 + 1] == doctest::Approx(7.0).epsilon(1e-9));
  }
  const auto z = fft_features(Eigen::MatrixXd::Zero(100, 3), 25.0);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(z[s * 4 + 1] == 0.0);
    CHECK(z[s * 4 + 3] == 0.0);
  }
  // Equal energy in bins 3 and 5: the lower bin ranks first.
  Eigen::MatrixXd tie(100, 3);
  for (Eigen::Index i = 0; i < 100; ++i)
    for (Eigen::Index s = 0; s < 3; ++s)
      tie(i, s) = std::cos(2.0 * kPi * 3.0 * static_cast<double>(i) / 100.0) +
                  std::cos(2.0 * kPi * 5.0 * static_cast<double>(i) / 100.0);
  const auto t = fft_features(tie, 25.0);
  CHECK(t[0] == doctest::Approx(3.0 * 25.0 / 100.0));
  CHECK(t[2] == doctest::Approx(5.0 * 25.0 / 100.0));
}

TEST_CASE("stats baseline features") {
  const auto c = stats_features(Eigen::MatrixXd::Constant(100, 3, 4.5));
  REQUIRE(c.size() == kStatsFeatureCount);
  for (double v : c) CHECK(v == 4.5);
  Rng rng(43);
  const Eigen::MatrixXd w = random_window(rng);
  const auto f = stats_features(w);
  for (Eigen::Index s = 0; s < 3; ++s) {
    double mx = -INFINITY, mn = INFINITY, sum = 0.0;
    for (Eigen::Index i = 0; i < 100; ++i) {
      mx = std::max(mx, w(i, s));
      mn = std::min(mn, w(i, s));
      sum += w(i, s);
    }
    const auto o = static_cast<std::size_t>(s) * 3;
    CHECK(f[o] == mx);
    CHECK(f[o + 1] == mn);
    CHECK(f[o + 2] == doctest::Approx(sum / 100.0).epsilon(1e-14));
  }
}

TEST_CASE("task output argmax breaks ties toward the lower class") {
  TaskOutput o;
  o.class_probs = {0.1, 0.3, 0.3, 0.1, 0.1, 0.1};
  CHECK(o.predicted_class() == 1);
  o.class_probs = {1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6};
  CHECK(o.predicted_class() == 0);
}

TEST_CASE("featurizer shapes and compression") {
  const ArchConfig arch;
  const Featurizer fz(arch, 25.0);
  CHECK(fz.frames() == 69);
  CHECK(fz.bins() == 17);
  Rng rng(44);
  const Eigen::MatrixXd w = random_window(rng);
  const Eigen::MatrixXd* ptr = &w;
  const auto t = fz.time_input({&ptr, 1});
  CHECK(t.shape == std::vector<std::size_t>{1, 3, 100});
  const auto f = fz.freq_input({&ptr, 1});
  CHECK(f.shape == std::vector<std::size_t>{1, 3, 69, 17});
  for (double v : f.values) CHECK(v >= 0.0);
  // Mean removal then asinh(x / 5).
  for (Eigen::Index s = 0; s < 3; ++s) {
    const double mean = w.col(s).mean();
    for (Eigen::Index i = 0; i < 100; i += 17) {
      CHECK(t.values[static_cast<std::size_t>(s * 100 + i)] ==
            doctest::Approx(std::asinh((w(i, s) - mean) / 5.0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("model outputs: probabilities, determinism and shapes") {
  Rng rng(45);
  const Eigen::MatrixXd w = random_window(rng);
  for (Variant v : {Variant::Fusion, Variant::TimeOnly, Variant::FreqOnly, Variant::FftMlp,
                    Variant::StatsMlp}) {
    KickModel cls(Task::Classify, v, ArchConfig{}, 3);
    const auto a = cls.predict(w);
    const auto b = cls.predict(w);
    const double sum = std::accumulate(a.class_probs.begin(), a.class_probs.end(), 0.0);
    CHECK(std::abs(sum - 1.0) < 1e-6);
    CHECK(a.class_probs == b.class_probs);
    KickModel reg(Task::Localize, v, ArchConfig{}, 3);
    const auto r = reg.predict(w);
    CHECK(std::isfinite(r.l_x));
    CHECK(std::isfinite(r.l_y));
  }
  KickModel m(Task::Classify, Variant::Fusion, ArchConfig{}, 1);
  CHECK_THROWS_AS(m.predict(Eigen::MatrixXd::Zero(99, 3)), Error);
  CHECK_THROWS_AS(m.predict(Eigen::MatrixXd::Zero(100, 2)), Error);
}

TEST_CASE("branches are shared between fusion and single-branch variants") {
  Rng rng(46);
  const Eigen::MatrixXd w = random_window(rng);
  KickModel fusion(Task::Classify, Variant::Fusion, ArchConfig{}, 9);
  KickModel time(Task::Classify, Variant::TimeOnly, ArchConfig{}, 9);
  KickModel freq(Task::Classify, Variant::FreqOnly, ArchConfig{}, 9);
  const auto ft = fusion.time_features(w);
  const auto ff = fusion.freq_features(w);
  CHECK(ft.size() == 64);
  CHECK(ff.size() == 64);
  CHECK(ft == time.time_features(w));
  CHECK(ff == freq.freq_features(w));
  const FusedFeature fused = fusion.fused_feature(w);
  CHECK(fused.f_t == ft);
  CHECK(fused.f_tf == ff);
  double sum = 0.0;
  for (std::size_t i = 0; i < 128; ++i) {
    sum += fused.weights[i];
    // Attention starts at zero, so the weighting is uniform.
    CHECK(fused.f_weighted[i] == doctest::Approx(fused.f_concat[i] / 128.0).epsilon(1e-13));
  }
  CHECK(std::abs(sum - 1.0) < 1e-9);
  CHECK(fusion.parameter_count() > time.parameter_count());
  CHECK(fusion.parameter_count() > freq.parameter_count());
  CHECK_THROWS_AS(time.freq_features(w), Error);
}

TEST_CASE("checkpoint round trip preserves predictions") {
  Rng rng(47);
  KickModel m(Task::Localize, Variant::Fusion, ArchConfig{}, 5);
  m.set_target_normalization({1.5, 110.0}, {60.0, 55.0});
  auto& att = m.attention();
  kstest::fill_uniform(att.weight, rng, -0.1, 0.1);
  const auto dir = kstest::scratch_dir("model-ckpt");
  const std::string path = (dir / "m.ckpt").string();
  m.save(path);
  const auto back = KickModel::load(path);
  CHECK(back->task() == Task::Localize);
  CHECK(back->variant() == Variant::Fusion);
  CHECK(back->seed() == 5);
  CHECK(back->arch() == ArchConfig{});
  CHECK(back->target_mean() == std::array<double, 2>{1.5, 110.0});
  for (int i = 0; i < 5; ++i) {
    const Eigen::MatrixXd w = random_window(rng);
    const auto a = m.predict(w), b = back->predict(w);
    CHECK(a.l_x == b.l_x);
    CHECK(a.l_y == b.l_y);
  }
  CHECK(nn::serialize_checkpoint(back->to_checkpoint()) ==
        nn::serialize_checkpoint(m.to_checkpoint()));

  KickModel base(Task::Classify, Variant::StatsMlp, ArchConfig{}, 2);
  base.set_feature_normalization(std::vector<double>(9, 1.0), std::vector<double>(9, 2.0));
  const auto b2 = KickModel::from_checkpoint(base.to_checkpoint());
  CHECK(b2->feature_std() == std::vector<double>(9, 2.0));
  CHECK_THROWS_AS(KickModel::load((dir / "missing.ckpt").string()), Error);
}

TEST_CASE("task and variant names") {
  CHECK(parse_task("classify") == Task::Classify);
  CHECK(parse_task("localize") == Task::Localize);
  for (Variant v : {Variant::Fusion, Variant::TimeOnly, Variant::FreqOnly, Variant::FftMlp,
                    Variant::StatsMlp}) {
    CHECK(parse_variant(variant_name(v)) == v);
  }
  try {
    parse_variant("transformer");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
  }
}

TEST_CASE("finite differences through a whole fusion model") {
  Rng rng(48);
  ArchConfig arch;
  KickModel m(Task::Classify, Variant::Fusion, arch, 4);
  kstest::fill_uniform(m.attention().weight, rng, -0.2, 0.2);
  kstest::fill_uniform(m.attention().beta, rng, -0.2, 0.2);
  std::vector<Eigen::MatrixXd> ws{random_window(rng), random_window(rng)};
  std::vector<const Eigen::MatrixXd*> ptrs{&ws[0], &ws[1]};
  kstest::FdProblem p;
  p.forward = [&] { return m.forward(ptrs, nn::Mode::Eval); };
  p.backward = [&](const nn::Tensor& g) {
    m.backward(g);
    return nn::Tensor();
  };
  p.params = m.params();
  const auto r = kstest::finite_difference_check(p, rng, 4);
  INFO(r.worst);
  CHECK(r.max_rel < 1e-4);
}
