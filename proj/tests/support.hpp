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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "kicksense/error.hpp"
#include "kicksense/nn.hpp"
#include "kicksense/util.hpp"

namespace kstest {

namespace fs = std::filesystem;

// Fresh scratch directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "kicksense-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline void fill_uniform(kicksense::nn::Tensor& t, kicksense::Rng& rng, double lo = -1.0,
                         double hi = 1.0) {
  for (double& v : t.values) v = rng.uniform(lo, hi);
}

inline kicksense::nn::Tensor random_tensor(std::vector<std::size_t> shape, kicksense::Rng& rng,
                                           double lo = -1.0, double hi = 1.0) {
  kicksense::nn::Tensor t(std::move(shape));
  fill_uniform(t, rng, lo, hi);
  return t;
}

// Runs `fn`, which must throw kicksense::Error with `code`; returns the message.
template <class Fn>
std::string expect_error(Fn&& fn, kicksense::ErrorCode code) {
  try {
    fn();
  } catch (const kicksense::Error& e) {
    if (e.code() != code) {
      return std::string("wrong code ") + kicksense::error_code_name(e.code()) + ": " + e.what();
    }
    return e.what();
  }
  return "no error thrown";
}

inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a) + std::abs(b), 1e-8);
}

struct FdReport {
  double max_rel = 0.0;
  std::size_t checked = 0;
  std::string worst;  // coordinate with the largest error
};

// Central finite differences of L = sum(r * forward()) against the analytic
// gradients left by backward(r). Samples up to `per_tensor` coordinates of
// every parameter and of the input (when given).
struct FdProblem {
  std::function<kicksense::nn::Tensor()> forward;
  std::function<kicksense::nn::Tensor(const kicksense::nn::Tensor&)> backward;
  std::vector<kicksense::nn::Param> params;
  kicksense::nn::Tensor* input = nullptr;
};

inline FdReport finite_difference_check(const FdProblem& p, kicksense::Rng& rng,
                                        std::size_t per_tensor = 20, double eps = 1e-5) {
  using kicksense::nn::Tensor;
  const Tensor y0 = p.forward();
  Tensor r(y0.shape);
  for (double& v : r.values) v = rng.uniform(-1.0, 1.0);
  for (const auto& prm : p.params) {
    prm.tensor->ensure_grad();
    prm.tensor->zero_grad();
  }
  const Tensor y = p.forward();
  const Tensor dx = p.backward(r);

  auto objective = [&] {
    const Tensor out = p.forward();
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.values[i] * r.values[i];
    return s;
  };

  FdReport report;
  auto probe = [&](kicksense::AlignedVector& values, double analytic_of(std::size_t, const void*),
                   const void* ctx, const std::string& name) {
    const std::size_t n = values.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    rng.shuffle(idx.begin(), idx.end());
    idx.resize(std::min(n, per_tensor));
    for (std::size_t i : idx) {
      const double keep = values[i];
      values[i] = keep + eps;
      const double fp = objective();
      values[i] = keep - eps;
      const double fm = objective();
      values[i] = keep;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double analytic = analytic_of(i, ctx);
      const double e = rel_error(analytic, numeric);
      ++report.checked;
      if (e > report.max_rel) {
        report.max_rel = e;
        report.worst = name + "[" + std::to_string(i) + "] analytic " +
                       kicksense::format_double(analytic) + " numeric " +
                       kicksense::format_double(numeric);
      }
    }
  };

  for (const auto& prm : p.params) {
    probe(prm.tensor->values,
          [](std::size_t i, const void* c) {
            return static_cast<const Tensor*>(c)->grad[i];
          },
          prm.tensor, prm.name);
  }
  if (p.input) {
    probe(p.input->values,
          [](std::size_t i, const void* c) { return static_cast<const Tensor*>(c)->values[i]; },
          &dx, "input");
  }
  return report;
}

// Convenience wrapper for a single layer applied to a fixed input.
inline FdReport check_layer(kicksense::nn::Layer& layer, kicksense::nn::Tensor& x,
                            kicksense::Rng& rng, std::size_t per_tensor = 20,
                            kicksense::nn::Mode mode = kicksense::nn::Mode::Eval) {
  FdProblem p;
  p.forward = [&] { return layer.forward(x, mode); };
  p.backward = [&](const kicksense::nn::Tensor& g) { return layer.backward(g); };
  layer.collect_params("layer", p.params);
  p.input = &x;
  return finite_difference_check(p, rng, per_tensor);
}

}  // namespace kstest
