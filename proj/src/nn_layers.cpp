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

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "kicksense/error.hpp"
#include "kicksense/nn.hpp"

namespace kicksense::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using CMapRM = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;
using Idx = Eigen::Index;

namespace {

Idx ix(std::size_t v) { return static_cast<Idx>(v); }

void require_cached(bool cached, const char* layer) {
  require(cached, ErrorCode::State, std::string(layer) + ": backward called before forward");
}

void require_shape(const Tensor& t, std::size_t rank, const char* layer) {
  require(t.rank() == rank, ErrorCode::InvalidArgument,
          std::string(layer) + ": expected rank " + std::to_string(rank) + " input, got " +
              shape_string(t.shape));
}


// Patch geometry of one sample for the im2col convolutions. A 1-D
// convolution is the h = 1 case.
struct ConvGeom {
  std::size_t cin, h, w, kh, kw, sh, sw, ph, pw, oh, ow;
  std::size_t rows() const { return cin * kh * kw; }
  std::size_t plane() const { return oh * ow; }
};

void im2col(const ConvGeom& g, const double* src, double* col) {
  const std::size_t plane = g.plane();
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        double* row = col + ((ci * g.kh + ky) * g.kw + kx) * plane;
        const double* chan = src + ci * g.h * g.w;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          double* dst = row + oy * g.ow;
          const long iy = static_cast<long>(oy * g.sh + ky) - static_cast<long>(g.ph);
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill_n(dst, g.ow, 0.0);
            continue;
          }
          const double* line = chan + static_cast<std::size_t>(iy) * g.w;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ixx = static_cast<long>(ox * g.sw + kx) - static_cast<long>(g.pw);
            dst[ox] = (ixx < 0 || ixx >= static_cast<long>(g.w)) ? 0.0
                                                                 : line[static_cast<std::size_t>(ixx)];
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeom& g, const double* col, double* dst) {
  const std::size_t plane = g.plane();
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const double* row = col + ((ci * g.kh + ky) * g.kw + kx) * plane;
        double* chan = dst + ci * g.h * g.w;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.sh + ky) - static_cast<long>(g.ph);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          double* line = chan + static_cast<std::size_t>(iy) * g.w;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ixx = static_cast<long>(ox * g.sw + kx) - static_cast<long>(g.pw);
            if (ixx >= 0 && ixx < static_cast<long>(g.w)) {
              line[static_cast<std::size_t>(ixx)] += row[oy * g.ow + ox];
            }
          }
        }
      }
    }
  }
}

void conv_forward(const ConvGeom& g, std::size_t batch, std::size_t cout, const double* x,
                  const Tensor& weight, const Tensor& bias, AlignedVector& col,
                  double* y) {
  const std::size_t rows = g.rows(), plane = g.plane(), in_size = g.cin * g.h * g.w;
  col.resize(rows * plane);
  CMapRM wm(weight.data(), ix(cout), ix(rows));
  CMapRM cm(col.data(), ix(rows), ix(plane));
  for (std::size_t n = 0; n < batch; ++n) {
    im2col(g, x + n * in_size, col.data());
    MapRM out(y + n * cout * plane, ix(cout), ix(plane));
    out.noalias() = wm * cm;
    out.colwise() += CMapVec(bias.data(), ix(cout));
  }
}

void conv_backward(const ConvGeom& g, std::size_t batch, std::size_t cout, const double* x,
                   const double* dy, Tensor& weight, Tensor& bias, AlignedVector& col,
                   double* dx) {
  const std::size_t rows = g.rows(), plane = g.plane(), in_size = g.cin * g.h * g.w;
  col.resize(rows * plane);
  RowMat dcol(ix(rows), ix(plane));
  CMapRM wm(weight.data(), ix(cout), ix(rows));
  CMapRM cm(col.data(), ix(rows), ix(plane));
  MapRM dw(weight.grad.data(), ix(cout), ix(rows));
  MapVec db(bias.grad.data(), ix(cout));
  for (std::size_t n = 0; n < batch; ++n) {
    im2col(g, x + n * in_size, col.data());
    CMapRM dyn(dy + n * cout * plane, ix(cout), ix(plane));
    dw.noalias() += dyn * cm.transpose();
    db += dyn.rowwise().sum();
    dcol.noalias() = wm.transpose() * dyn;
    col2im_add(g, dcol.data(), dx + n * in_size);
  }
}

}  // namespace

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<std::size_t>());
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape_, double fill)
    : shape(std::move(shape_)), values(shape_size(shape), fill) {}

void Tensor::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() { grad.assign(values.size(), 0.0); }

void Tensor::reshape(std::vector<std::size_t> new_shape) {
  require(shape_size(new_shape) == values.size(), ErrorCode::InvalidArgument,
          "reshape: size mismatch " + shape_string(shape) + " -> " + shape_string(new_shape));
  shape = std::move(new_shape);
}

void Layer::collect_params(const std::string&, std::vector<Param>&) {}

void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.values) v = rng.uniform(-limit, limit);
}

// ---------------------------------------------------------------- Conv1D

Conv1D::Conv1D(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               std::size_t stride, std::size_t padding, Rng& rng)
    : weight({out_channels, in_channels, kernel}),
      bias({out_channels}),
      cin_(in_channels),
      cout_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(padding) {
  require(in_channels > 0 && out_channels > 0 && kernel > 0 && stride > 0,
          ErrorCode::InvalidArgument, "Conv1D: dimensions must be positive");
  glorot_uniform(weight, in_channels * kernel, out_channels * kernel, rng);
  weight.ensure_grad();
  bias.ensure_grad();
}

Tensor Conv1D::forward(const Tensor& x, Mode) {
  require_shape(x, 3, "Conv1D");
  require(x.dim(1) == cin_, ErrorCode::InvalidArgument, "Conv1D: channel mismatch");
  const std::size_t b = x.dim(0), len = x.dim(2);
  require(len + 2 * pad_ >= k_, ErrorCode::InvalidArgument, "Conv1D: input shorter than kernel");
  out_len_ = (len + 2 * pad_ - k_) / stride_ + 1;
  in_shape_ = x.shape;
  input_ = x.values;
  const ConvGeom g{cin_, 1, len, 1, k_, 1, stride_, 0, pad_, 1, out_len_};
  Tensor out({b, cout_, out_len_});
  conv_forward(g, b, cout_, input_.data(), weight, bias, col_, out.data());
  cached_ = true;
  return out;
}

Tensor Conv1D::backward(const Tensor& grad_out) {
  require_cached(cached_, "Conv1D");
  const std::size_t b = in_shape_[0], len = in_shape_[2];
  require(grad_out.size() == b * cout_ * out_len_, ErrorCode::InvalidArgument,
          "Conv1D: gradient shape mismatch");
  const ConvGeom g{cin_, 1, len, 1, k_, 1, stride_, 0, pad_, 1, out_len_};
  Tensor dx(in_shape_);
  conv_backward(g, b, cout_, input_.data(), grad_out.data(), weight, bias, col_, dx.data());
  return dx;
}

void Conv1D::collect_params(const std::string& prefix, std::vector<Param>& out) {
  out.push_back({prefix + ".weight", &weight});
  out.push_back({prefix + ".bias", &bias});
}

// ---------------------------------------------------------------- Conv2D

Conv2D::Conv2D(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_h,
               std::size_t kernel_w, std::size_t stride_h, std::size_t stride_w,
               std::size_t pad_h, std::size_t pad_w, Rng& rng)
    : weight({out_channels, in_channels, kernel_h, kernel_w}),
      bias({out_channels}),
      cin_(in_channels),
      cout_(out_channels),
      kh_(kernel_h),
      kw_(kernel_w),
      sh_(stride_h),
      sw_(stride_w),
      ph_(pad_h),
      pw_(pad_w) {
  require(in_channels > 0 && out_channels > 0 && kernel_h > 0 && kernel_w > 0 && stride_h > 0 &&
              stride_w > 0,
          ErrorCode::InvalidArgument, "Conv2D: dimensions must be positive");
  glorot_uniform(weight, in_channels * kernel_h * kernel_w, out_channels * kernel_h * kernel_w,
                 rng);
  weight.ensure_grad();
  bias.ensure_grad();
}

Tensor Conv2D::forward(const Tensor& x, Mode) {
  require_shape(x, 4, "Conv2D");
  require(x.dim(1) == cin_, ErrorCode::InvalidArgument, "Conv2D: channel mismatch");
  const std::size_t b = x.dim(0), h = x.dim(2), w = x.dim(3);
  require(h + 2 * ph_ >= kh_ && w + 2 * pw_ >= kw_, ErrorCode::InvalidArgument,
          "Conv2D: input smaller than kernel");
  out_h_ = (h + 2 * ph_ - kh_) / sh_ + 1;
  out_w_ = (w + 2 * pw_ - kw_) / sw_ + 1;
  in_shape_ = x.shape;
  input_ = x.values;
  const ConvGeom g{cin_, h, w, kh_, kw_, sh_, sw_, ph_, pw_, out_h_, out_w_};
  Tensor out({b, cout_, out_h_, out_w_});
  conv_forward(g, b, cout_, input_.data(), weight, bias, col_, out.data());
  cached_ = true;
  return out;
}

Tensor Conv2D::backward(const Tensor& grad_out) {
  require_cached(cached_, "Conv2D");
  const std::size_t b = in_shape_[0], h = in_shape_[2], w = in_shape_[3];
  require(grad_out.size() == b * cout_ * out_h_ * out_w_, ErrorCode::InvalidArgument,
          "Conv2D: gradient shape mismatch");
  const ConvGeom g{cin_, h, w, kh_, kw_, sh_, sw_, ph_, pw_, out_h_, out_w_};
  Tensor dx(in_shape_);
  conv_backward(g, b, cout_, input_.data(), grad_out.data(), weight, bias, col_, dx.data());
  return dx;
}

void Conv2D::collect_params(const std::string& prefix, std::vector<Param>& out) {
  out.push_back({prefix + ".weight", &weight});
  out.push_back({prefix + ".bias", &bias});
}

// ---------------------------------------------------------------- BiLSTM

namespace {

using RowArr = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapArr = Eigen::Map<RowArr>;
using StridedArr = Eigen::Map<RowArr, 0, Eigen::OuterStride<>>;

// Written with exp so the packet math path is used.
template <typename E>
auto sigmoid_array(const Eigen::ArrayBase<E>& v) {
  return (1.0 + (-v).exp()).inverse();
}

template <typename E>
auto tanh_array(const Eigen::ArrayBase<E>& v) {
  return 1.0 - 2.0 / ((2.0 * v).exp() + 1.0);
}

}  // namespace

BiLSTM::BiLSTM(std::size_t input_size, std::size_t hidden_size, Rng& rng)
    : d_(input_size), h_(hidden_size) {
  require(input_size > 0 && hidden_size > 0, ErrorCode::InvalidArgument,
          "BiLSTM: sizes must be positive");
  const double limit = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  for (Direction* d : {&fw, &bw}) {
    d->wx = Tensor({4 * h_, d_});
    d->wh = Tensor({4 * h_, h_});
    d->b = Tensor({4 * h_});
    for (auto& v : d->wx.values) v = rng.uniform(-limit, limit);
    for (auto& v : d->wh.values) v = rng.uniform(-limit, limit);
    for (std::size_t j = h_; j < 2 * h_; ++j) d->b.values[j] = 1.0;  // forget gate
    d->wx.ensure_grad();
    d->wh.ensure_grad();
    d->b.ensure_grad();
  }
}

void BiLSTM::run_direction(Direction& d, bool reverse) {
  const std::size_t B = batch_, T = steps_, H = h_, G = 4 * h_;
  d.gates.assign(T * B * G, 0.0);
  d.cell.assign(T * B * H, 0.0);
  d.cell_tanh.assign(T * B * H, 0.0);
  d.hidden.assign(T * B * H, 0.0);

  // input projections for every step at once
  MapRM pre(d.gates.data(), ix(T * B), ix(G));
  pre.noalias() = CMapRM(x_tm_.data(), ix(T * B), ix(d_)) *
                  CMapRM(d.wx.data(), ix(G), ix(d_)).transpose();
  pre.rowwise() += CMapVec(d.b.data(), ix(G)).transpose();

  CMapRM wh(d.wh.data(), ix(G), ix(H));
  std::size_t prev_t = 0;
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t t = reverse ? T - 1 - s : s;
    MapRM g(d.gates.data() + t * B * G, ix(B), ix(G));
    if (s > 0) g.noalias() += CMapRM(d.hidden.data() + prev_t * B * H, ix(B), ix(H)) * wh.transpose();
    double* row0 = g.data();
    StridedArr gi(row0, ix(B), ix(H), Eigen::OuterStride<>(ix(G)));
    StridedArr gf(row0 + H, ix(B), ix(H), Eigen::OuterStride<>(ix(G)));
    StridedArr gc(row0 + 2 * H, ix(B), ix(H), Eigen::OuterStride<>(ix(G)));
    StridedArr go(row0 + 3 * H, ix(B), ix(H), Eigen::OuterStride<>(ix(G)));
    gi = sigmoid_array(gi);
    gf = sigmoid_array(gf);
    gc = tanh_array(gc);
    go = sigmoid_array(go);
    MapArr c(d.cell.data() + t * B * H, ix(B), ix(H));
    MapArr tc(d.cell_tanh.data() + t * B * H, ix(B), ix(H));
    MapArr hout(d.hidden.data() + t * B * H, ix(B), ix(H));
    if (s > 0) {
      c = gf * MapArr(d.cell.data() + prev_t * B * H, ix(B), ix(H)) + gi * gc;
    } else {
      c = gi * gc;
    }
    tc = tanh_array(c);
    hout = go * tc;
    prev_t = t;
  }
}

Tensor BiLSTM::forward(const Tensor& x, Mode) {
  require_shape(x, 3, "BiLSTM");
  require(x.dim(2) == d_, ErrorCode::InvalidArgument, "BiLSTM: feature size mismatch");
  require(x.dim(1) >= 1, ErrorCode::InvalidArgument, "BiLSTM: empty sequence");
  batch_ = x.dim(0);
  steps_ = x.dim(1);
  const std::size_t B = batch_, T = steps_, H = h_;
  x_tm_.resize(T * B * d_);
  for (std::size_t n = 0; n < B; ++n) {
    for (std::size_t t = 0; t < T; ++t) {
      std::copy_n(x.data() + (n * T + t) * d_, d_, x_tm_.data() + (t * B + n) * d_);
    }
  }
  run_direction(fw, false);
  run_direction(bw, true);

  Tensor out({B, T, 2 * H});
  for (std::size_t n = 0; n < B; ++n) {
    for (std::size_t t = 0; t < T; ++t) {
      double* dst = out.data() + (n * T + t) * 2 * H;
      std::copy_n(fw.hidden.data() + (t * B + n) * H, H, dst);
      std::copy_n(bw.hidden.data() + (t * B + n) * H, H, dst + H);
    }
  }
  cached_ = true;
  return out;
}

void BiLSTM::back_direction(Direction& d, bool reverse, const AlignedVector& grad_h,
                            AlignedVector& grad_x) {
  const std::size_t B = batch_, T = steps_, H = h_, G = 4 * h_;
  AlignedVector dgates(T * B * G, 0.0);
  RowMat dh_rec = RowMat::Zero(ix(B), ix(H));
  AlignedVector dc_rec(B * H, 0.0);
  CMapRM wh(d.wh.data(), ix(G), ix(H));
  MapRM dwh(d.wh.grad.data(), ix(G), ix(H));

  for (std::size_t s = T; s-- > 0;) {
    const std::size_t t = reverse ? T - 1 - s : s;
    const bool has_prev = s > 0;
    const std::size_t prev_t = reverse ? t + 1 : t - 1;
    const double* gates = d.gates.data() + t * B * G;
    const double* tanh_c = d.cell_tanh.data() + t * B * H;
    const double* c_prev = has_prev ? d.cell.data() + prev_t * B * H : nullptr;
    double* dg = dgates.data() + t * B * G;
    for (std::size_t n = 0; n < B; ++n) {
      for (std::size_t j = 0; j < H; ++j) {
        const std::size_t hj = n * H + j;
        const double i_g = gates[n * G + j];
        const double f_g = gates[n * G + H + j];
        const double c_g = gates[n * G + 2 * H + j];
        const double o_g = gates[n * G + 3 * H + j];
        const double dh = grad_h[(t * B) * H + hj] + dh_rec(ix(n), ix(j));
        const double tc = tanh_c[hj];
        const double d_o = dh * tc;
        const double dc = dh * o_g * (1.0 - tc * tc) + dc_rec[hj];
        const double cp = c_prev ? c_prev[hj] : 0.0;
        dg[n * G + j] = dc * c_g * i_g * (1.0 - i_g);
        dg[n * G + H + j] = dc * cp * f_g * (1.0 - f_g);
        dg[n * G + 2 * H + j] = dc * i_g * (1.0 - c_g * c_g);
        dg[n * G + 3 * H + j] = d_o * o_g * (1.0 - o_g);
        dc_rec[hj] = dc * f_g;
      }
    }
    CMapRM dgm(dg, ix(B), ix(G));
    if (has_prev) {
      dwh.noalias() += dgm.transpose() * CMapRM(d.hidden.data() + prev_t * B * H, ix(B), ix(H));
      dh_rec.noalias() = dgm * wh;
    } else {
      dh_rec.setZero();
    }
  }
  CMapRM dgall(dgates.data(), ix(T * B), ix(G));
  MapRM(d.wx.grad.data(), ix(G), ix(d_)).noalias() +=
      dgall.transpose() * CMapRM(x_tm_.data(), ix(T * B), ix(d_));
  MapVec(d.b.grad.data(), ix(G)) += dgall.colwise().sum().transpose();
  MapRM(grad_x.data(), ix(T * B), ix(d_)).noalias() +=
      dgall * CMapRM(d.wx.data(), ix(G), ix(d_));
}

Tensor BiLSTM::backward(const Tensor& grad_out) {
  require_cached(cached_, "BiLSTM");
  const std::size_t B = batch_, T = steps_, H = h_;
  require(grad_out.size() == B * T * 2 * H, ErrorCode::InvalidArgument,
          "BiLSTM: gradient shape mismatch");
  AlignedVector gf(T * B * H), gb(T * B * H);
  for (std::size_t n = 0; n < B; ++n) {
    for (std::size_t t = 0; t < T; ++t) {
      const double* src = grad_out.data() + (n * T + t) * 2 * H;
      std::copy_n(src, H, gf.data() + (t * B + n) * H);
      std::copy_n(src + H, H, gb.data() + (t * B + n) * H);
    }
  }
  AlignedVector gx(T * B * d_, 0.0);
  back_direction(fw, false, gf, gx);
  back_direction(bw, true, gb, gx);
  Tensor dx({B, T, d_});
  for (std::size_t n = 0; n < B; ++n) {
    for (std::size_t t = 0; t < T; ++t) {
      std::copy_n(gx.data() + (t * B + n) * d_, d_, dx.data() + (n * T + t) * d_);
    }
  }
  return dx;
}

void BiLSTM::collect_params(const std::string& prefix, std::vector<Param>& out) {
  out.push_back({prefix + ".fw.wx", &fw.wx});
  out.push_back({prefix + ".fw.wh", &fw.wh});
  out.push_back({prefix + ".fw.b", &fw.b});
  out.push_back({prefix + ".bw.wx", &bw.wx});
  out.push_back({prefix + ".bw.wh", &bw.wh});
  out.push_back({prefix + ".bw.b", &bw.b});
}

// ---------------------------------------------------------- shape layers

Tensor GlobalAvgPool::forward(const Tensor& x, Mode) {
  require(axis_ < x.rank(), ErrorCode::InvalidArgument, "GlobalAvgPool: axis out of range");
  in_shape_ = x.shape;
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis_; ++i) outer *= x.dim(i);
  for (std::size_t i = axis_ + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t n = x.dim(axis_);
  require(n > 0, ErrorCode::InvalidArgument, "GlobalAvgPool: empty axis");
  std::vector<std::size_t> shape = x.shape;
  shape.erase(shape.begin() + static_cast<long>(axis_));
  Tensor out(shape);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t o = 0; o < outer; ++o) {
    double* dst = out.data() + o * inner;
    for (std::size_t k = 0; k < n; ++k) {
      const double* src = x.data() + (o * n + k) * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
    for (std::size_t i = 0; i < inner; ++i) dst[i] *= scale;
  }
  cached_ = true;
  return out;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
  require_cached(cached_, "GlobalAvgPool");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis_; ++i) outer *= in_shape_[i];
  for (std::size_t i = axis_ + 1; i < in_shape_.size(); ++i) inner *= in_shape_[i];
  const std::size_t n = in_shape_[axis_];
  require(grad_out.size() == outer * inner, ErrorCode::InvalidArgument,
          "GlobalAvgPool: gradient shape mismatch");
  Tensor dx(in_shape_);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t o = 0; o < outer; ++o) {
    const double* src = grad_out.data() + o * inner;
    for (std::size_t k = 0; k < n; ++k) {
      double* dst = dx.data() + (o * n + k) * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] = src[i] * scale;
    }
  }
  return dx;
}

Tensor Flatten::forward(const Tensor& x, Mode) {
  require(x.rank() >= 1, ErrorCode::InvalidArgument, "Flatten: scalar input");
  in_shape_ = x.shape;
  Tensor out = x;
  out.grad.clear();
  out.reshape({x.dim(0), x.size() / std::max<std::size_t>(x.dim(0), 1)});
  cached_ = true;
  return out;
}

Tensor Flatten::backward(const Tensor& grad_out) {
  require_cached(cached_, "Flatten");
  Tensor dx = grad_out;
  dx.reshape(in_shape_);
  return dx;
}

Tensor SwapAxes::forward(const Tensor& x, Mode) {
  require_shape(x, 3, "SwapAxes");
  in_shape_ = x.shape;
  const std::size_t b = x.dim(0), a = x.dim(1), c = x.dim(2);
  Tensor out({b, c, a});
  for (std::size_t n = 0; n < b; ++n) {
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        out.values[(n * c + j) * a + i] = x.values[(n * a + i) * c + j];
      }
    }
  }
  cached_ = true;
  return out;
}

Tensor SwapAxes::backward(const Tensor& grad_out) {
  require_cached(cached_, "SwapAxes");
  const std::size_t b = in_shape_[0], a = in_shape_[1], c = in_shape_[2];
  Tensor dx(in_shape_);
  for (std::size_t n = 0; n < b; ++n) {
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        dx.values[(n * a + i) * c + j] = grad_out.values[(n * c + j) * a + i];
      }
    }
  }
  return dx;
}

Tensor Scale::forward(const Tensor& x, Mode) {
  shape_ = x.shape;
  Tensor out = x;
  out.grad.clear();
  for (double& v : out.values) v *= factor_;
  cached_ = true;
  return out;
}

Tensor Scale::backward(const Tensor& grad_out) {
  require_cached(cached_, "Scale");
  require(grad_out.size() == shape_size(shape_), ErrorCode::InvalidArgument,
          "Scale: gradient shape mismatch");
  Tensor dx(shape_);
  for (std::size_t i = 0; i < dx.size(); ++i) dx.values[i] = grad_out.values[i] * factor_;
  return dx;
}

Tensor ReLU::forward(const Tensor& x, Mode) {
  shape_ = x.shape;
  mask_.resize(x.size());
  Tensor out(x.shape);
  const auto in = Eigen::Map<const Eigen::ArrayXd>(x.data(), ix(x.size()));
  Eigen::Map<Eigen::ArrayXd>(mask_.data(), ix(x.size())) = (in > 0.0).cast<double>();
  Eigen::Map<Eigen::ArrayXd>(out.data(), ix(x.size())) = in.max(0.0);
  cached_ = true;
  return out;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  require_cached(cached_, "ReLU");
  require(grad_out.size() == mask_.size(), ErrorCode::InvalidArgument,
          "ReLU: gradient shape mismatch");
  Tensor dx(shape_);
  for (std::size_t i = 0; i < mask_.size(); ++i) dx.values[i] = grad_out.values[i] * mask_[i];
  return dx;
}

Dropout::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
  require(rate >= 0.0 && rate < 1.0, ErrorCode::InvalidArgument,
          "Dropout: rate must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, Mode mode) {
  shape_ = x.shape;
  scale_.assign(x.size(), 1.0);
  Tensor out = x;
  out.grad.clear();
  if (mode == Mode::Train && rate_ > 0.0) {
    const double keep = 1.0 / (1.0 - rate_);
    for (std::size_t i = 0; i < x.size(); ++i) {
      scale_[i] = rng_.uniform() < rate_ ? 0.0 : keep;
      out.values[i] *= scale_[i];
    }
  }
  cached_ = true;
  return out;
}

Tensor Dropout::backward(const Tensor& grad_out) {
  require_cached(cached_, "Dropout");
  require(grad_out.size() == scale_.size(), ErrorCode::InvalidArgument,
          "Dropout: gradient shape mismatch");
  Tensor dx(shape_);
  for (std::size_t i = 0; i < scale_.size(); ++i) dx.values[i] = grad_out.values[i] * scale_[i];
  return dx;
}

// ----------------------------------------------------------------- Dense

Dense::Dense(std::size_t in_features, std::size_t out_features, Rng& rng)
    : weight({out_features, in_features}), bias({out_features}), in_(in_features), out_(out_features) {
  require(in_features > 0 && out_features > 0, ErrorCode::InvalidArgument,
          "Dense: sizes must be positive");
  glorot_uniform(weight, in_features, out_features, rng);
  weight.ensure_grad();
  bias.ensure_grad();
}

Tensor Dense::forward(const Tensor& x, Mode) {
  require_shape(x, 2, "Dense");
  require(x.dim(1) == in_, ErrorCode::InvalidArgument,
          "Dense: expected " + std::to_string(in_) + " features, got " + std::to_string(x.dim(1)));
  input_ = x;
  input_.grad.clear();
  const std::size_t b = x.dim(0);
  Tensor out({b, out_});
  MapRM y(out.data(), ix(b), ix(out_));
  y.noalias() = CMapRM(x.data(), ix(b), ix(in_)) *
                CMapRM(weight.data(), ix(out_), ix(in_)).transpose();
  y.rowwise() += CMapVec(bias.data(), ix(out_)).transpose();
  cached_ = true;
  return out;
}

Tensor Dense::backward(const Tensor& grad_out) {
  require_cached(cached_, "Dense");
  const std::size_t b = input_.dim(0);
  require(grad_out.size() == b * out_, ErrorCode::InvalidArgument,
          "Dense: gradient shape mismatch");
  CMapRM dy(grad_out.data(), ix(b), ix(out_));
  MapRM(weight.grad.data(), ix(out_), ix(in_)).noalias() +=
      dy.transpose() * CMapRM(input_.data(), ix(b), ix(in_));
  MapVec(bias.grad.data(), ix(out_)) += dy.colwise().sum().transpose();
  Tensor dx({b, in_});
  MapRM(dx.data(), ix(b), ix(in_)).noalias() = dy * CMapRM(weight.data(), ix(out_), ix(in_));
  return dx;
}

void Dense::collect_params(const std::string& prefix, std::vector<Param>& out) {
  out.push_back({prefix + ".weight", &weight});
  out.push_back({prefix + ".bias", &bias});
}

// ------------------------------------------------------- AttentionFusion

AttentionFusion::AttentionFusion(std::size_t features)
    : weight({features, features}), beta({features}), n_(features) {
  require(features > 0, ErrorCode::InvalidArgument, "AttentionFusion: empty feature vector");
  weight.ensure_grad();
  beta.ensure_grad();
}

Tensor AttentionFusion::forward(const Tensor& x, Mode) {
  require_shape(x, 2, "AttentionFusion");
  require(x.dim(1) == n_, ErrorCode::InvalidArgument, "AttentionFusion: feature size mismatch");
  for (double v : x.values) {
    require(std::isfinite(v), ErrorCode::InvalidArgument, "AttentionFusion: non-finite feature");
  }
  input_ = x;
  input_.grad.clear();
  const std::size_t b = x.dim(0);
  omega_.assign(b * n_, 0.0);
  MapRM z(omega_.data(), ix(b), ix(n_));
  z.noalias() = CMapRM(x.data(), ix(b), ix(n_)) * CMapRM(weight.data(), ix(n_), ix(n_));
  z.rowwise() += CMapVec(beta.data(), ix(n_)).transpose();
  Tensor out({b, n_});
  for (std::size_t r = 0; r < b; ++r) {
    double* row = omega_.data() + r * n_;
    const double mx = *std::max_element(row, row + n_);
    double sum = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (std::size_t j = 0; j < n_; ++j) {
      row[j] /= sum;
      out.values[r * n_ + j] = x.values[r * n_ + j] * row[j];
    }
  }
  cached_ = true;
  return out;
}

Tensor AttentionFusion::backward(const Tensor& grad_out) {
  require_cached(cached_, "AttentionFusion");
  const std::size_t b = input_.dim(0);
  require(grad_out.size() == b * n_, ErrorCode::InvalidArgument,
          "AttentionFusion: gradient shape mismatch");
  Tensor dx({b, n_});
  RowMat dz(ix(b), ix(n_));
  for (std::size_t r = 0; r < b; ++r) {
    const double* w = omega_.data() + r * n_;
    const double* f = input_.data() + r * n_;
    const double* g = grad_out.data() + r * n_;
    double dot = 0.0;
    for (std::size_t j = 0; j < n_; ++j) dot += g[j] * f[j] * w[j];
    for (std::size_t j = 0; j < n_; ++j) {
      dx.values[r * n_ + j] = g[j] * w[j];
      dz(ix(r), ix(j)) = w[j] * (g[j] * f[j] - dot);
    }
  }
  MapRM(weight.grad.data(), ix(n_), ix(n_)).noalias() +=
      CMapRM(input_.data(), ix(b), ix(n_)).transpose() * dz;
  MapVec(beta.grad.data(), ix(n_)) += dz.colwise().sum().transpose();
  MapRM(dx.data(), ix(b), ix(n_)).noalias() += dz * CMapRM(weight.data(), ix(n_), ix(n_)).transpose();
  return dx;
}

void AttentionFusion::collect_params(const std::string& prefix, std::vector<Param>& out) {
  out.push_back({prefix + ".weight", &weight});
  out.push_back({prefix + ".beta", &beta});
}

// ------------------------------------------------------------ Sequential

Tensor Sequential::forward(const Tensor& x, Mode mode) {
  Tensor h = x;
  for (auto& layer : layers_) h = layer->forward(h, mode);
  return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Sequential::collect_params(const std::string& prefix, std::vector<Param>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->collect_params(prefix.empty() ? names_[i] : prefix + "." + names_[i], out);
  }
}

}  // namespace kicksense::nn
