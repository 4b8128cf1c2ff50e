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

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include "kicksense/error.hpp"
#include "kicksense/nn.hpp"

namespace kicksense::nn {

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require(logits.rank() == 2, ErrorCode::InvalidArgument, "cross entropy expects [B, C] logits");
  const std::size_t b = logits.dim(0), c = logits.dim(1);
  require(labels.size() == b, ErrorCode::InvalidArgument, "cross entropy: label count mismatch");
  require(b > 0, ErrorCode::InvalidArgument, "cross entropy: empty batch");
  LossResult res;
  res.grad = Tensor(logits.shape);
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t r = 0; r < b; ++r) {
    const int y = labels[r];
    require(y >= 0 && static_cast<std::size_t>(y) < c, ErrorCode::InvalidArgument,
            "cross entropy: label out of range");
    const auto p = softmax(std::span<const double>(logits.data() + r * c, c));
    res.loss -= std::log(std::max(p[static_cast<std::size_t>(y)], 1e-300)) * inv_b;
    for (std::size_t j = 0; j < c; ++j) {
      res.grad.values[r * c + j] =
          (p[j] - (static_cast<std::size_t>(y) == j ? 1.0 : 0.0)) * inv_b;
    }
  }
  return res;
}

LossResult mean_squared_error(const Tensor& pred, const Tensor& target) {
  require(pred.shape == target.shape, ErrorCode::InvalidArgument, "mse: shape mismatch");
  require(pred.size() > 0, ErrorCode::InvalidArgument, "mse: empty input");
  LossResult res;
  res.grad = Tensor(pred.shape);
  const double inv = 1.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.values[i] - target.values[i];
    res.loss += d * d * inv;
    res.grad.values[i] = 2.0 * d * inv;
  }
  return res;
}

double LrSchedule::at(std::size_t step) const {
  const std::size_t period = std::max<std::size_t>(decay_period, 1);
  return initial * std::pow(gamma, static_cast<double>(step / period));
}

Optimizer::Optimizer(OptimizerKind kind, LrSchedule schedule, double beta1, double beta2,
                     double epsilon)
    : kind_(kind), schedule_(schedule), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void Optimizer::step(const std::vector<Param>& params, std::size_t schedule_step) {
  const double lr = schedule_.at(schedule_step);
  ++t_;
  if (kind_ == OptimizerKind::Sgd) {
    for (const auto& p : params) {
      Tensor& w = *p.tensor;
      if (!w.has_grad()) continue;
      for (std::size_t i = 0; i < w.size(); ++i) w.values[i] -= lr * w.grad[i];
    }
    return;
  }
  if (m_.size() != params.size()) {
    m_.assign(params.size(), {});
    v_.assign(params.size(), {});
    for (std::size_t k = 0; k < params.size(); ++k) {
      m_[k].assign(params[k].tensor->size(), 0.0);
      v_[k].assign(params[k].tensor->size(), 0.0);
    }
  }
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& w = *params[k].tensor;
    if (!w.has_grad()) continue;
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = w.grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w.values[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void zero_grads(const std::vector<Param>& params) {
  for (const auto& p : params) p.tensor->zero_grad();
}

std::size_t parameter_count(const std::vector<Param>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor->size();
  return n;
}

// ------------------------------------------------------------ checkpoint

namespace {

constexpr char kMagic[8] = {'K', 'S', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void put_le(std::string& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    require(pos_ + sizeof(T) <= bytes_.size(), ErrorCode::Parse, "checkpoint truncated");
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  std::string get_string(std::size_t n) {
    require(pos_ + n <= bytes_.size(), ErrorCode::Parse, "checkpoint truncated");
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
  out += ckpt.metadata;
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    require(shape_size(t.shape) == t.values.size(), ErrorCode::InvalidArgument,
            "checkpoint tensor '" + t.name + "' shape does not match value count");
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put_le<std::uint64_t>(out, d);
    for (double v : t.values) put_le<double>(out, v);
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  require(bytes.size() >= sizeof(kMagic) &&
              std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) == 0,
          ErrorCode::Parse, "not a kicksense checkpoint (bad magic)");
  Reader r(bytes.substr(sizeof(kMagic)));
  Checkpoint ckpt;
  ckpt.metadata = r.get_string(r.get<std::uint32_t>());
  const auto count = r.get<std::uint32_t>();
  std::unordered_set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.get_string(r.get<std::uint32_t>());
    require(seen.insert(t.name).second, ErrorCode::Parse,
            "checkpoint has duplicate tensor '" + t.name + "'");
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.shape.push_back(static_cast<std::size_t>(r.get<std::uint64_t>()));
    }
    t.values.resize(shape_size(t.shape));
    for (auto& v : t.values) v = r.get<double>();
    ckpt.tensors.push_back(std::move(t));
  }
  require(r.done(), ErrorCode::Parse, "checkpoint has trailing bytes");
  return ckpt;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::Io, "failed writing '" + path + "'");
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open checkpoint '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

void store_params(const std::vector<Param>& params, Checkpoint& ckpt) {
  for (const auto& p : params) {
    require(ckpt.find(p.name) == nullptr, ErrorCode::InvalidArgument,
            "duplicate parameter name '" + p.name + "'");
    const auto& v = p.tensor->values;
    ckpt.tensors.push_back({p.name, p.tensor->shape, std::vector<double>(v.begin(), v.end())});
  }
}

void load_params(const std::vector<Param>& params, const Checkpoint& ckpt) {
  for (const auto& p : params) {
    const NamedTensor* t = ckpt.find(p.name);
    require(t != nullptr, ErrorCode::Validation, "checkpoint lacks parameter '" + p.name + "'");
    require(t->shape == p.tensor->shape, ErrorCode::Validation,
            "checkpoint parameter '" + p.name + "' has shape " + shape_string(t->shape) +
                ", model expects " + shape_string(p.tensor->shape));
    p.tensor->values.assign(t->values.begin(), t->values.end());
  }
}

}  // namespace kicksense::nn
