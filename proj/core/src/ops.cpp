/*
 * Copyright 2026 The growprune Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "growprune/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "growprune/errors.hpp"

namespace growprune {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

class CacheAccess {
 public:
  static void store(LayerCache* c, LayerCache::Kind kind, Tensor first, Tensor second = {},
                    float slope = 0.0f) {
    if (!c) return;
    c->kind_ = kind;
    c->ready_ = true;
    c->input_shape_ = first.shape();
    c->first_ = std::move(first);
    c->second_ = std::move(second);
    c->argmax_.clear();
    c->slope_ = slope;
  }
  static void store_argmax(LayerCache* c, Shape input_shape, std::vector<std::uint32_t> argmax) {
    if (!c) return;
    c->kind_ = LayerCache::Kind::maxpool;
    c->ready_ = true;
    c->input_shape_ = std::move(input_shape);
    c->first_ = {};
    c->second_ = {};
    c->argmax_ = std::move(argmax);
  }
  static LayerCache& take(LayerCache& c, LayerCache::Kind kind, const char* op) {
    if (!c.ready_)
      throw StateError(std::string(op) + ": cache is missing or was already consumed");
    if (c.kind_ != kind) throw StateError(std::string(op) + ": cache was written by another layer kind");
    c.ready_ = false;
    return c;
  }
  static Tensor& first(LayerCache& c) { return c.first_; }
  static Tensor& second(LayerCache& c) { return c.second_; }
  static const Shape& input_shape(const LayerCache& c) { return c.input_shape_; }
  static const std::vector<std::uint32_t>& argmax(const LayerCache& c) { return c.argmax_; }
  static float slope(const LayerCache& c) { return c.slope_; }
};

namespace {

std::size_t batch_features(const Tensor& t) { return t.size() / t.dim(0); }

}  // namespace

// ---------------------------------------------------------------------------
// Affine

Tensor affine_forward(const Tensor& input, const Tensor& weight, const Tensor& bias,
                      LayerCache* cache) {
  if (weight.rank() != 2 || bias.rank() != 1 || bias.dim(0) != weight.dim(0))
    throw DimensionError("affine_forward: weight " + shape_string(weight.shape()) +
                         " and bias " + shape_string(bias.shape()) + " do not form a layer");
  if (input.rank() < 2 || batch_features(input) != weight.dim(1))
    throw DimensionError("affine_forward: input " + shape_string(input.shape()) +
                         " does not match weight " + shape_string(weight.shape()));
  const auto batch = input.dim(0);
  const auto in = weight.dim(1);
  const auto out = weight.dim(0);

  Tensor result({batch, out});
  ConstMapMat x(input.data(), batch, in);
  ConstMapMat w(weight.data(), out, in);
  MapMat y(result.data(), batch, out);
  y.noalias() = x * w.transpose();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < out; ++o) y(b, o) += bias[o];

  CacheAccess::store(cache, LayerCache::Kind::affine, input, weight);
  return result;
}

ParamGrads affine_backward(const Tensor& grad_out, LayerCache& cache, bool need_input_grad) {
  auto& c = CacheAccess::take(cache, LayerCache::Kind::affine, "affine_backward");
  const Tensor& input = CacheAccess::first(c);
  const Tensor& weight = CacheAccess::second(c);
  const auto batch = input.dim(0);
  const auto in = weight.dim(1);
  const auto out = weight.dim(0);
  if (grad_out.rank() != 2 || grad_out.dim(0) != batch || grad_out.dim(1) != out)
    throw DimensionError("affine_backward: grad_out " + shape_string(grad_out.shape()) +
                         " does not match forward output [" + std::to_string(batch) + "x" +
                         std::to_string(out) + "]");

  ParamGrads g;
  ConstMapMat gy(grad_out.data(), batch, out);
  ConstMapMat x(input.data(), batch, in);
  g.weight = Tensor({out, in});
  MapMat gw(g.weight.data(), out, in);
  gw.noalias() = gy.transpose() * x;

  g.bias = Tensor({out});
  for (std::size_t o = 0; o < out; ++o) {
    double s = 0.0;
    for (std::size_t b = 0; b < batch; ++b) s += gy(b, o);
    g.bias[o] = static_cast<float>(s);
  }
  if (need_input_grad) {
    g.input = Tensor(CacheAccess::input_shape(c));
    ConstMapMat w(weight.data(), out, in);
    MapMat gx(g.input.data(), batch, in);
    gx.noalias() = gy * w;
  }
  CacheAccess::first(c) = {};
  CacheAccess::second(c) = {};
  return g;
}

// ---------------------------------------------------------------------------
// Conv2d (valid, stride 1) via im2col

namespace {

// col is [C*K*K x OH*OW] for one image.
void im2col(const float* img, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
            float* col) {
  const auto oh = h - k + 1, ow = w - k + 1;
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx) {
        const auto row = (c * k + ky) * k + kx;
        float* dst = col + row * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
          const float* src = img + (c * h + y + ky) * w + kx;
          std::copy(src, src + ow, dst + y * ow);
        }
      }
}

void col2im_add(const float* col, std::size_t channels, std::size_t h, std::size_t w,
                std::size_t k, float* img) {
  const auto oh = h - k + 1, ow = w - k + 1;
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx) {
        const auto row = (c * k + ky) * k + kx;
        const float* src = col + row * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
          float* dst = img + (c * h + y + ky) * w + kx;
          for (std::size_t x = 0; x < ow; ++x) dst[x] += src[y * ow + x];
        }
      }
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      LayerCache* cache) {
  if (input.rank() != 4 || kernels.rank() != 4 || bias.rank() != 1)
    throw DimensionError("conv2d_forward: expected input [B,C,H,W], kernels [F,C,K,K], bias [F]; got " +
                         shape_string(input.shape()) + ", " + shape_string(kernels.shape()) + ", " +
                         shape_string(bias.shape()));
  const auto batch = input.dim(0), channels = input.dim(1), h = input.dim(2), w = input.dim(3);
  const auto filters = kernels.dim(0), k = kernels.dim(2);
  if (kernels.dim(1) != channels || kernels.dim(3) != k || bias.dim(0) != filters)
    throw DimensionError("conv2d_forward: input " + shape_string(input.shape()) +
                         " does not match kernels " + shape_string(kernels.shape()));
  if (k > h || k > w)
    throw DimensionError("conv2d_forward: kernel " + shape_string(kernels.shape()) +
                         " larger than input " + shape_string(input.shape()));
  const auto oh = h - k + 1, ow = w - k + 1;
  const auto patch = channels * k * k;

  Tensor result({batch, filters, oh, ow});
  std::vector<float> col(patch * oh * ow);
  ConstMapMat wm(kernels.data(), filters, patch);
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(input.data() + b * channels * h * w, channels, h, w, k, col.data());
    ConstMapMat cm(col.data(), patch, oh * ow);
    MapMat y(result.data() + b * filters * oh * ow, filters, oh * ow);
    y.noalias() = wm * cm;
    for (std::size_t f = 0; f < filters; ++f) y.row(f).array() += bias[f];
  }
  CacheAccess::store(cache, LayerCache::Kind::conv2d, input, kernels);
  return result;
}

ParamGrads conv2d_backward(const Tensor& grad_out, LayerCache& cache, bool need_input_grad) {
  auto& c = CacheAccess::take(cache, LayerCache::Kind::conv2d, "conv2d_backward");
  const Tensor& input = CacheAccess::first(c);
  const Tensor& kernels = CacheAccess::second(c);
  const auto batch = input.dim(0), channels = input.dim(1), h = input.dim(2), w = input.dim(3);
  const auto filters = kernels.dim(0), k = kernels.dim(2);
  const auto oh = h - k + 1, ow = w - k + 1;
  const auto patch = channels * k * k;
  if (grad_out.shape() != Shape{batch, filters, oh, ow})
    throw DimensionError("conv2d_backward: grad_out " + shape_string(grad_out.shape()) +
                         " does not match forward output " +
                         shape_string({batch, filters, oh, ow}));

  ParamGrads g;
  g.weight = Tensor(kernels.shape());
  g.bias = Tensor({filters});
  if (need_input_grad) g.input = Tensor(input.shape());

  std::vector<double> bias_acc(filters, 0.0);
  std::vector<float> col(patch * oh * ow);
  std::vector<float> gcol(patch * oh * ow);
  ConstMapMat wm(kernels.data(), filters, patch);
  MapMat gw(g.weight.data(), filters, patch);
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(input.data() + b * channels * h * w, channels, h, w, k, col.data());
    ConstMapMat cm(col.data(), patch, oh * ow);
    ConstMapMat gy(grad_out.data() + b * filters * oh * ow, filters, oh * ow);
    gw.noalias() += gy * cm.transpose();
    for (std::size_t f = 0; f < filters; ++f)
      for (std::size_t p = 0; p < oh * ow; ++p) bias_acc[f] += gy(f, p);
    if (need_input_grad) {
      MapMat gc(gcol.data(), patch, oh * ow);
      gc.noalias() = wm.transpose() * gy;
      col2im_add(gcol.data(), channels, h, w, k, g.input.data() + b * channels * h * w);
    }
  }
  for (std::size_t f = 0; f < filters; ++f) g.bias[f] = static_cast<float>(bias_acc[f]);
  CacheAccess::first(c) = {};
  CacheAccess::second(c) = {};
  return g;
}

// ---------------------------------------------------------------------------
// Max pooling

Tensor maxpool2x2_forward(const Tensor& input, LayerCache* cache) {
  if (input.rank() != 4)
    throw DimensionError("maxpool2x2_forward: expected [B,C,H,W], got " + shape_string(input.shape()));
  const auto batch = input.dim(0), channels = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h % 2 || w % 2)
    throw DimensionError("maxpool2x2_forward: spatial extents must be even, got " +
                         shape_string(input.shape()));
  const auto oh = h / 2, ow = w / 2;
  Tensor result({batch, channels, oh, ow});
  std::vector<std::uint32_t> argmax(result.size());
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < batch * channels; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x, ++o) {
        std::size_t best = base + (2 * y) * w + 2 * x;
        const std::size_t window[4] = {best, best + 1, best + w, best + w + 1};
        for (auto idx : window)
          if (input[idx] > input[best]) best = idx;
        result[o] = input[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
  }
  CacheAccess::store_argmax(cache, input.shape(), std::move(argmax));
  return result;
}

Tensor maxpool2x2_backward(const Tensor& grad_out, LayerCache& cache) {
  auto& c = CacheAccess::take(cache, LayerCache::Kind::maxpool, "maxpool2x2_backward");
  const auto& argmax = CacheAccess::argmax(c);
  if (grad_out.size() != argmax.size())
    throw DimensionError("maxpool2x2_backward: grad_out " + shape_string(grad_out.shape()) +
                         " does not match pooled output of " +
                         shape_string(CacheAccess::input_shape(c)));
  Tensor grad(CacheAccess::input_shape(c));
  for (std::size_t i = 0; i < argmax.size(); ++i) grad[argmax[i]] += grad_out[i];
  return grad;
}

// ---------------------------------------------------------------------------
// Leaky ReLU

Tensor leaky_relu_forward(const Tensor& x, float slope, LayerCache* cache) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] >= 0.0f ? x[i] : slope * x[i];
  CacheAccess::store(cache, LayerCache::Kind::leaky_relu, x, {}, slope);
  return y;
}

Tensor leaky_relu_backward(const Tensor& grad_out, LayerCache& cache) {
  auto& c = CacheAccess::take(cache, LayerCache::Kind::leaky_relu, "leaky_relu_backward");
  const Tensor& x = CacheAccess::first(c);
  require_same_shape(grad_out.shape(), x.shape(), "leaky_relu_backward");
  const float slope = CacheAccess::slope(c);
  Tensor g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] >= 0.0f ? grad_out[i] : slope * grad_out[i];
  CacheAccess::first(c) = {};
  return g;
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const std::int32_t> labels) {
  if (logits.rank() != 2)
    throw DimensionError("softmax_cross_entropy: logits must be [B x C], got " +
                         shape_string(logits.shape()));
  const auto batch = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != batch)
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for logits " + shape_string(logits.shape()));
  LossResult r;
  r.grad_logits = Tensor(logits.shape());
  std::vector<double> p(classes);
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const auto y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw InputError("softmax_cross_entropy: label " + std::to_string(y) + " at row " +
                       std::to_string(b) + " outside [0, " + std::to_string(classes) + ")");
    const float* z = logits.data() + b * classes;
    double m = z[0];
    for (std::size_t j = 1; j < classes; ++j) m = std::max(m, static_cast<double>(z[j]));
    double s = 0.0;
    for (std::size_t j = 0; j < classes; ++j) {
      p[j] = std::exp(static_cast<double>(z[j]) - m);
      s += p[j];
    }
    total += std::log(s) - (static_cast<double>(z[y]) - m);
    float* g = r.grad_logits.data() + b * classes;
    for (std::size_t j = 0; j < classes; ++j) {
      const double onehot = static_cast<std::size_t>(y) == j ? 1.0 : 0.0;
      g[j] = static_cast<float>((p[j] / s - onehot) / static_cast<double>(batch));
    }
  }
  r.loss = total / static_cast<double>(batch);
  return r;
}

}  // namespace growprune
