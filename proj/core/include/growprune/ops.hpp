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

#pragma once

// Layer primitives with hand-written backward passes.
//
// Every forward takes an optional LayerCache. A forward call fills it; the
// matching backward consumes it exactly once. Using an empty or already
// consumed cache throws StateError.

#include <cstdint>
#include <span>
#include <vector>

#include "growprune/tensor.hpp"

namespace growprune {

class LayerCache {
 public:
  enum class Kind : std::uint8_t { empty, affine, conv2d, maxpool, leaky_relu };

  Kind kind() const noexcept { return kind_; }
  bool ready() const noexcept { return ready_; }

 private:
  friend class CacheAccess;

  Kind kind_ = Kind::empty;
  bool ready_ = false;
  Tensor first_;   // forward input
  Tensor second_;  // weight / kernels
  std::vector<std::uint32_t> argmax_;
  Shape input_shape_;
  float slope_ = 0.0f;
};

struct ParamGrads {
  Tensor input;   // empty when the caller did not ask for it
  Tensor weight;
  Tensor bias;
};

/// out[b,o] = sum_i input[b,i] * weight[o,i] + bias[o].
/// Input of rank > 2 is read as [B x prod(rest)].
Tensor affine_forward(const Tensor& input, const Tensor& weight, const Tensor& bias,
                      LayerCache* cache = nullptr);
ParamGrads affine_backward(const Tensor& grad_out, LayerCache& cache,
                           bool need_input_grad = true);

/// Valid-padding, stride-1 cross-correlation.
/// input [B,C,H,W], kernels [F,C,K,K], bias [F] -> [B,F,H-K+1,W-K+1].
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      LayerCache* cache = nullptr);
ParamGrads conv2d_backward(const Tensor& grad_out, LayerCache& cache,
                           bool need_input_grad = true);

/// Non-overlapping 2x2 max over the last two axes of [B,C,H,W]; H and W even.
/// Ties resolve to the first element in row-major window order.
Tensor maxpool2x2_forward(const Tensor& input, LayerCache* cache = nullptr);
Tensor maxpool2x2_backward(const Tensor& grad_out, LayerCache& cache);

inline constexpr float kLeakySlope = 0.01f;

/// max(slope * x, x) elementwise. Derivative is 1 for x >= 0, slope below.
Tensor leaky_relu_forward(const Tensor& x, float slope = kLeakySlope,
                          LayerCache* cache = nullptr);
Tensor leaky_relu_backward(const Tensor& grad_out, LayerCache& cache);

struct LossResult {
  double loss = 0.0;
  Tensor grad_logits;
};

/// Mean negative log-likelihood of the true class under softmax(logits).
/// grad_logits = (softmax - onehot) / B.
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const std::int32_t> labels);

}  // namespace growprune
