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

#include "growprune/tensor.hpp"

namespace growprune {

struct SgdConfig {
  float learning_rate = 0.05f;
  float momentum = 0.9f;      // classical momentum, [0, 1)
  float weight_decay = 0.0f;  // L2 coefficient folded into the gradient

  /// Throws InputError on eta <= 0, momentum outside [0,1), decay < 0.
  void validate() const;

  friend bool operator==(const SgdConfig&, const SgdConfig&) = default;
};

/// w <- w - eta * v,  v <- momentum * v + (grad + weight_decay * w).
/// With momentum == 0 or no velocity buffer this is plain SGD. An empty
/// velocity tensor is allocated to zeros on first use.
void sgd_step(Tensor& weight, const Tensor& grad, const SgdConfig& cfg, Tensor* velocity = nullptr);

}  // namespace growprune
