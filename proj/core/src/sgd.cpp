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

#include "growprune/sgd.hpp"

#include <cmath>
#include <string>

#include "growprune/errors.hpp"

namespace growprune {

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0f) || !std::isfinite(learning_rate))
    throw InputError("sgd: learning_rate must be positive, got " + std::to_string(learning_rate));
  if (!(momentum >= 0.0f && momentum < 1.0f))
    throw InputError("sgd: momentum must lie in [0, 1), got " + std::to_string(momentum));
  if (!(weight_decay >= 0.0f))
    throw InputError("sgd: weight_decay must be nonnegative, got " + std::to_string(weight_decay));
}

void sgd_step(Tensor& weight, const Tensor& grad, const SgdConfig& cfg, Tensor* velocity) {
  require_same_shape(weight.shape(), grad.shape(), "sgd_step");
  const float eta = cfg.learning_rate;
  const float decay = cfg.weight_decay;
  if (cfg.momentum == 0.0f || velocity == nullptr) {
    for (std::size_t i = 0; i < weight.size(); ++i)
      weight[i] -= eta * (grad[i] + decay * weight[i]);
    return;
  }
  if (velocity->empty()) *velocity = Tensor(weight.shape());
  require_same_shape(weight.shape(), velocity->shape(), "sgd_step velocity");
  Tensor& v = *velocity;
  const float mu = cfg.momentum;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    v[i] = mu * v[i] + (grad[i] + decay * weight[i]);
    weight[i] -= eta * v[i];
  }
}

}  // namespace growprune
