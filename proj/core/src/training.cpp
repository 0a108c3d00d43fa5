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

#include "growprune/training.hpp"

#include <algorithm>
#include <numeric>

#include "growprune/errors.hpp"

namespace growprune {

bool PlateauSchedule::observe(double val_accuracy, float& learning_rate) {
  if (val_accuracy > best_accuracy) {
    best_accuracy = val_accuracy;
    stale_epochs = 0;
    return false;
  }
  if (++stale_epochs < patience) return false;
  stale_epochs = 0;
  const float next = std::max(min_learning_rate, learning_rate * factor);
  const bool changed = next != learning_rate;
  learning_rate = next;
  return changed;
}

TrainingState make_training_state(const SgdConfig& sgd, std::size_t batch_size, std::uint64_t seed) {
  sgd.validate();
  if (batch_size == 0) throw InputError("batch_size must be positive");
  TrainingState s;
  s.sgd = sgd;
  s.rng = Rng(seed);
  s.batch_size = batch_size;
  return s;
}

double train_epoch(NetworkModel& model, TrainingState& state, const Dataset& data) {
  if (data.empty()) throw InputError("train_epoch: empty dataset");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  state.rng.shuffle(std::span(order));

  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += state.batch_size) {
    const auto end = std::min(order.size(), start + state.batch_size);
    std::span<const std::size_t> idx(order.data() + start, end - start);
    const Tensor x = data.gather(idx);
    const auto y = data.gather_labels(idx);
    auto trace = model_forward(model, x);
    auto loss = softmax_cross_entropy(trace.logits, y);
    auto grads = model_backward(model, trace, loss.grad_logits);
    apply_update(model, grads, state.sgd, state.optimizer);
    loss_sum += loss.loss;
    ++batches;
  }
  return loss_sum / static_cast<double>(batches);
}

std::vector<std::int32_t> predict(const NetworkModel& model, const Dataset& data,
                                  std::size_t batch_size) {
  std::vector<std::int32_t> out;
  out.reserve(data.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const auto end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor logits = model_logits(model, data.gather(idx));
    const auto classes = logits.dim(1);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const float* row = logits.data() + b * classes;
      out.push_back(static_cast<std::int32_t>(std::max_element(row, row + classes) - row));
    }
  }
  return out;
}

double evaluate(const NetworkModel& model, const Dataset& data) {
  if (data.empty()) throw InputError("evaluate: empty dataset");
  const auto pred = predict(model, data);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != data.labels[i];
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

}  // namespace growprune
