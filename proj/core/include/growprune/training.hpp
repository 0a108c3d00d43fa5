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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "growprune/data.hpp"
#include "growprune/network.hpp"
#include "growprune/rng.hpp"
#include "growprune/sgd.hpp"

namespace growprune {

/// Halves the learning rate when validation accuracy has not improved for
/// `patience` consecutive epochs.
struct PlateauSchedule {
  std::size_t patience = 5;
  float factor = 0.5f;
  float min_learning_rate = 1e-4f;
  double best_accuracy = -1.0;
  std::size_t stale_epochs = 0;

  /// Returns true when the rate was decayed.
  bool observe(double val_accuracy, float& learning_rate);
  void reset() {
    best_accuracy = -1.0;
    stale_epochs = 0;
  }

  friend bool operator==(const PlateauSchedule&, const PlateauSchedule&) = default;
};

/// Everything besides the model that a resumed run needs to continue
/// bit-exactly.
struct TrainingState {
  SgdConfig sgd;
  OptimizerState optimizer;
  Rng rng{0};
  PlateauSchedule schedule;
  std::size_t batch_size = 64;

  friend bool operator==(const TrainingState&, const TrainingState&) = default;
};

TrainingState make_training_state(const SgdConfig& sgd, std::size_t batch_size, std::uint64_t seed);

/// One shuffled pass of masked SGD. Returns the mean minibatch loss.
double train_epoch(NetworkModel& model, TrainingState& state, const Dataset& data);

/// Top-1 predictions, evaluated in fixed-size batches.
std::vector<std::int32_t> predict(const NetworkModel& model, const Dataset& data,
                                  std::size_t batch_size = 500);

/// Top-1 misclassification fraction in [0, 1]. InputError on empty data.
double evaluate(const NetworkModel& model, const Dataset& data);
inline double accuracy(const NetworkModel& model, const Dataset& data) {
  return 1.0 - evaluate(model, data);
}

}  // namespace growprune
