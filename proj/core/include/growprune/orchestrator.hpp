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

// Incremental-learning experiment driver.
//
// Three ways of absorbing newly arrived training data:
//   grow_prune  grow and train on the new data first, then on everything,
//               then recoverable pruning; the pruned model is both the
//               deployed model and the starting point of the next update.
//   tfs         train a fresh dense model on everything, then prune.
//   nft         keep a persistent dense model, fine-tune it on everything,
//               prune a copy for deployment.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "growprune/data.hpp"
#include "growprune/engine.hpp"
#include "growprune/network.hpp"
#include "growprune/training.hpp"

namespace growprune {

enum class MethodKind : std::uint8_t { grow_prune = 0, tfs = 1, nft = 2 };

std::string to_string(MethodKind m);
MethodKind parse_method(const std::string& text);

struct UpdateSchedule {
  std::size_t partition_count = 5;  // k
  std::size_t initial_parts = 1;
  std::size_t parts_per_update = 1;
  std::size_t epochs_new_data = 10;
  std::size_t epochs_all_data = 15;
  std::size_t baseline_epochs = 40;
  std::size_t initial_epochs = 40;  // grow-prune training of the very first model
  std::uint64_t shuffle_seed = 1;

  /// Number of updates after the initial model.
  std::size_t update_count() const;
  void validate() const;
};

struct EpochLogEntry {
  std::string phase;
  std::size_t epoch = 0;
  double data_fraction = 1.0;  // share of the update's full training data
  double loss = 0.0;
  double val_accuracy = -1.0;
  float learning_rate = 0.0f;
  std::size_t grown = 0;  // connections grown before this epoch
  std::size_t active_weights = 0;
};

struct EpochLog {
  std::vector<EpochLogEntry> entries;
  std::size_t growth_passes = 0;  // frozen-parameter gradient passes

  /// sum over entries of data_fraction.
  double normalized_epochs() const;
};

/// Interleaved training and growth. After every `growth_interval` completed
/// epochs (and only if more epochs follow) the gradient is averaged over
/// `data` with parameters frozen and grow_connections runs with eta equal to
/// the current learning rate. With a validation set, the learning rate
/// follows state.schedule.
EpochLog train_with_growth(NetworkModel& model, TrainingState& state, const Dataset& data,
                           std::size_t epochs, const GrowthConfig& growth,
                           const Dataset* val = nullptr, double data_fraction = 1.0,
                           const std::string& phase = "train", bool grow = true);

struct RunMetricsRow {
  MethodKind method = MethodKind::grow_prune;
  std::size_t update = 0;  // 1 = initial model
  double data_fraction = 0.0;
  std::size_t train_samples = 0;
  std::uint64_t exposure_hash = 0;
  double val_error = 0.0;
  double test_error = 0.0;
  std::size_t active_parameters = 0;
  std::size_t total_parameters = 0;
  double normalized_epochs = 0.0;
  double training_epochs = 0.0;  // normalized epochs before pruning
  std::size_t prune_epochs = 0;
  std::size_t growth_passes = 0;
  std::size_t prune_iterations = 0;
  bool recoverable = true;
  bool merged_only = false;  // update had no new data
};

struct RunMetrics {
  std::vector<RunMetricsRow> rows;
};

/// Order-independent fingerprint of a set of sample indices.
std::uint64_t exposure_hash(std::vector<std::size_t> indices);

struct UpdateData {
  const Dataset* new_data = nullptr;  // may be empty
  const Dataset* all_data = nullptr;
  const Dataset* val = nullptr;
  const Dataset* test = nullptr;  // optional
};

struct MethodConfig {
  ArchitectureSpec architecture = ArchitectureSpec::lenet300100();
  double initial_density = 0.3;
  SgdConfig sgd{0.05f, 0.9f, 5e-4f};
  std::size_t batch_size = 64;
  std::size_t lr_patience = 5;
  float lr_factor = 0.5f;
  GrowthConfig growth;
  PruneConfig prune;
  std::uint64_t seed = 1;
};

struct UpdateResult {
  RunMetricsRow row;
  EpochLog log;
  PruneOutcome prune;
};

/// Resets the learning rate and plateau tracker for a new training job;
/// momentum buffers and the batch-order generator carry over.
void begin_job(TrainingState& state, const MethodConfig& cfg);

/// Grow-prune training of a first model from scratch: sparse init, growth
/// training for schedule.initial_epochs, recoverable pruning.
UpdateResult train_initial(NetworkModel& model, TrainingState& state, const UpdateData& data,
                           const UpdateSchedule& schedule, const MethodConfig& cfg);

/// New-data-first update: growth training on the new data for
/// epochs_new_data, then on all data for epochs_all_data, then recoverable
/// pruning on all data. StateError when the input model is not recoverable.
UpdateResult incremental_update(NetworkModel& model, TrainingState& state, const UpdateData& data,
                                const UpdateSchedule& schedule, const MethodConfig& cfg);

/// Fresh dense model (cfg.seed), baseline_epochs of plain training on all
/// data, recoverable pruning.
UpdateResult run_tfs(NetworkModel& model_out, const UpdateData& data, const UpdateSchedule& schedule,
                     const MethodConfig& cfg, std::uint64_t train_seed);

/// Fine-tunes the persistent dense model for baseline_epochs on all data and
/// prunes a copy into `pruned_out`. StateError if the persistent model is
/// not fully dense.
UpdateResult run_nft(NetworkModel& persistent, TrainingState& state, NetworkModel& pruned_out,
                     const UpdateData& data, const UpdateSchedule& schedule, const MethodConfig& cfg);

/// Train pool / validation / test split plus the partition plan over the pool.
struct ExperimentData {
  Dataset pool;
  Dataset val;
  Dataset test;
  PartitionPlan plan;

  /// Union of the first `count` parts.
  Dataset parts_upto(std::size_t count) const;
  Dataset parts_range(std::size_t first, std::size_t count) const;
  std::vector<std::size_t> indices_upto(std::size_t count) const;
};

struct SplitConfig {
  std::size_t subset_size = 10000;  // 0 = all training images
  std::size_t val_size = 0;         // 0 = subset_size / 12, the 5K-of-60K ratio
  std::size_t test_size = 0;        // 0 = whole test set
  std::vector<std::int32_t> classes;  // empty = all
  std::size_t augment_shift = 0;
  std::uint64_t seed = 1;
};

ExperimentData prepare_experiment(const MnistSplit& mnist, const SplitConfig& split,
                                  const UpdateSchedule& schedule);

struct ExperimentHooks {
  std::function<void(const RunMetricsRow&)> on_row;
  /// Deployable model of a method after an update.
  std::function<void(MethodKind, std::size_t, const NetworkModel&)> on_model;
  std::function<void(const std::string&)> on_log;
};

/// Runs every requested method over all updates with shared partitions and
/// seeds. Rows are ordered method-major.
RunMetrics run_experiment(const ExperimentData& data, const UpdateSchedule& schedule,
                          const std::vector<MethodKind>& methods, const MethodConfig& cfg,
                          const ExperimentHooks& hooks = {});

}  // namespace growprune
