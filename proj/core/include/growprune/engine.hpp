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

// Gradient-driven connection growth and magnitude-driven pruning.
//
// Growth: with parameters frozen, average the raw weight gradient over one
// pass of the data, then activate every dangling connection whose averaged
// gradient magnitude is at or above the alpha-th percentile of the layer's
// gradient magnitudes. New weights start at +/- eta * averaged gradient.
//
// Pruning: remove active connections whose magnitude is at or below the
// beta-th percentile of the layer's active magnitudes, then retrain. The
// recoverable variant never orphans a neuron and rolls back any iteration
// that cannot regain the reference validation accuracy.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "growprune/data.hpp"
#include "growprune/network.hpp"
#include "growprune/training.hpp"

namespace growprune {

/// Nearest-rank percentile: sort ascending, rank = max(1, ceil(p/100 * n)),
/// return the rank-th element (1-based). p = 0 gives the minimum.
/// InputError on empty input or p outside [0, 100).
double percentile_threshold(std::span<const double> values, double p);
double percentile_threshold(std::span<const float> values, double p);

/// Number of elements at or below the nearest-rank threshold that a
/// percentile-p selection over n values keeps: max(1, ceil(p/100 * n)).
std::size_t percentile_rank(std::size_t n, double p);

struct GradientStats {
  /// Per layer, the signed raw weight gradient averaged over all batches
  /// (accumulated in double).
  std::vector<std::vector<double>> mean_gradient;
  std::size_t batch_count = 0;

  double magnitude(std::size_t layer, std::size_t pos) const;
};

/// One frozen-parameter pass over `data`. The model is not modified.
GradientStats accumulate_gradients(const NetworkModel& model, const Dataset& data,
                                   std::size_t batch_size);

enum class GrowthScope : std::uint8_t { per_layer = 0, global = 1 };
enum class GrowthInit : std::uint8_t { literal = 0, descent = 1 };

struct GrowthConfig {
  double alpha = 40.0;  // percentile, [0, 100)
  GrowthScope scope = GrowthScope::per_layer;
  /// literal: w = +eta * grad. descent: w = -eta * grad.
  GrowthInit init = GrowthInit::literal;
  float learning_rate = 0.05f;      // eta used for initialization
  std::size_t growth_interval = 3;  // epochs between growth events

  void validate() const;
};

struct PruneConfig {
  double beta = 4.0;                 // percentile, (0, 100)
  std::size_t recovery_epochs = 10;  // R
  double accuracy_slack = 0.0;       // acceptance bar is A0 - slack
  std::size_t max_iterations = 500;
  bool no_orphan = true;

  void validate() const;

  /// Settings for the post-processing pass: lowered bar, no-orphan rule off.
  PruneConfig nonrecoverable(double slack) const {
    PruneConfig c = *this;
    c.accuracy_slack = slack;
    c.no_orphan = false;
    return c;
  }
};

struct LayerPhaseStats {
  std::size_t active_before = 0;
  std::size_t active_after = 0;
  std::size_t grown = 0;
  std::size_t pruned = 0;
  std::size_t orphan_skips = 0;  // candidates kept to avoid orphaning a neuron
  double threshold = 0.0;
  bool single_connection = false;  // layer had <= 1 active connection; left alone
};

struct PhaseReport {
  std::vector<LayerPhaseStats> layers;
  double accuracy_before = -1.0;
  double accuracy_after = -1.0;
  std::size_t retrain_epochs = 0;
  bool rolled_back = false;
  bool warning = false;

  std::size_t grown() const;
  std::size_t pruned() const;
};

/// Activates dangling connections per the alpha rule. Active connections are
/// untouched. DimensionError when stats do not match the model.
PhaseReport grow_connections(NetworkModel& model, const GradientStats& stats,
                             const GrowthConfig& cfg);

/// One magnitude-pruning step on every layer. At most rank(beta) connections
/// per layer are removed, ascending by (|w|, flat index); with no_orphan set,
/// candidates whose removal would leave a unit without input or output are
/// skipped.
PhaseReport prune_step(NetworkModel& model, const PruneConfig& cfg);

struct Violation {
  enum class Side : std::uint8_t { no_input, no_output };
  std::size_t layer = 0;  // weight layer whose units are counted
  Side side = Side::no_input;
  std::size_t unit = 0;

  std::string describe() const;
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct RecoverabilityReport {
  bool recoverable = true;
  std::vector<Violation> violations;
};

/// Every out-unit of every layer has an active input and every in-unit of
/// every layer has an active output.
RecoverabilityReport check_recoverable(const NetworkModel& model);

struct PruneOutcome {
  std::vector<PhaseReport> iterations;
  double reference_accuracy = 0.0;
  double final_accuracy = 0.0;
  std::size_t retrain_epochs = 0;  // epochs over the training data, rolled-back ones included
  std::size_t orphaned_units = 0;  // non-recoverable only
};

/// Iterative prune/retrain. Stops at the first iteration that cannot reach
/// the reference accuracy within R epochs (that iteration is rolled back),
/// when nothing more can be pruned, or at max_iterations. The result keeps
/// val accuracy >= reference and passes check_recoverable.
PruneOutcome recoverable_prune(NetworkModel& model, TrainingState& state, const Dataset& train,
                               const Dataset& val, const PruneConfig& cfg);

/// Same loop with the acceptance bar lowered by cfg.accuracy_slack and the
/// no-orphan rule as configured (off via PruneConfig::nonrecoverable). With
/// the rule off, units left without outputs lose their inputs too.
PruneOutcome nonrecoverable_prune(NetworkModel& model, TrainingState& state, const Dataset& train,
                                  const Dataset& val, const PruneConfig& cfg);

/// Deactivates the inputs of any unit that has no active output, repeated
/// until stable. Returns the number of such units.
std::size_t remove_dead_ends(NetworkModel& model);

}  // namespace growprune
