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

#include "growprune/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "growprune/errors.hpp"

namespace growprune {

// ---------------------------------------------------------------------------
// Percentiles

std::size_t percentile_rank(std::size_t n, double p) {
  const auto r = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  return std::clamp<std::size_t>(r, 1, n);
}

namespace {

template <typename T>
double nearest_rank(std::span<const T> values, double p) {
  if (values.empty()) throw InputError("percentile_threshold: empty input");
  if (!(p >= 0.0 && p < 100.0))
    throw InputError("percentile_threshold: percentile must lie in [0, 100), got " + std::to_string(p));
  std::vector<T> v(values.begin(), values.end());
  const auto k = percentile_rank(v.size(), p) - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return static_cast<double>(v[k]);
}

}  // namespace

double percentile_threshold(std::span<const double> values, double p) { return nearest_rank(values, p); }
double percentile_threshold(std::span<const float> values, double p) { return nearest_rank(values, p); }

// ---------------------------------------------------------------------------
// Configs and reports

void GrowthConfig::validate() const {
  if (!(alpha >= 0.0 && alpha < 100.0))
    throw InputError("growth alpha must lie in [0, 100), got " + std::to_string(alpha));
  if (!(learning_rate > 0.0f)) throw InputError("growth learning_rate must be positive");
  if (growth_interval == 0) throw InputError("growth_interval must be positive");
}

void PruneConfig::validate() const {
  if (!(beta > 0.0 && beta < 100.0))
    throw InputError("prune beta must lie in (0, 100), got " + std::to_string(beta));
  if (recovery_epochs == 0) throw InputError("recovery_epochs must be positive");
  if (!(accuracy_slack >= 0.0)) throw InputError("accuracy_slack must be nonnegative");
}

std::size_t PhaseReport::grown() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.grown;
  return n;
}

std::size_t PhaseReport::pruned() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.pruned;
  return n;
}

double GradientStats::magnitude(std::size_t layer, std::size_t pos) const {
  return std::abs(mean_gradient.at(layer).at(pos));
}

// ---------------------------------------------------------------------------
// Gradient accumulation and growth

GradientStats accumulate_gradients(const NetworkModel& model, const Dataset& data,
                                   std::size_t batch_size) {
  if (data.empty()) throw InputError("accumulate_gradients: empty dataset");
  if (batch_size == 0) throw InputError("accumulate_gradients: batch_size must be positive");
  GradientStats stats;
  stats.mean_gradient.resize(model.layers.size());
  for (std::size_t l = 0; l < model.layers.size(); ++l)
    stats.mean_gradient[l].assign(model.layers[l].weight.size(), 0.0);

  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const auto end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    auto trace = model_forward(model, data.gather(idx));
    const auto loss = softmax_cross_entropy(trace.logits, data.gather_labels(idx));
    const auto grads = model_backward(model, trace, loss.grad_logits);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      auto& acc = stats.mean_gradient[l];
      const auto& g = grads.layers[l].weight;
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
    }
    ++stats.batch_count;
  }
  const double inv = 1.0 / static_cast<double>(stats.batch_count);
  for (auto& layer : stats.mean_gradient)
    for (auto& v : layer) v *= inv;
  return stats;
}

PhaseReport grow_connections(NetworkModel& model, const GradientStats& stats,
                             const GrowthConfig& cfg) {
  cfg.validate();
  if (stats.mean_gradient.size() != model.layers.size())
    throw DimensionError("grow_connections: stats cover " + std::to_string(stats.mean_gradient.size()) +
                         " layers, model has " + std::to_string(model.layers.size()));
  for (std::size_t l = 0; l < model.layers.size(); ++l)
    if (stats.mean_gradient[l].size() != model.layers[l].weight.size())
      throw DimensionError("grow_connections: stats for layer " + std::to_string(l) + " hold " +
                           std::to_string(stats.mean_gradient[l].size()) + " values, weight " +
                           shape_string(model.layers[l].weight.shape()));

  auto magnitudes = [&](std::size_t l) {
    std::vector<double> m(stats.mean_gradient[l].size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::abs(stats.mean_gradient[l][i]);
    return m;
  };

  std::vector<double> thresholds(model.layers.size());
  if (cfg.scope == GrowthScope::global) {
    std::vector<double> all;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      auto m = magnitudes(l);
      all.insert(all.end(), m.begin(), m.end());
    }
    std::fill(thresholds.begin(), thresholds.end(), percentile_threshold(std::span<const double>(all), cfg.alpha));
  } else {
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      const auto m = magnitudes(l);
      thresholds[l] = percentile_threshold(std::span<const double>(m), cfg.alpha);
    }
  }

  const double sign = cfg.init == GrowthInit::literal ? 1.0 : -1.0;
  PhaseReport report;
  report.layers.resize(model.layers.size());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& layer = model.layers[l];
    auto& s = report.layers[l];
    s.active_before = layer.mask.popcount();
    s.threshold = thresholds[l];
    const auto& g = stats.mean_gradient[l];
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (layer.mask.test(i) || std::abs(g[i]) < thresholds[l]) continue;
      layer.mask.set(i, true);
      layer.weight[i] = static_cast<float>(sign * static_cast<double>(cfg.learning_rate) * g[i]);
      ++s.grown;
    }
    s.active_after = layer.mask.popcount();
  }
  model.touch();
  return report;
}

// ---------------------------------------------------------------------------
// Connectivity

namespace {

struct UnitCounts {
  std::vector<std::size_t> out;  // active inputs per out-unit
  std::vector<std::size_t> in;   // active outputs per in-unit
};

UnitCounts count_units(const MaskedLayer& layer) {
  UnitCounts c;
  c.out.assign(layer.out_units(), 0);
  c.in.assign(layer.in_units(), 0);
  for (std::size_t i = 0; i < layer.weight.size(); ++i)
    if (layer.mask.test(i)) {
      ++c.out[layer.out_unit(i)];
      ++c.in[layer.in_unit(i)];
    }
  return c;
}

}  // namespace

std::string Violation::describe() const {
  if (side == Side::no_input)
    return "layer " + std::to_string(layer) + " neuron " + std::to_string(unit) +
           " has no active input connection";
  return "layer " + std::to_string(layer) + " input unit " + std::to_string(unit) +
         " has no active output connection";
}

RecoverabilityReport check_recoverable(const NetworkModel& model) {
  RecoverabilityReport r;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto c = count_units(model.layers[l]);
    for (std::size_t u = 0; u < c.out.size(); ++u)
      if (c.out[u] == 0) r.violations.push_back({l, Violation::Side::no_input, u});
    for (std::size_t u = 0; u < c.in.size(); ++u)
      if (c.in[u] == 0) r.violations.push_back({l, Violation::Side::no_output, u});
  }
  r.recoverable = r.violations.empty();
  return r;
}

std::size_t remove_dead_ends(NetworkModel& model) {
  std::size_t removed = 0;
  for (std::size_t l = model.layers.size(); l-- > 1;) {
    const auto& next = model.layers[l];
    auto& prev = model.layers[l - 1];
    const auto next_counts = count_units(next);
    const auto units = prev.out_units();
    // in-units of `next` map onto out-units of `prev` in contiguous groups
    // (one feature per neuron, or H*W features per filter after flattening).
    const auto group = next.in_units() / units;
    std::vector<std::size_t> outgoing(units, 0);
    for (std::size_t u = 0; u < next_counts.in.size(); ++u) outgoing[u / group] += next_counts.in[u];

    const auto per_out = prev.weight.size() / units;
    for (std::size_t f = 0; f < units; ++f) {
      if (outgoing[f] != 0) continue;
      bool had_input = false;
      for (std::size_t j = 0; j < per_out; ++j) {
        const auto pos = f * per_out + j;
        if (prev.mask.test(pos)) {
          had_input = true;
          prev.mask.set(pos, false);
          prev.weight[pos] = 0.0f;
        }
      }
      removed += had_input;
    }
  }
  if (removed) model.touch();
  return removed;
}

// ---------------------------------------------------------------------------
// Pruning

PhaseReport prune_step(NetworkModel& model, const PruneConfig& cfg) {
  cfg.validate();
  PhaseReport report;
  report.layers.resize(model.layers.size());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& layer = model.layers[l];
    auto& s = report.layers[l];
    s.active_before = s.active_after = layer.mask.popcount();
    if (s.active_before <= 1) {
      s.single_connection = true;
      report.warning = true;
      continue;
    }

    std::vector<std::size_t> active;
    std::vector<float> magnitude;
    active.reserve(s.active_before);
    magnitude.reserve(s.active_before);
    for (std::size_t i = 0; i < layer.weight.size(); ++i)
      if (layer.mask.test(i)) {
        active.push_back(i);
        magnitude.push_back(std::abs(layer.weight[i]));
      }
    s.threshold = percentile_threshold(std::span<const float>(magnitude), cfg.beta);
    const auto quota = percentile_rank(active.size(), cfg.beta);

    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < active.size(); ++j)
      if (magnitude[j] <= s.threshold) order.push_back(j);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (magnitude[a] != magnitude[b]) return magnitude[a] < magnitude[b];
      return active[a] < active[b];
    });

    auto counts = count_units(layer);
    for (auto j : order) {
      if (s.pruned == quota) break;
      const auto pos = active[j];
      const auto o = layer.out_unit(pos);
      const auto in = layer.in_unit(pos);
      if (cfg.no_orphan && (counts.out[o] <= 1 || counts.in[in] <= 1)) {
        ++s.orphan_skips;
        continue;
      }
      layer.mask.set(pos, false);
      layer.weight[pos] = 0.0f;
      --counts.out[o];
      --counts.in[in];
      ++s.pruned;
    }
    s.active_after = s.active_before - s.pruned;
  }
  model.touch();
  return report;
}

namespace {

constexpr double kAccuracyEps = 1e-12;

PruneOutcome prune_loop(NetworkModel& model, TrainingState& state, const Dataset& train,
                        const Dataset& val, const PruneConfig& cfg) {
  cfg.validate();
  if (val.empty()) throw InputError("pruning: validation set is empty");
  if (train.empty()) throw InputError("pruning: training set is empty");

  PruneOutcome out;
  out.reference_accuracy = accuracy(model, val);
  const double bar = out.reference_accuracy - cfg.accuracy_slack - kAccuracyEps;

  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    const NetworkModel saved_model = model;
    const TrainingState saved_state = state;

    PhaseReport rep = prune_step(model, cfg);
    if (rep.pruned() == 0) {
      model = saved_model;
      break;
    }
    if (!cfg.no_orphan) remove_dead_ends(model);
    mask_optimizer_state(model, state.optimizer);

    double acc = accuracy(model, val);
    rep.accuracy_before = acc;
    while (acc < bar && rep.retrain_epochs < cfg.recovery_epochs) {
      train_epoch(model, state, train);
      ++rep.retrain_epochs;
      acc = accuracy(model, val);
    }
    rep.accuracy_after = acc;
    out.retrain_epochs += rep.retrain_epochs;
    if (acc < bar) {
      model = saved_model;
      state = saved_state;
      rep.rolled_back = true;
      out.iterations.push_back(rep);
      break;
    }
    out.iterations.push_back(rep);
  }
  model.touch();
  out.final_accuracy = accuracy(model, val);
  return out;
}

}  // namespace

PruneOutcome recoverable_prune(NetworkModel& model, TrainingState& state, const Dataset& train,
                               const Dataset& val, const PruneConfig& cfg) {
  PruneConfig c = cfg;
  c.no_orphan = true;
  return prune_loop(model, state, train, val, c);
}

PruneOutcome nonrecoverable_prune(NetworkModel& model, TrainingState& state, const Dataset& train,
                                  const Dataset& val, const PruneConfig& cfg) {
  auto out = prune_loop(model, state, train, val, cfg);
  out.orphaned_units = check_recoverable(model).violations.size();
  return out;
}

}  // namespace growprune
