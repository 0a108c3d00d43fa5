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

#include "growprune/orchestrator.hpp"

#include <algorithm>
#include <numeric>

#include "growprune/errors.hpp"

namespace growprune {

std::string to_string(MethodKind m) {
  switch (m) {
    case MethodKind::grow_prune:
      return "grow_prune";
    case MethodKind::tfs:
      return "tfs";
    case MethodKind::nft:
      return "nft";
  }
  return "?";
}

MethodKind parse_method(const std::string& text) {
  if (text == "grow_prune" || text == "growprune" || text == "ours") return MethodKind::grow_prune;
  if (text == "tfs") return MethodKind::tfs;
  if (text == "nft") return MethodKind::nft;
  throw InputError("unknown method '" + text + "' (expected grow_prune, tfs or nft)");
}

std::size_t UpdateSchedule::update_count() const {
  if (partition_count <= initial_parts || parts_per_update == 0) return 0;
  return (partition_count - initial_parts) / parts_per_update;
}

void UpdateSchedule::validate() const {
  if (partition_count == 0) throw InputError("partition_count must be positive");
  if (initial_parts == 0 || initial_parts > partition_count)
    throw InputError("initial_parts must lie in [1, partition_count]");
  if (baseline_epochs == 0 || initial_epochs == 0)
    throw InputError("baseline_epochs and initial_epochs must be positive");
}

double EpochLog::normalized_epochs() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.data_fraction;
  return s;
}

std::uint64_t exposure_hash(std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (auto i : indices)
    for (int b = 0; b < 8; ++b) {
      h ^= (static_cast<std::uint64_t>(i) >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  return h;
}

// ---------------------------------------------------------------------------
// Training phases

EpochLog train_with_growth(NetworkModel& model, TrainingState& state, const Dataset& data,
                           std::size_t epochs, const GrowthConfig& growth, const Dataset* val,
                           double data_fraction, const std::string& phase, bool grow) {
  if (epochs == 0) throw InputError("train_with_growth: epochs must be >= 1");
  if (grow) growth.validate();
  EpochLog log;
  std::size_t pending_grown = 0;
  for (std::size_t e = 1; e <= epochs; ++e) {
    EpochLogEntry entry;
    entry.phase = phase;
    entry.epoch = e;
    entry.data_fraction = data_fraction;
    entry.grown = pending_grown;
    entry.learning_rate = state.sgd.learning_rate;
    entry.loss = train_epoch(model, state, data);
    if (val && !val->empty()) {
      entry.val_accuracy = accuracy(model, *val);
      state.schedule.observe(entry.val_accuracy, state.sgd.learning_rate);
    }
    entry.active_weights = model.active_weight_count();
    log.entries.push_back(entry);

    pending_grown = 0;
    if (grow && e % growth.growth_interval == 0 && e < epochs) {
      GrowthConfig g = growth;
      g.learning_rate = state.sgd.learning_rate;
      const auto stats = accumulate_gradients(model, data, state.batch_size);
      pending_grown = grow_connections(model, stats, g).grown();
      mask_optimizer_state(model, state.optimizer);
      ++log.growth_passes;
    }
  }
  return log;
}

void begin_job(TrainingState& state, const MethodConfig& cfg) {
  state.sgd = cfg.sgd;
  state.batch_size = cfg.batch_size;
  state.schedule = PlateauSchedule{};
  state.schedule.patience = cfg.lr_patience;
  state.schedule.factor = cfg.lr_factor;
}

namespace {

void append(EpochLog& dst, const EpochLog& src) {
  dst.entries.insert(dst.entries.end(), src.entries.begin(), src.entries.end());
  dst.growth_passes += src.growth_passes;
}

void finish_row(UpdateResult& r, const NetworkModel& model, const UpdateData& data) {
  const auto sp = sparsity_report(model);
  r.row.active_parameters = sp.active_parameters();
  r.row.total_parameters = sp.total_parameters();
  r.row.val_error = evaluate(model, *data.val);
  r.row.test_error = data.test && !data.test->empty() ? evaluate(model, *data.test) : -1.0;
  r.row.training_epochs = r.log.normalized_epochs();
  r.row.prune_epochs = r.prune.retrain_epochs;
  r.row.normalized_epochs = r.row.training_epochs + static_cast<double>(r.prune.retrain_epochs);
  r.row.growth_passes = r.log.growth_passes;
  r.row.prune_iterations = r.prune.iterations.size();
  r.row.recoverable = check_recoverable(model).recoverable;
  r.row.train_samples = data.all_data->size();
}

void require_data(const UpdateData& data) {
  if (!data.all_data || data.all_data->empty()) throw InputError("update: no training data");
  if (!data.val || data.val->empty()) throw InputError("update: no validation data");
}

bool fully_dense(const NetworkModel& m) { return m.active_weight_count() == m.weight_count(); }

}  // namespace

UpdateResult train_initial(NetworkModel& model, TrainingState& state, const UpdateData& data,
                           const UpdateSchedule& schedule, const MethodConfig& cfg) {
  require_data(data);
  UpdateResult r;
  r.row.method = MethodKind::grow_prune;
  begin_job(state, cfg);
  r.log = train_with_growth(model, state, *data.all_data, schedule.initial_epochs, cfg.growth,
                            data.val, 1.0, "initial");
  r.prune = recoverable_prune(model, state, *data.all_data, *data.val, cfg.prune);
  finish_row(r, model, data);
  return r;
}

UpdateResult incremental_update(NetworkModel& model, TrainingState& state, const UpdateData& data,
                                const UpdateSchedule& schedule, const MethodConfig& cfg) {
  require_data(data);
  const auto rec = check_recoverable(model);
  if (!rec.recoverable) {
    std::string msg = "incremental_update: input model is not recoverable:";
    for (std::size_t i = 0; i < rec.violations.size() && i < 10; ++i)
      msg += "\n  " + rec.violations[i].describe();
    if (rec.violations.size() > 10)
      msg += "\n  ... " + std::to_string(rec.violations.size() - 10) + " more";
    throw StateError(msg);
  }

  UpdateResult r;
  r.row.method = MethodKind::grow_prune;
  const bool has_new = data.new_data && !data.new_data->empty();
  r.row.merged_only = !has_new;

  begin_job(state, cfg);
  if (has_new && schedule.epochs_new_data > 0) {
    const double fraction =
        static_cast<double>(data.new_data->size()) / static_cast<double>(data.all_data->size());
    append(r.log, train_with_growth(model, state, *data.new_data, schedule.epochs_new_data,
                                    cfg.growth, data.val, fraction, "new_data"));
  }
  if (schedule.epochs_all_data > 0)
    append(r.log, train_with_growth(model, state, *data.all_data, schedule.epochs_all_data,
                                    cfg.growth, data.val, 1.0, "all_data"));
  r.prune = recoverable_prune(model, state, *data.all_data, *data.val, cfg.prune);
  finish_row(r, model, data);
  return r;
}

UpdateResult run_tfs(NetworkModel& model_out, const UpdateData& data, const UpdateSchedule& schedule,
                     const MethodConfig& cfg, std::uint64_t train_seed) {
  require_data(data);
  UpdateResult r;
  r.row.method = MethodKind::tfs;
  model_out = build_model(cfg.architecture, InitSpec::dense(), cfg.seed);
  TrainingState state = make_training_state(cfg.sgd, cfg.batch_size, train_seed);
  begin_job(state, cfg);
  r.log = train_with_growth(model_out, state, *data.all_data, schedule.baseline_epochs, cfg.growth,
                            data.val, 1.0, "baseline", false);
  r.prune = recoverable_prune(model_out, state, *data.all_data, *data.val, cfg.prune);
  finish_row(r, model_out, data);
  return r;
}

UpdateResult run_nft(NetworkModel& persistent, TrainingState& state, NetworkModel& pruned_out,
                     const UpdateData& data, const UpdateSchedule& schedule, const MethodConfig& cfg) {
  require_data(data);
  if (!fully_dense(persistent))
    throw StateError("run_nft: persistent model must be dense, has " +
                     std::to_string(persistent.active_weight_count()) + " of " +
                     std::to_string(persistent.weight_count()) + " connections active");
  UpdateResult r;
  r.row.method = MethodKind::nft;
  begin_job(state, cfg);
  r.log = train_with_growth(persistent, state, *data.all_data, schedule.baseline_epochs, cfg.growth,
                            data.val, 1.0, "baseline", false);
  pruned_out = persistent;
  TrainingState copy = state;
  r.prune = recoverable_prune(pruned_out, copy, *data.all_data, *data.val, cfg.prune);
  finish_row(r, pruned_out, data);
  return r;
}

// ---------------------------------------------------------------------------
// Experiment data

std::vector<std::size_t> ExperimentData::indices_upto(std::size_t count) const {
  std::vector<std::size_t> ids(count);
  std::iota(ids.begin(), ids.end(), 0);
  return plan.indices(ids);
}

Dataset ExperimentData::parts_upto(std::size_t count) const {
  const auto idx = indices_upto(count);
  return pool.subset(idx);
}

Dataset ExperimentData::parts_range(std::size_t first, std::size_t count) const {
  std::vector<std::size_t> ids(count);
  std::iota(ids.begin(), ids.end(), first);
  return pool.subset(plan.indices(ids));
}

ExperimentData prepare_experiment(const MnistSplit& mnist, const SplitConfig& split,
                                  const UpdateSchedule& schedule) {
  schedule.validate();
  Dataset train = mnist.train;
  Dataset test = mnist.test;
  if (!split.classes.empty()) {
    train = filter_classes(train, split.classes);
    test = filter_classes(test, split.classes);
  }

  // Seeded draw of the subset; the first val_size samples become validation.
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(split.seed, 0x5eed));
  rng.shuffle(std::span(order));
  const std::size_t n = split.subset_size == 0 ? train.size() : std::min(split.subset_size, train.size());
  const std::size_t val_n = split.val_size ? split.val_size : n / 12;
  if (val_n == 0 || val_n >= n) throw InputError("prepare_experiment: bad validation size");

  ExperimentData d;
  d.val = train.subset(std::span(order.data(), val_n));
  d.pool = train.subset(std::span(order.data() + val_n, n - val_n));
  if (split.augment_shift) d.pool = augment_shift(d.pool, split.augment_shift, derive_seed(split.seed, 0xa06));
  if (split.test_size && split.test_size < test.size()) {
    std::vector<std::size_t> t(test.size());
    std::iota(t.begin(), t.end(), 0);
    Rng trng(derive_seed(split.seed, 0x7e57));
    trng.shuffle(std::span(t));
    t.resize(split.test_size);
    std::sort(t.begin(), t.end());
    test = test.subset(t);
  }
  d.test = std::move(test);
  d.plan = partition(d.pool, schedule.partition_count, schedule.shuffle_seed);
  return d;
}

// ---------------------------------------------------------------------------
// Experiment runner

RunMetrics run_experiment(const ExperimentData& data, const UpdateSchedule& schedule,
                          const std::vector<MethodKind>& methods, const MethodConfig& cfg,
                          const ExperimentHooks& hooks) {
  schedule.validate();
  RunMetrics metrics;
  const std::size_t rounds = 1 + schedule.update_count();
  auto parts_after = [&](std::size_t round) {
    return schedule.initial_parts + round * schedule.parts_per_update;
  };
  auto log = [&](const std::string& s) {
    if (hooks.on_log) hooks.on_log(s);
  };
  auto emit = [&](UpdateResult& r, std::size_t round, const NetworkModel& deployed) {
    const auto seen = parts_after(round);
    r.row.update = round + 1;
    r.row.data_fraction = static_cast<double>(data.indices_upto(seen).size()) /
                          static_cast<double>(data.pool.size());
    r.row.exposure_hash = exposure_hash(data.indices_upto(seen));
    metrics.rows.push_back(r.row);
    if (hooks.on_row) hooks.on_row(r.row);
    if (hooks.on_model) hooks.on_model(r.row.method, r.row.update, deployed);
    log(to_string(r.row.method) + " update " + std::to_string(r.row.update) + ": test error " +
        std::to_string(r.row.test_error) + ", params " + std::to_string(r.row.active_parameters) +
        ", epochs " + std::to_string(r.row.normalized_epochs));
  };

  for (const auto method : methods) {
    NetworkModel model;
    TrainingState state;
    for (std::size_t round = 0; round < rounds; ++round) {
      const auto seen = parts_after(round);
      const Dataset all = data.parts_upto(seen);
      const Dataset fresh = round == 0 ? Dataset{} : data.parts_range(parts_after(round - 1), schedule.parts_per_update);
      UpdateData ud{&fresh, &all, &data.val, &data.test};
      const auto train_seed = derive_seed(cfg.seed, round + 1);

      switch (method) {
        case MethodKind::grow_prune: {
          UpdateResult r;
          if (round == 0) {
            model = build_model(cfg.architecture, InitSpec::sparse(cfg.initial_density), cfg.seed);
            state = make_training_state(cfg.sgd, cfg.batch_size, train_seed);
            r = train_initial(model, state, ud, schedule, cfg);
          } else {
            r = incremental_update(model, state, ud, schedule, cfg);
          }
          emit(r, round, model);
          break;
        }
        case MethodKind::tfs: {
          NetworkModel fresh_model;
          auto r = run_tfs(fresh_model, ud, schedule, cfg, train_seed);
          emit(r, round, fresh_model);
          break;
        }
        case MethodKind::nft: {
          if (round == 0) {
            model = build_model(cfg.architecture, InitSpec::dense(), cfg.seed);
            state = make_training_state(cfg.sgd, cfg.batch_size, train_seed);
          }
          NetworkModel pruned;
          auto r = run_nft(model, state, pruned, ud, schedule, cfg);
          emit(r, round, pruned);
          break;
        }
      }
    }
  }
  return metrics;
}

}  // namespace growprune
