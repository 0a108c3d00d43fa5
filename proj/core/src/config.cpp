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

#include "growprune/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "growprune/errors.hpp"

namespace growprune {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto t = trim(text);
  const auto* first = t.data();
  const auto* last = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (t.empty() || ec != std::errc{} || ptr != last)
    throw ConfigError(key, "expected a number, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + text + "'");
}

template <typename T>
std::string format_number(T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + items[i];
  return s;
}

struct Field {
  ConfigKey key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define GP_SIZE(NAME, HELP, MEMBER)                                                           \
  Field {                                                                                     \
    {NAME, HELP}, [](const ExperimentConfig& c) { return format_number(c.MEMBER); },         \
        [](ExperimentConfig& c, const std::string& v) {                                       \
          c.MEMBER = parse_number<std::remove_cvref_t<decltype(c.MEMBER)>>(NAME, v);          \
        }                                                                                     \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      {{"data_dir", "directory with the four MNIST IDX files"},
       [](const ExperimentConfig& c) { return c.data_dir; },
       [](ExperimentConfig& c, const std::string& v) { c.data_dir = trim(v); }},
      {{"output_dir", "where checkpoints, metrics and density maps go"},
       [](const ExperimentConfig& c) { return c.output_dir; },
       [](ExperimentConfig& c, const std::string& v) { c.output_dir = trim(v); }},
      {{"methods", "comma list of grow_prune, tfs, nft"},
       [](const ExperimentConfig& c) {
         std::vector<std::string> s;
         for (auto m : c.methods) s.push_back(to_string(m));
         return join(s);
       },
       [](ExperimentConfig& c, const std::string& v) {
         c.methods.clear();
         try {
           for (const auto& m : split_list(v)) c.methods.push_back(parse_method(m));
         } catch (const InputError& e) {
           throw ConfigError("methods", e.what());
         }
       }},
      {{"architecture", "lenet300100, lenet5 or mlp:784,300,100,10"},
       [](const ExperimentConfig& c) { return c.method.architecture.to_string(); },
       [](ExperimentConfig& c, const std::string& v) {
         try {
           c.method.architecture = ArchitectureSpec::parse(trim(v));
         } catch (const InputError& e) {
           throw ConfigError("architecture", e.what());
         }
       }},
      GP_SIZE("seed", "model and training seed", method.seed),
      GP_SIZE("split_seed", "seed of the subset / validation draw", split.seed),
      GP_SIZE("subset_size", "training images drawn from the train file, 0 = all", split.subset_size),
      GP_SIZE("val_size", "held-out validation images, 0 = subset_size / 12", split.val_size),
      GP_SIZE("test_size", "test images used, 0 = all", split.test_size),
      {{"classes", "comma list of digit classes to keep, empty = all"},
       [](const ExperimentConfig& c) {
         std::vector<std::string> s;
         for (auto k : c.split.classes) s.push_back(std::to_string(k));
         return join(s);
       },
       [](ExperimentConfig& c, const std::string& v) {
         c.split.classes.clear();
         for (const auto& k : split_list(v)) c.split.classes.push_back(parse_number<std::int32_t>("classes", k));
       }},
      GP_SIZE("augment_shift", "random translation of training images, pixels", split.augment_shift),
      GP_SIZE("partition_count", "number of data parts k", schedule.partition_count),
      GP_SIZE("initial_parts", "parts available to the initial model", schedule.initial_parts),
      GP_SIZE("parts_per_update", "parts arriving with each update", schedule.parts_per_update),
      GP_SIZE("epochs_new_data", "grow-prune epochs on the new parts", schedule.epochs_new_data),
      GP_SIZE("epochs_all_data", "grow-prune epochs on all parts", schedule.epochs_all_data),
      GP_SIZE("baseline_epochs", "tfs / nft training epochs", schedule.baseline_epochs),
      GP_SIZE("initial_epochs", "grow-prune epochs of the initial model", schedule.initial_epochs),
      GP_SIZE("shuffle_seed", "seed of the partition shuffle", schedule.shuffle_seed),
      GP_SIZE("learning_rate", "SGD step size", method.sgd.learning_rate),
      GP_SIZE("momentum", "SGD momentum", method.sgd.momentum),
      GP_SIZE("weight_decay", "L2 coefficient", method.sgd.weight_decay),
      GP_SIZE("batch_size", "minibatch size", method.batch_size),
      GP_SIZE("lr_patience", "plateau epochs before the rate is cut", method.lr_patience),
      GP_SIZE("lr_factor", "multiplier applied on a plateau", method.lr_factor),
      GP_SIZE("initial_density", "mask density of the sparse initial model", method.initial_density),
      GP_SIZE("alpha", "growth percentile", method.growth.alpha),
      {{"growth_scope", "per_layer or global"},
       [](const ExperimentConfig& c) {
         return std::string(c.method.growth.scope == GrowthScope::global ? "global" : "per_layer");
       },
       [](ExperimentConfig& c, const std::string& v) {
         const auto t = trim(v);
         if (t == "per_layer") c.method.growth.scope = GrowthScope::per_layer;
         else if (t == "global") c.method.growth.scope = GrowthScope::global;
         else throw ConfigError("growth_scope", "expected per_layer or global, got '" + v + "'");
       }},
      {{"growth_init", "literal (+eta*g) or descent (-eta*g)"},
       [](const ExperimentConfig& c) {
         return std::string(c.method.growth.init == GrowthInit::descent ? "descent" : "literal");
       },
       [](ExperimentConfig& c, const std::string& v) {
         const auto t = trim(v);
         if (t == "literal") c.method.growth.init = GrowthInit::literal;
         else if (t == "descent") c.method.growth.init = GrowthInit::descent;
         else throw ConfigError("growth_init", "expected literal or descent, got '" + v + "'");
       }},
      GP_SIZE("growth_interval", "epochs between growth events", method.growth.growth_interval),
      GP_SIZE("beta", "pruning percentile", method.prune.beta),
      GP_SIZE("recovery_epochs", "retraining epochs allowed per prune iteration", method.prune.recovery_epochs),
      GP_SIZE("accuracy_slack", "accuracy drop tolerated by recoverable pruning", method.prune.accuracy_slack),
      GP_SIZE("max_prune_iterations", "upper bound on prune iterations", method.prune.max_iterations),
      GP_SIZE("compress_slack", "accuracy drop tolerated by compress", compress_slack),
      {{"deterministic", "fixed summation order (always on in this build)"},
       [](const ExperimentConfig& c) { return std::string(c.deterministic ? "true" : "false"); },
       [](ExperimentConfig& c, const std::string& v) { c.deterministic = parse_bool("deterministic", v); }},
      {{"density_maps", "write first-layer PGM density maps in compare"},
       [](const ExperimentConfig& c) { return std::string(c.density_maps ? "true" : "false"); },
       [](ExperimentConfig& c, const std::string& v) { c.density_maps = parse_bool("density_maps", v); }},
  };
  return f;
}

#undef GP_SIZE

const Field& find_field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key.name == key) return f;
  throw ConfigError(key, "unknown configuration key");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("methods", "at least one method is required");
  const auto& s = schedule;
  if (s.partition_count == 0) throw ConfigError("partition_count", "must be positive");
  if (s.initial_parts == 0 || s.initial_parts > s.partition_count)
    throw ConfigError("initial_parts", "must lie in [1, partition_count]");
  if (s.baseline_epochs == 0) throw ConfigError("baseline_epochs", "must be positive");
  if (s.initial_epochs == 0) throw ConfigError("initial_epochs", "must be positive");
  const auto& m = method;
  if (!(m.sgd.learning_rate > 0)) throw ConfigError("learning_rate", "must be positive");
  if (!(m.sgd.momentum >= 0 && m.sgd.momentum < 1)) throw ConfigError("momentum", "must lie in [0, 1)");
  if (!(m.sgd.weight_decay >= 0)) throw ConfigError("weight_decay", "must be non-negative");
  if (m.batch_size == 0) throw ConfigError("batch_size", "must be positive");
  if (!(m.lr_factor > 0 && m.lr_factor <= 1)) throw ConfigError("lr_factor", "must lie in (0, 1]");
  if (!(m.initial_density > 0 && m.initial_density <= 1))
    throw ConfigError("initial_density", "must lie in (0, 1]");
  if (!(m.growth.alpha >= 0 && m.growth.alpha < 100)) throw ConfigError("alpha", "must lie in [0, 100)");
  if (m.growth.growth_interval == 0) throw ConfigError("growth_interval", "must be positive");
  if (!(m.prune.beta > 0 && m.prune.beta < 100)) throw ConfigError("beta", "must lie in (0, 100)");
  if (!(m.prune.accuracy_slack >= 0 && m.prune.accuracy_slack < 1))
    throw ConfigError("accuracy_slack", "must lie in [0, 1)");
  if (!(compress_slack >= 0 && compress_slack < 1)) throw ConfigError("compress_slack", "must lie in [0, 1)");
  for (auto k : split.classes)
    if (k < 0 || k > 9) throw ConfigError("classes", "digit classes lie in 0..9");
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  find_field(key).set(cfg, value);
}

std::string get_config_value(const ExperimentConfig& cfg, const std::string& key) {
  return find_field(key).get(cfg);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key.name + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace growprune
