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

// Masked sparse layers and the composed model.
//
// Every weight tensor has a congruent binary mask. The forward pass uses
// weight * mask; the backward pass returns the raw (unmasked) weight gradient
// so that dangling positions still report how much the loss would change if
// they were re-activated; updates are masked.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "growprune/ops.hpp"
#include "growprune/sgd.hpp"
#include "growprune/tensor.hpp"

namespace growprune {

class Mask {
 public:
  Mask() = default;
  explicit Mask(Shape shape, bool active = true);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return bits_.size(); }
  bool test(std::size_t i) const noexcept { return bits_[i] != 0; }
  void set(std::size_t i, bool active) noexcept { bits_[i] = active ? 1 : 0; }
  void fill(bool active);
  std::size_t popcount() const noexcept;
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  friend bool operator==(const Mask& a, const Mask& b) = default;

 private:
  Shape shape_;
  std::vector<std::uint8_t> bits_;
};

enum class LayerKind : std::uint8_t { affine = 0, conv2d = 1 };
enum class Activation : std::uint8_t { none = 0, leaky_relu = 1 };
enum class Pooling : std::uint8_t { none = 0, max2x2 = 1 };

/// One weight layer. Invariant: mask bit 0 implies weight 0. Biases are
/// never masked.
///
/// Connectivity is described in "units": the out-unit of a weight position is
/// the neuron (affine row) or filter (conv) it feeds; the in-unit is the input
/// feature (affine column) or input channel (conv) it reads.
struct MaskedLayer {
  LayerKind kind = LayerKind::affine;
  Tensor weight;
  Mask mask;
  Tensor bias;
  Activation activation = Activation::leaky_relu;
  Pooling pool = Pooling::none;

  std::size_t out_units() const { return weight.dim(0); }
  std::size_t in_units() const { return weight.dim(1); }
  std::size_t out_unit(std::size_t pos) const { return pos / (weight.size() / weight.dim(0)); }
  std::size_t in_unit(std::size_t pos) const;

  Tensor effective_weight() const;
  std::size_t active_count() const { return mask.popcount(); }
};

enum class Architecture : std::uint8_t { lenet300100 = 0, lenet5 = 1, mlp = 2 };

struct ArchitectureSpec {
  Architecture kind = Architecture::lenet300100;
  std::vector<std::size_t> widths;  // mlp only: input, hidden..., classes

  static ArchitectureSpec lenet300100() { return {Architecture::lenet300100, {}}; }
  static ArchitectureSpec lenet5() { return {Architecture::lenet5, {}}; }
  static ArchitectureSpec mlp(std::vector<std::size_t> widths) {
    return {Architecture::mlp, std::move(widths)};
  }

  /// "lenet300100", "lenet5" or "mlp:784,300,100,10".
  std::string to_string() const;
  static ArchitectureSpec parse(const std::string& text);

  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

struct InitSpec {
  enum class Kind : std::uint8_t { dense, sparse };
  Kind kind = Kind::dense;
  double density = 1.0;

  static InitSpec dense() { return {Kind::dense, 1.0}; }
  static InitSpec sparse(double density) { return {Kind::sparse, density}; }
};

class NetworkModel {
 public:
  ArchitectureSpec architecture;
  std::vector<MaskedLayer> layers;
  Shape input_shape;              // per sample, [C,H,W]
  std::size_t input_padding = 0;  // zero border added before the first layer
  std::size_t class_count = 0;
  std::uint64_t seed = 0;
  float leaky_slope = kLeakySlope;

  /// Bumped by every mutating operation; forward traces remember it.
  std::uint64_t revision() const noexcept { return revision_; }
  void touch() noexcept { ++revision_; }

  std::size_t weight_count() const;
  std::size_t active_weight_count() const;
  std::size_t bias_count() const;

  /// True iff every layer satisfies mask 0 => weight 0 and shapes compose.
  bool consistent() const;

  friend bool operator==(const NetworkModel& a, const NetworkModel& b);

 private:
  std::uint64_t revision_ = 0;
};

/// Fan-in-scaled uniform weights U(-1/sqrt(n), 1/sqrt(n)), n = active fan-in,
/// zero biases. Sparse init draws a uniform random mask of the given density
/// per layer while guaranteeing every in-unit and out-unit keeps at least one
/// connection; InputError when the density cannot satisfy that.
NetworkModel build_model(const ArchitectureSpec& arch, const InitSpec& init, std::uint64_t seed);

struct LayerTrace {
  LayerCache linear;
  LayerCache activation;
  LayerCache pool;
};

struct ForwardTrace {
  Tensor logits;
  std::vector<LayerTrace> layers;
  std::uint64_t revision = 0;
  bool consumed = false;
};

struct LayerGrads {
  Tensor weight;  // raw, dangling positions included
  Tensor bias;
};

struct ModelGradients {
  std::vector<LayerGrads> layers;
  Tensor input;  // only when requested
};

/// Per-layer momentum buffers paired with a model.
struct OptimizerState {
  std::vector<Tensor> weight_velocity;
  std::vector<Tensor> bias_velocity;

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

/// batch is [B, C, H, W] (or any shape whose per-sample size matches).
ForwardTrace model_forward(const NetworkModel& model, const Tensor& batch);

/// Forward without caches.
Tensor model_logits(const NetworkModel& model, const Tensor& batch);

/// Consumes the trace. StateError if it is consumed or the model changed
/// since the forward pass.
ModelGradients model_backward(const NetworkModel& model, ForwardTrace& trace,
                              const Tensor& grad_logits, bool need_input_grad = false);

/// Masked SGD step on every layer. Re-establishes mask 0 => weight 0 and
/// clears momentum at masked positions.
void apply_update(NetworkModel& model, const ModelGradients& grads, const SgdConfig& cfg,
                  OptimizerState& state);

/// Zeroes momentum at positions whose mask bit is 0.
void mask_optimizer_state(const NetworkModel& model, OptimizerState& state);

struct LayerSparsity {
  std::size_t active = 0;
  std::size_t total = 0;
  std::size_t biases = 0;
};

struct SparsityReport {
  std::vector<LayerSparsity> layers;
  std::size_t active_weights = 0;
  std::size_t total_weights = 0;
  std::size_t biases = 0;

  std::size_t active_parameters() const { return active_weights + biases; }
  std::size_t total_parameters() const { return total_weights + biases; }
};

SparsityReport sparsity_report(const NetworkModel& model);

}  // namespace growprune
