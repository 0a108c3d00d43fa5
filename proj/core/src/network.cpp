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

#include "growprune/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "growprune/errors.hpp"
#include "growprune/rng.hpp"

namespace growprune {

// ---------------------------------------------------------------------------
// Mask

Mask::Mask(Shape shape, bool active) : shape_(std::move(shape)) {
  bits_.assign(shape_size(shape_), active ? 1 : 0);
}

void Mask::fill(bool active) { std::fill(bits_.begin(), bits_.end(), active ? 1 : 0); }

std::size_t Mask::popcount() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

// ---------------------------------------------------------------------------
// MaskedLayer

std::size_t MaskedLayer::in_unit(std::size_t pos) const {
  if (kind == LayerKind::affine) return pos % weight.dim(1);
  const auto kk = weight.dim(2) * weight.dim(3);
  return (pos / kk) % weight.dim(1);
}

Tensor MaskedLayer::effective_weight() const {
  Tensor w = weight;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!mask.test(i)) w[i] = 0.0f;
  return w;
}

// ---------------------------------------------------------------------------
// Architecture descriptors

std::string ArchitectureSpec::to_string() const {
  switch (kind) {
    case Architecture::lenet300100:
      return "lenet300100";
    case Architecture::lenet5:
      return "lenet5";
    case Architecture::mlp: {
      std::string s = "mlp:";
      for (std::size_t i = 0; i < widths.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(widths[i]);
      }
      return s;
    }
  }
  return "?";
}

ArchitectureSpec ArchitectureSpec::parse(const std::string& text) {
  if (text == "lenet300100" || text == "lenet-300-100") return lenet300100();
  if (text == "lenet5" || text == "lenet-5") return lenet5();
  if (text.rfind("mlp:", 0) == 0) {
    std::vector<std::size_t> widths;
    std::stringstream ss(text.substr(4));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        const auto w = std::stoul(item);
        if (w == 0) throw InputError("zero width");
        widths.push_back(w);
      } catch (const std::exception&) {
        throw InputError("architecture: bad layer width '" + item + "' in '" + text + "'");
      }
    }
    if (widths.size() < 2) throw InputError("architecture: mlp needs at least input and output widths");
    return mlp(std::move(widths));
  }
  throw InputError("architecture: unknown architecture '" + text + "'");
}

// ---------------------------------------------------------------------------
// NetworkModel

std::size_t NetworkModel::weight_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size();
  return n;
}

std::size_t NetworkModel::active_weight_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.mask.popcount();
  return n;
}

std::size_t NetworkModel::bias_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.bias.size();
  return n;
}

bool NetworkModel::consistent() const {
  for (const auto& l : layers) {
    if (l.mask.shape() != l.weight.shape()) return false;
    if (l.bias.rank() != 1 || l.bias.dim(0) != l.weight.dim(0)) return false;
    for (std::size_t i = 0; i < l.weight.size(); ++i)
      if (!l.mask.test(i) && l.weight[i] != 0.0f) return false;
    if (!l.weight.all_finite() || !l.bias.all_finite()) return false;
  }
  return true;
}

bool operator==(const NetworkModel& a, const NetworkModel& b) {
  if (a.architecture != b.architecture || a.input_shape != b.input_shape ||
      a.input_padding != b.input_padding || a.class_count != b.class_count || a.seed != b.seed ||
      a.leaky_slope != b.leaky_slope || a.layers.size() != b.layers.size())
    return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& x = a.layers[i];
    const auto& y = b.layers[i];
    if (x.kind != y.kind || x.activation != y.activation || x.pool != y.pool ||
        !(x.weight == y.weight) || !(x.mask == y.mask) || !(x.bias == y.bias))
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Construction

namespace {

MaskedLayer make_affine(std::size_t in, std::size_t out, Activation act) {
  MaskedLayer l;
  l.kind = LayerKind::affine;
  l.weight = Tensor({out, in});
  l.mask = Mask({out, in}, true);
  l.bias = Tensor({out});
  l.activation = act;
  return l;
}

MaskedLayer make_conv(std::size_t channels, std::size_t filters, std::size_t k, Activation act,
                      Pooling pool) {
  MaskedLayer l;
  l.kind = LayerKind::conv2d;
  l.weight = Tensor({filters, channels, k, k});
  l.mask = Mask({filters, channels, k, k}, true);
  l.bias = Tensor({filters});
  l.activation = act;
  l.pool = pool;
  return l;
}

// Random mask with `target` active positions such that every out-unit and
// every in-unit has at least one.
void sparse_mask(MaskedLayer& layer, double density, Rng& rng, std::size_t layer_index) {
  const std::size_t total = layer.weight.size();
  const std::size_t outs = layer.out_units();
  const std::size_t ins = layer.in_units();
  const std::size_t cover = std::max(outs, ins);
  const auto target = static_cast<std::size_t>(std::llround(density * static_cast<double>(total)));
  if (target < cover)
    throw InputError("build_model: density " + std::to_string(density) + " gives " +
                     std::to_string(target) + " connections in layer " +
                     std::to_string(layer_index) + ", but " + std::to_string(cover) +
                     " are needed so that no neuron is orphaned");

  layer.mask.fill(false);
  std::vector<std::size_t> out_perm(outs), in_perm(ins);
  std::iota(out_perm.begin(), out_perm.end(), 0);
  std::iota(in_perm.begin(), in_perm.end(), 0);
  rng.shuffle(std::span(out_perm));
  rng.shuffle(std::span(in_perm));

  const std::size_t per_out = total / outs;
  const std::size_t spatial = layer.kind == LayerKind::conv2d ? layer.weight.dim(2) * layer.weight.dim(3) : 1;
  for (std::size_t t = 0; t < cover; ++t) {
    const auto o = t < outs ? out_perm[t] : out_perm[rng.below(outs)];
    const auto i = t < ins ? in_perm[t] : in_perm[rng.below(ins)];
    const auto pos = o * per_out + i * spatial + rng.below(spatial);
    layer.mask.set(pos, true);
  }

  std::vector<std::size_t> free;
  free.reserve(total);
  for (std::size_t p = 0; p < total; ++p)
    if (!layer.mask.test(p)) free.push_back(p);
  rng.shuffle(std::span(free));
  const std::size_t have = layer.mask.popcount();
  for (std::size_t j = 0; have + j < target && j < free.size(); ++j) layer.mask.set(free[j], true);
}

void init_weights(MaskedLayer& layer, Rng& rng) {
  const std::size_t per_out = layer.weight.size() / layer.out_units();
  for (std::size_t o = 0; o < layer.out_units(); ++o) {
    std::size_t fan_in = 0;
    for (std::size_t j = 0; j < per_out; ++j) fan_in += layer.mask.test(o * per_out + j);
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
    for (std::size_t j = 0; j < per_out; ++j) {
      const auto pos = o * per_out + j;
      const double w = rng.uniform(-bound, bound);
      layer.weight[pos] = layer.mask.test(pos) ? static_cast<float>(w) : 0.0f;
    }
  }
  layer.bias.fill(0.0f);
}

}  // namespace

NetworkModel build_model(const ArchitectureSpec& arch, const InitSpec& init, std::uint64_t seed) {
  if (init.kind == InitSpec::Kind::sparse && !(init.density > 0.0 && init.density <= 1.0))
    throw InputError("build_model: sparse density must lie in (0, 1], got " +
                     std::to_string(init.density));

  NetworkModel m;
  m.architecture = arch;
  m.seed = seed;
  switch (arch.kind) {
    case Architecture::lenet300100:
      m.input_shape = {1, 28, 28};
      m.class_count = 10;
      m.layers.push_back(make_affine(784, 300, Activation::leaky_relu));
      m.layers.push_back(make_affine(300, 100, Activation::leaky_relu));
      m.layers.push_back(make_affine(100, 10, Activation::none));
      break;
    case Architecture::lenet5:
      // 28x28 digits zero-padded to 32x32: 32 -conv5-> 28 -pool-> 14 -conv5-> 10 -pool-> 5.
      m.input_shape = {1, 28, 28};
      m.input_padding = 2;
      m.class_count = 10;
      m.layers.push_back(make_conv(1, 6, 5, Activation::leaky_relu, Pooling::max2x2));
      m.layers.push_back(make_conv(6, 16, 5, Activation::leaky_relu, Pooling::max2x2));
      m.layers.push_back(make_affine(16 * 5 * 5, 120, Activation::leaky_relu));
      m.layers.push_back(make_affine(120, 84, Activation::leaky_relu));
      m.layers.push_back(make_affine(84, 10, Activation::none));
      break;
    case Architecture::mlp: {
      const auto& w = arch.widths;
      if (w.size() < 2) throw InputError("build_model: mlp needs at least two widths");
      m.input_shape = {1, 1, w.front()};
      m.class_count = w.back();
      for (std::size_t i = 0; i + 1 < w.size(); ++i)
        m.layers.push_back(make_affine(
            w[i], w[i + 1], i + 2 == w.size() ? Activation::none : Activation::leaky_relu));
      break;
    }
  }

  Rng rng(seed);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    auto& layer = m.layers[l];
    if (init.kind == InitSpec::Kind::sparse && init.density < 1.0)
      sparse_mask(layer, init.density, rng, l);
    init_weights(layer, rng);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

Tensor pad_input(const Tensor& batch, std::size_t pad) {
  const auto b = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  Tensor out({b, c, h + 2 * pad, w + 2 * pad});
  const auto ow = w + 2 * pad, oh = h + 2 * pad;
  for (std::size_t plane = 0; plane < b * c; ++plane)
    for (std::size_t y = 0; y < h; ++y)
      std::copy_n(batch.data() + (plane * h + y) * w, w,
                  out.data() + (plane * oh + y + pad) * ow + pad);
  return out;
}

Tensor prepare_input(const NetworkModel& model, const Tensor& batch) {
  const auto per_sample = shape_size(model.input_shape);
  if (batch.rank() < 2 || batch.size() / batch.dim(0) != per_sample)
    throw DimensionError("model_forward: batch " + shape_string(batch.shape()) +
                         " does not match model input " + shape_string(model.input_shape));
  Shape s{batch.dim(0)};
  s.insert(s.end(), model.input_shape.begin(), model.input_shape.end());
  Tensor x = batch.shape() == s ? batch : batch.reshaped(s);
  if (model.input_padding) x = pad_input(x, model.input_padding);
  return x;
}

Tensor run(const NetworkModel& model, const Tensor& batch, std::vector<LayerTrace>* traces) {
  Tensor x = prepare_input(model, batch);
  if (traces) traces->resize(model.layers.size());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    LayerTrace* t = traces ? &(*traces)[l] : nullptr;
    const Tensor w = layer.effective_weight();
    if (layer.kind == LayerKind::affine)
      x = affine_forward(x, w, layer.bias, t ? &t->linear : nullptr);
    else
      x = conv2d_forward(x, w, layer.bias, t ? &t->linear : nullptr);
    if (layer.activation == Activation::leaky_relu)
      x = leaky_relu_forward(x, model.leaky_slope, t ? &t->activation : nullptr);
    if (layer.pool == Pooling::max2x2) x = maxpool2x2_forward(x, t ? &t->pool : nullptr);
  }
  return x;
}

}  // namespace

ForwardTrace model_forward(const NetworkModel& model, const Tensor& batch) {
  ForwardTrace trace;
  trace.logits = run(model, batch, &trace.layers);
  trace.revision = model.revision();
  return trace;
}

Tensor model_logits(const NetworkModel& model, const Tensor& batch) {
  return run(model, batch, nullptr);
}

ModelGradients model_backward(const NetworkModel& model, ForwardTrace& trace,
                              const Tensor& grad_logits, bool need_input_grad) {
  if (trace.consumed) throw StateError("model_backward: forward trace already consumed");
  if (trace.revision != model.revision() || trace.layers.size() != model.layers.size())
    throw StateError("model_backward: forward trace is stale (model changed since forward pass)");
  require_same_shape(grad_logits.shape(), trace.logits.shape(), "model_backward");
  trace.consumed = true;

  ModelGradients grads;
  grads.layers.resize(model.layers.size());
  Tensor g = grad_logits;
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const auto& layer = model.layers[l];
    auto& t = trace.layers[l];
    if (layer.pool == Pooling::max2x2) g = maxpool2x2_backward(g, t.pool);
    if (layer.activation == Activation::leaky_relu) g = leaky_relu_backward(g, t.activation);
    const bool want_input = l > 0 || need_input_grad;
    ParamGrads pg = layer.kind == LayerKind::affine ? affine_backward(g, t.linear, want_input)
                                                    : conv2d_backward(g, t.linear, want_input);
    grads.layers[l].weight = std::move(pg.weight);
    grads.layers[l].bias = std::move(pg.bias);
    g = std::move(pg.input);
  }
  if (need_input_grad) {
    if (model.input_padding) {
      // Crop the padded border back off.
      const auto p = model.input_padding;
      const auto b = g.dim(0), c = g.dim(1), h = g.dim(2) - 2 * p, w = g.dim(3) - 2 * p;
      Tensor cropped({b, c, h, w});
      for (std::size_t plane = 0; plane < b * c; ++plane)
        for (std::size_t y = 0; y < h; ++y)
          std::copy_n(g.data() + (plane * (h + 2 * p) + y + p) * (w + 2 * p) + p, w,
                      cropped.data() + (plane * h + y) * w);
      g = std::move(cropped);
    }
    grads.input = std::move(g);
  }
  return grads;
}

void apply_update(NetworkModel& model, const ModelGradients& grads, const SgdConfig& cfg,
                  OptimizerState& state) {
  if (grads.layers.size() != model.layers.size())
    throw DimensionError("apply_update: " + std::to_string(grads.layers.size()) +
                         " gradient layers for a " + std::to_string(model.layers.size()) +
                         "-layer model");
  state.weight_velocity.resize(model.layers.size());
  state.bias_velocity.resize(model.layers.size());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& layer = model.layers[l];
    require_same_shape(grads.layers[l].weight.shape(), layer.weight.shape(), "apply_update weight");
    require_same_shape(grads.layers[l].bias.shape(), layer.bias.shape(), "apply_update bias");
    Tensor masked = grads.layers[l].weight;
    for (std::size_t i = 0; i < masked.size(); ++i)
      if (!layer.mask.test(i)) masked[i] = 0.0f;
    auto& vel = state.weight_velocity[l];
    sgd_step(layer.weight, masked, cfg, &vel);
    for (std::size_t i = 0; i < masked.size(); ++i)
      if (!layer.mask.test(i)) {
        layer.weight[i] = 0.0f;
        if (!vel.empty()) vel[i] = 0.0f;
      }
    sgd_step(layer.bias, grads.layers[l].bias, cfg, &state.bias_velocity[l]);
  }
  model.touch();
}

void mask_optimizer_state(const NetworkModel& model, OptimizerState& state) {
  for (std::size_t l = 0; l < model.layers.size() && l < state.weight_velocity.size(); ++l) {
    auto& vel = state.weight_velocity[l];
    if (vel.empty()) continue;
    for (std::size_t i = 0; i < vel.size(); ++i)
      if (!model.layers[l].mask.test(i)) vel[i] = 0.0f;
  }
}

SparsityReport sparsity_report(const NetworkModel& model) {
  SparsityReport r;
  for (const auto& l : model.layers) {
    LayerSparsity s{l.mask.popcount(), l.weight.size(), l.bias.size()};
    r.active_weights += s.active;
    r.total_weights += s.total;
    r.biases += s.biases;
    r.layers.push_back(s);
  }
  return r;
}

}  // namespace growprune
