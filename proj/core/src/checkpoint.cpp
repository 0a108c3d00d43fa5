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

#include "growprune/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "growprune/errors.hpp"

namespace growprune {

static_assert(std::endian::native == std::endian::little, "checkpoint code assumes little-endian");

namespace {

constexpr char kMagic[4] = {'G', 'P', 'C', 'K'};
constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 32;

class Writer {
 public:
  std::vector<std::uint8_t> bytes;

  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    raw(&v, sizeof v);
  }
  void u8(std::uint8_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void shape(const Shape& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    for (auto d : s) u64(d);
  }
  void tensor(const Tensor& t) {
    shape(t.shape());
    raw(t.data(), t.size() * sizeof(float));
  }
  void mask(const Mask& m) {
    shape(m.shape());
    std::vector<std::uint8_t> packed((m.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m.test(i)) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    raw(packed.data(), packed.size());
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

  void raw(void* p, std::size_t n) {
    if (n > bytes_.size() - pos_) fail("truncated payload");
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T get() {
    T v;
    raw(&v, sizeof v);
    return v;
  }
  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::string str() {
    const auto n = u64();
    if (n > bytes_.size() - pos_) fail("string length exceeds payload");
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  Shape shape() {
    const auto rank = u32();
    if (rank > 8) fail("implausible tensor rank");
    Shape s(rank);
    for (auto& d : s) {
      d = u64();
      if (d == 0 || d > kMaxDim) fail("implausible tensor extent");
    }
    return s;
  }
  Tensor tensor() {
    const auto at = pos_;
    auto s = shape();
    if (s.empty()) return {};
    const auto n = shape_size(s);
    if (n > (bytes_.size() - pos_) / sizeof(float)) {
      pos_ = at;
      fail("tensor exceeds payload");
    }
    std::vector<float> v(n);
    raw(v.data(), n * sizeof(float));
    return Tensor(std::move(s), std::move(v));
  }
  Mask mask() {
    auto s = shape();
    Mask m(s, false);
    std::vector<std::uint8_t> packed((m.size() + 7) / 8);
    raw(packed.data(), packed.size());
    for (std::size_t i = 0; i < m.size(); ++i) m.set(i, (packed[i / 8] >> (i % 8)) & 1u);
    return m;
  }
  template <typename E>
  E enumeration(std::uint8_t max) {
    const auto v = u8();
    if (v > max) fail("enum value out of range");
    return static_cast<E>(v);
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("checkpoint: " + what, pos_);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_sgd(Writer& w, const SgdConfig& s) {
  w.put(s.learning_rate);
  w.put(s.momentum);
  w.put(s.weight_decay);
}

SgdConfig get_sgd(Reader& r) {
  SgdConfig s;
  s.learning_rate = r.get<float>();
  s.momentum = r.get<float>();
  s.weight_decay = r.get<float>();
  return s;
}

void put_tensors(Writer& w, const std::vector<Tensor>& ts) {
  w.u32(static_cast<std::uint32_t>(ts.size()));
  for (const auto& t : ts) w.tensor(t);
}

std::vector<Tensor> get_tensors(Reader& r, std::size_t max) {
  const auto n = r.u32();
  if (n > max) r.fail("too many optimizer tensors");
  std::vector<Tensor> ts(n);
  for (auto& t : ts) t = r.tensor();
  return ts;
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  const auto& m = ck.model;
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(ck.deployment_only ? 1u : 0u);

  w.str(m.architecture.to_string());
  w.u64(m.seed);
  w.u64(m.input_padding);
  w.u64(m.class_count);
  w.put(m.leaky_slope);
  w.shape(m.input_shape);
  w.u32(static_cast<std::uint32_t>(m.layers.size()));
  for (const auto& l : m.layers) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    w.u8(static_cast<std::uint8_t>(l.activation));
    w.u8(static_cast<std::uint8_t>(l.pool));
    w.tensor(l.weight);
    w.mask(l.mask);
    w.tensor(l.bias);
  }

  w.u8(ck.state ? 1 : 0);
  if (ck.state) {
    const auto& s = *ck.state;
    put_sgd(w, s.sgd);
    w.u64(s.batch_size);
    w.u64(s.schedule.patience);
    w.put(s.schedule.factor);
    w.put(s.schedule.min_learning_rate);
    w.put(s.schedule.best_accuracy);
    w.u64(s.schedule.stale_epochs);
    w.str(s.rng.serialize());
    put_tensors(w, s.optimizer.weight_velocity);
    put_tensors(w, s.optimizer.bias_velocity);
  }

  w.str(ck.metrics);
  w.u32(static_cast<std::uint32_t>(ck.metadata.size()));
  for (const auto& [k, v] : ck.metadata) {
    w.str(k);
    w.str(v);
  }
  w.u64(fnv1a64(w.bytes));
  return std::move(w.bytes);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 4 + 8) throw FormatError("checkpoint: file too short", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("checkpoint: bad magic", 0);
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + 4, 4);
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")",
                      4);
  const auto body = bytes.first(bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 8);
  if (fnv1a64(body) != stored) throw FormatError("checkpoint: checksum mismatch", body.size());

  Reader r(body);
  r.raw(&version, 4);
  r.raw(&version, 4);
  Checkpoint ck;
  const auto flags = r.u32();
  if (flags > 1) r.fail("unknown header flags");
  ck.deployment_only = flags & 1u;

  auto& m = ck.model;
  try {
    m.architecture = ArchitectureSpec::parse(r.str());
  } catch (const InputError& e) {
    r.fail(e.what());
  }
  m.seed = r.u64();
  m.input_padding = r.u64();
  m.class_count = r.u64();
  m.leaky_slope = r.get<float>();
  m.input_shape = r.shape();
  const auto layers = r.u32();
  if (layers > 64) r.fail("implausible layer count");
  m.layers.resize(layers);
  for (auto& l : m.layers) {
    l.kind = r.enumeration<LayerKind>(1);
    l.activation = r.enumeration<Activation>(1);
    l.pool = r.enumeration<Pooling>(1);
    l.weight = r.tensor();
    l.mask = r.mask();
    l.bias = r.tensor();
    if (l.mask.shape() != l.weight.shape()) r.fail("mask shape differs from weight shape");
  }
  if (!m.consistent()) r.fail("model is inconsistent (shapes or masked weights)");

  const auto has_state = r.u8();
  if (has_state > 1) r.fail("bad state flag");
  if (has_state) {
    TrainingState s;
    s.sgd = get_sgd(r);
    s.batch_size = r.u64();
    s.schedule.patience = r.u64();
    s.schedule.factor = r.get<float>();
    s.schedule.min_learning_rate = r.get<float>();
    s.schedule.best_accuracy = r.get<double>();
    s.schedule.stale_epochs = r.u64();
    const auto rng = r.str();
    try {
      s.rng.deserialize(rng);
    } catch (const InputError& e) {
      r.fail(e.what());
    }
    s.optimizer.weight_velocity = get_tensors(r, layers);
    s.optimizer.bias_velocity = get_tensors(r, layers);
    ck.state = std::move(s);
  }

  ck.metrics = r.str();
  const auto entries = r.u32();
  for (std::uint32_t i = 0; i < entries; ++i) {
    auto k = r.str();
    ck.metadata[std::move(k)] = r.str();
  }
  if (!r.done()) r.fail("trailing bytes before checksum");
  return ck;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw InputError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace growprune
