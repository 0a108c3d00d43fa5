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

#include "growprune/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

#include "growprune/errors.hpp"
#include "growprune/rng.hpp"

namespace growprune {

Shape Dataset::sample_shape() const {
  if (images.rank() < 2) return {};
  return Shape(images.shape().begin() + 1, images.shape().end());
}

Tensor Dataset::gather(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw InputError("Dataset::gather: no indices");
  const auto per = sample_size();
  Shape s{indices.size()};
  for (auto d : sample_shape()) s.push_back(d);
  Tensor out(s);
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= size())
      throw InputError("Dataset::gather: index " + std::to_string(indices[j]) + " out of range");
    std::copy_n(images.data() + indices[j] * per, per, out.data() + j * per);
  }
  return out;
}

std::vector<std::int32_t> Dataset::gather_labels(std::span<const std::size_t> indices) const {
  std::vector<std::int32_t> out(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) out[j] = labels.at(indices[j]);
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset d;
  d.class_count = class_count;
  d.provenance = provenance + "[subset " + std::to_string(indices.size()) + "]";
  if (indices.empty()) {
    d.images = Tensor();
    return d;
  }
  d.images = gather(indices);
  d.labels = gather_labels(indices);
  return d;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.sample_shape() != b.sample_shape() || a.class_count != b.class_count)
    throw DimensionError("concat: datasets differ in sample shape or class count");
  Dataset d;
  d.class_count = a.class_count;
  d.provenance = a.provenance + "+" + b.provenance;
  Shape s = a.images.shape();
  s[0] = a.size() + b.size();
  std::vector<float> v(a.images.values().begin(), a.images.values().end());
  v.insert(v.end(), b.images.values().begin(), b.images.values().end());
  d.images = Tensor(s, std::move(v));
  d.labels = a.labels;
  d.labels.insert(d.labels.end(), b.labels.begin(), b.labels.end());
  return d;
}

// ---------------------------------------------------------------------------
// IDX

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset,
                        const std::string& name) {
  if (offset + 4 > buf.size())
    throw FormatError(name + ": truncated header", buf.size());
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  const std::string iname = images_path.filename().string();
  const std::string lname = labels_path.filename().string();

  const auto imagic = read_be32(img, 0, iname);
  if (imagic != 0x00000803u) throw FormatError(iname + ": bad image magic", 0);
  const auto n = read_be32(img, 4, iname);
  const auto h = read_be32(img, 8, iname);
  const auto w = read_be32(img, 12, iname);
  if (n == 0 || h == 0 || w == 0) throw FormatError(iname + ": zero dimension", 4);
  const std::uint64_t need = 16 + std::uint64_t{n} * h * w;
  if (img.size() < need) throw FormatError(iname + ": truncated pixel payload", img.size());
  if (img.size() > need) throw FormatError(iname + ": trailing bytes after payload", need);

  const auto lmagic = read_be32(lab, 0, lname);
  if (lmagic != 0x00000801u) throw FormatError(lname + ": bad label magic", 0);
  const auto ln = read_be32(lab, 4, lname);
  if (ln != n) throw FormatError(lname + ": label count does not match image count", 4);
  if (lab.size() < 8 + std::uint64_t{n}) throw FormatError(lname + ": truncated label payload", lab.size());
  if (lab.size() > 8 + std::uint64_t{n}) throw FormatError(lname + ": trailing bytes after payload", 8 + n);

  Dataset d;
  d.class_count = 10;
  d.provenance = "idx:" + iname;
  std::vector<float> px(std::size_t{n} * h * w);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<float>(img[16 + i] / 255.0);
  d.images = Tensor({n, 1, h, w}, std::move(px));
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.labels[i] = lab[8 + i];
    if (d.labels[i] >= 10) throw FormatError(lname + ": label outside 0..9", 8 + i);
  }
  return d;
}

MnistSplit load_mnist(const std::filesystem::path& root) {
  MnistSplit s;
  s.train = load_idx(root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte");
  s.test = load_idx(root / "t10k-images-idx3-ubyte", root / "t10k-labels-idx1-ubyte");
  s.train.provenance = "mnist-train";
  s.test.provenance = "mnist-test";
  return s;
}

// ---------------------------------------------------------------------------
// Partitioning

std::vector<std::size_t> PartitionPlan::indices(std::span<const std::size_t> part_ids) const {
  std::vector<std::size_t> out;
  for (auto id : part_ids) {
    const auto& p = parts.at(id);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

PartitionPlan partition(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0 || k > n)
    throw InputError("partition: need 1 <= k <= N, got k=" + std::to_string(k) +
                     ", N=" + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span(order));
  PartitionPlan plan;
  plan.seed = seed;
  plan.k = k;
  plan.parts.resize(k);
  for (auto& p : plan.parts) p.reserve(n / k + 1);
  for (std::size_t i = 0; i < n; ++i) plan.parts[i % k].push_back(order[i]);
  return plan;
}

// ---------------------------------------------------------------------------
// Augmentation

void shift_image(std::span<const float> in, std::span<float> out, std::size_t channels,
                 std::size_t h, std::size_t w, int dx, int dy) {
  std::fill(out.begin(), out.end(), 0.0f);
  const auto ih = static_cast<long>(h), iw = static_cast<long>(w);
  for (std::size_t c = 0; c < channels; ++c)
    for (long y = 0; y < ih; ++y) {
      const long sy = y - dy;
      if (sy < 0 || sy >= ih) continue;
      for (long x = 0; x < iw; ++x) {
        const long sx = x - dx;
        if (sx < 0 || sx >= iw) continue;
        out[(c * h + y) * w + x] = in[(c * h + sy) * w + sx];
      }
    }
}

Dataset augment_shift(const Dataset& data, std::size_t max_shift, std::uint64_t seed) {
  if (data.empty() || max_shift == 0) return data;
  if (data.images.rank() != 4) throw DimensionError("augment_shift: images must be [N,C,H,W]");
  const auto c = data.images.dim(1), h = data.images.dim(2), w = data.images.dim(3);
  if (2 * max_shift >= h || 2 * max_shift >= w)
    throw InputError("augment_shift: max_shift " + std::to_string(max_shift) +
                     " must be below half the image extent");
  Dataset out = data;
  out.provenance += "+shift" + std::to_string(max_shift);
  Rng rng(seed);
  const auto per = c * h * w;
  const auto span = 2 * max_shift + 1;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int dx = static_cast<int>(rng.below(span)) - static_cast<int>(max_shift);
    const int dy = static_cast<int>(rng.below(span)) - static_cast<int>(max_shift);
    shift_image(data.images.values().subspan(i * per, per), out.images.values().subspan(i * per, per),
                c, h, w, dx, dy);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

Dataset synthetic_blobs(std::size_t class_count, std::size_t per_class, std::size_t dim,
                        double separation, std::uint64_t seed) {
  if (class_count == 0 || per_class == 0 || dim == 0)
    throw InputError("synthetic_blobs: class_count, per_class and dim must be positive (empty dataset)");
  if (!(separation > 0.0)) throw InputError("synthetic_blobs: separation must be positive");

  std::vector<std::vector<double>> means(class_count, std::vector<double>(dim, 0.0));
  if (dim == 1 || class_count == 1) {
    for (std::size_t c = 0; c < class_count; ++c) means[c][0] = separation * static_cast<double>(c);
  } else if (class_count == 2) {
    means[1][0] = separation;
  } else {
    const double radius = separation / (2.0 * std::sin(std::numbers::pi / static_cast<double>(class_count)));
    for (std::size_t c = 0; c < class_count; ++c) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(class_count);
      means[c][0] = radius * std::cos(a);
      means[c][1] = radius * std::sin(a);
    }
  }

  Rng rng(seed);
  const std::size_t n = class_count * per_class;
  std::vector<float> px(n * dim);
  Dataset d;
  d.class_count = class_count;
  d.provenance = "blobs:" + std::to_string(class_count) + "x" + std::to_string(per_class) + "x" +
                 std::to_string(dim) + "@" + std::to_string(seed);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = i % class_count;
    d.labels[i] = static_cast<std::int32_t>(c);
    for (std::size_t j = 0; j < dim; ++j)
      px[i * dim + j] = static_cast<float>(means[c][j] + rng.normal());
  }
  d.images = Tensor({n, 1, 1, dim}, std::move(px));
  return d;
}

Dataset filter_classes(const Dataset& data, std::span<const std::int32_t> classes) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (std::find(classes.begin(), classes.end(), data.labels[i]) != classes.end()) keep.push_back(i);
  return data.subset(keep);
}

}  // namespace growprune
