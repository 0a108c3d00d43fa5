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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "growprune/tensor.hpp"

namespace growprune {

/// Labeled images, [N, C, H, W] with pixels in [0, 1].
struct Dataset {
  Tensor images;
  std::vector<std::int32_t> labels;
  std::size_t class_count = 10;
  std::string provenance;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }
  std::size_t sample_size() const { return empty() ? 0 : images.size() / size(); }
  Shape sample_shape() const;

  /// New dataset holding the given samples, in order.
  Dataset subset(std::span<const std::size_t> indices) const;

  /// Images of the given samples as one [B, C, H, W] tensor.
  Tensor gather(std::span<const std::size_t> indices) const;
  std::vector<std::int32_t> gather_labels(std::span<const std::size_t> indices) const;
};

/// Concatenation; both must share sample shape and class count.
Dataset concat(const Dataset& a, const Dataset& b);

/// Parses a big-endian IDX image file (magic 0x00000803, u8, dims N,H,W) and
/// label file (magic 0x00000801, u8, dim N). Pixels are divided by 255.
/// FormatError with the byte offset on bad magic, dims or truncation.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

struct MnistSplit {
  Dataset train;
  Dataset test;
};

/// {root}/train-images-idx3-ubyte, train-labels-idx1-ubyte,
/// t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte.
MnistSplit load_mnist(const std::filesystem::path& root);

struct PartitionPlan {
  std::uint64_t seed = 0;
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> parts;

  /// Concatenated indices of the listed parts, in part order.
  std::vector<std::size_t> indices(std::span<const std::size_t> part_ids) const;
};

/// Seeded shuffle, then round-robin split into k parts (sizes differ by at
/// most one). InputError when k == 0 or k > n.
PartitionPlan partition(std::size_t n, std::size_t k, std::uint64_t seed);
inline PartitionPlan partition(const Dataset& data, std::size_t k, std::uint64_t seed) {
  return partition(data.size(), k, seed);
}

/// Translates every image by an independent uniform integer offset in
/// [-max_shift, max_shift]^2 with zero fill. Requires max_shift < H/2.
Dataset augment_shift(const Dataset& data, std::size_t max_shift, std::uint64_t seed);

/// Shifts one [C,H,W] image by (dx, dy) pixels; positive dx moves right.
void shift_image(std::span<const float> in, std::span<float> out, std::size_t channels,
                 std::size_t h, std::size_t w, int dx, int dy);

/// Gaussian clusters with unit variance. Class means sit on a circle in the
/// first two coordinates (a line when dim == 1) with neighbouring means
/// `separation` apart. Images are [N, 1, 1, dim].
Dataset synthetic_blobs(std::size_t class_count, std::size_t per_class, std::size_t dim,
                        double separation, std::uint64_t seed);

/// Samples whose label is in `classes`.
Dataset filter_classes(const Dataset& data, std::span<const std::int32_t> classes);

}  // namespace growprune
