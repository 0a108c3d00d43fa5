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

// Per-input-pixel connection density of a fully-connected first layer and
// helpers for measuring where that density sits.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "growprune/data.hpp"
#include "growprune/network.hpp"

namespace growprune {

struct DensityMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint32_t> counts;  // row-major, active outgoing connections per pixel

  std::uint64_t total() const;
};

/// Column-wise popcount of the first layer's mask. InputError unless the
/// first layer is affine. The grid is square when the input width is a
/// perfect square, a single row otherwise.
DensityMap input_density(const NetworkModel& model);

/// Binary P5 image, counts scaled so that `scale_max` maps to 255
/// (0 = use the map's own maximum).
std::string to_pgm(const DensityMap& map, std::uint32_t scale_max = 0);
void write_pgm(const std::filesystem::path& path, const DensityMap& map, std::uint32_t scale_max = 0);

/// Mean image of one class, [H*W] (channel 0). InputError if absent.
std::vector<double> class_mean_image(const Dataset& data, std::int32_t label);

/// Pixels where `include` exceeds `threshold` and every `exclude` image is at
/// or below it.
std::vector<std::uint8_t> exclusive_region(std::span<const double> include,
                                           const std::vector<std::vector<double>>& exclude,
                                           double threshold);

/// Bounding box of pixels above threshold in a mean image.
std::vector<std::uint8_t> bounding_box_region(std::span<const double> mean, std::size_t height,
                                              std::size_t width, double threshold);

/// Share of the map's total count that falls inside the region.
double mass_fraction(const DensityMap& map, std::span<const std::uint8_t> region);

}  // namespace growprune
