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

#include "growprune/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "growprune/checkpoint.hpp"
#include "growprune/errors.hpp"

namespace growprune {

std::uint64_t DensityMap::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

DensityMap input_density(const NetworkModel& model) {
  if (model.layers.empty() || model.layers[0].kind != LayerKind::affine)
    throw InputError("input_density: first layer must be fully connected");
  const auto& l = model.layers[0];
  const auto cols = l.in_units();
  DensityMap d;
  d.counts.assign(cols, 0);
  for (std::size_t r = 0; r < l.out_units(); ++r)
    for (std::size_t c = 0; c < cols; ++c) d.counts[c] += l.mask.test(r * cols + c);
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(cols))));
  if (side * side == cols) {
    d.height = d.width = side;
  } else {
    d.height = 1;
    d.width = cols;
  }
  return d;
}

std::string to_pgm(const DensityMap& map, std::uint32_t scale_max) {
  if (map.counts.size() != map.height * map.width) throw DimensionError("to_pgm: grid size mismatch");
  if (scale_max == 0)
    scale_max = map.counts.empty() ? 1 : std::max<std::uint32_t>(1, *std::max_element(map.counts.begin(), map.counts.end()));
  std::string out = "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
  for (auto c : map.counts) {
    const auto v = std::min<std::uint64_t>(255, (std::uint64_t{c} * 255 + scale_max / 2) / scale_max);
    out.push_back(static_cast<char>(v));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const DensityMap& map, std::uint32_t scale_max) {
  const auto s = to_pgm(map, scale_max);
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

std::vector<double> class_mean_image(const Dataset& data, std::int32_t label) {
  const auto shape = data.sample_shape();
  if (shape.size() != 3) throw DimensionError("class_mean_image: expected [C,H,W] samples");
  const auto plane = shape[1] * shape[2];
  const auto stride = data.sample_size();
  std::vector<double> mean(plane, 0.0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] != label) continue;
    const float* px = data.images.data() + i * stride;
    for (std::size_t p = 0; p < plane; ++p) mean[p] += px[p];
    ++n;
  }
  if (n == 0) throw InputError("class_mean_image: no samples of class " + std::to_string(label));
  for (auto& m : mean) m /= static_cast<double>(n);
  return mean;
}

std::vector<std::uint8_t> exclusive_region(std::span<const double> include,
                                           const std::vector<std::vector<double>>& exclude,
                                           double threshold) {
  std::vector<std::uint8_t> region(include.size(), 0);
  for (const auto& e : exclude)
    if (e.size() != include.size()) throw DimensionError("exclusive_region: image sizes differ");
  for (std::size_t p = 0; p < include.size(); ++p) {
    bool in = include[p] > threshold;
    for (const auto& e : exclude) in = in && e[p] <= threshold;
    region[p] = in;
  }
  return region;
}

std::vector<std::uint8_t> bounding_box_region(std::span<const double> mean, std::size_t height,
                                              std::size_t width, double threshold) {
  if (mean.size() != height * width) throw DimensionError("bounding_box_region: size mismatch");
  std::size_t r0 = height, r1 = 0, c0 = width, c1 = 0;
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c)
      if (mean[r * width + c] > threshold) {
        r0 = std::min(r0, r);
        r1 = std::max(r1, r);
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
      }
  std::vector<std::uint8_t> region(mean.size(), 0);
  for (std::size_t r = r0; r <= r1 && r < height; ++r)
    for (std::size_t c = c0; c <= c1; ++c) region[r * width + c] = 1;
  return region;
}

double mass_fraction(const DensityMap& map, std::span<const std::uint8_t> region) {
  if (region.size() != map.counts.size()) throw DimensionError("mass_fraction: region size mismatch");
  std::uint64_t inside = 0, total = 0;
  for (std::size_t p = 0; p < region.size(); ++p) {
    total += map.counts[p];
    if (region[p]) inside += map.counts[p];
  }
  return total ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
}

}  // namespace growprune
