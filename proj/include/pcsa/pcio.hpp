// Copyright 2026 The pcsa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <filesystem>
#include <string_view>
#include <vector>

#include "pcsa/matrix.hpp"
#include "pcsa/random.hpp"

namespace pcsa {

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;  // clamped to [0, 1] on load

  bool operator==(const Point&) const = default;
};

struct PointCloud {
  std::vector<Point> points;

  Index size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  bool operator==(const PointCloud&) const = default;
};

enum class GridMode { pillar, voxel, point };

GridMode parse_grid_mode(std::string_view name);
std::string_view to_string(GridMode mode);

// Axis-aligned detection range discretized into half-open cells [lo, hi).
// Pillar mode ignores cell_size[2]: one cell spans the whole z range.
struct GridSpec {
  std::array<double, 3> range_min{};
  std::array<double, 3> range_max{};
  std::array<double, 3> cell_size{};

  void validate(GridMode mode) const;
  std::array<Index, 3> cell_counts(GridMode mode) const;
  bool contains(const Point& p) const;

  bool operator==(const GridSpec&) const = default;
};

// Node set of pillars, voxels or points: features x_i (n x d) and vertex
// positions v_i (n x 3, centroid of member points).
struct FeatureGraph {
  Matrix features;
  Matrix positions;
  std::vector<Index> member_counts;  // points per node; empty if unknown

  Index size() const noexcept { return features.rows(); }
  Index dim() const noexcept { return features.cols(); }
  void validate() const;

  bool operator==(const FeatureGraph&) const = default;
};

// Shared per-point linear map from the descriptor (dx, dy, dz, intensity) to
// d feature channels; node features are the elementwise max over members.
struct EncoderWeights {
  Matrix map;  // 4 x d

  Index dim() const noexcept { return map.cols(); }
  static EncoderWeights random(Index dim, Rng& rng);
};

PointCloud load_scan(const std::filesystem::path& path);
// Decodes a KITTI velodyne record stream (x, y, z, intensity as little-endian
// float32 quadruples).
PointCloud decode_scan(std::span<const unsigned char> bytes);
void save_scan(const std::filesystem::path& path, const PointCloud& cloud);

PointCloud crop_range(const PointCloud& cloud, const GridSpec& spec);

FeatureGraph discretize(const PointCloud& cloud, const GridSpec& spec, GridMode mode,
                        const EncoderWeights& encoder);

}  // namespace pcsa
