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

#include "pcsa/pcio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <tuple>

#include "pcsa/error.hpp"

namespace pcsa {
namespace {

constexpr Index kRecordBytes = 16;

float read_f32_le(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void write_f32_le(std::ostream& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                         static_cast<char>((bits >> 16) & 0xff),
                         static_cast<char>((bits >> 24) & 0xff)};
  out.write(bytes, 4);
}

Index cell_count(double extent, double cell) {
  // Guard against extent/cell landing a hair above an integer (70.4 / 0.16).
  const double ratio = extent / cell;
  return static_cast<Index>(std::max(1.0, std::ceil(ratio - 1e-9)));
}

Index cell_index(double value, double lo, double cell, Index count) {
  const auto raw = static_cast<Index>(std::floor((value - lo) / cell));
  return std::min(raw, count - 1);
}

}  // namespace

GridMode parse_grid_mode(std::string_view name) {
  if (name == "pillar") return GridMode::pillar;
  if (name == "voxel") return GridMode::voxel;
  if (name == "point") return GridMode::point;
  throw ArgumentError("unknown grid mode '" + std::string(name) + "'");
}

std::string_view to_string(GridMode mode) {
  switch (mode) {
    case GridMode::pillar: return "pillar";
    case GridMode::voxel: return "voxel";
    case GridMode::point: return "point";
  }
  return "unknown";
}

void GridSpec::validate(GridMode mode) const {
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(range_min[a]) || !std::isfinite(range_max[a]))
      throw ArgumentError("GridSpec: non-finite range");
    if (!(range_max[a] > range_min[a]))
      throw ArgumentError("GridSpec: range_max must exceed range_min on every axis");
  }
  if (mode == GridMode::point) return;
  const int axes = mode == GridMode::voxel ? 3 : 2;
  for (int a = 0; a < axes; ++a) {
    if (!(cell_size[a] > 0.0) || !std::isfinite(cell_size[a]))
      throw ArgumentError("GridSpec: cell_size must be positive");
  }
}

std::array<Index, 3> GridSpec::cell_counts(GridMode mode) const {
  validate(mode);
  std::array<Index, 3> counts{1, 1, 1};
  if (mode == GridMode::point) return counts;
  counts[0] = cell_count(range_max[0] - range_min[0], cell_size[0]);
  counts[1] = cell_count(range_max[1] - range_min[1], cell_size[1]);
  if (mode == GridMode::voxel) counts[2] = cell_count(range_max[2] - range_min[2], cell_size[2]);
  return counts;
}

bool GridSpec::contains(const Point& p) const {
  return p.x >= range_min[0] && p.x < range_max[0] && p.y >= range_min[1] &&
         p.y < range_max[1] && p.z >= range_min[2] && p.z < range_max[2];
}

void FeatureGraph::validate() const {
  if (positions.rows() != features.rows() || positions.cols() != 3)
    throw ArgumentError("FeatureGraph: positions must be n x 3 with n matching features");
  if (!member_counts.empty() && member_counts.size() != features.rows())
    throw ArgumentError("FeatureGraph: member_counts size mismatch");
  if (!all_finite(features) || !all_finite(positions))
    throw ArgumentError("FeatureGraph: non-finite entry");
}

EncoderWeights EncoderWeights::random(Index dim, Rng& rng) {
  if (dim == 0) throw ArgumentError("EncoderWeights: feature dim must be positive");
  return EncoderWeights{rng.glorot(4, dim)};
}

PointCloud decode_scan(std::span<const unsigned char> bytes) {
  if (bytes.size() % kRecordBytes != 0) {
    throw FormatError("scan: truncated record (" + std::to_string(bytes.size()) +
                      " bytes is not a multiple of 16)");
  }
  PointCloud cloud;
  cloud.points.reserve(bytes.size() / kRecordBytes);
  for (Index i = 0; i < bytes.size() / kRecordBytes; ++i) {
    const unsigned char* rec = bytes.data() + i * kRecordBytes;
    const float x = read_f32_le(rec);
    const float y = read_f32_le(rec + 4);
    const float z = read_f32_le(rec + 8);
    const float r = read_f32_le(rec + 12);
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) || !std::isfinite(r)) {
      throw FormatError("scan: non-finite value at point " + std::to_string(i));
    }
    cloud.points.push_back(Point{x, y, z, std::clamp(static_cast<double>(r), 0.0, 1.0)});
  }
  return cloud;
}

PointCloud load_scan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("scan: cannot open '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("scan: read failure on '" + path.string() + "'");
  return decode_scan(bytes);
}

void save_scan(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("scan: cannot create '" + path.string() + "'");
  for (const Point& p : cloud.points) {
    write_f32_le(out, static_cast<float>(p.x));
    write_f32_le(out, static_cast<float>(p.y));
    write_f32_le(out, static_cast<float>(p.z));
    write_f32_le(out, static_cast<float>(p.intensity));
  }
  if (!out) throw IoError("scan: write failure on '" + path.string() + "'");
}

PointCloud crop_range(const PointCloud& cloud, const GridSpec& spec) {
  PointCloud out;
  std::copy_if(cloud.points.begin(), cloud.points.end(), std::back_inserter(out.points),
               [&](const Point& p) { return spec.contains(p); });
  return out;
}

FeatureGraph discretize(const PointCloud& cloud, const GridSpec& spec, GridMode mode,
                        const EncoderWeights& encoder) {
  const Index d = encoder.dim();
  if (d == 0 || encoder.map.rows() != 4)
    throw ArgumentError("discretize: encoder must be a 4 x d map with d > 0");
  const auto counts = spec.cell_counts(mode);

  std::vector<std::uint64_t> keys(cloud.size());
  for (Index i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    if (!spec.contains(p))
      throw ArgumentError("discretize: point " + std::to_string(i) + " lies outside the grid range");
    if (mode == GridMode::point) {
      keys[i] = i;
      continue;
    }
    const Index ix = cell_index(p.x, spec.range_min[0], spec.cell_size[0], counts[0]);
    const Index iy = cell_index(p.y, spec.range_min[1], spec.cell_size[1], counts[1]);
    const Index iz = mode == GridMode::voxel
                         ? cell_index(p.z, spec.range_min[2], spec.cell_size[2], counts[2])
                         : 0;
    keys[i] = (static_cast<std::uint64_t>(ix) * counts[1] + iy) * counts[2] + iz;
  }

  // Members are ordered by value inside each cell so that the centroid sum is
  // independent of scan order.
  std::vector<Index> order(cloud.size());
  for (Index i = 0; i < order.size(); ++i) order[i] = i;
  auto point_tuple = [&](Index i) {
    const Point& p = cloud.points[i];
    return std::tie(p.x, p.y, p.z, p.intensity);
  };
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (keys[a] != keys[b]) return keys[a] < keys[b];
    return point_tuple(a) < point_tuple(b);
  });

  std::vector<std::pair<Index, Index>> groups;  // [begin, end) into order
  for (Index i = 0; i < order.size();) {
    Index j = i + 1;
    while (j < order.size() && keys[order[j]] == keys[order[i]]) ++j;
    groups.emplace_back(i, j);
    i = j;
  }

  FeatureGraph graph{Matrix(groups.size(), d), Matrix(groups.size(), 3),
                     std::vector<Index>(groups.size())};
  for (Index g = 0; g < groups.size(); ++g) {
    const auto [lo, hi] = groups[g];
    double cx = 0.0, cy = 0.0, cz = 0.0;
    for (Index k = lo; k < hi; ++k) {
      const Point& p = cloud.points[order[k]];
      cx += p.x;
      cy += p.y;
      cz += p.z;
    }
    const auto members = static_cast<double>(hi - lo);
    cx /= members;
    cy /= members;
    cz /= members;
    graph.positions(g, 0) = cx;
    graph.positions(g, 1) = cy;
    graph.positions(g, 2) = cz;
    graph.member_counts[g] = hi - lo;

    auto feat = graph.features.row(g);
    std::fill(feat.begin(), feat.end(), -std::numeric_limits<double>::infinity());
    for (Index k = lo; k < hi; ++k) {
      const Point& p = cloud.points[order[k]];
      const double desc[4] = {p.x - cx, p.y - cy, p.z - cz, p.intensity};
      for (Index c = 0; c < d; ++c) {
        double v = 0.0;
        for (Index a = 0; a < 4; ++a) v += desc[a] * encoder.map(a, c);
        feat[c] = std::max(feat[c], v);
      }
    }
  }
  return graph;
}

}  // namespace pcsa
