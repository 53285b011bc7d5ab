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

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "pcsa/error.hpp"
#include "pcsa/pcio.hpp"

using namespace pcsa;
namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> encode(const std::vector<std::array<float, 4>>& pts) {
  std::vector<unsigned char> out(pts.size() * 16);
  std::memcpy(out.data(), pts.data(), out.size());
  return out;
}

GridSpec unit_grid() {
  return GridSpec{{0, 0, -1}, {4, 4, 1}, {1, 1, 2}};
}

}  // namespace

TEST_CASE("scan decoding") {
  const auto bytes = encode({{1.f, 2.f, 3.f, 0.5f}, {-1.f, 0.f, 0.f, 2.f}, {0.f, 0.f, 0.f, -1.f}});
  const PointCloud c = decode_scan(bytes);
  REQUIRE(c.size() == 3);
  CHECK(c.points[0] == Point{1, 2, 3, 0.5});
  CHECK(c.points[1].intensity == 1.0);
  CHECK(c.points[2].intensity == 0.0);
}

TEST_CASE("truncated or non-finite scans are format errors") {
  auto bytes = encode({{1.f, 2.f, 3.f, 0.5f}});
  bytes.pop_back();
  CHECK_THROWS_AS(decode_scan(bytes), FormatError);
  CHECK_THROWS_AS(decode_scan(encode({{1.f, NAN, 0.f, 0.f}})), FormatError);
  CHECK(decode_scan({}).empty());
}

TEST_CASE("scan files round-trip") {
  const fs::path p = fs::temp_directory_path() / "pcsa_test_scan.bin";
  PointCloud c;
  c.points = {{1.5, -2.25, 0.125, 0.75}, {10, 20, -3, 0}};
  save_scan(p, c);
  CHECK(load_scan(p) == c);
  CHECK(fs::file_size(p) == 32);
  fs::remove(p);
  CHECK_THROWS_AS(load_scan(p), IoError);
}

TEST_CASE("grid validation and cell counts") {
  const GridSpec kitti{{0, -40, -3}, {70.4, 40, 1}, {0.16, 0.16, 4}};
  const auto pillars = kitti.cell_counts(GridMode::pillar);
  CHECK(pillars[0] == 440);
  CHECK(pillars[1] == 500);
  CHECK(pillars[2] == 1);
  const GridSpec voxels{{0, -40, -3}, {70.4, 40, 1}, {0.05, 0.05, 0.1}};
  const auto v = voxels.cell_counts(GridMode::voxel);
  CHECK(v[0] == 1408);
  CHECK(v[1] == 1600);
  CHECK(v[2] == 40);
  CHECK_THROWS_AS(GridSpec({{0, 0, 0}, {0, 1, 1}, {1, 1, 1}}).validate(GridMode::pillar),
                  ArgumentError);
  CHECK_THROWS_AS(GridSpec({{0, 0, 0}, {1, 1, 1}, {0, 1, 1}}).validate(GridMode::voxel),
                  ArgumentError);
  CHECK_THROWS_AS(parse_grid_mode("bev"), ArgumentError);
  CHECK(parse_grid_mode("voxel") == GridMode::voxel);
}

TEST_CASE("crop keeps the half-open range") {
  PointCloud c;
  c.points = {{0, 0, 0, 0}, {4, 1, 0, 0}, {3.999, 3.999, 0.999, 0}, {-0.001, 1, 0, 0}};
  const PointCloud kept = crop_range(c, unit_grid());
  REQUIRE(kept.size() == 2);
  CHECK(kept.points[1].x == 3.999);
}

TEST_CASE("pillar discretization pools members into one node") {
  EncoderWeights enc{Matrix{{1, 0}, {0, 1}, {0, 0}, {0, 0}}};
  PointCloud c;
  c.points = {{0.2, 0.5, 0.0, 0.1}, {0.6, 0.9, -0.5, 0.3}, {2.5, 2.5, 0.5, 0.9}};
  const FeatureGraph g = discretize(c, unit_grid(), GridMode::pillar, enc);
  REQUIRE(g.size() == 2);
  CHECK(g.member_counts == std::vector<Index>{2, 1});
  CHECK(g.positions(0, 0) == doctest::Approx(0.4));
  CHECK(g.positions(0, 1) == doctest::Approx(0.7));
  CHECK(g.positions(0, 2) == doctest::Approx(-0.25));
  // max over members of the centred x and y offsets
  CHECK(g.features(0, 0) == doctest::Approx(0.2));
  CHECK(g.features(0, 1) == doctest::Approx(0.2));
  CHECK(g.features(1, 0) == 0.0);
}

TEST_CASE("discretization ignores scan order") {
  Rng rng(5);
  PointCloud c;
  for (int i = 0; i < 300; ++i) {
    c.points.push_back({rng.uniform(0, 4), rng.uniform(0, 4), rng.uniform(-1, 1), rng.uniform(0, 1)});
  }
  const EncoderWeights enc = EncoderWeights::random(8, rng);
  const FeatureGraph a = discretize(c, unit_grid(), GridMode::pillar, enc);
  std::vector<Index> order(c.size());
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order);
  PointCloud shuffled;
  for (Index i : order) shuffled.points.push_back(c.points[i]);
  CHECK(discretize(shuffled, unit_grid(), GridMode::pillar, enc) == a);
  CHECK(a.size() <= 16);
}

TEST_CASE("voxel and point modes") {
  EncoderWeights enc{Matrix{{1}, {1}, {1}, {1}}};
  PointCloud c;
  c.points = {{0.5, 0.5, -0.5, 0}, {0.5, 0.5, 0.5, 0}, {0.7, 0.5, 0.5, 0}};
  CHECK(discretize(c, unit_grid(), GridMode::pillar, enc).size() == 1);
  const GridSpec fine{{0, 0, -1}, {4, 4, 1}, {1, 1, 1}};
  CHECK(discretize(c, fine, GridMode::voxel, enc).size() == 2);
  CHECK(discretize(c, fine, GridMode::point, enc).size() == 3);
  c.points.push_back({9, 9, 9, 0});
  CHECK_THROWS_AS(discretize(c, fine, GridMode::point, enc), ArgumentError);
}
