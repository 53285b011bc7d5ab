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

#include <cstdint>
#include <vector>

#include "pcsa/matrix.hpp"

namespace pcsa {

// Ordered subset of node indices into a graph of parent_n nodes.
struct IndexSet {
  std::vector<Index> indices;
  Index parent_n = 0;

  Index size() const noexcept { return indices.size(); }
  bool operator==(const IndexSet&) const = default;
};

struct Neighbor {
  Index index = 0;
  double dist2 = 0.0;  // squared Euclidean distance, m^2

  bool operator==(const Neighbor&) const = default;
};

// Per query row: neighbors sorted by ascending distance, ties by index.
struct Neighborhood {
  std::vector<std::vector<Neighbor>> rows;

  Index size() const noexcept { return rows.size(); }
  bool operator==(const Neighborhood&) const = default;
};

double squared_distance(const Matrix& a, Index i, const Matrix& b, Index j);

// Greedy max-min farthest point sampling from `start`; ties go to the lowest index.
IndexSet fps(const Matrix& positions, Index m, Index start = 0);
// Same, with the start node drawn from a seeded generator.
IndexSet fps_random_start(const Matrix& positions, Index m, std::uint64_t seed);

Neighborhood knn(const Matrix& query, const Matrix& base, Index k);

// Up to max_samples nearest base points with dist2 <= radius^2. A row may be
// empty; callers pick their own fallback.
Neighborhood ball_query(const Matrix& query, const Matrix& base, double radius,
                        Index max_samples);

}  // namespace pcsa
