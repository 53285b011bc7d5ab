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

#include "pcsa/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pcsa/error.hpp"
#include "pcsa/parallel.hpp"
#include "pcsa/random.hpp"

namespace pcsa {
namespace {

void require_xyz(const Matrix& m, const char* what) {
  if (m.cols() != 3) throw ArgumentError(std::string(what) + ": positions must be n x 3");
}

bool nearer(const Neighbor& a, const Neighbor& b) {
  return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}

}  // namespace

double squared_distance(const Matrix& a, Index i, const Matrix& b, Index j) {
  const double dx = a(i, 0) - b(j, 0);
  const double dy = a(i, 1) - b(j, 1);
  const double dz = a(i, 2) - b(j, 2);
  return dx * dx + dy * dy + dz * dz;
}

IndexSet fps(const Matrix& positions, Index m, Index start) {
  require_xyz(positions, "fps");
  const Index n = positions.rows();
  if (m == 0 || m > n)
    throw ArgumentError("fps: need 1 <= m <= n (m=" + std::to_string(m) +
                        ", n=" + std::to_string(n) + ")");
  if (start >= n) throw ArgumentError("fps: start index out of range");

  IndexSet out{{}, n};
  out.indices.reserve(m);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  Index current = start;
  for (Index step = 0; step < m; ++step) {
    out.indices.push_back(current);
    nearest[current] = -1.0;  // selected nodes never win again
    Index best = n;
    double best_dist = -1.0;
    for (Index j = 0; j < n; ++j) {
      if (nearest[j] < 0.0) continue;
      const double d = squared_distance(positions, current, positions, j);
      if (d < nearest[j]) nearest[j] = d;
      if (nearest[j] > best_dist) {
        best_dist = nearest[j];
        best = j;
      }
    }
    if (best == n) break;
    current = best;
  }
  return out;
}

IndexSet fps_random_start(const Matrix& positions, Index m, std::uint64_t seed) {
  require_xyz(positions, "fps");
  if (positions.rows() == 0) throw ArgumentError("fps: empty point set");
  Rng rng(seed);
  return fps(positions, m, rng.below(positions.rows()));
}

Neighborhood knn(const Matrix& query, const Matrix& base, Index k) {
  require_xyz(query, "knn");
  require_xyz(base, "knn");
  if (base.rows() == 0) throw ArgumentError("knn: empty base set");
  if (k == 0) throw ArgumentError("knn: k must be positive");
  const Index take = std::min(k, base.rows());
  Neighborhood out;
  out.rows.resize(query.rows());
  parallel_for(0, query.rows(), [&](Index lo, Index hi) {
    std::vector<Neighbor> all(base.rows());
    for (Index q = lo; q < hi; ++q) {
      for (Index j = 0; j < base.rows(); ++j) all[j] = {j, squared_distance(query, q, base, j)};
      std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                        nearer);
      out.rows[q].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take));
    }
  }, 16);
  return out;
}

Neighborhood ball_query(const Matrix& query, const Matrix& base, double radius,
                        Index max_samples) {
  require_xyz(query, "ball_query");
  require_xyz(base, "ball_query");
  if (!(radius > 0.0)) throw ArgumentError("ball_query: radius must be positive");
  if (max_samples == 0) throw ArgumentError("ball_query: max_samples must be positive");
  const double r2 = radius * radius;
  Neighborhood out;
  out.rows.resize(query.rows());
  parallel_for(0, query.rows(), [&](Index lo, Index hi) {
    std::vector<Neighbor> inside;
    for (Index q = lo; q < hi; ++q) {
      inside.clear();
      for (Index j = 0; j < base.rows(); ++j) {
        const double d = squared_distance(query, q, base, j);
        if (d <= r2) inside.push_back({j, d});
      }
      const Index take = std::min(max_samples, inside.size());
      std::partial_sort(inside.begin(), inside.begin() + static_cast<std::ptrdiff_t>(take),
                        inside.end(), nearer);
      out.rows[q].assign(inside.begin(), inside.begin() + static_cast<std::ptrdiff_t>(take));
    }
  }, 16);
  return out;
}

}  // namespace pcsa
