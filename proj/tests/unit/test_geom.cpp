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

#include "pcsa/error.hpp"
#include "pcsa/geom.hpp"
#include "pcsa/random.hpp"

using namespace pcsa;

TEST_CASE("fps on a line alternates between the extremes") {
  const Matrix p{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {10, 0, 0}};
  const IndexSet s = fps(p, 3);
  CHECK(s.indices == std::vector<Index>{0, 4, 3});
  CHECK(s.parent_n == 5);
}

TEST_CASE("fps breaks ties toward the lowest index") {
  const Matrix p{{0, 0, 0}, {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}};
  CHECK(fps(p, 2).indices == std::vector<Index>{0, 1});
  const Matrix dup{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  CHECK(fps(dup, 3).indices == std::vector<Index>{0, 1, 2});
}

TEST_CASE("fps prefix property") {
  Rng rng(9);
  const Matrix p = rng.uniform_matrix(64, 3, -5, 5);
  const IndexSet all = fps(p, 64, 7);
  for (Index m : {1, 5, 33}) {
    const IndexSet s = fps(p, m, 7);
    CHECK(std::equal(s.indices.begin(), s.indices.end(), all.indices.begin()));
  }
}

TEST_CASE("fps argument errors") {
  const Matrix p(4, 3);
  CHECK_THROWS_AS(fps(p, 0), ArgumentError);
  CHECK_THROWS_AS(fps(p, 5), ArgumentError);
  CHECK_THROWS_AS(fps(p, 2, 4), ArgumentError);
  CHECK_THROWS_AS(fps(Matrix(4, 2), 2), ArgumentError);
  CHECK(fps_random_start(p, 2, 11) == fps_random_start(p, 2, 11));
}

TEST_CASE("knn orders by distance then index") {
  const Matrix base{{1, 0, 0}, {0, 0, 0}, {-1, 0, 0}, {0, 2, 0}};
  const Matrix q{{0, 0, 0}};
  const Neighborhood nb = knn(q, base, 3);
  REQUIRE(nb.rows[0].size() == 3);
  CHECK(nb.rows[0][0] == Neighbor{1, 0.0});
  CHECK(nb.rows[0][1] == Neighbor{0, 1.0});
  CHECK(nb.rows[0][2] == Neighbor{2, 1.0});
  CHECK(knn(q, base, 10).rows[0].size() == 4);
}

TEST_CASE("ball query is inclusive at the radius") {
  const Matrix base{{0.5, 0, 0}, {0, 0, 0}, {0.5000001, 0, 0}, {0, 0.25, 0}};
  const Matrix q{{0, 0, 0}};
  const Neighborhood nb = ball_query(q, base, 0.5, 8);
  REQUIRE(nb.rows[0].size() == 3);
  CHECK(nb.rows[0][0].index == 1);
  CHECK(nb.rows[0][1].index == 3);
  CHECK(nb.rows[0][2].index == 0);
  CHECK(ball_query(q, base, 0.5, 2).rows[0].size() == 2);
  CHECK(ball_query(Matrix{{9, 9, 9}}, base, 0.5, 2).rows[0].empty());
  CHECK_THROWS_AS(ball_query(q, base, 0.0, 2), ArgumentError);
}

TEST_CASE("neighbor distances are recomputed from the inputs") {
  Rng rng(4);
  const Matrix base = rng.uniform_matrix(50, 3, -2, 2);
  const Matrix q = rng.uniform_matrix(10, 3, -2, 2);
  const Neighborhood nb = ball_query(q, base, 1.5, 16);
  for (Index i = 0; i < nb.size(); ++i) {
    for (const auto& n : nb.rows[i]) {
      CHECK(std::abs(n.dist2 - squared_distance(q, i, base, n.index)) <= 1e-12);
      CHECK(n.dist2 <= 2.25);
    }
  }
}
