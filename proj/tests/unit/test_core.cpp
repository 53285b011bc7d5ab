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

#include <cmath>
#include <limits>
#include <numeric>

#include "pcsa/matrix.hpp"
#include "pcsa/parallel.hpp"
#include "pcsa/random.hpp"

using namespace pcsa;

TEST_CASE("matmul against a worked product") {
  const Matrix a{{1, 2, 3}, {4, 5, 6}};
  const Matrix b{{7, 8}, {9, 10}, {11, 12}};
  const Matrix c = matmul(a, b);
  CHECK(c == Matrix{{58, 64}, {139, 154}});
}

TEST_CASE("transposed products agree with explicit transposes") {
  Rng rng(3);
  const Matrix a = rng.uniform_matrix(5, 4, -1, 1);
  const Matrix b = rng.uniform_matrix(5, 3, -1, 1);
  const Matrix c = rng.uniform_matrix(6, 4, -1, 1);
  CHECK(max_abs_diff(matmul_tn(a, b), matmul(transpose(a), b)) < 1e-15);
  CHECK(max_abs_diff(matmul_nt(a, c), matmul(a, transpose(c))) < 1e-15);
}

TEST_CASE("shape mismatch is rejected") {
  CHECK_THROWS(matmul(Matrix(2, 3), Matrix(2, 3)));
  Matrix a(2, 2);
  CHECK_THROWS(add_inplace(a, Matrix(3, 2)));
}

TEST_CASE("gather_rows and identity") {
  const Matrix a{{1, 1}, {2, 2}, {3, 3}};
  const std::vector<Index> idx{2, 0, 2};
  CHECK(gather_rows(a, idx) == Matrix{{3, 3}, {1, 1}, {3, 3}});
  CHECK(matmul(a, Matrix::identity(2)) == a);
}

TEST_CASE("all_finite flags nan and inf") {
  Matrix a(2, 2, 1.0);
  CHECK(all_finite(a));
  a(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(all_finite(a));
  a(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_FALSE(all_finite(a));
}

TEST_CASE("parallel_for covers every index exactly once") {
  const std::size_t saved = thread_count();
  for (std::size_t threads : {1u, 3u, 8u}) {
    set_thread_count(threads);
    std::vector<int> hits(1000, 0);
    parallel_for(0, hits.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) ++hits[i];
    }, 16);
    CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 1000);
    CHECK(*std::min_element(hits.begin(), hits.end()) == 1);
  }
  set_thread_count(saved);
}

TEST_CASE("rng streams are reproducible") {
  Rng a(42), b(42), c(43);
  const Matrix x = a.uniform_matrix(3, 3, 0, 1);
  CHECK(x == b.uniform_matrix(3, 3, 0, 1));
  CHECK_FALSE(x == c.uniform_matrix(3, 3, 0, 1));
  for (int i = 0; i < 100; ++i) CHECK(a.below(7) < 7);
}

TEST_CASE("glorot draws stay inside the uniform limit") {
  Rng rng(1);
  const Matrix w = rng.glorot(64, 32);
  const double limit = std::sqrt(6.0 / 96.0);
  for (double v : w.values()) CHECK(std::abs(v) <= limit);
}
