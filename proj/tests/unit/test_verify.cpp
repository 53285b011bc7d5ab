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

#include "pcsa/verify.hpp"

using namespace pcsa;

TEST_CASE("every check passes across seeds") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    verify::CheckOptions opt;
    opt.seed = seed;
    for (const auto& r : verify::run_checks(opt)) {
      CAPTURE(seed);
      CAPTURE(r.name);
      CAPTURE(r.detail);
      CHECK(r.passed);
    }
  }
}

TEST_CASE("single checks by name") {
  const auto names = verify::check_names();
  CHECK(names.size() == 16);
  CHECK(verify::run_check("geom.oracles", {}).passed);
  CHECK_THROWS(verify::run_check("no.such.check", {}));
}

TEST_CASE("oracle helpers agree with themselves under permutation") {
  Rng rng(6);
  const FeatureGraph g = verify::random_graph(rng, 6, 4);
  const std::vector<Index> perm{5, 4, 3, 2, 1, 0};
  const FeatureGraph p = verify::permute(g, perm);
  CHECK(p.features(0, 0) == g.features(5, 0));
  CHECK(verify::permute(p, perm) == g);
}
