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

#include "pcsa/error.hpp"
#include "pcsa/fsa.hpp"
#include "pcsa/geom.hpp"
#include "pcsa/verify.hpp"

using namespace pcsa;

namespace {

void check_close(std::span<const double> got, std::initializer_list<double> want,
                 double tol = 1e-12) {
  REQUIRE(got.size() == want.size());
  Index i = 0;
  for (double w : want) {
    CHECK(std::abs(got[i] - w) <= tol);
    ++i;
  }
}

// Three nodes, d = 4, two heads; reference values from
// tests/oracles/fsa_instance.py.
struct Instance {
  FeatureGraph graph;
  FsaWeights w;
};

Instance small_instance() {
  Instance in;
  in.graph.features = Matrix{{0.2, -0.1, 0.4, 0.0}, {1.0, 0.3, -0.5, 0.2}, {-0.3, 0.8, 0.1, -0.6}};
  in.graph.positions = Matrix{{0, 0, 0}, {1.0, 0.5, 0.0}, {-0.5, 1.0, 0.25}};
  FsaWeights& w = in.w;
  w.dim = 4;
  w.heads = 2;
  w.groups = 2;
  w.eps = 1e-5;
  w.wq = w.wk = w.wv = w.wo = Matrix(4, 4);
  w.wpos = Matrix(3, 4);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 4; ++j) {
      const double idx = static_cast<double>(i * 4 + j);
      w.wq(i, j) = std::sin(idx + 1.0) * 0.5;
      w.wk(i, j) = std::cos(idx + 2.0) * 0.5;
      w.wv(i, j) = std::sin(0.7 * idx) * 0.8;
      w.wo(i, j) = std::cos(0.3 * idx) * 0.6;
      if (i < 3) w.wpos(i, j) = std::sin(idx + 0.5) * 0.1;
    }
  }
  w.gamma = {1.0, 0.9, 1.1, 1.2};
  w.beta = {0.0, 0.05, -0.05, 0.1};
  return in;
}

}  // namespace

TEST_CASE("group norm matches the frozen reference") {
  const Matrix x{{0.5, -1.25, 2.0, 0.0, 3.5, -0.75, 1.0, 4.25}};
  const std::vector<double> gamma{1.0, 0.5, 2.0, 1.5, 1.0, 1.0, 0.25, 3.0};
  const std::vector<double> beta{0.0, 0.1, -0.2, 0.3, 0.0, -1.0, 0.5, 0.0};
  check_close(group_norm(x, 1, gamma, beta, 1e-5).values(),
              {-0.3572684166716793, -0.5549920972314121, 0.7186902142986038, -0.6442093869180094,
               1.2759586309702833, -2.037779686522497, 0.47873402281716193, 5.052796178642321});
  check_close(group_norm(x, 2, gamma, beta, 1e-5).values(),
              {0.16104784406262615, -0.5710326835942756, 2.6988611931272706, -0.1026196101565654,
               0.7529460175729797, -2.3804010322171294, 0.37450899707117, 3.388257079078409});
  check_close(group_norm(x, 4, gamma, beta, 1e-5).values(),
              {0.9999934694517277, -0.39999673472586383, 1.7999900000749995, -1.1999925000562495,
               0.9999988927354032, -1.999998892735403, 0.2500004733714366, 2.9999943195427607});
}

TEST_CASE("position encoding") {
  const Matrix f{{1.0, 2.0, 3.0, 4.0}, {-1.0, 0.5, 0.0, 2.5}};
  const Matrix p{{10.0, -2.0, 0.5}, {0.0, 4.0, -1.5}};
  const Matrix w{{0.1, 0.0, -0.2, 0.3}, {0.05, 0.5, 0.0, -0.1}, {1.0, -1.0, 0.25, 0.0}};
  check_close(encode_positions(f, p, w).values(), {2.4, 0.5, 1.125, 7.2, -2.3, 4.0, -0.375, 2.1},
              1e-14);
}

TEST_CASE("softmax is stable for large logits") {
  std::vector<double> row{1000.0, 1000.0, -1000.0};
  softmax_row(row);
  CHECK(row[0] == doctest::Approx(0.5));
  CHECK(row[1] == doctest::Approx(0.5));
  CHECK(row[2] == 0.0);
}

TEST_CASE("fsa forward matches the frozen instance") {
  const Instance in = small_instance();
  const AttentionOutput out = fsa_forward(in.graph, in.w);
  check_close(out.attention[0].values(),
              {0.31647280723469723, 0.3375301097179575, 0.3459970830473453, 0.28821247630730307,
               0.26764296925340963, 0.4441445544392873, 0.3968954154810544, 0.3751336381123769,
               0.22797094640656868});
  check_close(out.attention[1].values(),
              {0.30601315881392954, 0.37310510364133664, 0.32088173754473376, 0.3398606681051396,
               0.2755501550198388, 0.38458917687502164, 0.3779529702628819, 0.3126643614637055,
               0.3093826682734126});
  check_close(out.output.values(),
              {0.8881621242590734, -0.6693459118331658, 0.8842379488838923, -0.4828050351460629,
               0.0745476259775758, 1.1829071366201818, -1.5793594627659275, 1.4229375957446477,
               0.6529042581143929, -0.007613832302953538, 1.0431253103873706, -1.583409429513494});
  CHECK(max_abs_diff(out.update, out.output) > 0.0);
}

TEST_CASE("keep_attention off leaves the maps out but not the output") {
  const Instance in = small_instance();
  const AttentionOutput a = fsa_forward(in.graph, in.w);
  const AttentionOutput b = fsa_forward(in.graph, in.w, FsaOptions{false});
  CHECK(b.attention.empty());
  CHECK(a.output == b.output);
}

TEST_CASE("a single node attends to itself") {
  Rng rng(2);
  const FeatureGraph g = verify::random_graph(rng, 1, 8);
  const FsaWeights w = FsaWeights::random_full(8, 4, rng);
  const AttentionOutput out = fsa_forward(g, w);
  for (const auto& a : out.attention) CHECK(a(0, 0) == 1.0);
}

TEST_CASE("weight validation") {
  Rng rng(1);
  CHECK_THROWS_AS(FsaWeights::random(6, 4, rng), ArgumentError);
  CHECK_THROWS_AS(FsaWeights::random(0, 1, rng), ArgumentError);
  FsaWeights w = FsaWeights::random(8, 2, rng);
  CHECK(w.parameter_count() == 4 * 64 + 5 * 8);
  CHECK(w.groups == w.heads);
  w.wq = Matrix(8, 7);
  CHECK_THROWS_AS(w.validate(), ArgumentError);
  const FsaWeights ok = FsaWeights::random(8, 2, rng);
  FeatureGraph g = verify::random_graph(rng, 4, 6);
  CHECK_THROWS_AS(fsa_forward(g, ok), ArgumentError);
}

TEST_CASE("gradients agree with finite differences") {
  Rng rng(12);
  const Instance in = small_instance();
  const verify::GradientReport rep = verify::gradient_check(in.graph, in.w, rng);
  CHECK(rep.scalars == 12 + 9 + 4 * 16 + 12 + 4 + 4);
  CHECK(rep.max_rel_error < 1e-5);
}

TEST_CASE("a perturbed tape is caught by the gradient check") {
  Rng rng(12);
  const Instance in = small_instance();
  const verify::GradientReport rep = verify::gradient_check(in.graph, in.w, rng, 1e-5, true);
  CHECK(rep.max_rel_error > 1e-3);
}

TEST_CASE("replay reproduces the recorded output") {
  const Instance in = small_instance();
  GradTape tape;
  const AttentionOutput out = fsa_forward(in.graph, in.w, tape);
  CHECK(replay(tape) == out.output);
  CHECK(tape.inv_std.size() == 3 * 2);
}

TEST_CASE("local max-pool baseline") {
  FeatureGraph g;
  g.features = Matrix{{1, 0}, {0, 2}, {-1, -1}};
  g.positions = Matrix{{0, 0, 0}, {1, 0, 0}, {5, 0, 0}};
  const Neighborhood nb = knn(g.positions, g.positions, 2);
  const Matrix out = local_maxpool_baseline(g, nb, Matrix::identity(2));
  CHECK(out == Matrix{{1, 2}, {1, 2}, {0, 2}});
}
