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

#include <filesystem>
#include <map>

#include "pcsa/costmodel.hpp"
#include "pcsa/error.hpp"

using namespace pcsa;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(PCSA_SOURCE_DIR) / "configs";

CountingRules rules() { return load_counting_rules(kConfigs / "counting_rules.json"); }

ArchConfig kitti(const std::string& name) { return load_config(kConfigs / "kitti" / name); }

std::string config_error(const Json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

}  // namespace

TEST_CASE("attention layer cost matches the closed form") {
  // tests/oracles/fsa_block_cost.py
  const AttentionCost c = fsa_layer_cost(5000, 64, 64, true);
  CHECK(c.params == 16704);
  CHECK(c.flops() == 6565760000ULL);
  CHECK(c.score_flops == 3200000000ULL);
  std::map<std::string, Count> terms;
  for (const auto& t : c.terms) terms[t.term] = t.flops;
  CHECK(terms.size() == 5);
  const AttentionCost no_pos = fsa_layer_cost(5000, 64, 64, false);
  CHECK(c.params - no_pos.params == 3 * 64);
}

TEST_CASE("deformable layer evaluates scores on the keypoints") {
  const ArchConfig cfg = kitti("dsa_pp.json");
  const AttentionCost c = dsa_layer_cost(5000, 2048, 64, *cfg.attention);
  CHECK(c.score_flops == 536870912ULL);
  const AttentionCost full = dsa_layer_cost(5000, 5000, 64, *cfg.attention);
  CHECK(full.score_flops == fsa_layer_cost(5000, 64, 64, true).score_flops);
}

TEST_CASE("shipped configurations count to the frozen totals") {
  const CountingRules r = rules();
  const std::map<std::string, Count> want = {
      {"pp.json", 4834888},          {"pp_red.json", 1514824},
      {"fsa_pp.json", 826568},       {"dsa_pp.json", 843342},
      {"second.json", 4613704},      {"second_red.json", 2459080},
      {"fsa_second.json", 2007752},  {"dsa_second.json", 2024526},
      {"pointrcnn.json", 4038819},   {"pointrcnn_red.json", 2183923},
      {"fsa_pointrcnn.json", 2886643}, {"dsa_pointrcnn.json", 5910527},
      {"pvrcnn.json", 12403825},     {"fsa_pvrcnn.json", 9962993},
      {"dsa_pvrcnn.json", 12635255},
  };
  for (const auto& [file, params] : want) {
    CAPTURE(file);
    CHECK(count_params(kitti(file), r).params == params);
  }
  CHECK(count_params(kitti("second.json"), r).excluded_params == 711872);
}

TEST_CASE("flop report uses the reference node counts") {
  const CountingRules r = rules();
  const ReferenceInputs in = load_reference_inputs(kConfigs / "reference_inputs.json");
  CHECK(in.resolve("kitti", NodeCount{std::string("pillars")}) == 5000);
  CHECK_THROWS_AS(in.resolve("kitti", NodeCount{std::string("rays")}), ArgumentError);
  const CostReport pp = count_flops(kitti("pp.json"), r, in);
  const CostReport fsa = count_flops(kitti("fsa_pp.json"), r, in);
  CHECK(pp.params == count_params(kitti("pp.json"), r).params);
  const Comparison c = compare(pp, fsa);
  CHECK(c.param_change_pct == doctest::Approx(-82.90).epsilon(1e-3));
  CHECK(c.flop_change_pct < 0.0);
  CostOptions more;
  more.attention_nodes = 10000;
  CHECK(count_flops(kitti("fsa_pp.json"), r, in, more).flops > fsa.flops);
  CHECK(count_flops(kitti("fsa_pp.json"), r, in, more).params == fsa.params);
}

TEST_CASE("configs survive serialization") {
  for (const auto& e : fs::directory_iterator(kConfigs / "kitti")) {
    if (e.path().filename() == "pairs.json") continue;
    CAPTURE(e.path().filename().string());
    const ArchConfig cfg = load_config(e.path());
    CHECK(parse_config(serialize_config(cfg)) == cfg);
  }
}

TEST_CASE("schema errors carry the field path") {
  Json doc = serialize_config(kitti("fsa_pp.json"));
  Json bad = doc;
  bad["attention"]["heads"] = 3;
  CHECK(config_error(bad) == "/attention/heads");
  bad = doc;
  bad["attention"]["colour"] = "red";
  CHECK(config_error(bad) == "/attention/colour");
  bad = doc;
  bad["conv2d"]["layer_nums"][1] = -1;
  CHECK(config_error(bad) == "/conv2d/layer_nums/1");
  bad = doc;
  bad.erase("name");
  CHECK(config_error(bad) == "/name");
  bad = doc;
  bad["attention"]["kind"] = "dsa";
  CHECK(config_error(bad) == "/attention/keypoints");
  bad = doc;
  bad["conv2d"]["input_channels"] = 32;
  CHECK(config_error(bad) == "/conv2d/input_channels");
  CHECK(config_error(doc).empty());
}

TEST_CASE("text and json reports") {
  const CostReport r = count_params(kitti("fsa_pp.json"), rules());
  const std::string text = format_report_text(r);
  CHECK(text.find("total") != std::string::npos);
  CHECK(text.find("826,568") != std::string::npos);
  const Json j = report_json(r);
  CHECK(j["params"] == 826568);
  CHECK(j["flops_per_mac"] == 2);
}
