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
#include <fstream>
#include <unistd.h>

#include "pcsa/cli.hpp"
#include "pcsa/pcio.hpp"

using namespace pcsa;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = PCSA_SOURCE_DIR;

struct Scratch {
  fs::path dir = fs::temp_directory_path() / ("pcsa_cli_test_" + std::to_string(getpid()));
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

fs::path scratch() {
  static Scratch s;
  fs::create_directories(s.dir);
  return s.dir;
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "pcsa");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path small_config() {
  const fs::path p = scratch() / "small.json";
  std::ofstream(p) << R"({
  "schema_version": 1, "name": "small", "backbone": "PointPillars", "variant": "dsa",
  "dataset": "kitti",
  "grid": {"mode": "pillar", "range_min": [0, -40, -3], "range_max": [70.4, 40, 1],
           "cell_size": [1.0, 1.0, 4.0]},
  "encoder": {"input_channels": 10, "channels": 8},
  "attention": {"kind": "dsa", "layers": 2, "heads": 2, "dim": 8, "position_encoding": true,
                "stages": [{"name": "pillars", "channels": 8, "nodes": "pillars"}],
                "keypoints": 64, "deform_radius": 3.0, "pool_radius": 2.0, "neighbors": 16,
                "upsample": "idw", "interp_mlp_dim": 8, "interp_radius": 1.6,
                "interp_samples": 16}
})";
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const fs::path kScan = kRoot / "data" / "sample_scan.bin";

}  // namespace

TEST_CASE("extract writes every artifact and a manifest") {
  const fs::path out = scratch() / "ex";
  REQUIRE(run({"extract", "--scan", kScan.string(), "--config", small_config().string(), "--out",
               out.string(), "--seed", "3"}) == cli::kOk);
  for (const char* f : {"graph_before.bin", "graph_before.json", "graph_after.bin",
                        "dsa_diagnostics.json", "manifest.json", "weights/encoder.bin",
                        "weights/layer1.json", "attention/layer1_head1.csv"}) {
    CAPTURE(f);
    CHECK(fs::exists(out / f));
  }
  CHECK_FALSE(fs::exists(out / "attention/layer0_head0.csv"));
  const Json diag = read_json(out / "dsa_diagnostics.json");
  CHECK(diag["layers"][0]["indices"].size() == 64);
  const Json m = read_json(out / "manifest.json");
  CHECK(m["command"] == "extract");
  CHECK(m["seed"] == 3);
  CHECK(m["artifacts"].size() > 8);
}

TEST_CASE("extract is reproducible, also from saved weights") {
  const fs::path a = scratch() / "ra", b = scratch() / "rb", c = scratch() / "rc";
  const std::string cfg = small_config().string();
  REQUIRE(run({"extract", "--scan", kScan.string(), "--config", cfg, "--out", a.string()}) == 0);
  REQUIRE(run({"extract", "--scan", kScan.string(), "--config", cfg, "--out", b.string(),
               "--threads", "3"}) == 0);
  REQUIRE(run({"extract", "--scan", kScan.string(), "--config", cfg, "--out", c.string(),
               "--seed", "99", "--weights", (a / "weights").string()}) == 0);
  for (const char* f : {"graph_after.bin", "dsa_diagnostics.json", "attention/layer1_head0.csv"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / f) == slurp(c / f));
  }
}

TEST_CASE("fsa mode on a dsa config") {
  const fs::path out = scratch() / "fsa";
  REQUIRE(run({"extract", "--scan", kScan.string(), "--config", small_config().string(),
               "--mode", "fsa", "--out", out.string(), "--attention-limit", "10"}) == 0);
  const Json diag = read_json(out / "dsa_diagnostics.json");
  CHECK(diag["mode"] == "fsa");
  CHECK(diag["attention_exported"] == false);
}

TEST_CASE("extract failure classes") {
  const fs::path empty = scratch() / "empty.bin";
  std::ofstream(empty).close();
  const std::string cfg = small_config().string();
  const std::string out = (scratch() / "fail").string();
  CHECK(run({"extract", "--scan", empty.string(), "--config", cfg, "--out", out}) == cli::kValidation);
  CHECK(run({"extract", "--scan", (scratch() / "nope.bin").string(), "--config", cfg, "--out", out}) ==
        cli::kIo);
  PointCloud far;
  far.points = {{-50, 0, 0, 0}};
  save_scan(scratch() / "far.bin", far);
  CHECK(run({"extract", "--scan", (scratch() / "far.bin").string(), "--config", cfg, "--out", out}) ==
        cli::kValidation);
  const fs::path bad = scratch() / "bad.json";
  std::ofstream(bad) << R"({"schema_version": 1})";
  CHECK(run({"extract", "--scan", kScan.string(), "--config", bad.string(), "--out", out}) ==
        cli::kValidation);
  CHECK(run({"extract", "--scan", kScan.string()}) == cli::kUsage);
  CHECK(run({"extract", "--scan", kScan.string(), "--config", cfg, "--mode", "sparse"}) ==
        cli::kUsage);
}

TEST_CASE("bench arguments and output") {
  const fs::path out = scratch() / "bench";
  CHECK(run({"bench", "--sizes", "64", "--repeats", "0", "--out", out.string()}) == cli::kUsage);
  CHECK(run({"bench", "--sizes", "100000", "--max-memory-mb", "1", "--out", out.string()}) ==
        cli::kRefused);
  REQUIRE(run({"bench", "--sizes", "40,80", "--keypoints", "40", "--dim", "8", "--heads", "2",
               "--repeats", "1", "--out", out.string()}) == cli::kOk);
  const std::string csv = slurp(out / "bench.csv");
  CHECK(csv.find("n,m,fsa_median_s") != std::string::npos);
  CHECK(csv.find("# hardware_threads=") != std::string::npos);
  CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("bench attention flops coincide when m equals n") {
  cli::BenchRequest req;
  req.sizes = {48};
  req.keypoints = 48;
  req.dim = 8;
  req.heads = 2;
  req.repeats = 1;
  const auto rows = cli::run_bench(req);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].fsa_attention_flops == rows[0].dsa_attention_flops);
  CHECK(rows[0].fsa_score_flops == rows[0].dsa_score_flops);
  CHECK(cli::bench_memory_estimate(8192, 64, 4) > 8192ULL * 8192 * 8);
}

TEST_CASE("cost command") {
  const fs::path out = scratch() / "cost";
  const fs::path kitti = kRoot / "configs" / "kitti";
  CHECK(run({"cost", "--config", (kitti / "pp.json").string(), "--out", out.string()}) == 0);
  Json doc = read_json(out / "cost.json");
  CHECK(doc["reports"].size() == 1);
  CHECK_FALSE(doc.contains("comparisons"));
  CHECK(run({"cost", "--pairs", (kitti / "pairs.json").string(), "--out", out.string()}) == 0);
  doc = read_json(out / "cost.json");
  CHECK(doc["comparisons"].size() == 8);
  CHECK(run({"cost", "--out", out.string()}) == cli::kUsage);
  const fs::path bad = scratch() / "badcost.json";
  Json cfg = read_json(kitti / "pp.json");
  cfg["conv2d"]["num_filters"] = "many";
  write_json(bad, cfg);
  CHECK(run({"cost", "--config", bad.string(), "--out", out.string()}) == cli::kValidation);
}

TEST_CASE("check command and its negative control") {
  const fs::path out = scratch() / "check";
  CHECK(run({"check", "--out", out.string()}) == cli::kOk);
  CHECK(run({"check", "--inject-fault", "gradient", "--out", out.string()}) == cli::kCheckFailed);
  const Json doc = read_json(out / "check.json");
  bool named = false;
  for (const auto& r : doc) {
    if (r["name"] == "fsa.gradient") named = r["passed"] == false;
  }
  CHECK(named);
  CHECK(run({"check", "--inject-fault", "bias"}) == cli::kUsage);
}
