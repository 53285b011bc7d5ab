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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pcsa/costmodel.hpp"
#include "pcsa/error.hpp"
#include "pcsa/io.hpp"

namespace pcsa::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kValidation = 3,
  kIo = 4,
  kCheckFailed = 5,
  kRefused = 6,
};

// Raised when a run is declined before any work starts, e.g. a benchmark
// whose attention buffers would not fit in memory.
class RefusalError : public Error {
 public:
  using Error::Error;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct Artifact {
  std::string path;  // relative to the output directory
  std::uint64_t bytes = 0;
  std::string digest;  // fnv1a-64, hex
};

std::string fnv1a_hex(const std::filesystem::path& file);

struct ExtractRequest {
  std::filesystem::path scan;
  std::filesystem::path config;
  std::string mode;  // fsa | dsa; empty = the config's attention kind
  std::filesystem::path out;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> weights;
  Index attention_limit = 2048;
};

struct ExtractSummary {
  Index points_loaded = 0;
  Index points_in_range = 0;
  Index nodes = 0;
  std::string mode;
  Index layers = 0;
  std::vector<StageTiming> timings;
  std::vector<Artifact> artifacts;  // manifest excluded
};

// Writes graph_before, graph_after, weights/, attention/, dsa_diagnostics.json
// and manifest.json below request.out.
ExtractSummary run_extract(const ExtractRequest& request);

struct BenchRequest {
  std::vector<Index> sizes;
  Index keypoints = 2048;
  Index dim = 64;
  Index heads = 4;
  Index repeats = 3;
  std::uint64_t seed = 0;
  double extent = 40.0;        // half-width of the synthetic cube, m
  double memory_limit_mb = 0;  // 0 = half of the available memory
};

struct BenchRow {
  Index n = 0;
  Index m = 0;
  double fsa_median_s = 0.0;
  double dsa_median_s = 0.0;
  Count fsa_score_flops = 0;
  Count dsa_score_flops = 0;
  Count fsa_attention_flops = 0;
  Count dsa_attention_flops = 0;
};

std::uint64_t bench_memory_estimate(Index n, Index dim, Index heads);
double available_memory_mb();
std::vector<BenchRow> run_bench(const BenchRequest& request);
void write_bench_csv(const std::filesystem::path& path, const BenchRequest& request,
                     const std::vector<BenchRow>& rows);
Json machine_metadata();

// Locates a shipped configuration file by trying the working directory and
// then the installed source tree.
std::filesystem::path default_config_path(const std::string& relative);

int run(int argc, const char* const* argv);

}  // namespace pcsa::cli
