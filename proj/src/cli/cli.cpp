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

#include "pcsa/cli.hpp"

#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "pcsa/dsa.hpp"
#include "pcsa/error.hpp"
#include "pcsa/fsa.hpp"
#include "pcsa/parallel.hpp"
#include "pcsa/pcio.hpp"
#include "pcsa/verify.hpp"

#ifndef PCSA_CONFIG_DIR
#define PCSA_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;

namespace pcsa::cli {
namespace {

using Clock = std::chrono::steady_clock;

class Stopwatch {
 public:
  explicit Stopwatch(std::vector<StageTiming>& sink) : sink_(sink) {}

  template <class F>
  auto stage(const std::string& name, F&& body) {
    const auto t0 = Clock::now();
    struct Record {
      std::vector<StageTiming>& sink;
      std::string name;
      Clock::time_point t0;
      ~Record() {
        sink.push_back({name, std::chrono::duration<double>(Clock::now() - t0).count()});
      }
    } rec{sink_, name, t0};
    return body();
  }

 private:
  std::vector<StageTiming>& sink_;
};

Json timings_json(const std::vector<StageTiming>& t) {
  Json out = Json::array();
  for (const auto& s : t) out.push_back({{"stage", s.stage}, {"seconds", s.seconds}});
  return out;
}

Json artifacts_json(const std::vector<Artifact>& a) {
  Json out = Json::array();
  for (const auto& x : a) out.push_back({{"path", x.path}, {"bytes", x.bytes}, {"fnv1a64", x.digest}});
  return out;
}

Json base_manifest(const std::string& command, std::uint64_t seed, const fs::path& out) {
  Json m;
  m["format"] = "pcsa-manifest";
  m["version"] = 1;
  m["command"] = command;
  m["seed"] = seed;
  m["threads"] = thread_count();
  m["out"] = out.string();
  return m;
}

Artifact describe(const fs::path& root, const fs::path& file) {
  return {fs::relative(file, root).generic_string(), fs::file_size(file), fnv1a_hex(file)};
}

void add_bundle(std::vector<Artifact>& list, const fs::path& root, const fs::path& stem) {
  list.push_back(describe(root, fs::path(stem).concat(".bin")));
  list.push_back(describe(root, fs::path(stem).concat(".json")));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string stage_error(const std::string& stage, const std::string& what) {
  return "stage '" + stage + "': " + what;
}

Json matrix_rows(const Matrix& m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    out.push_back(Json(std::vector<double>(r.begin(), r.end())));
  }
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const Index k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

DsaConfig dsa_config_of(const AttentionConfig& att) {
  DsaConfig cfg;
  if (att.keypoints) cfg.keypoints = *att.keypoints;
  if (att.deform_radius) cfg.deform_radius = *att.deform_radius;
  if (att.pool_radius) cfg.pool_radius = *att.pool_radius;
  if (att.neighbors) cfg.neighbors = *att.neighbors;
  return cfg;
}

}  // namespace

std::string fnv1a_hex(const fs::path& file) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : read_bytes(file)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

fs::path default_config_path(const std::string& relative) {
  const fs::path local = fs::path("configs") / relative;
  if (fs::exists(local)) return local;
  return fs::path(PCSA_CONFIG_DIR) / relative;
}

ExtractSummary run_extract(const ExtractRequest& req) {
  ExtractSummary sum;
  Stopwatch watch(sum.timings);

  const ArchConfig cfg = watch.stage("config", [&] { return load_config(req.config); });
  if (!cfg.grid) throw ConfigError("/grid", "extract needs a grid section");
  if (!cfg.attention) throw ConfigError("/attention", "extract needs an attention section");
  const AttentionConfig& att = *cfg.attention;
  const Index dim = cfg.encoder ? cfg.encoder->channels : att.dim;
  if (att.dim != dim) {
    throw ConfigError("/attention/dim", "must equal the encoder width " + std::to_string(dim));
  }
  sum.mode = req.mode.empty() ? att.kind : req.mode;
  if (sum.mode != "fsa" && sum.mode != "dsa") {
    throw ArgumentError("--mode must be fsa or dsa, got '" + sum.mode + "'");
  }
  const bool dsa = sum.mode == "dsa";
  const DsaConfig dcfg = dsa_config_of(att);
  UpsampleMode up_mode = UpsampleMode::idw;
  if (dsa) {
    dcfg.validate();
    if (att.upsample) up_mode = parse_upsample_mode(*att.upsample);
    if (att.interp_mlp_dim && *att.interp_mlp_dim != dim) {
      throw ConfigError("/attention/interp_mlp_dim", "must equal the feature width for extract");
    }
  }
  sum.layers = att.layers;

  // Weights: loaded from a previous run or drawn from the seed.
  EncoderWeights encoder;
  std::vector<FsaWeights> fsa_layers;
  std::vector<DsaWeights> dsa_layers;
  watch.stage("weights", [&] {
    if (req.weights) {
      encoder = encoder_from(read_bundle(*req.weights / "encoder"));
      for (Index l = 0; l < att.layers; ++l) {
        const TensorBundle b = read_bundle(*req.weights / ("layer" + std::to_string(l)));
        if (dsa) {
          dsa_layers.push_back(dsa_weights_from(b));
        } else {
          fsa_layers.push_back(fsa_weights_from(b));
        }
      }
      if (encoder.dim() != dim) throw FormatError("weights: encoder width differs from config");
    } else {
      Rng rng(req.seed);
      encoder = EncoderWeights::random(dim, rng);
      for (Index l = 0; l < att.layers; ++l) {
        if (dsa) {
          DsaWeights w = DsaWeights::random(dim, att.heads, up_mode, rng);
          if (att.interp_radius) w.idw.radius = *att.interp_radius;
          if (att.interp_samples) w.idw.max_samples = *att.interp_samples;
          dsa_layers.push_back(std::move(w));
        } else {
          fsa_layers.push_back(FsaWeights::random(dim, att.heads, rng));
        }
      }
    }
    return 0;
  });

  const PointCloud cloud = watch.stage("load", [&] { return load_scan(req.scan); });
  sum.points_loaded = cloud.size();
  if (cloud.empty()) throw FormatError(stage_error("load", "scan contains no points"));
  const PointCloud cropped =
      watch.stage("crop", [&] { return crop_range(cloud, cfg.grid->spec); });
  sum.points_in_range = cropped.size();
  if (cropped.empty()) {
    throw FormatError(stage_error("crop", "no points inside the configured range"));
  }
  const FeatureGraph before = watch.stage(
      "discretize", [&] { return discretize(cropped, cfg.grid->spec, cfg.grid->mode, encoder); });
  sum.nodes = before.size();
  if (dsa && dcfg.keypoints > before.size()) {
    throw FormatError(stage_error("dsa", "scan yields " + std::to_string(before.size()) +
                                             " nodes, fewer than the " +
                                             std::to_string(dcfg.keypoints) + " keypoints"));
  }

  ensure_dir(req.out / "attention");
  ensure_dir(req.out / "weights");
  write_bundle(req.out / "weights" / "encoder", to_bundle(encoder));
  for (Index l = 0; l < att.layers; ++l) {
    const fs::path stem = req.out / "weights" / ("layer" + std::to_string(l));
    if (dsa) {
      write_bundle(stem, to_bundle(dsa_layers[l]));
    } else {
      write_bundle(stem, to_bundle(fsa_layers[l]));
    }
  }

  FeatureGraph current = before;
  std::vector<Matrix> last_attention;
  Json diagnostics;
  diagnostics["mode"] = sum.mode;
  diagnostics["nodes"] = before.size();
  diagnostics["layers"] = Json::array();
  for (Index l = 0; l < att.layers; ++l) {
    const bool last = l + 1 == att.layers;
    Json layer;
    layer["layer"] = l;
    watch.stage("layer" + std::to_string(l), [&] {
      if (dsa) {
        const DsaResult r = dsa_forward(current, dsa_layers[l], dcfg, DsaOptions{last, false});
        current.features = r.out.output;
        if (last) last_attention = r.out.attention;
        const Matrix sampled = gather_rows(current.positions, r.subset.indices.indices);
        double max_shift = 0.0;
        for (Index i = 0; i < sampled.size(); ++i) {
          max_shift = std::max(max_shift, std::abs(r.subset.refined_positions.values()[i] -
                                                   sampled.values()[i]));
        }
        layer["keypoints"] = r.subset.indices.size();
        layer["indices"] = r.subset.indices.indices;
        layer["refined_positions"] = matrix_rows(r.subset.refined_positions);
        layer["x_star"] = r.subset.x_star;
        layer["max_displacement"] = max_shift;
        layer["deform_empty"] = r.stats.deform_empty;
        layer["pool_fallbacks"] = r.stats.pool_fallbacks;
        layer["upsample_fallbacks"] = r.stats.upsample_fallbacks;
      } else {
        const bool keep = last && current.size() <= req.attention_limit;
        const AttentionOutput r = fsa_forward(current, fsa_layers[l], FsaOptions{keep});
        current.features = r.output;
        if (keep) last_attention = r.attention;
      }
      return 0;
    });
    diagnostics["layers"].push_back(std::move(layer));
  }
  if (!last_attention.empty() && last_attention.front().rows() > req.attention_limit) {
    last_attention.clear();
  }
  diagnostics["attention_exported"] = !last_attention.empty();

  std::vector<Artifact>& art = sum.artifacts;
  watch.stage("write", [&] {
    write_bundle(req.out / "graph_before", to_bundle(before));
    write_bundle(req.out / "graph_after", to_bundle(current));
    add_bundle(art, req.out, req.out / "graph_before");
    add_bundle(art, req.out, req.out / "graph_after");
    add_bundle(art, req.out, req.out / "weights" / "encoder");
    for (Index l = 0; l < att.layers; ++l) {
      add_bundle(art, req.out, req.out / "weights" / ("layer" + std::to_string(l)));
    }
    const Index last_layer = att.layers - 1;
    for (Index h = 0; h < last_attention.size(); ++h) {
      const fs::path p = req.out / "attention" /
                         ("layer" + std::to_string(last_layer) + "_head" + std::to_string(h) + ".csv");
      write_matrix_csv(p, last_attention[h]);
      art.push_back(describe(req.out, p));
    }
    write_json(req.out / "dsa_diagnostics.json", diagnostics);
    art.push_back(describe(req.out, req.out / "dsa_diagnostics.json"));
    return 0;
  });

  Json m = base_manifest("extract", req.seed, req.out);
  m["config"] = req.config.string();
  m["inputs"] = Json::array({req.scan.string()});
  m["mode"] = sum.mode;
  m["weights"] = req.weights ? Json(req.weights->string()) : Json(nullptr);
  m["attention_limit"] = req.attention_limit;
  m["points_loaded"] = sum.points_loaded;
  m["points_in_range"] = sum.points_in_range;
  m["nodes"] = sum.nodes;
  m["timings"] = timings_json(sum.timings);
  m["artifacts"] = artifacts_json(art);
  write_json(req.out / "manifest.json", m);
  return sum;
}

std::uint64_t bench_memory_estimate(Index n, Index dim, Index heads) {
  // One head's n x n score block plus the per-node activations of both
  // variants. The quadratic term dominates for every realistic n.
  const std::uint64_t quad = static_cast<std::uint64_t>(n) * n * sizeof(double);
  const std::uint64_t lin = static_cast<std::uint64_t>(n) * dim * (16 + heads) * sizeof(double);
  return quad + lin;
}

double available_memory_mb() {
  std::ifstream in("/proc/meminfo");
  std::string key;
  double kb = 0.0;
  std::string unit;
  while (in >> key >> kb >> unit) {
    if (key == "MemAvailable:") return kb / 1024.0;
  }
  const long pages = sysconf(_SC_PHYS_PAGES);
  const long size = sysconf(_SC_PAGE_SIZE);
  return pages > 0 && size > 0 ? static_cast<double>(pages) * size / (1024.0 * 1024.0) : 4096.0;
}

std::vector<BenchRow> run_bench(const BenchRequest& req) {
  if (req.sizes.empty()) throw ArgumentError("--sizes must list at least one node count");
  if (req.repeats == 0) throw ArgumentError("--repeats must be positive");
  if (req.keypoints == 0 || req.dim == 0 || req.heads == 0) {
    throw ArgumentError("--keypoints, --dim and --heads must be positive");
  }
  if (req.dim % req.heads != 0) throw ArgumentError("--heads must divide --dim");
  const double limit = req.memory_limit_mb > 0 ? req.memory_limit_mb : 0.5 * available_memory_mb();
  for (Index n : req.sizes) {
    if (n == 0) throw ArgumentError("--sizes entries must be positive");
    const double need = static_cast<double>(bench_memory_estimate(n, req.dim, req.heads)) / (1024.0 * 1024.0);
    if (need > limit) {
      std::ostringstream os;
      os << "n=" << n << " needs an estimated " << std::fixed << std::setprecision(0) << need
         << " MiB, above the " << limit << " MiB limit; refusing to run";
      throw RefusalError(os.str());
    }
  }

  std::vector<BenchRow> rows;
  for (Index n : req.sizes) {
    Rng rng(req.seed + n);
    FeatureGraph g = verify::random_graph(rng, n, req.dim, req.extent);
    const FsaWeights fw = FsaWeights::random(req.dim, req.heads, rng);
    const DsaWeights dw = DsaWeights::random(req.dim, req.heads, UpsampleMode::idw, rng);
    DsaConfig cfg;
    cfg.keypoints = std::min(req.keypoints, n);
    BenchRow row;
    row.n = n;
    row.m = cfg.keypoints;
    std::vector<double> tf, td;
    for (Index r = 0; r < req.repeats; ++r) {
      auto t0 = Clock::now();
      const AttentionOutput a = fsa_forward(g, fw, FsaOptions{false});
      tf.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      t0 = Clock::now();
      const DsaResult b = dsa_forward(g, dw, cfg, DsaOptions{false, false});
      td.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      if (!all_finite(a.output) || !all_finite(b.out.output)) {
        throw Error("benchmark produced non-finite output");
      }
    }
    row.fsa_median_s = median(tf);
    row.dsa_median_s = median(td);
    const auto fc = fsa_layer_cost(n, req.dim, req.dim, true);
    const auto dc = fsa_layer_cost(row.m, req.dim, req.dim, true);
    row.fsa_score_flops = fc.score_flops;
    row.dsa_score_flops = dc.score_flops;
    row.fsa_attention_flops = fc.flops();
    row.dsa_attention_flops = dc.flops();
    rows.push_back(row);
  }
  return rows;
}

Json machine_metadata() {
  Json m;
  char host[256] = {};
  if (gethostname(host, sizeof(host) - 1) == 0) m["host"] = host;
  std::ifstream cpu("/proc/cpuinfo");
  for (std::string line; std::getline(cpu, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      m["cpu"] = colon == std::string::npos ? line : line.substr(colon + 2);
      break;
    }
  }
  m["hardware_threads"] = std::thread::hardware_concurrency();
  m["threads"] = thread_count();
#if defined(__clang__)
  m["compiler"] = "clang " __clang_version__;
#elif defined(__GNUC__)
  m["compiler"] = "gcc " __VERSION__;
#endif
  return m;
}

void write_bench_csv(const fs::path& path, const BenchRequest& req,
                     const std::vector<BenchRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  const Json meta = machine_metadata();
  for (const auto& [k, v] : meta.items()) {
    out << "# " << k << "=" << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
  }
  out << "# dim=" << req.dim << " heads=" << req.heads << " repeats=" << req.repeats
      << " seed=" << req.seed << " extent_m=" << format_real(req.extent) << "\n";
  out << "n,m,fsa_median_s,dsa_median_s,speedup,fsa_score_flops,dsa_score_flops,"
         "fsa_attention_flops,dsa_attention_flops\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.m << ',' << format_real(r.fsa_median_s) << ','
        << format_real(r.dsa_median_s) << ',' << format_real(r.fsa_median_s / r.dsa_median_s)
        << ',' << r.fsa_score_flops << ',' << r.dsa_score_flops << ',' << r.fsa_attention_flops
        << ',' << r.dsa_attention_flops << '\n';
  }
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_out) {
  c.out = default_out;
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_option("--threads", c.threads,
                  "Worker threads (default: PCSA_THREADS or all hardware threads)");
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
}

int cmd_extract(const ExtractRequest& req) {
  const ExtractSummary s = run_extract(req);
  std::cout << "extract: " << s.points_loaded << " points, " << s.points_in_range
            << " in range, " << s.nodes << " nodes, " << s.layers << " " << s.mode
            << " layer(s)\n";
  std::cout << "wrote " << s.artifacts.size() + 1 << " files to " << req.out.string() << "\n";
  return kOk;
}

int cmd_bench(const BenchRequest& req, const Common& c) {
  std::vector<StageTiming> timings;
  const auto t0 = Clock::now();
  const auto rows = run_bench(req);
  timings.push_back({"bench", std::chrono::duration<double>(Clock::now() - t0).count()});
  const fs::path out(c.out);
  ensure_dir(out);
  write_bench_csv(out / "bench.csv", req, rows);
  std::cout << std::left << std::setw(9) << "n" << std::setw(7) << "m" << std::setw(14)
            << "fsa_s" << std::setw(14) << "dsa_s" << "speedup\n";
  for (const auto& r : rows) {
    std::cout << std::left << std::setw(9) << r.n << std::setw(7) << r.m << std::setw(14)
              << format_real(r.fsa_median_s, 4) << std::setw(14) << format_real(r.dsa_median_s, 4)
              << format_real(r.fsa_median_s / r.dsa_median_s, 3) << "\n";
  }
  Json m = base_manifest("bench", req.seed, out);
  m["sizes"] = req.sizes;
  m["keypoints"] = req.keypoints;
  m["dim"] = req.dim;
  m["heads"] = req.heads;
  m["repeats"] = req.repeats;
  m["extent_m"] = req.extent;
  m["machine"] = machine_metadata();
  m["timings"] = timings_json(timings);
  m["artifacts"] = artifacts_json({describe(out, out / "bench.csv")});
  write_json(out / "manifest.json", m);
  return kOk;
}

int cmd_cost(const std::vector<std::string>& configs, const std::string& pairs_file,
             const std::string& rules_path, const std::string& inputs_path, bool json_stdout,
             const Common& c) {
  if (configs.empty() && pairs_file.empty()) {
    throw ArgumentError("cost needs --config or --pairs");
  }
  std::vector<StageTiming> timings;
  const auto t0 = Clock::now();
  const fs::path rp = rules_path.empty() ? default_config_path("counting_rules.json") : fs::path(rules_path);
  const fs::path ip = inputs_path.empty() ? default_config_path("reference_inputs.json") : fs::path(inputs_path);
  const CountingRules rules = load_counting_rules(rp);
  const ReferenceInputs inputs = load_reference_inputs(ip);

  std::vector<fs::path> inputs_used{rp, ip};
  auto report_for = [&](const fs::path& p) {
    inputs_used.push_back(p);
    return count_flops(load_config(p), rules, inputs);
  };

  Json doc;
  doc["reports"] = Json::array();
  std::ostringstream text;
  for (const auto& p : configs) {
    const CostReport r = report_for(p);
    doc["reports"].push_back(report_json(r));
    text << format_report_text(r) << "\n";
  }
  if (!pairs_file.empty()) {
    const Json pj = read_json(pairs_file);
    inputs_used.push_back(pairs_file);
    if (!pj.contains("pairs") || !pj["pairs"].is_array()) {
      throw ConfigError("/pairs", "expected an array of {baseline, candidate}");
    }
    const fs::path base = fs::path(pairs_file).parent_path();
    std::vector<Comparison> rows;
    doc["comparisons"] = Json::array();
    for (Index i = 0; i < pj["pairs"].size(); ++i) {
      const Json& e = pj["pairs"][i];
      const std::string where = "/pairs/" + std::to_string(i);
      if (!e.contains("baseline") || !e["baseline"].is_string()) {
        throw ConfigError(where + "/baseline", "expected a file name");
      }
      if (!e.contains("candidate") || !e["candidate"].is_string()) {
        throw ConfigError(where + "/candidate", "expected a file name");
      }
      rows.push_back(compare(report_for(base / e["baseline"].get<std::string>()),
                             report_for(base / e["candidate"].get<std::string>())));
      doc["comparisons"].push_back(comparison_json(rows.back()));
    }
    text << format_comparisons_text(rows);
  }
  timings.push_back({"cost", std::chrono::duration<double>(Clock::now() - t0).count()});

  if (json_stdout) {
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << text.str();
  }
  const fs::path out(c.out);
  ensure_dir(out);
  write_json(out / "cost.json", doc);
  Json m = base_manifest("cost", c.seed, out);
  m["config"] = configs;
  m["inputs"] = Json::array();
  for (const auto& p : inputs_used) m["inputs"].push_back(p.string());
  m["timings"] = timings_json(timings);
  m["artifacts"] = artifacts_json({describe(out, out / "cost.json")});
  write_json(out / "manifest.json", m);
  return kOk;
}

int cmd_check(const std::string& fault, const Common& c) {
  verify::CheckOptions opt;
  opt.seed = c.seed;
  opt.inject_fault = fault;
  const auto t0 = Clock::now();
  const auto results = verify::run_checks(opt);
  const double total = std::chrono::duration<double>(Clock::now() - t0).count();
  Json doc = Json::array();
  Index failed = 0;
  std::vector<StageTiming> timings;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(32) << r.name << " "
              << r.detail << " (" << format_real(r.seconds, 3) << " s)\n";
    if (!r.passed) ++failed;
    doc.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    timings.push_back({r.name, r.seconds});
  }
  std::cout << results.size() - failed << "/" << results.size() << " checks passed in "
            << format_real(total, 3) << " s\n";
  const fs::path out(c.out);
  ensure_dir(out);
  write_json(out / "check.json", doc);
  Json m = base_manifest("check", c.seed, out);
  m["inject_fault"] = fault;
  m["timings"] = timings_json(timings);
  m["artifacts"] = artifacts_json({describe(out, out / "check.json")});
  write_json(out / "manifest.json", m);
  return failed == 0 ? kOk : kCheckFailed;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Full and deformable self-attention for point clouds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pcsa 0.1.0");

  Common ce, cb, cc, ck;
  ExtractRequest er;
  std::string er_scan, er_config, er_weights;
  auto* extract = app.add_subcommand("extract", "Run FSA or DSA layers on a scan");
  extract->add_option("--scan", er_scan, "KITTI-style float32 x,y,z,intensity scan")->required();
  extract->add_option("--config", er_config, "Architecture config (JSON)")->required();
  extract->add_option("--mode", er.mode, "fsa or dsa (default: the config's attention kind)")
      ->check(CLI::IsMember({"fsa", "dsa"}));
  extract->add_option("--weights", er_weights, "Directory holding encoder and layer bundles");
  extract->add_option("--attention-limit", er.attention_limit,
                      "Largest map side exported as CSV")
      ->capture_default_str();
  add_common(extract, ce, "pcsa_runs/extract");

  BenchRequest br;
  auto* bench = app.add_subcommand("bench", "Time fsa_forward against dsa_forward");
  bench->add_option("--sizes", br.sizes, "Node counts")->required()->delimiter(',');
  bench->add_option("--keypoints", br.keypoints, "DSA subset size m")->capture_default_str();
  bench->add_option("--dim", br.dim, "Feature width d")->capture_default_str();
  bench->add_option("--heads", br.heads, "Attention heads")->capture_default_str();
  bench->add_option("--repeats", br.repeats, "Timed repetitions per size")->capture_default_str();
  bench->add_option("--extent", br.extent, "Half-width of the synthetic cube in metres")
      ->capture_default_str();
  bench->add_option("--max-memory-mb", br.memory_limit_mb,
                    "Refuse sizes whose estimate exceeds this (default: half of free memory)");
  add_common(bench, cb, "pcsa_runs/bench");

  std::vector<std::string> cost_configs;
  std::string pairs, rules, inputs;
  bool as_json = false;
  auto* cost = app.add_subcommand("cost", "Parameter and FLOP report");
  cost->add_option("--config", cost_configs, "Architecture config (repeatable)");
  cost->add_option("--pairs", pairs, "Baseline/candidate pair list (JSON)");
  cost->add_option("--rules", rules, "Counting rules (default: configs/counting_rules.json)");
  cost->add_option("--inputs", inputs, "Reference node counts (default: configs/reference_inputs.json)");
  cost->add_flag("--json", as_json, "Print JSON instead of text");
  add_common(cost, cc, "pcsa_runs/cost");

  std::string fault;
  auto* check = app.add_subcommand("check", "Run the invariant suite");
  check->add_option("--inject-fault", fault, "Negative control: gradient")
      ->check(CLI::IsMember({"gradient"}));
  add_common(check, ck, "pcsa_runs/check");
  ck.seed = 1;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const Common& c = *extract ? ce : *bench ? cb : *cost ? cc : ck;
    if (c.threads > 0) set_thread_count(c.threads);
    if (*extract) {
      er.scan = er_scan;
      er.config = er_config;
      er.out = ce.out;
      er.seed = ce.seed;
      if (!er_weights.empty()) er.weights = er_weights;
      return cmd_extract(er);
    }
    if (*bench) {
      br.seed = cb.seed;
      return cmd_bench(br, cb);
    }
    if (*cost) return cmd_cost(cost_configs, pairs, rules, inputs, as_json, cc);
    return cmd_check(fault, ck);
  } catch (const RefusalError& e) {
    std::cerr << "pcsa: refused: " << e.what() << "\n";
    return kRefused;
  } catch (const ArgumentError& e) {
    std::cerr << "pcsa: invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "pcsa: config error at " << e.what() << "\n";
    return kValidation;
  } catch (const FormatError& e) {
    std::cerr << "pcsa: validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    std::cerr << "pcsa: i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "pcsa: internal error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace pcsa::cli
