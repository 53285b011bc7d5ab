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

#include "pcsa/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "pcsa/error.hpp"

namespace pcsa {
namespace {

const std::set<std::string> kBackbones = {"PointPillars", "SECOND", "PointRCNN", "PVRCNN"};
const std::set<std::string> kVariants = {"baseline", "reduced", "fsa", "dsa"};

// Strict view of one JSON object: every key must be consumed.
class Fields {
 public:
  Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where(), "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string path(const std::string& key) const { return path_ + "/" + key; }

  const Json& at(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(path(key), "missing required field");
    seen_.insert(key);
    return j_.at(key);
  }

  const Json* find(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(path(key), "unknown field");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "/" : path_; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Count as_count(const Json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    throw ConfigError(path, "expected a non-negative integer");
  }
  if (j.is_number_integer() && j.get<std::int64_t>() < 0) {
    throw ConfigError(path, "expected a non-negative integer");
  }
  return j.get<Count>();
}

Count as_positive(const Json& j, const std::string& path) {
  const Count v = as_count(j, path);
  if (v == 0) throw ConfigError(path, "must be positive");
  return v;
}

double as_real(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

bool as_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

const Json& as_array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  return j;
}

std::vector<Count> positive_list(const Json& j, const std::string& path) {
  std::vector<Count> out;
  const Json& a = as_array(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.push_back(as_positive(a[i], path + "/" + std::to_string(i)));
  }
  if (out.empty()) throw ConfigError(path, "must not be empty");
  return out;
}

std::vector<double> real_list(const Json& j, const std::string& path, std::size_t expect) {
  std::vector<double> out;
  const Json& a = as_array(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.push_back(as_real(a[i], path + "/" + std::to_string(i)));
  }
  if (expect && out.size() != expect) {
    throw ConfigError(path, "expected " + std::to_string(expect) + " entries");
  }
  return out;
}

NodeCount as_nodes(const Json& j, const std::string& path) {
  if (j.is_string()) return {j.get<std::string>()};
  return {as_positive(j, path)};
}

Json nodes_json(const NodeCount& n) {
  if (const auto* c = std::get_if<Count>(&n.value)) return *c;
  return std::get<std::string>(n.value);
}

void require_same_length(std::size_t got, std::size_t want, const std::string& path) {
  if (got != want) {
    throw ConfigError(path, "expected " + std::to_string(want) + " entries, found " +
                                std::to_string(got));
  }
}

GridConfig parse_grid(const Json& j, const std::string& path) {
  Fields f(j, path);
  GridConfig g;
  try {
    g.mode = parse_grid_mode(as_string(f.at("mode"), f.path("mode")));
  } catch (const ArgumentError& e) {
    throw ConfigError(f.path("mode"), e.what());
  }
  const auto lo = real_list(f.at("range_min"), f.path("range_min"), 3);
  const auto hi = real_list(f.at("range_max"), f.path("range_max"), 3);
  const auto cs = real_list(f.at("cell_size"), f.path("cell_size"), 3);
  std::copy(lo.begin(), lo.end(), g.spec.range_min.begin());
  std::copy(hi.begin(), hi.end(), g.spec.range_max.begin());
  std::copy(cs.begin(), cs.end(), g.spec.cell_size.begin());
  f.finish();
  try {
    g.spec.validate(g.mode);
  } catch (const ArgumentError& e) {
    throw ConfigError(path, e.what());
  }
  return g;
}

EncoderConfig parse_encoder(const Json& j, const std::string& path) {
  Fields f(j, path);
  EncoderConfig e;
  e.input_channels = as_positive(f.at("input_channels"), f.path("input_channels"));
  e.channels = as_positive(f.at("channels"), f.path("channels"));
  f.finish();
  return e;
}

Sparse3dConfig parse_sparse(const Json& j, const std::string& path) {
  Fields f(j, path);
  Sparse3dConfig s;
  s.input_channels = as_positive(f.at("input_channels"), f.path("input_channels"));
  s.channels = positive_list(f.at("channels"), f.path("channels"));
  s.layer_nums = positive_list(f.at("layer_nums"), f.path("layer_nums"));
  require_same_length(s.layer_nums.size(), s.channels.size(), f.path("layer_nums"));
  s.out_channels = as_positive(f.at("out_channels"), f.path("out_channels"));
  s.out_kernel = positive_list(f.at("out_kernel"), f.path("out_kernel"));
  require_same_length(s.out_kernel.size(), 3, f.path("out_kernel"));
  s.occupancy = real_list(f.at("occupancy"), f.path("occupancy"), s.channels.size());
  for (std::size_t i = 0; i < s.occupancy.size(); ++i) {
    if (!(s.occupancy[i] > 0.0 && s.occupancy[i] <= 1.0)) {
      throw ConfigError(f.path("occupancy") + "/" + std::to_string(i), "must lie in (0, 1]");
    }
  }
  f.finish();
  return s;
}

Conv2dConfig parse_conv2d(const Json& j, const std::string& path) {
  Fields f(j, path);
  Conv2dConfig c;
  c.input_channels = as_positive(f.at("input_channels"), f.path("input_channels"));
  c.layer_nums = positive_list(f.at("layer_nums"), f.path("layer_nums"));
  const std::size_t blocks = c.layer_nums.size();
  c.layer_strides = positive_list(f.at("layer_strides"), f.path("layer_strides"));
  require_same_length(c.layer_strides.size(), blocks, f.path("layer_strides"));
  c.num_filters = positive_list(f.at("num_filters"), f.path("num_filters"));
  require_same_length(c.num_filters.size(), blocks, f.path("num_filters"));
  c.upsample_strides = positive_list(f.at("upsample_strides"), f.path("upsample_strides"));
  require_same_length(c.upsample_strides.size(), blocks, f.path("upsample_strides"));
  c.num_upsample_filters =
      positive_list(f.at("num_upsample_filters"), f.path("num_upsample_filters"));
  require_same_length(c.num_upsample_filters.size(), blocks, f.path("num_upsample_filters"));
  f.finish();
  return c;
}

MlpStage parse_mlp_stage(const Json& j, const std::string& path) {
  Fields f(j, path);
  MlpStage s;
  s.name = as_string(f.at("name"), f.path("name"));
  s.points = as_nodes(f.at("points"), f.path("points"));
  s.samples = positive_list(f.at("samples"), f.path("samples"));
  const Json& mlps = as_array(f.at("mlps"), f.path("mlps"));
  for (std::size_t i = 0; i < mlps.size(); ++i) {
    const std::string p = f.path("mlps") + "/" + std::to_string(i);
    auto chain = positive_list(mlps[i], p);
    if (chain.size() < 2) throw ConfigError(p, "a chain needs an input width and one layer");
    s.mlps.push_back(std::move(chain));
  }
  if (s.mlps.empty()) throw ConfigError(f.path("mlps"), "must not be empty");
  require_same_length(s.samples.size(), s.mlps.size(), f.path("samples"));
  f.finish();
  return s;
}

AttentionStage parse_stage(const Json& j, const std::string& path) {
  Fields f(j, path);
  AttentionStage s;
  s.name = as_string(f.at("name"), f.path("name"));
  s.channels = as_positive(f.at("channels"), f.path("channels"));
  s.nodes = as_nodes(f.at("nodes"), f.path("nodes"));
  if (const Json* k = f.find("keypoints")) s.keypoints = as_positive(*k, f.path("keypoints"));
  f.finish();
  return s;
}

AttentionConfig parse_attention(const Json& j, const std::string& path) {
  Fields f(j, path);
  AttentionConfig a;
  a.kind = as_string(f.at("kind"), f.path("kind"));
  if (a.kind != "fsa" && a.kind != "dsa") {
    throw ConfigError(f.path("kind"), "expected \"fsa\" or \"dsa\"");
  }
  a.layers = as_positive(f.at("layers"), f.path("layers"));
  a.heads = as_positive(f.at("heads"), f.path("heads"));
  a.dim = as_positive(f.at("dim"), f.path("dim"));
  if (a.dim % a.heads != 0) {
    throw ConfigError(f.path("heads"), "heads (" + std::to_string(a.heads) +
                                           ") must divide dim (" + std::to_string(a.dim) + ")");
  }
  a.position_encoding = as_bool(f.at("position_encoding"), f.path("position_encoding"));
  const Json& stages = as_array(f.at("stages"), f.path("stages"));
  for (std::size_t i = 0; i < stages.size(); ++i) {
    a.stages.push_back(parse_stage(stages[i], f.path("stages") + "/" + std::to_string(i)));
  }
  if (a.stages.empty()) throw ConfigError(f.path("stages"), "must not be empty");
  if (const Json* v = f.find("keypoints")) a.keypoints = as_positive(*v, f.path("keypoints"));
  auto radius = [&](const char* key, std::optional<double>& out) {
    if (const Json* v = f.find(key)) {
      out = as_real(*v, f.path(key));
      if (!(*out > 0.0)) throw ConfigError(f.path(key), "must be positive");
    }
  };
  radius("deform_radius", a.deform_radius);
  radius("pool_radius", a.pool_radius);
  if (const Json* v = f.find("neighbors")) a.neighbors = as_positive(*v, f.path("neighbors"));
  if (const Json* v = f.find("upsample")) {
    a.upsample = as_string(*v, f.path("upsample"));
    if (*a.upsample != "idw" && *a.upsample != "attention") {
      throw ConfigError(f.path("upsample"), "expected \"idw\" or \"attention\"");
    }
  }
  if (const Json* v = f.find("interp_mlp_dim")) {
    a.interp_mlp_dim = as_positive(*v, f.path("interp_mlp_dim"));
  }
  radius("interp_radius", a.interp_radius);
  if (const Json* v = f.find("interp_samples")) {
    a.interp_samples = as_positive(*v, f.path("interp_samples"));
  }
  if (const Json* v = f.find("scales")) a.scales = as_positive(*v, f.path("scales"));
  f.finish();
  if (a.is_dsa()) {
    const char* required[] = {"keypoints", "deform_radius", "pool_radius", "neighbors",
                              "upsample", "interp_mlp_dim", "interp_radius", "interp_samples"};
    for (const char* key : required) {
      if (!j.contains(key)) throw ConfigError(f.path(key), "required when kind is \"dsa\"");
    }
  }
  return a;
}

std::array<Count, 3> ceil_halve(std::array<Count, 3> v, Count levels) {
  for (Count l = 0; l < levels; ++l) {
    for (auto& x : v) x = (x + 1) / 2;
  }
  return v;
}

struct Levels {
  std::vector<std::array<Count, 3>> dense;  // x, y, z per sparse level
  Count z_out = 0;
};

Levels sparse_levels(const ArchConfig& cfg) {
  const auto counts = cfg.grid->spec.cell_counts(cfg.grid->mode);
  const std::array<Count, 3> base{counts[0], counts[1], counts[2]};
  Levels lv;
  for (Count l = 0; l < cfg.sparse3d->channels.size(); ++l) lv.dense.push_back(ceil_halve(base, l));
  const Count kz = cfg.sparse3d->out_kernel[0];
  const Count z = lv.dense.back()[2];
  lv.z_out = z >= kz ? (z - kz) / 2 + 1 : 0;
  return lv;
}

void validate_config(const ArchConfig& cfg) {
  if (cfg.sparse3d) {
    if (!cfg.grid || cfg.grid->mode != GridMode::voxel) {
      throw ConfigError("/grid/mode", "a sparse 3D stage needs a voxel grid");
    }
    const Levels lv = sparse_levels(cfg);
    if (lv.z_out == 0) throw ConfigError("/sparse3d/out_kernel", "kernel exceeds the z extent");
    if (cfg.conv2d) {
      const Count bev = cfg.sparse3d->out_channels * lv.z_out;
      if (cfg.conv2d->input_channels != bev) {
        throw ConfigError("/conv2d/input_channels",
                          "expected " + std::to_string(bev) + " (sparse out_channels x " +
                              std::to_string(lv.z_out) + " z cells)");
      }
    }
  } else if (cfg.conv2d) {
    if (!cfg.grid || cfg.grid->mode != GridMode::pillar) {
      throw ConfigError("/grid/mode", "a 2D backbone without a sparse stage needs a pillar grid");
    }
    if (cfg.encoder && cfg.encoder->channels != cfg.conv2d->input_channels) {
      throw ConfigError("/conv2d/input_channels", "must equal the encoder channels");
    }
  }
}

}  // namespace

ArchConfig parse_config(const Json& doc) {
  Fields f(doc, "");
  ArchConfig cfg;
  const Json& version = f.at("schema_version");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw ConfigError("/schema_version", "unsupported schema version (expected 1)");
  }
  cfg.schema_version = 1;
  cfg.name = as_string(f.at("name"), "/name");
  cfg.backbone = as_string(f.at("backbone"), "/backbone");
  if (!kBackbones.count(cfg.backbone)) {
    throw ConfigError("/backbone", "unknown backbone '" + cfg.backbone + "'");
  }
  cfg.variant = as_string(f.at("variant"), "/variant");
  if (!kVariants.count(cfg.variant)) {
    throw ConfigError("/variant", "unknown variant '" + cfg.variant + "'");
  }
  cfg.dataset = as_string(f.at("dataset"), "/dataset");
  if (const Json* v = f.find("grid")) cfg.grid = parse_grid(*v, "/grid");
  if (const Json* v = f.find("encoder")) cfg.encoder = parse_encoder(*v, "/encoder");
  if (const Json* v = f.find("sparse3d")) cfg.sparse3d = parse_sparse(*v, "/sparse3d");
  if (const Json* v = f.find("conv2d")) cfg.conv2d = parse_conv2d(*v, "/conv2d");
  if (const Json* v = f.find("mlp_stages")) {
    const Json& a = as_array(*v, "/mlp_stages");
    for (std::size_t i = 0; i < a.size(); ++i) {
      cfg.mlp_stages.push_back(parse_mlp_stage(a[i], "/mlp_stages/" + std::to_string(i)));
    }
  }
  if (const Json* v = f.find("attention")) cfg.attention = parse_attention(*v, "/attention");
  f.finish();
  validate_config(cfg);
  return cfg;
}

ArchConfig load_config(const std::filesystem::path& path) {
  const Json doc = read_json(path);
  try {
    return parse_config(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(e.path(), "in '" + path.string() + "': " +
                                    std::string(e.what()).substr(e.path().size() + 2));
  }
}

Json serialize_config(const ArchConfig& cfg) {
  Json j = Json::object();
  j["schema_version"] = cfg.schema_version;
  j["name"] = cfg.name;
  j["backbone"] = cfg.backbone;
  j["variant"] = cfg.variant;
  j["dataset"] = cfg.dataset;
  if (cfg.grid) {
    Json g = Json::object();
    g["mode"] = std::string(to_string(cfg.grid->mode));
    g["range_min"] = cfg.grid->spec.range_min;
    g["range_max"] = cfg.grid->spec.range_max;
    g["cell_size"] = cfg.grid->spec.cell_size;
    j["grid"] = std::move(g);
  }
  if (cfg.encoder) {
    j["encoder"] = {{"input_channels", cfg.encoder->input_channels},
                    {"channels", cfg.encoder->channels}};
  }
  if (cfg.sparse3d) {
    const auto& s = *cfg.sparse3d;
    Json o = Json::object();
    o["input_channels"] = s.input_channels;
    o["channels"] = s.channels;
    o["layer_nums"] = s.layer_nums;
    o["out_channels"] = s.out_channels;
    o["out_kernel"] = s.out_kernel;
    o["occupancy"] = s.occupancy;
    j["sparse3d"] = std::move(o);
  }
  if (cfg.conv2d) {
    const auto& c = *cfg.conv2d;
    Json o = Json::object();
    o["input_channels"] = c.input_channels;
    o["layer_nums"] = c.layer_nums;
    o["layer_strides"] = c.layer_strides;
    o["num_filters"] = c.num_filters;
    o["upsample_strides"] = c.upsample_strides;
    o["num_upsample_filters"] = c.num_upsample_filters;
    j["conv2d"] = std::move(o);
  }
  if (!cfg.mlp_stages.empty()) {
    Json a = Json::array();
    for (const auto& s : cfg.mlp_stages) {
      Json o = Json::object();
      o["name"] = s.name;
      o["points"] = nodes_json(s.points);
      o["samples"] = s.samples;
      o["mlps"] = s.mlps;
      a.push_back(std::move(o));
    }
    j["mlp_stages"] = std::move(a);
  }
  if (cfg.attention) {
    const auto& a = *cfg.attention;
    Json o = Json::object();
    o["kind"] = a.kind;
    o["layers"] = a.layers;
    o["heads"] = a.heads;
    o["dim"] = a.dim;
    o["position_encoding"] = a.position_encoding;
    Json stages = Json::array();
    for (const auto& s : a.stages) {
      Json st = Json::object();
      st["name"] = s.name;
      st["channels"] = s.channels;
      st["nodes"] = nodes_json(s.nodes);
      if (s.keypoints) st["keypoints"] = *s.keypoints;
      stages.push_back(std::move(st));
    }
    o["stages"] = std::move(stages);
    if (a.keypoints) o["keypoints"] = *a.keypoints;
    if (a.deform_radius) o["deform_radius"] = *a.deform_radius;
    if (a.pool_radius) o["pool_radius"] = *a.pool_radius;
    if (a.neighbors) o["neighbors"] = *a.neighbors;
    if (a.upsample) o["upsample"] = *a.upsample;
    if (a.interp_mlp_dim) o["interp_mlp_dim"] = *a.interp_mlp_dim;
    if (a.interp_radius) o["interp_radius"] = *a.interp_radius;
    if (a.interp_samples) o["interp_samples"] = *a.interp_samples;
    if (a.scales) o["scales"] = *a.scales;
    j["attention"] = std::move(o);
  }
  return j;
}

CountingRules parse_counting_rules(const Json& doc) {
  Fields f(doc, "");
  CountingRules r;
  const Json& version = f.at("schema_version");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw ConfigError("/schema_version", "unsupported schema version (expected 1)");
  }
  r.flops_per_mac = as_positive(f.at("flops_per_mac"), "/flops_per_mac");
  r.norm_params_per_channel = as_count(f.at("norm_params_per_channel"), "/norm_params_per_channel");
  r.conv_bias = as_bool(f.at("conv_bias"), "/conv_bias");
  r.sparse3d_in_total = as_bool(f.at("sparse3d_in_total"), "/sparse3d_in_total");
  f.find("notes");
  Fields heads(f.at("heads"), "/heads");
  for (const auto& [backbone, list] : doc.at("heads").items()) {
    const std::string p = "/heads/" + backbone;
    as_array(heads.at(backbone), p);
    std::vector<HeadComponent> comps;
    for (std::size_t i = 0; i < list.size(); ++i) {
      Fields c(list[i], p + "/" + std::to_string(i));
      HeadComponent h;
      h.name = as_string(c.at("name"), c.path("name"));
      h.params = as_count(c.at("params"), c.path("params"));
      h.macs = as_count(c.at("macs"), c.path("macs"));
      c.find("structure");
      c.finish();
      comps.push_back(std::move(h));
    }
    r.heads[backbone] = std::move(comps);
  }
  heads.finish();
  f.finish();
  return r;
}

CountingRules load_counting_rules(const std::filesystem::path& path) {
  return parse_counting_rules(read_json(path));
}

Count ReferenceInputs::resolve(const std::string& dataset, const NodeCount& n) const {
  if (const auto* c = std::get_if<Count>(&n.value)) return *c;
  const auto& key = std::get<std::string>(n.value);
  const auto ds = datasets.find(dataset);
  if (ds == datasets.end()) {
    throw ArgumentError("reference inputs have no dataset '" + dataset + "'");
  }
  const auto it = ds->second.find(key);
  if (it == ds->second.end()) {
    throw ArgumentError("reference inputs for '" + dataset + "' have no count '" + key + "'");
  }
  return it->second;
}

ReferenceInputs parse_reference_inputs(const Json& doc) {
  Fields f(doc, "");
  const Json& version = f.at("schema_version");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw ConfigError("/schema_version", "unsupported schema version (expected 1)");
  }
  f.find("notes");
  ReferenceInputs r;
  Fields ds(f.at("datasets"), "/datasets");
  for (const auto& [name, counts] : doc.at("datasets").items()) {
    Fields c(ds.at(name), "/datasets/" + name);
    for (const auto& [key, value] : counts.items()) {
      r.datasets[name][key] = as_positive(c.at(key), c.path(key));
    }
    c.finish();
  }
  ds.finish();
  f.finish();
  return r;
}

ReferenceInputs load_reference_inputs(const std::filesystem::path& path) {
  return parse_reference_inputs(read_json(path));
}

std::vector<std::pair<std::string, CostItem>> CostReport::stage_totals() const {
  std::vector<std::pair<std::string, CostItem>> out;
  for (const auto& item : items) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == item.stage; });
    if (it == out.end()) {
      out.push_back({item.stage, CostItem{item.stage, "total", 0, 0, item.in_total}});
      it = std::prev(out.end());
    }
    it->second.params += item.params;
    it->second.flops += item.flops;
  }
  return out;
}

Count AttentionCost::flops() const {
  Count total = 0;
  for (const auto& t : terms) total += t.flops;
  return total;
}

AttentionCost fsa_layer_cost(Count n, Count channels, Count dim, bool position_encoding,
                             Count flops_per_mac) {
  const Count c = channels;
  const Count d = dim;
  const Count f = flops_per_mac;
  AttentionCost a;
  a.params = 4 * c * d + (position_encoding ? 3 * c : 0) + 2 * c;
  if (position_encoding) a.terms.push_back({"", "position", 0, f * n * 3 * c});
  a.terms.push_back({"", "qkv", 0, f * 3 * n * c * d});
  a.score_flops = f * n * n * d;
  a.terms.push_back({"", "scores", 0, a.score_flops});
  a.terms.push_back({"", "context", 0, f * n * n * d});
  a.terms.push_back({"", "output", 0, f * n * d * c});
  return a;
}

AttentionCost dsa_layer_cost(Count n, Count m, Count channels, const AttentionConfig& att,
                             Count flops_per_mac) {
  const Count c = channels;
  const Count f = flops_per_mac;
  const Count k = att.neighbors.value_or(16);
  const Count s = att.interp_samples.value_or(16);
  const Count h = att.interp_mlp_dim.value_or(c);
  const Count scales = att.scales.value_or(1);
  const bool idw = att.upsample.value_or("idw") == "idw";

  AttentionCost inner = fsa_layer_cost(m, c, att.dim, att.position_encoding, f);
  AttentionCost a;
  const Count up_params = idw ? c * h + (h != c ? h * c : 0) : 3 * c * c;
  a.params = inner.params + 3 * c + 3 + c * c + scales * up_params;
  a.terms.push_back({"", "fps", 0, f * 3 * n * m});
  a.terms.push_back({"", "deform_query", 0, f * 3 * n * m});
  a.terms.push_back({"", "deform", 0, f * (m * k * (3 * c + 3) + 3 * m)});
  a.terms.push_back({"", "pool_query", 0, f * 3 * n * m});
  a.terms.push_back({"", "pool_map", 0, f * n * c * c});
  for (auto t : inner.terms) a.terms.push_back(t);
  a.score_flops = inner.score_flops;
  if (idw) {
    a.terms.push_back({"", "upsample_query", 0, scales * f * 3 * n * m});
    a.terms.push_back({"", "upsample_interp", 0, scales * f * n * s * c});
    a.terms.push_back({"", "upsample_mlp", 0,
                       scales * f * (n * c * h + (h != c ? n * h * c : 0))});
  } else {
    a.terms.push_back({"", "upsample_proj", 0, scales * f * (n * c * c + 2 * m * c * c)});
    a.terms.push_back({"", "upsample_attend", 0, scales * f * 2 * n * m * c});
  }
  return a;
}

namespace {

CostReport analyze(const ArchConfig& cfg, const CountingRules& rules,
                   const ReferenceInputs* inputs, const CostOptions& options) {
  CostReport r;
  r.config = cfg.name;
  const Count f = rules.flops_per_mac;
  const Count norm = rules.norm_params_per_channel;
  const Count bias = rules.conv_bias ? 1 : 0;
  auto resolve = [&](const NodeCount& n) -> Count {
    return inputs ? inputs->resolve(cfg.dataset, n) : 0;
  };
  auto flops_on = [&](Count v) -> Count { return inputs ? v : 0; };

  if (cfg.encoder) {
    const auto& e = *cfg.encoder;
    const Count points = resolve(NodeCount{std::string("points")});
    r.items.push_back({"encoder", "linear", e.input_channels * e.channels + e.channels * (norm + bias),
                       f * e.input_channels * e.channels * points});
  }

  std::array<Count, 2> map{0, 0};
  if (cfg.sparse3d) {
    const auto& s = *cfg.sparse3d;
    const Levels lv = sparse_levels(cfg);
    auto conv = [&](const std::string& term, Count cin, Count cout, Count kernel,
                    double active_fraction, Count dense) {
      const auto active = static_cast<Count>(std::llround(active_fraction * static_cast<double>(dense)));
      r.items.push_back({"sparse3d", term, kernel * cin * cout + cout * (norm + bias),
                         flops_on(f * kernel * cin * cout * active), rules.sparse3d_in_total});
    };
    Count prev = s.input_channels;
    for (std::size_t l = 0; l < s.channels.size(); ++l) {
      const Count dense = lv.dense[l][0] * lv.dense[l][1] * lv.dense[l][2];
      const std::string lvl = "level" + std::to_string(l);
      if (l == 0) {
        conv(lvl + "_input", prev, s.channels[0], 27, s.occupancy[0], dense);
        prev = s.channels[0];
      }
      for (Count i = 0; i < s.layer_nums[l]; ++i) {
        const bool strided = l > 0 && i == 0;
        conv(lvl + (strided ? "_down" : "_conv" + std::to_string(i)), prev, s.channels[l], 27,
             s.occupancy[l], dense);
        prev = s.channels[l];
      }
    }
    const auto& last = lv.dense.back();
    const Count kout = s.out_kernel[0] * s.out_kernel[1] * s.out_kernel[2];
    conv("out", prev, s.out_channels, kout, s.occupancy.back(), last[0] * last[1] * lv.z_out);
    map = {last[0], last[1]};
  } else if (cfg.grid && cfg.grid->mode == GridMode::pillar) {
    const auto counts = cfg.grid->spec.cell_counts(GridMode::pillar);
    map = {counts[0], counts[1]};
  }

  if (cfg.conv2d) {
    const auto& c = *cfg.conv2d;
    Count prev = c.input_channels;
    std::array<Count, 2> size = map;
    for (std::size_t b = 0; b < c.layer_nums.size(); ++b) {
      const Count out = c.num_filters[b];
      const Count st = c.layer_strides[b];
      size = {(size[0] + st - 1) / st, (size[1] + st - 1) / st};
      const Count cells = size[0] * size[1];
      const Count n_convs = c.layer_nums[b] + 1;
      const Count weights = 9 * prev * out + c.layer_nums[b] * 9 * out * out;
      const std::string stage = "conv2d_block" + std::to_string(b);
      r.items.push_back({stage, "convs", weights + n_convs * out * (norm + bias),
                         flops_on(f * weights * cells)});
      const Count up = c.upsample_strides[b];
      const Count uw = up * up * out * c.num_upsample_filters[b];
      r.items.push_back({stage, "deconv", uw + c.num_upsample_filters[b] * (norm + bias),
                         flops_on(f * uw * cells)});
      prev = out;
    }
  }

  for (const auto& st : cfg.mlp_stages) {
    const Count points = resolve(st.points);
    for (std::size_t ch = 0; ch < st.mlps.size(); ++ch) {
      const auto& chain = st.mlps[ch];
      Count params = 0;
      Count macs = 0;
      for (std::size_t i = 1; i < chain.size(); ++i) {
        params += chain[i - 1] * chain[i] + chain[i] * (norm + bias);
        macs += chain[i - 1] * chain[i];
      }
      r.items.push_back({st.name, "mlp" + std::to_string(ch), params,
                         f * macs * points * st.samples[ch]});
    }
  }

  if (cfg.attention) {
    const auto& a = *cfg.attention;
    for (const auto& st : a.stages) {
      const Count n = options.attention_nodes ? (inputs ? *options.attention_nodes : 0)
                                              : resolve(st.nodes);
      const std::string stage = "attention:" + st.name;
      AttentionCost per_layer;
      if (a.is_dsa()) {
        const Count m = std::min(st.keypoints.value_or(a.keypoints.value_or(2048)), n);
        per_layer = dsa_layer_cost(n, m, st.channels, a, f);
      } else {
        per_layer = fsa_layer_cost(n, st.channels, a.dim, a.position_encoding, f);
      }
      r.items.push_back({stage, "weights", a.layers * per_layer.params, 0});
      for (const auto& t : per_layer.terms) {
        r.items.push_back({stage, t.term, 0, a.layers * t.flops});
      }
    }
  }

  const auto heads = rules.heads.find(cfg.backbone);
  if (heads == rules.heads.end()) {
    throw ArgumentError("counting rules have no head entry for backbone '" + cfg.backbone + "'");
  }
  for (const auto& h : heads->second) {
    r.items.push_back({"head", h.name, h.params, flops_on(f * h.macs)});
  }

  for (const auto& item : r.items) {
    if (item.in_total) {
      r.params += item.params;
    } else {
      r.excluded_params += item.params;
    }
    r.flops += item.flops;
  }
  return r;
}

std::string with_commas(Count v) {
  std::string s = std::to_string(v);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return s;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

CostReport count_params(const ArchConfig& cfg, const CountingRules& rules) {
  return analyze(cfg, rules, nullptr, {});
}

CostReport count_flops(const ArchConfig& cfg, const CountingRules& rules,
                       const ReferenceInputs& inputs, const CostOptions& options) {
  return analyze(cfg, rules, &inputs, options);
}

Comparison compare(const CostReport& baseline, const CostReport& candidate) {
  Comparison c;
  c.baseline = baseline.config;
  c.candidate = candidate.config;
  c.baseline_params = baseline.params;
  c.candidate_params = candidate.params;
  c.baseline_flops = baseline.flops;
  c.candidate_flops = candidate.flops;
  auto pct = [](Count a, Count b) {
    if (a == 0) return 0.0;
    return 100.0 * (static_cast<double>(b) - static_cast<double>(a)) / static_cast<double>(a);
  };
  c.param_change_pct = pct(baseline.params, candidate.params);
  c.flop_change_pct = pct(baseline.flops, candidate.flops);
  return c;
}

std::string format_report_text(const CostReport& report) {
  std::ostringstream os;
  os << report.config << "\n";
  os << "  (1 multiply-accumulate = 2 FLOPs; * = reported, not in the parameter total)\n";
  os << "  " << std::left << std::setw(28) << "stage" << std::setw(18) << "term" << std::right
     << std::setw(14) << "params" << std::setw(12) << "GFLOPs" << "\n";
  for (const auto& item : report.items) {
    os << "  " << std::left << std::setw(28) << item.stage << std::setw(18) << item.term
       << std::right << std::setw(14) << (with_commas(item.params) + (item.in_total ? " " : "*"))
       << std::setw(12) << fixed(static_cast<double>(item.flops) / 1e9, 3) << "\n";
  }
  os << "  " << std::left << std::setw(46) << "total" << std::right << std::setw(14)
     << (with_commas(report.params) + " ") << std::setw(12)
     << fixed(static_cast<double>(report.flops) / 1e9, 3) << "\n";
  if (report.excluded_params) {
    os << "  " << std::left << std::setw(46) << "excluded from total" << std::right
       << std::setw(14) << (with_commas(report.excluded_params) + "*") << "\n";
  }
  os << "  parameters: " << fixed(static_cast<double>(report.params) / 1e6, 3)
     << " M, FLOPs: " << fixed(static_cast<double>(report.flops) / 1e9, 2) << " G\n";
  return os.str();
}

std::string format_comparisons_text(const std::vector<Comparison>& rows) {
  auto signed_pct = [](double v) { return (v > 0 ? "+" : "") + fixed(v, 1) + "%"; };
  std::ostringstream os;
  os << std::left << std::setw(18) << "baseline" << std::setw(18) << "candidate" << std::right
     << std::setw(10) << "params" << std::setw(10) << "params" << std::setw(9) << "change"
     << std::setw(10) << "GFLOPs" << std::setw(10) << "GFLOPs" << std::setw(9) << "change"
     << "\n";
  for (const auto& c : rows) {
    os << std::left << std::setw(18) << c.baseline << std::setw(18) << c.candidate << std::right
       << std::setw(10) << (fixed(static_cast<double>(c.baseline_params) / 1e6, 2) + "M")
       << std::setw(10) << (fixed(static_cast<double>(c.candidate_params) / 1e6, 2) + "M")
       << std::setw(9) << signed_pct(c.param_change_pct) << std::setw(10)
       << fixed(static_cast<double>(c.baseline_flops) / 1e9, 1) << std::setw(10)
       << fixed(static_cast<double>(c.candidate_flops) / 1e9, 1) << std::setw(9)
       << signed_pct(c.flop_change_pct) << "\n";
  }
  return os.str();
}

Json report_json(const CostReport& report) {
  Json j = Json::object();
  j["config"] = report.config;
  j["flops_per_mac"] = 2;
  j["params"] = report.params;
  j["excluded_params"] = report.excluded_params;
  j["flops"] = report.flops;
  Json stages = Json::array();
  for (const auto& [name, total] : report.stage_totals()) {
    stages.push_back({{"stage", name}, {"params", total.params}, {"flops", total.flops},
                      {"in_total", total.in_total}});
  }
  j["stages"] = std::move(stages);
  Json items = Json::array();
  for (const auto& item : report.items) {
    items.push_back({{"stage", item.stage}, {"term", item.term}, {"params", item.params},
                     {"flops", item.flops}, {"in_total", item.in_total}});
  }
  j["items"] = std::move(items);
  return j;
}

Json comparison_json(const Comparison& c) {
  Json j = Json::object();
  j["baseline"] = c.baseline;
  j["candidate"] = c.candidate;
  j["baseline_params"] = c.baseline_params;
  j["candidate_params"] = c.candidate_params;
  j["baseline_flops"] = c.baseline_flops;
  j["candidate_flops"] = c.candidate_flops;
  j["param_change_pct"] = c.param_change_pct;
  j["flop_change_pct"] = c.flop_change_pct;
  return j;
}

}  // namespace pcsa
