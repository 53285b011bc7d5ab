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
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pcsa/io.hpp"
#include "pcsa/pcio.hpp"

namespace pcsa {

using Count = std::uint64_t;

// Either a literal count or a key resolved against the reference inputs.
struct NodeCount {
  std::variant<Count, std::string> value;

  bool operator==(const NodeCount&) const = default;
};

struct GridConfig {
  GridMode mode = GridMode::pillar;
  GridSpec spec;

  bool operator==(const GridConfig&) const = default;
};

// Per-point linear layer + norm producing the node features.
struct EncoderConfig {
  Count input_channels = 0;
  Count channels = 0;

  bool operator==(const EncoderConfig&) const = default;
};

struct Sparse3dConfig {
  Count input_channels = 0;
  std::vector<Count> channels;    // per level
  std::vector<Count> layer_nums;  // convs per level; levels > 0 start with a strided conv
  Count out_channels = 0;
  std::vector<Count> out_kernel;  // z, y, x
  std::vector<double> occupancy;  // active fraction of the dense grid per level

  bool operator==(const Sparse3dConfig&) const = default;
};

struct Conv2dConfig {
  Count input_channels = 0;
  std::vector<Count> layer_nums;
  std::vector<Count> layer_strides;
  std::vector<Count> num_filters;
  std::vector<Count> upsample_strides;
  std::vector<Count> num_upsample_filters;

  bool operator==(const Conv2dConfig&) const = default;
};

// Shared-MLP stage of a point backbone. Each chain lists its input width
// first; every layer runs once per (group, sample).
struct MlpStage {
  std::string name;
  NodeCount points;
  std::vector<Count> samples;  // per chain
  std::vector<std::vector<Count>> mlps;

  bool operator==(const MlpStage&) const = default;
};

struct AttentionStage {
  std::string name;
  Count channels = 0;
  NodeCount nodes;
  std::optional<Count> keypoints;

  bool operator==(const AttentionStage&) const = default;
};

struct AttentionConfig {
  std::string kind = "fsa";  // fsa | dsa
  Count layers = 2;
  Count heads = 4;
  Count dim = 64;
  bool position_encoding = true;
  std::vector<AttentionStage> stages;
  // Deformable variant only.
  std::optional<Count> keypoints;
  std::optional<double> deform_radius;
  std::optional<double> pool_radius;
  std::optional<Count> neighbors;
  std::optional<std::string> upsample;  // idw | attention
  std::optional<Count> interp_mlp_dim;
  std::optional<double> interp_radius;
  std::optional<Count> interp_samples;
  std::optional<Count> scales;

  bool is_dsa() const { return kind == "dsa"; }
  bool operator==(const AttentionConfig&) const = default;
};

struct ArchConfig {
  int schema_version = 1;
  std::string name;
  std::string backbone;  // PointPillars | SECOND | PointRCNN | PVRCNN
  std::string variant;   // baseline | reduced | fsa | dsa
  std::string dataset;
  std::optional<GridConfig> grid;
  std::optional<EncoderConfig> encoder;
  std::optional<Sparse3dConfig> sparse3d;
  std::optional<Conv2dConfig> conv2d;
  std::vector<MlpStage> mlp_stages;
  std::optional<AttentionConfig> attention;

  bool operator==(const ArchConfig&) const = default;
};

ArchConfig parse_config(const Json& doc);
ArchConfig load_config(const std::filesystem::path& path);
Json serialize_config(const ArchConfig& cfg);

struct HeadComponent {
  std::string name;
  Count params = 0;
  Count macs = 0;

  bool operator==(const HeadComponent&) const = default;
};

struct CountingRules {
  Count flops_per_mac = 2;
  Count norm_params_per_channel = 2;
  bool conv_bias = false;
  bool sparse3d_in_total = false;
  std::map<std::string, std::vector<HeadComponent>> heads;
};

CountingRules parse_counting_rules(const Json& doc);
CountingRules load_counting_rules(const std::filesystem::path& path);

struct ReferenceInputs {
  std::map<std::string, std::map<std::string, Count>> datasets;

  Count resolve(const std::string& dataset, const NodeCount& n) const;
};

ReferenceInputs parse_reference_inputs(const Json& doc);
ReferenceInputs load_reference_inputs(const std::filesystem::path& path);

struct CostItem {
  std::string stage;
  std::string term;
  Count params = 0;
  Count flops = 0;
  bool in_total = true;
};

struct CostReport {
  std::string config;
  std::vector<CostItem> items;
  Count params = 0;           // items with in_total
  Count flops = 0;            // every item
  Count excluded_params = 0;  // items reported but left out of params

  std::vector<std::pair<std::string, CostItem>> stage_totals() const;
};

// Itemized attention-stage cost for one layer over n nodes of `channels`
// width. FLOP terms use flops_per_mac; the deformable variant evaluates the
// attention itself on the m keypoints.
struct AttentionCost {
  Count params = 0;
  std::vector<CostItem> terms;
  Count score_flops = 0;  // q.k products only
  Count flops() const;
};

AttentionCost fsa_layer_cost(Count n, Count channels, Count dim, bool position_encoding,
                             Count flops_per_mac = 2);
AttentionCost dsa_layer_cost(Count n, Count m, Count channels, const AttentionConfig& att,
                             Count flops_per_mac = 2);

struct CostOptions {
  std::optional<Count> attention_nodes;  // overrides every attention stage's node count
};

CostReport count_params(const ArchConfig& cfg, const CountingRules& rules);
CostReport count_flops(const ArchConfig& cfg, const CountingRules& rules,
                       const ReferenceInputs& inputs, const CostOptions& options = {});

struct Comparison {
  std::string baseline;
  std::string candidate;
  Count baseline_params = 0, candidate_params = 0;
  Count baseline_flops = 0, candidate_flops = 0;
  double param_change_pct = 0.0;  // negative = reduction
  double flop_change_pct = 0.0;
};

Comparison compare(const CostReport& baseline, const CostReport& candidate);

std::string format_report_text(const CostReport& report);
std::string format_comparisons_text(const std::vector<Comparison>& rows);
Json report_json(const CostReport& report);
Json comparison_json(const Comparison& c);

}  // namespace pcsa
