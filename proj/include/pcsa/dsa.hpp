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

#include <string_view>
#include <vector>

#include "pcsa/fsa.hpp"
#include "pcsa/geom.hpp"
#include "pcsa/matrix.hpp"
#include "pcsa/pcio.hpp"
#include "pcsa/random.hpp"

namespace pcsa {

enum class UpsampleMode { idw, attention };

UpsampleMode parse_upsample_mode(std::string_view name);
std::string_view to_string(UpsampleMode mode);

// Inverse-distance feature propagation followed by a d x d refinement map.
struct IdwUpsampler {
  double radius = 1.6;
  Index max_samples = 16;
  Matrix mlp;
};

// Single-head cross-attention: queries from the n node features, keys and
// values from the m subset outputs.
struct AttentionUpsampler {
  Matrix wq, wk, wv;
};

struct DsaWeights {
  FsaWeights fsa;
  Matrix w_offset;  // d x 3
  Matrix w_align;   // 1 x 3
  Matrix w_out;     // d x d
  UpsampleMode mode = UpsampleMode::idw;
  IdwUpsampler idw;              // used when mode == idw
  AttentionUpsampler attention;  // used when mode == attention

  Index dim() const noexcept { return fsa.dim; }
  Index parameter_count() const;
  void validate() const;

  static DsaWeights random(Index dim, Index heads, UpsampleMode mode, Rng& rng);
};

struct DsaConfig {
  Index keypoints = 2048;
  double deform_radius = 3.0;
  double pool_radius = 2.0;
  Index neighbors = 16;

  void validate() const;
};

struct DeformedSubset {
  IndexSet indices;
  Matrix refined_positions;    // m x 3
  Matrix aggregated_features;  // m x d
  std::vector<double> x_star;  // per subset node, before tanh
};

struct Deformation {
  Matrix refined_positions;
  std::vector<double> x_star;
  Index empty_neighborhoods = 0;
};

struct Aggregation {
  Matrix features;
  Index fallbacks = 0;  // subset nodes pooled from their single nearest node
};

// Per target node: contributing subset nodes and their normalized weights.
struct IdwTrace {
  std::vector<std::vector<Neighbor>> sources;  // dist2 field holds the weight
  Index fallbacks = 0;
};

struct DsaOptions {
  bool keep_attention = true;
  bool keep_upsample_weights = false;
};

struct DsaStats {
  Index deform_empty = 0;
  Index pool_fallbacks = 0;
  Index upsample_fallbacks = 0;
};

struct DsaResult {
  // output and update span all n nodes; attention maps and context span the
  // m subset nodes in sampling order.
  AttentionOutput out;
  DeformedSubset subset;
  Matrix subset_update;  // m x d, input to the up-sampler
  DsaStats stats;
  IdwTrace idw_trace;           // filled when keep_upsample_weights and mode == idw
  Matrix upsample_attention;    // n x m, filled when keep_upsample_weights and mode == attention
};

Deformation deform_vertices(const FeatureGraph& graph, const IndexSet& subset,
                            const Neighborhood& nbhd, const Matrix& w_offset,
                            const Matrix& w_align);

Aggregation aggregate_features(const FeatureGraph& graph, const Matrix& refined,
                               const Matrix& w_out, double radius, Index k);

Matrix upsample_idw(const Matrix& subset_out, const Matrix& subset_pos, const Matrix& all_pos,
                    const IdwUpsampler& up, IdwTrace* trace = nullptr);

Matrix upsample_attention(const Matrix& subset_out, const Matrix& all_feats,
                          const AttentionUpsampler& up, Matrix* weights = nullptr);

DsaResult dsa_forward(const FeatureGraph& graph, const DsaWeights& w, const DsaConfig& cfg,
                      const DsaOptions& options = {});

}  // namespace pcsa
