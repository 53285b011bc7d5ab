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
#include <string>
#include <vector>

#include "pcsa/dsa.hpp"
#include "pcsa/fsa.hpp"
#include "pcsa/geom.hpp"
#include "pcsa/matrix.hpp"
#include "pcsa/pcio.hpp"
#include "pcsa/random.hpp"

// Naive scalar reference implementations and the invariant suite. The
// references use plain loops only and share no code with the library kernels.
namespace pcsa::verify {

Matrix ref_group_norm(const Matrix& x, Index groups, const std::vector<double>& gamma,
                      const std::vector<double>& beta, double eps);

struct RefAttention {
  Matrix output;
  std::vector<Matrix> attention;
};

RefAttention ref_fsa_forward(const Matrix& features, const Matrix& positions,
                             const FsaWeights& w);

std::vector<Index> ref_fps(const Matrix& positions, Index m, Index start);
std::vector<std::vector<Index>> ref_knn(const Matrix& query, const Matrix& base, Index k);
std::vector<std::vector<Index>> ref_ball_query(const Matrix& query, const Matrix& base,
                                               double radius, Index max_samples);

Matrix ref_deform(const Matrix& features, const Matrix& positions,
                  const std::vector<Index>& subset,
                  const std::vector<std::vector<Index>>& neighbors, const Matrix& w_offset,
                  const Matrix& w_align);
Matrix ref_aggregate(const Matrix& features, const std::vector<std::vector<Index>>& neighbors,
                     const Matrix& w_out);
Matrix ref_upsample_idw(const Matrix& subset_out, const Matrix& subset_pos,
                        const Matrix& all_pos, double radius, Index max_samples,
                        const Matrix& mlp);
Matrix ref_upsample_attention(const Matrix& subset_out, const Matrix& all_feats,
                              const AttentionUpsampler& up);
Matrix ref_local_maxpool(const Matrix& features, const std::vector<std::vector<Index>>& nbhd,
                         const Matrix& h);

// Seeded instance: features uniform in [-1, 1], positions uniform in
// [-extent, extent]^3.
FeatureGraph random_graph(Rng& rng, Index n, Index d, double extent = 2.0);
FeatureGraph permute(const FeatureGraph& g, const std::vector<Index>& perm);

struct GradientReport {
  double max_rel_error = 0.0;
  std::string worst;  // tensor[index] with the largest error
  Index scalars = 0;
};

// Central finite differences of L = sum(R .* output) against fsa_backward for
// every weight tensor and both inputs. |a - f| / max(1, |a|, |f|).
// perturb_tape shifts one recorded weight before the reverse pass.
GradientReport gradient_check(const FeatureGraph& g, const FsaWeights& w, Rng& rng,
                              double h = 1e-5, bool perturb_tape = false);

// Smallest per-row, per-group variance of the pre-norm activations.
double min_group_variance(const FeatureGraph& g, const FsaWeights& w);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct CheckOptions {
  std::uint64_t seed = 1;
  std::string inject_fault;  // "" or "gradient"
};

std::vector<std::string> check_names();
std::vector<CheckResult> run_checks(const CheckOptions& options);
CheckResult run_check(const std::string& name, const CheckOptions& options);

}  // namespace pcsa::verify
