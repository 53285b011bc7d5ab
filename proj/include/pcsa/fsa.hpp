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

#include <span>
#include <vector>

#include "pcsa/geom.hpp"
#include "pcsa/matrix.hpp"
#include "pcsa/pcio.hpp"
#include "pcsa/random.hpp"

namespace pcsa {

// Learned tensors of one full self-attention block. Every map is stored
// (in_dim x out_dim) and applied to row vectors.
struct FsaWeights {
  Index dim = 0;
  Index heads = 1;
  Index groups = 1;  // group-norm groups; tied to heads by default
  double eps = 1e-5;
  Matrix wq, wk, wv, wo;  // dim x dim
  Matrix wpos;            // 3 x dim, additive absolute-position encoding
  std::vector<double> gamma, beta;

  Index head_dim() const { return dim / heads; }
  // Learned scalars: 4 d^2 + 3 d + 2 d. Independent of node count.
  Index parameter_count() const;
  void validate() const;

  // Glorot projections, small position map, gamma = 1 and beta = 0.
  static FsaWeights random(Index dim, Index heads, Rng& rng);
  // Every tensor (including gamma/beta) drawn at random; used by checks.
  static FsaWeights random_full(Index dim, Index heads, Rng& rng);
};

struct AttentionOutput {
  Matrix output;                  // input features + update
  std::vector<Matrix> attention;  // per head, n x n row-stochastic; empty if not kept
  Matrix context;                 // concatenated per-head a_i = sum_j w_ij v_j
  Matrix update;                  // group_norm(context * Wo)
};

struct FsaOptions {
  bool keep_attention = true;
};

// Intermediates of one forward pass, enough for the exact reverse pass.
struct GradTape {
  FsaWeights weights;
  Matrix features, positions;
  Matrix encoded, q, k, v;
  std::vector<Matrix> attention;
  Matrix context, projected, normalized;  // normalized = (z - mean) * inv_std
  std::vector<double> inv_std;            // n x groups, row-major
  Matrix output;
};

struct FsaGradients {
  Matrix features, positions;
  Matrix wq, wk, wv, wo, wpos;
  std::vector<double> gamma, beta;
};

// features + positions * wpos
Matrix encode_positions(const Matrix& features, const Matrix& positions, const Matrix& wpos);

Matrix group_norm(const Matrix& x, Index groups, std::span<const double> gamma,
                  std::span<const double> beta, double eps);

// In-place numerically stable softmax of one row (max subtraction).
void softmax_row(std::span<double> row);

AttentionOutput fsa_forward(const FeatureGraph& graph, const FsaWeights& w,
                            const FsaOptions& options = {});
AttentionOutput fsa_forward(const FeatureGraph& graph, const FsaWeights& w, GradTape& tape);

// Recomputes the forward pass from the inputs and weights held by the tape.
Matrix replay(const GradTape& tape);

FsaGradients fsa_backward(const GradTape& tape, const Matrix& grad_output);

// Fixed-weight point-feature approximator: per node, elementwise max over its
// neighborhood of x_l * h.
Matrix local_maxpool_baseline(const FeatureGraph& graph, const Neighborhood& nbhd,
                              const Matrix& h);

}  // namespace pcsa
