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

#include "pcsa/fsa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pcsa/error.hpp"
#include "pcsa/parallel.hpp"

namespace pcsa {
namespace {

void require_shape(const Matrix& m, Index rows, Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ArgumentError(std::string(name) + " must be " + std::to_string(rows) + "x" +
                        std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()));
  }
}

struct NormResult {
  Matrix normalized;
  std::vector<double> inv_std;
  Matrix out;
};

NormResult group_norm_full(const Matrix& x, Index groups, std::span<const double> gamma,
                           std::span<const double> beta, double eps) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (groups == 0 || d % groups != 0) {
    throw ArgumentError("group count " + std::to_string(groups) + " does not divide " +
                        std::to_string(d) + " channels");
  }
  if (gamma.size() != d || beta.size() != d) {
    throw ArgumentError("gamma and beta must have one entry per channel");
  }
  const Index gs = d / groups;
  NormResult r{Matrix(n, d), std::vector<double>(n * groups), Matrix(n, d)};
  for (Index i = 0; i < n; ++i) {
    for (Index g = 0; g < groups; ++g) {
      const Index c0 = g * gs;
      double mean = 0.0;
      for (Index c = c0; c < c0 + gs; ++c) mean += x(i, c);
      mean /= static_cast<double>(gs);
      double var = 0.0;
      for (Index c = c0; c < c0 + gs; ++c) var += (x(i, c) - mean) * (x(i, c) - mean);
      var /= static_cast<double>(gs);
      const double inv = 1.0 / std::sqrt(var + eps);
      r.inv_std[i * groups + g] = inv;
      for (Index c = c0; c < c0 + gs; ++c) {
        const double h = (x(i, c) - mean) * inv;
        r.normalized(i, c) = h;
        r.out(i, c) = h * gamma[c] + beta[c];
      }
    }
  }
  return r;
}

struct Forward {
  Matrix encoded, q, k, v;
  std::vector<Matrix> attention;
  Matrix context;
  NormResult norm;
  Matrix projected;
  Matrix output;
};

Forward run_forward(const Matrix& features, const Matrix& positions, const FsaWeights& w,
                    bool keep_attention) {
  w.validate();
  const Index n = features.rows();
  const Index d = w.dim;
  require_shape(features, n, d, "features");
  require_shape(positions, n, 3, "positions");
  if (n == 0) throw ArgumentError("attention over an empty node set");

  Forward f;
  f.encoded = encode_positions(features, positions, w.wpos);
  f.q = matmul(f.encoded, w.wq);
  f.k = matmul(f.encoded, w.wk);
  f.v = matmul(f.encoded, w.wv);

  const Index heads = w.heads;
  const Index hd = w.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  if (keep_attention) f.attention.assign(heads, Matrix(n, n));
  f.context = Matrix(n, d);

  parallel_for(0, n, [&](Index lo, Index hi) {
    std::vector<double> logits(n);
    for (Index i = lo; i < hi; ++i) {
      for (Index h = 0; h < heads; ++h) {
        const Index c0 = h * hd;
        const double* qi = f.q.row(i).data() + c0;
        for (Index j = 0; j < n; ++j) {
          const double* kj = f.k.row(j).data() + c0;
          double s = 0.0;
          for (Index c = 0; c < hd; ++c) s += qi[c] * kj[c];
          logits[j] = s * scale;
        }
        softmax_row(logits);
        double* ci = f.context.row(i).data() + c0;
        for (Index j = 0; j < n; ++j) {
          const double a = logits[j];
          const double* vj = f.v.row(j).data() + c0;
          for (Index c = 0; c < hd; ++c) ci[c] += a * vj[c];
        }
        if (keep_attention) {
          std::copy(logits.begin(), logits.end(), f.attention[h].row(i).begin());
        }
      }
    }
  }, 16);

  f.projected = matmul(f.context, w.wo);
  f.norm = group_norm_full(f.projected, w.groups, w.gamma, w.beta, w.eps);
  f.output = features;
  add_inplace(f.output, f.norm.out);
  return f;
}

}  // namespace

Index FsaWeights::parameter_count() const { return 4 * dim * dim + 3 * dim + 2 * dim; }

void FsaWeights::validate() const {
  if (dim == 0 || heads == 0) throw ArgumentError("attention dim and heads must be positive");
  if (dim % heads != 0) {
    throw ArgumentError("heads (" + std::to_string(heads) + ") must divide dim (" +
                        std::to_string(dim) + ")");
  }
  if (groups == 0 || dim % groups != 0) {
    throw ArgumentError("groups (" + std::to_string(groups) + ") must divide dim (" +
                        std::to_string(dim) + ")");
  }
  if (!(eps > 0.0)) throw ArgumentError("group-norm eps must be positive");
  require_shape(wq, dim, dim, "wq");
  require_shape(wk, dim, dim, "wk");
  require_shape(wv, dim, dim, "wv");
  require_shape(wo, dim, dim, "wo");
  require_shape(wpos, 3, dim, "wpos");
  if (gamma.size() != dim || beta.size() != dim) {
    throw ArgumentError("gamma and beta must have dim entries");
  }
}

FsaWeights FsaWeights::random(Index dim, Index heads, Rng& rng) {
  FsaWeights w;
  w.dim = dim;
  w.heads = heads;
  w.groups = heads;
  w.wq = rng.glorot(dim, dim);
  w.wk = rng.glorot(dim, dim);
  w.wv = rng.glorot(dim, dim);
  w.wo = rng.glorot(dim, dim);
  w.wpos = rng.uniform_matrix(3, dim, -0.1, 0.1);
  w.gamma.assign(dim, 1.0);
  w.beta.assign(dim, 0.0);
  w.validate();
  return w;
}

FsaWeights FsaWeights::random_full(Index dim, Index heads, Rng& rng) {
  FsaWeights w = random(dim, heads, rng);
  w.wpos = rng.uniform_matrix(3, dim, -0.5, 0.5);
  for (auto& g : w.gamma) g = rng.uniform(0.5, 1.5);
  for (auto& b : w.beta) b = rng.uniform(-0.5, 0.5);
  return w;
}

Matrix encode_positions(const Matrix& features, const Matrix& positions, const Matrix& wpos) {
  require_shape(positions, features.rows(), 3, "positions");
  require_shape(wpos, 3, features.cols(), "wpos");
  Matrix out = matmul(positions, wpos);
  add_inplace(out, features);
  return out;
}

Matrix group_norm(const Matrix& x, Index groups, std::span<const double> gamma,
                  std::span<const double> beta, double eps) {
  return group_norm_full(x, groups, gamma, beta, eps).out;
}

void softmax_row(std::span<double> row) {
  if (row.empty()) return;
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : row) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : row) {
    v = std::exp(v - mx);
    sum += v;
  }
  const double inv = 1.0 / sum;
  for (double& v : row) v *= inv;
}

AttentionOutput fsa_forward(const FeatureGraph& graph, const FsaWeights& w,
                            const FsaOptions& options) {
  Forward f = run_forward(graph.features, graph.positions, w, options.keep_attention);
  return {std::move(f.output), std::move(f.attention), std::move(f.context),
          std::move(f.norm.out)};
}

AttentionOutput fsa_forward(const FeatureGraph& graph, const FsaWeights& w, GradTape& tape) {
  Forward f = run_forward(graph.features, graph.positions, w, true);
  tape.weights = w;
  tape.features = graph.features;
  tape.positions = graph.positions;
  tape.encoded = std::move(f.encoded);
  tape.q = std::move(f.q);
  tape.k = std::move(f.k);
  tape.v = std::move(f.v);
  tape.attention = f.attention;
  tape.context = f.context;
  tape.projected = std::move(f.projected);
  tape.normalized = std::move(f.norm.normalized);
  tape.inv_std = std::move(f.norm.inv_std);
  tape.output = f.output;
  return {std::move(f.output), std::move(f.attention), std::move(f.context),
          std::move(f.norm.out)};
}

Matrix replay(const GradTape& tape) {
  return run_forward(tape.features, tape.positions, tape.weights, false).output;
}

FsaGradients fsa_backward(const GradTape& tape, const Matrix& grad_output) {
  const FsaWeights& w = tape.weights;
  const Index n = tape.features.rows();
  const Index d = w.dim;
  require_shape(grad_output, n, d, "grad_output");
  if (tape.attention.size() != w.heads) throw ArgumentError("tape holds no attention maps");

  FsaGradients g;
  g.gamma.assign(d, 0.0);
  g.beta.assign(d, 0.0);

  // output = x + gamma * xhat + beta
  Matrix dxhat(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < d; ++c) {
      const double go = grad_output(i, c);
      g.gamma[c] += go * tape.normalized(i, c);
      g.beta[c] += go;
      dxhat(i, c) = go * w.gamma[c];
    }
  }

  const Index gs = d / w.groups;
  Matrix dz(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index gr = 0; gr < w.groups; ++gr) {
      const Index c0 = gr * gs;
      double m1 = 0.0;
      double m2 = 0.0;
      for (Index c = c0; c < c0 + gs; ++c) {
        m1 += dxhat(i, c);
        m2 += dxhat(i, c) * tape.normalized(i, c);
      }
      m1 /= static_cast<double>(gs);
      m2 /= static_cast<double>(gs);
      const double inv = tape.inv_std[i * w.groups + gr];
      for (Index c = c0; c < c0 + gs; ++c) {
        dz(i, c) = inv * (dxhat(i, c) - m1 - tape.normalized(i, c) * m2);
      }
    }
  }

  g.wo = matmul_tn(tape.context, dz);
  const Matrix dctx = matmul_nt(dz, w.wo);

  const Index hd = w.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  Matrix dq(n, d), dk(n, d), dv(n, d);
  std::vector<double> da(n);
  for (Index h = 0; h < w.heads; ++h) {
    const Index c0 = h * hd;
    const Matrix& a = tape.attention[h];
    for (Index i = 0; i < n; ++i) {
      double dot = 0.0;
      for (Index j = 0; j < n; ++j) {
        double s = 0.0;
        for (Index c = c0; c < c0 + hd; ++c) s += dctx(i, c) * tape.v(j, c);
        da[j] = s;
        dot += s * a(i, j);
        for (Index c = c0; c < c0 + hd; ++c) dv(j, c) += a(i, j) * dctx(i, c);
      }
      for (Index j = 0; j < n; ++j) {
        const double ds = a(i, j) * (da[j] - dot) * scale;
        for (Index c = c0; c < c0 + hd; ++c) {
          dq(i, c) += ds * tape.k(j, c);
          dk(j, c) += ds * tape.q(i, c);
        }
      }
    }
  }

  g.wq = matmul_tn(tape.encoded, dq);
  g.wk = matmul_tn(tape.encoded, dk);
  g.wv = matmul_tn(tape.encoded, dv);
  Matrix denc = matmul_nt(dq, w.wq);
  add_inplace(denc, matmul_nt(dk, w.wk));
  add_inplace(denc, matmul_nt(dv, w.wv));
  g.wpos = matmul_tn(tape.positions, denc);
  g.positions = matmul_nt(denc, w.wpos);
  g.features = grad_output;
  add_inplace(g.features, denc);
  return g;
}

Matrix local_maxpool_baseline(const FeatureGraph& graph, const Neighborhood& nbhd,
                              const Matrix& h) {
  const Index n = graph.size();
  if (nbhd.size() != n) throw ArgumentError("neighborhood must have one row per node");
  require_shape(h, graph.dim(), h.cols(), "h");
  const Matrix mapped = matmul(graph.features, h);
  Matrix out(n, h.cols());
  for (Index i = 0; i < n; ++i) {
    const auto& row = nbhd.rows[i];
    if (row.empty()) {
      throw ArgumentError("node " + std::to_string(i) + " has an empty neighborhood");
    }
    for (Index c = 0; c < h.cols(); ++c) {
      double m = -std::numeric_limits<double>::infinity();
      for (const Neighbor& nb : row) m = std::max(m, mapped(nb.index, c));
      out(i, c) = m;
    }
  }
  return out;
}

}  // namespace pcsa
