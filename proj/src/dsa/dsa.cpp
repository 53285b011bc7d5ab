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

#include "pcsa/dsa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pcsa/error.hpp"
#include "pcsa/parallel.hpp"

namespace pcsa {
namespace {

constexpr double kIdwEps = 1e-8;

void require_shape(const Matrix& m, Index rows, Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ArgumentError(std::string(name) + " must be " + std::to_string(rows) + "x" +
                        std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()));
  }
}

// v + t with the stored difference kept strictly inside (-1, 1).
double bounded_step(double v, double t) {
  if (t >= 1.0) t = std::nextafter(1.0, 0.0);
  if (t <= -1.0) t = std::nextafter(-1.0, 0.0);
  double out = v + t;
  while (std::abs(out - v) >= 1.0) out = std::nextafter(out, v);
  return out;
}

}  // namespace

UpsampleMode parse_upsample_mode(std::string_view name) {
  if (name == "idw") return UpsampleMode::idw;
  if (name == "attention") return UpsampleMode::attention;
  throw ArgumentError("unknown up-sampling mode '" + std::string(name) +
                      "' (expected idw or attention)");
}

std::string_view to_string(UpsampleMode mode) {
  return mode == UpsampleMode::idw ? "idw" : "attention";
}

Index DsaWeights::parameter_count() const {
  const Index d = dim();
  Index up = 0;
  if (mode == UpsampleMode::idw) {
    up = idw.mlp.size();
  } else {
    up = attention.wq.size() + attention.wk.size() + attention.wv.size();
  }
  return fsa.parameter_count() + w_offset.size() + w_align.size() + d * d + up;
}

void DsaWeights::validate() const {
  fsa.validate();
  const Index d = dim();
  require_shape(w_offset, d, 3, "w_offset");
  require_shape(w_align, 1, 3, "w_align");
  require_shape(w_out, d, d, "w_out");
  bool finite = all_finite(w_offset) && all_finite(w_align) && all_finite(w_out);
  if (mode == UpsampleMode::idw) {
    if (!(idw.radius > 0.0) || !std::isfinite(idw.radius)) {
      throw ArgumentError("interpolation radius must be positive");
    }
    if (idw.max_samples < 1) throw ArgumentError("interpolation samples must be at least 1");
    require_shape(idw.mlp, d, d, "idw mlp");
    finite = finite && all_finite(idw.mlp);
  } else {
    require_shape(attention.wq, d, d, "upsampler wq");
    require_shape(attention.wk, d, d, "upsampler wk");
    require_shape(attention.wv, d, d, "upsampler wv");
    finite = finite && all_finite(attention.wq) && all_finite(attention.wk) &&
             all_finite(attention.wv);
  }
  if (!finite) throw ArgumentError("deformable attention weights contain non-finite values");
}

DsaWeights DsaWeights::random(Index dim, Index heads, UpsampleMode mode, Rng& rng) {
  DsaWeights w;
  w.fsa = FsaWeights::random(dim, heads, rng);
  w.w_offset = rng.glorot(dim, 3);
  w.w_align = rng.uniform_matrix(1, 3, -1.0, 1.0);
  w.w_out = rng.glorot(dim, dim);
  w.mode = mode;
  if (mode == UpsampleMode::idw) {
    w.idw.mlp = rng.glorot(dim, dim);
  } else {
    w.attention.wq = rng.glorot(dim, dim);
    w.attention.wk = rng.glorot(dim, dim);
    w.attention.wv = rng.glorot(dim, dim);
  }
  w.validate();
  return w;
}

void DsaConfig::validate() const {
  if (keypoints < 1) throw ArgumentError("keypoints must be at least 1");
  if (!(deform_radius > 0.0)) throw ArgumentError("deformation radius must be positive");
  if (!(pool_radius > 0.0)) throw ArgumentError("feature pool radius must be positive");
  if (neighbors < 1) throw ArgumentError("neighbor count must be at least 1");
}

Deformation deform_vertices(const FeatureGraph& graph, const IndexSet& subset,
                            const Neighborhood& nbhd, const Matrix& w_offset,
                            const Matrix& w_align) {
  const Index d = graph.dim();
  const Index m = subset.size();
  require_shape(w_offset, d, 3, "w_offset");
  require_shape(w_align, 1, 3, "w_align");
  if (nbhd.size() != m) throw ArgumentError("neighborhood must have one row per subset node");

  Deformation out{Matrix(m, 3), std::vector<double>(m, 0.0), 0};
  const Matrix& x = graph.features;
  const Matrix& v = graph.positions;
  for (Index s = 0; s < m; ++s) {
    const Index i = subset.indices[s];
    if (i >= graph.size()) throw ArgumentError("subset index out of range");
    const auto& row = nbhd.rows[s];
    for (Index c = 0; c < 3; ++c) out.refined_positions(s, c) = v(i, c);
    if (row.empty()) {
      ++out.empty_neighborhoods;
      continue;
    }
    double sum = 0.0;
    for (const Neighbor& nb : row) {
      const Index j = nb.index;
      double proj[3] = {0.0, 0.0, 0.0};
      for (Index f = 0; f < d; ++f) {
        const double diff = x(i, f) - x(j, f);
        for (Index c = 0; c < 3; ++c) proj[c] += diff * w_offset(f, c);
      }
      for (Index c = 0; c < 3; ++c) sum += proj[c] * (v(i, c) - v(j, c));
    }
    const double xs = std::max(0.0, sum) / static_cast<double>(row.size());
    out.x_star[s] = xs;
    for (Index c = 0; c < 3; ++c) {
      out.refined_positions(s, c) = bounded_step(v(i, c), std::tanh(xs * w_align(0, c)));
    }
  }
  return out;
}

Aggregation aggregate_features(const FeatureGraph& graph, const Matrix& refined,
                               const Matrix& w_out, double radius, Index k) {
  const Index d = graph.dim();
  require_shape(w_out, d, w_out.cols(), "w_out");
  if (refined.cols() != 3) throw ArgumentError("refined positions must have 3 columns");
  if (graph.size() == 0) throw ArgumentError("feature pooling over an empty graph");
  Neighborhood nbhd = ball_query(refined, graph.positions, radius, k);
  Aggregation out{Matrix(refined.rows(), w_out.cols()), 0};
  std::vector<Index> missing;
  for (Index s = 0; s < nbhd.size(); ++s) {
    if (nbhd.rows[s].empty()) missing.push_back(s);
  }
  if (!missing.empty()) {
    const Matrix q = gather_rows(refined, missing);
    const Neighborhood nearest = knn(q, graph.positions, 1);
    for (Index r = 0; r < missing.size(); ++r) nbhd.rows[missing[r]] = nearest.rows[r];
    out.fallbacks = missing.size();
  }
  const Matrix mapped = matmul(graph.features, w_out);
  for (Index s = 0; s < nbhd.size(); ++s) {
    for (Index c = 0; c < mapped.cols(); ++c) {
      double best = -std::numeric_limits<double>::infinity();
      for (const Neighbor& nb : nbhd.rows[s]) best = std::max(best, mapped(nb.index, c));
      out.features(s, c) = best;
    }
  }
  return out;
}

Matrix upsample_idw(const Matrix& subset_out, const Matrix& subset_pos, const Matrix& all_pos,
                    const IdwUpsampler& up, IdwTrace* trace) {
  const Index m = subset_out.rows();
  const Index d = subset_out.cols();
  if (m == 0) throw ArgumentError("up-sampling from an empty subset");
  require_shape(subset_pos, m, 3, "subset positions");
  if (all_pos.cols() != 3) throw ArgumentError("target positions must have 3 columns");
  require_shape(up.mlp, d, up.mlp.cols(), "idw mlp");
  if (!(up.radius > 0.0)) throw ArgumentError("interpolation radius must be positive");
  if (up.max_samples < 1) throw ArgumentError("interpolation samples must be at least 1");

  const Index n = all_pos.rows();
  Neighborhood nbhd = ball_query(all_pos, subset_pos, up.radius, up.max_samples);
  std::vector<Index> missing;
  for (Index t = 0; t < n; ++t) {
    if (nbhd.rows[t].empty()) missing.push_back(t);
  }
  if (!missing.empty()) {
    const Matrix q = gather_rows(all_pos, missing);
    const Neighborhood nearest = knn(q, subset_pos, 1);
    for (Index r = 0; r < missing.size(); ++r) nbhd.rows[missing[r]] = nearest.rows[r];
  }

  Matrix mixed(n, d);
  if (trace) {
    trace->sources.assign(n, {});
    trace->fallbacks = missing.size();
  }
  parallel_for(0, n, [&](Index lo, Index hi) {
    std::vector<double> wts;
    for (Index t = lo; t < hi; ++t) {
      const auto& row = nbhd.rows[t];
      wts.resize(row.size());
      double total = 0.0;
      for (Index r = 0; r < row.size(); ++r) {
        wts[r] = 1.0 / (row[r].dist2 + kIdwEps);
        total += wts[r];
      }
      for (Index r = 0; r < row.size(); ++r) {
        const double wn = wts[r] / total;
        const auto src = subset_out.row(row[r].index);
        auto dst = mixed.row(t);
        for (Index c = 0; c < d; ++c) dst[c] += wn * src[c];
        if (trace) trace->sources[t].push_back({row[r].index, wn});
      }
    }
  });
  return matmul(mixed, up.mlp);
}

Matrix upsample_attention(const Matrix& subset_out, const Matrix& all_feats,
                          const AttentionUpsampler& up, Matrix* weights) {
  const Index m = subset_out.rows();
  const Index n = all_feats.rows();
  const Index d = all_feats.cols();
  if (m == 0) throw ArgumentError("up-sampling from an empty subset");
  if (subset_out.cols() != d) throw ArgumentError("subset and node feature dims differ");
  require_shape(up.wq, d, up.wq.cols(), "upsampler wq");
  require_shape(up.wk, d, up.wq.cols(), "upsampler wk");
  require_shape(up.wv, d, up.wv.cols(), "upsampler wv");

  const Matrix q = matmul(all_feats, up.wq);
  const Matrix k = matmul(subset_out, up.wk);
  const Matrix v = matmul(subset_out, up.wv);
  const Index dk = q.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Matrix out(n, v.cols());
  if (weights) *weights = Matrix(n, m);
  parallel_for(0, n, [&](Index lo, Index hi) {
    std::vector<double> logits(m);
    for (Index i = lo; i < hi; ++i) {
      const auto qi = q.row(i);
      for (Index j = 0; j < m; ++j) {
        const auto kj = k.row(j);
        double s = 0.0;
        for (Index c = 0; c < dk; ++c) s += qi[c] * kj[c];
        logits[j] = s * scale;
      }
      softmax_row(logits);
      auto oi = out.row(i);
      for (Index j = 0; j < m; ++j) {
        const auto vj = v.row(j);
        for (Index c = 0; c < vj.size(); ++c) oi[c] += logits[j] * vj[c];
      }
      if (weights) std::copy(logits.begin(), logits.end(), weights->row(i).begin());
    }
  }, 16);
  return out;
}

DsaResult dsa_forward(const FeatureGraph& graph, const DsaWeights& w, const DsaConfig& cfg,
                      const DsaOptions& options) {
  graph.validate();
  w.validate();
  cfg.validate();
  const Index n = graph.size();
  if (graph.dim() != w.dim()) {
    throw ArgumentError("graph has " + std::to_string(graph.dim()) +
                        " feature channels, weights expect " + std::to_string(w.dim()));
  }
  if (cfg.keypoints > n) {
    throw ArgumentError("keypoints (" + std::to_string(cfg.keypoints) + ") exceed node count (" +
                        std::to_string(n) + ")");
  }

  DsaResult r;
  r.subset.indices = fps(graph.positions, cfg.keypoints);
  const Matrix sampled = gather_rows(graph.positions, r.subset.indices.indices);
  const Neighborhood nbhd =
      ball_query(sampled, graph.positions, cfg.deform_radius, cfg.neighbors);
  Deformation def = deform_vertices(graph, r.subset.indices, nbhd, w.w_offset, w.w_align);
  r.stats.deform_empty = def.empty_neighborhoods;
  r.subset.refined_positions = std::move(def.refined_positions);
  r.subset.x_star = std::move(def.x_star);

  Aggregation agg = aggregate_features(graph, r.subset.refined_positions, w.w_out,
                                       cfg.pool_radius, cfg.neighbors);
  r.stats.pool_fallbacks = agg.fallbacks;
  r.subset.aggregated_features = std::move(agg.features);

  const FeatureGraph sub{r.subset.aggregated_features, r.subset.refined_positions, {}};
  AttentionOutput att = fsa_forward(sub, w.fsa, FsaOptions{options.keep_attention});

  Matrix upsampled;
  if (w.mode == UpsampleMode::idw) {
    IdwTrace trace;
    upsampled = upsample_idw(att.update, r.subset.refined_positions, graph.positions, w.idw,
                             &trace);
    r.stats.upsample_fallbacks = trace.fallbacks;
    if (options.keep_upsample_weights) r.idw_trace = std::move(trace);
  } else {
    upsampled = upsample_attention(att.update, graph.features, w.attention,
                                   options.keep_upsample_weights ? &r.upsample_attention
                                                                 : nullptr);
  }

  r.out.output = graph.features;
  add_inplace(r.out.output, upsampled);
  r.out.update = std::move(upsampled);
  r.out.attention = std::move(att.attention);
  r.out.context = std::move(att.context);
  r.subset_update = std::move(att.update);
  return r;
}

}  // namespace pcsa
