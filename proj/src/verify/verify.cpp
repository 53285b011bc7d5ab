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

#include "pcsa/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "pcsa/costmodel.hpp"
#include "pcsa/error.hpp"
#include "pcsa/io.hpp"
#include "pcsa/parallel.hpp"

namespace pcsa::verify {
namespace {

double dist2(const Matrix& a, Index i, const Matrix& b, Index j) {
  const double dx = a(i, 0) - b(j, 0);
  const double dy = a(i, 1) - b(j, 1);
  const double dz = a(i, 2) - b(j, 2);
  return dx * dx + dy * dy + dz * dz;
}

std::vector<std::pair<double, Index>> sorted_candidates(const Matrix& query, Index q,
                                                        const Matrix& base) {
  std::vector<std::pair<double, Index>> all;
  for (Index j = 0; j < base.rows(); ++j) all.push_back({dist2(query, q, base, j), j});
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<double> softmax(std::vector<double> logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

Matrix product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

std::vector<Index> to_indices(const std::vector<Neighbor>& row) {
  std::vector<Index> out;
  for (const auto& nb : row) out.push_back(nb.index);
  return out;
}

std::vector<std::vector<Index>> to_indices(const Neighborhood& n) {
  std::vector<std::vector<Index>> out;
  for (const auto& row : n.rows) out.push_back(to_indices(row));
  return out;
}

Index pick_heads(Rng& rng, Index d) {
  std::vector<Index> options;
  for (Index h : {1, 2, 4}) {
    if (d % h == 0) options.push_back(h);
  }
  return options[rng.below(options.size())];
}

}  // namespace

Matrix ref_group_norm(const Matrix& x, Index groups, const std::vector<double>& gamma,
                      const std::vector<double>& beta, double eps) {
  const Index gs = x.cols() / groups;
  Matrix out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index g = 0; g < groups; ++g) {
      double mean = 0.0;
      for (Index c = 0; c < gs; ++c) mean += x(i, g * gs + c);
      mean /= static_cast<double>(gs);
      double var = 0.0;
      for (Index c = 0; c < gs; ++c) {
        const double dv = x(i, g * gs + c) - mean;
        var += dv * dv;
      }
      var /= static_cast<double>(gs);
      for (Index c = 0; c < gs; ++c) {
        const Index ch = g * gs + c;
        out(i, ch) = (x(i, ch) - mean) / std::sqrt(var + eps) * gamma[ch] + beta[ch];
      }
    }
  }
  return out;
}

RefAttention ref_fsa_forward(const Matrix& features, const Matrix& positions,
                             const FsaWeights& w) {
  const Index n = features.rows();
  const Index d = w.dim;
  Matrix enc(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < d; ++c) {
      double s = features(i, c);
      for (Index k = 0; k < 3; ++k) s += positions(i, k) * w.wpos(k, c);
      enc(i, c) = s;
    }
  }
  const Matrix q = product(enc, w.wq);
  const Matrix k = product(enc, w.wk);
  const Matrix v = product(enc, w.wv);
  const Index hd = d / w.heads;
  RefAttention r;
  Matrix ctx(n, d);
  for (Index h = 0; h < w.heads; ++h) {
    Matrix att(n, n);
    for (Index i = 0; i < n; ++i) {
      std::vector<double> logits(n);
      for (Index j = 0; j < n; ++j) {
        double s = 0.0;
        for (Index c = h * hd; c < (h + 1) * hd; ++c) s += q(i, c) * k(j, c);
        logits[j] = s / std::sqrt(static_cast<double>(hd));
      }
      const auto p = softmax(logits);
      for (Index j = 0; j < n; ++j) att(i, j) = p[j];
      for (Index c = h * hd; c < (h + 1) * hd; ++c) {
        double s = 0.0;
        for (Index j = 0; j < n; ++j) s += p[j] * v(j, c);
        ctx(i, c) = s;
      }
    }
    r.attention.push_back(att);
  }
  const Matrix z = product(ctx, w.wo);
  const Matrix gn = ref_group_norm(z, w.groups, w.gamma, w.beta, w.eps);
  r.output = Matrix(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < d; ++c) r.output(i, c) = features(i, c) + gn(i, c);
  }
  return r;
}

std::vector<Index> ref_fps(const Matrix& positions, Index m, Index start) {
  std::vector<Index> chosen{start};
  while (chosen.size() < m) {
    Index best = 0;
    double best_d = -1.0;
    for (Index j = 0; j < positions.rows(); ++j) {
      if (std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
      double nearest = std::numeric_limits<double>::infinity();
      for (Index c : chosen) nearest = std::min(nearest, dist2(positions, c, positions, j));
      if (nearest > best_d) {
        best_d = nearest;
        best = j;
      }
    }
    chosen.push_back(best);
  }
  return chosen;
}

std::vector<std::vector<Index>> ref_knn(const Matrix& query, const Matrix& base, Index k) {
  std::vector<std::vector<Index>> out;
  for (Index q = 0; q < query.rows(); ++q) {
    const auto all = sorted_candidates(query, q, base);
    std::vector<Index> row;
    for (Index r = 0; r < std::min(k, all.size()); ++r) row.push_back(all[r].second);
    out.push_back(row);
  }
  return out;
}

std::vector<std::vector<Index>> ref_ball_query(const Matrix& query, const Matrix& base,
                                               double radius, Index max_samples) {
  std::vector<std::vector<Index>> out;
  for (Index q = 0; q < query.rows(); ++q) {
    std::vector<Index> row;
    for (const auto& [d, j] : sorted_candidates(query, q, base)) {
      if (d <= radius * radius && row.size() < max_samples) row.push_back(j);
    }
    out.push_back(row);
  }
  return out;
}

Matrix ref_deform(const Matrix& features, const Matrix& positions,
                  const std::vector<Index>& subset,
                  const std::vector<std::vector<Index>>& neighbors, const Matrix& w_offset,
                  const Matrix& w_align) {
  Matrix out(subset.size(), 3);
  for (Index s = 0; s < subset.size(); ++s) {
    const Index i = subset[s];
    double xs = 0.0;
    if (!neighbors[s].empty()) {
      double sum = 0.0;
      for (Index j : neighbors[s]) {
        for (Index c = 0; c < 3; ++c) {
          double proj = 0.0;
          for (Index f = 0; f < features.cols(); ++f) {
            proj += (features(i, f) - features(j, f)) * w_offset(f, c);
          }
          sum += proj * (positions(i, c) - positions(j, c));
        }
      }
      xs = (sum > 0.0 ? sum : 0.0) / static_cast<double>(neighbors[s].size());
    }
    for (Index c = 0; c < 3; ++c) out(s, c) = positions(i, c) + std::tanh(xs * w_align(0, c));
  }
  return out;
}

Matrix ref_aggregate(const Matrix& features, const std::vector<std::vector<Index>>& neighbors,
                     const Matrix& w_out) {
  Matrix out(neighbors.size(), w_out.cols());
  for (Index s = 0; s < neighbors.size(); ++s) {
    for (Index c = 0; c < w_out.cols(); ++c) {
      double best = -std::numeric_limits<double>::infinity();
      for (Index j : neighbors[s]) {
        double v = 0.0;
        for (Index f = 0; f < features.cols(); ++f) v += features(j, f) * w_out(f, c);
        best = std::max(best, v);
      }
      out(s, c) = best;
    }
  }
  return out;
}

Matrix ref_upsample_idw(const Matrix& subset_out, const Matrix& subset_pos,
                        const Matrix& all_pos, double radius, Index max_samples,
                        const Matrix& mlp) {
  const Index d = subset_out.cols();
  Matrix mixed(all_pos.rows(), d);
  for (Index t = 0; t < all_pos.rows(); ++t) {
    auto cand = sorted_candidates(all_pos, t, subset_pos);
    std::vector<std::pair<double, Index>> use;
    for (const auto& c : cand) {
      if (c.first <= radius * radius && use.size() < max_samples) use.push_back(c);
    }
    if (use.empty()) use.push_back(cand.front());
    double total = 0.0;
    for (const auto& [d2, j] : use) total += 1.0 / (d2 + 1e-8);
    for (const auto& [d2, j] : use) {
      const double wgt = (1.0 / (d2 + 1e-8)) / total;
      for (Index c = 0; c < d; ++c) mixed(t, c) += wgt * subset_out(j, c);
    }
  }
  return product(mixed, mlp);
}

Matrix ref_upsample_attention(const Matrix& subset_out, const Matrix& all_feats,
                              const AttentionUpsampler& up) {
  const Matrix q = product(all_feats, up.wq);
  const Matrix k = product(subset_out, up.wk);
  const Matrix v = product(subset_out, up.wv);
  Matrix out(all_feats.rows(), v.cols());
  for (Index i = 0; i < q.rows(); ++i) {
    std::vector<double> logits(k.rows());
    for (Index j = 0; j < k.rows(); ++j) {
      double s = 0.0;
      for (Index c = 0; c < q.cols(); ++c) s += q(i, c) * k(j, c);
      logits[j] = s / std::sqrt(static_cast<double>(q.cols()));
    }
    const auto p = softmax(logits);
    for (Index c = 0; c < v.cols(); ++c) {
      double s = 0.0;
      for (Index j = 0; j < k.rows(); ++j) s += p[j] * v(j, c);
      out(i, c) = s;
    }
  }
  return out;
}

Matrix ref_local_maxpool(const Matrix& features, const std::vector<std::vector<Index>>& nbhd,
                         const Matrix& h) {
  return ref_aggregate(features, nbhd, h);
}

FeatureGraph random_graph(Rng& rng, Index n, Index d, double extent) {
  FeatureGraph g;
  g.features = rng.uniform_matrix(n, d, -1.0, 1.0);
  g.positions = rng.uniform_matrix(n, 3, -extent, extent);
  return g;
}

FeatureGraph permute(const FeatureGraph& g, const std::vector<Index>& perm) {
  FeatureGraph out{gather_rows(g.features, perm), gather_rows(g.positions, perm), {}};
  for (Index p : perm) {
    if (!g.member_counts.empty()) out.member_counts.push_back(g.member_counts[p]);
  }
  return out;
}

double min_group_variance(const FeatureGraph& g, const FsaWeights& w) {
  GradTape tape;
  fsa_forward(g, w, tape);
  double lowest = std::numeric_limits<double>::infinity();
  for (double inv : tape.inv_std) lowest = std::min(lowest, 1.0 / (inv * inv) - w.eps);
  return lowest;
}

GradientReport gradient_check(const FeatureGraph& g, const FsaWeights& w, Rng& rng, double h,
                              bool perturb_tape) {
  const Matrix r = rng.uniform_matrix(g.size(), w.dim, -1.0, 1.0);
  auto loss = [&](const FeatureGraph& gg, const FsaWeights& ww) {
    const Matrix out = fsa_forward(gg, ww, FsaOptions{false}).output;
    double s = 0.0;
    for (Index i = 0; i < out.size(); ++i) s += r.values()[i] * out.values()[i];
    return s;
  };
  GradTape tape;
  fsa_forward(g, w, tape);
  if (perturb_tape) tape.weights.wq(0, 0) += 0.05;
  const FsaGradients grad = fsa_backward(tape, r);

  GradientReport rep;
  auto visit = [&](const std::string& name, std::span<const double> analytic,
                   const std::function<double&(FeatureGraph&, FsaWeights&, Index)>& slot) {
    for (Index i = 0; i < analytic.size(); ++i) {
      FeatureGraph gp = g, gm = g;
      FsaWeights wp = w, wm = w;
      slot(gp, wp, i) += h;
      slot(gm, wm, i) -= h;
      const double fd = (loss(gp, wp) - loss(gm, wm)) / (2.0 * h);
      const double a = analytic[i];
      const double err = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
      ++rep.scalars;
      if (err > rep.max_rel_error || rep.worst.empty()) {
        if (err >= rep.max_rel_error) {
          rep.max_rel_error = err;
          rep.worst = name + "[" + std::to_string(i) + "]";
        }
      }
    }
  };
  visit("features", grad.features.values(),
        [](FeatureGraph& gg, FsaWeights&, Index i) -> double& { return gg.features.values()[i]; });
  visit("positions", grad.positions.values(),
        [](FeatureGraph& gg, FsaWeights&, Index i) -> double& { return gg.positions.values()[i]; });
  visit("wq", grad.wq.values(),
        [](FeatureGraph&, FsaWeights& ww, Index i) -> double& { return ww.wq.values()[i]; });
  visit("wk", grad.wk.values(),
        [](FeatureGraph&, FsaWeights& ww, Index i) -> double& { return ww.wk.values()[i]; });
  visit("wv", grad.wv.values(),
        [](FeatureGraph&, FsaWeights& ww, Index i) -> double& { return ww.wv.values()[i]; });
  visit("wo", grad.wo.values(),
        [](FeatureGraph&, FsaWeights& ww, Index i) -> double& { return ww.wo.values()[i]; });
  visit("wpos", grad.wpos.values(),
        [](FeatureGraph&, FsaWeights& ww, Index i) -> double& { return ww.wpos.values()[i]; });
  visit("gamma", grad.gamma,
        [](FeatureGraph&, FsaWeights& ww, Index i) -> double& { return ww.gamma[i]; });
  visit("beta", grad.beta,
        [](FeatureGraph&, FsaWeights& ww, Index i) -> double& { return ww.beta[i]; });
  return rep;
}

namespace {

using CheckFn = std::function<std::string(Rng&, const CheckOptions&)>;

// Each check returns "" on success or a failure description; `note` carries
// the measured figure for the summary line.
struct Check {
  std::string name;
  CheckFn run;
};

std::string& note() {
  static thread_local std::string n;
  return n;
}

std::string check_fsa_oracle(Rng& rng, const CheckOptions&) {
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Index n = 1 + rng.below(8);
    const Index d = rng.below(2) ? 8 : 4;
    const Index heads = pick_heads(rng, d);
    const FeatureGraph g = random_graph(rng, n, d);
    const FsaWeights w = FsaWeights::random_full(d, heads, rng);
    const AttentionOutput got = fsa_forward(g, w);
    const RefAttention ref = ref_fsa_forward(g.features, g.positions, w);
    worst = std::max(worst, max_abs_diff(got.output, ref.output));
    for (Index h = 0; h < heads; ++h) {
      worst = std::max(worst, max_abs_diff(got.attention[h], ref.attention[h]));
    }
  }
  note() = "50 instances, max |diff| " + fmt(worst);
  return worst <= 1e-9 ? "" : "deviation " + fmt(worst) + " exceeds 1e-9";
}

std::string check_fsa_gradients(Rng& rng, const CheckOptions& opt) {
  double worst = 0.0;
  std::string where;
  for (int t = 0; t < 20; ++t) {
    FeatureGraph g;
    FsaWeights w;
    do {
      const Index n = 1 + rng.below(6);
      const Index d = rng.below(2) ? 8 : 4;
      g = random_graph(rng, n, d);
      w = FsaWeights::random_full(d, pick_heads(rng, d), rng);
    } while (min_group_variance(g, w) < 1e-3);
    const GradientReport rep = gradient_check(g, w, rng, 1e-5, opt.inject_fault == "gradient");
    if (rep.max_rel_error >= worst) {
      worst = rep.max_rel_error;
      where = rep.worst;
    }
  }
  note() = "20 instances, max rel error " + fmt(worst) + " at " + where;
  return worst < 1e-5 ? "" : "relative error " + fmt(worst) + " at " + where + " exceeds 1e-5";
}

std::string check_fsa_permutation(Rng& rng, const CheckOptions&) {
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Index n = 1 + rng.below(64);
    const Index d = 8;
    const FeatureGraph g = random_graph(rng, n, d);
    const FsaWeights w = FsaWeights::random_full(d, pick_heads(rng, d), rng);
    std::vector<Index> perm(n);
    std::iota(perm.begin(), perm.end(), Index{0});
    rng.shuffle(perm);
    const AttentionOutput base = fsa_forward(g, w);
    const AttentionOutput moved = fsa_forward(permute(g, perm), w);
    worst = std::max(worst, max_abs_diff(moved.output, gather_rows(base.output, perm)));
    for (Index h = 0; h < w.heads; ++h) {
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
          worst = std::max(worst, std::abs(moved.attention[h](i, j) -
                                            base.attention[h](perm[i], perm[j])));
        }
      }
    }
  }
  note() = "100 permutations, max |diff| " + fmt(worst);
  return worst <= 1e-9 ? "" : "deviation " + fmt(worst) + " exceeds 1e-9";
}

double row_sum_error(const Matrix& a, bool& in_range) {
  double worst = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (double v : a.row(i)) {
      s += v;
      if (!(v >= 0.0 && v <= 1.0)) in_range = false;
    }
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

std::string check_row_stochastic(Rng& rng, const CheckOptions&) {
  double worst = 0.0;
  bool in_range = true;
  for (int t = 0; t < 40; ++t) {
    const Index n = 1 + rng.below(64);
    const Index d = 8;
    const FeatureGraph g = random_graph(rng, n, d, 5.0);
    const FsaWeights w = FsaWeights::random_full(d, pick_heads(rng, d), rng);
    for (const auto& a : fsa_forward(g, w).attention) worst = std::max(worst, row_sum_error(a, in_range));
    const UpsampleMode mode = t % 2 ? UpsampleMode::attention : UpsampleMode::idw;
    const DsaWeights dw = DsaWeights::random(d, w.heads, mode, rng);
    DsaConfig cfg;
    cfg.keypoints = 1 + rng.below(n);
    const DsaResult r = dsa_forward(g, dw, cfg, DsaOptions{true, true});
    for (const auto& a : r.out.attention) worst = std::max(worst, row_sum_error(a, in_range));
    if (mode == UpsampleMode::attention) {
      worst = std::max(worst, row_sum_error(r.upsample_attention, in_range));
    }
  }
  note() = "max |row sum - 1| " + fmt(worst);
  if (!in_range) return "attention entry outside [0, 1]";
  return worst <= 1e-6 ? "" : "row sum deviates by " + fmt(worst);
}

std::string check_softmax_shift(Rng& rng, const CheckOptions&) {
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(1 + rng.below(32));
    for (double& v : a) v = rng.uniform(-20.0, 20.0);
    std::vector<double> b = a;
    const double shift = rng.uniform(-100.0, 100.0);
    for (double& v : b) v += shift;
    softmax_row(a);
    softmax_row(b);
    for (Index i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  note() = "max |diff| " + fmt(worst);
  return worst <= 1e-12 ? "" : "shifted softmax deviates by " + fmt(worst);
}

std::string check_tape_replay(Rng& rng, const CheckOptions&) {
  for (int t = 0; t < 20; ++t) {
    const FeatureGraph g = random_graph(rng, 1 + rng.below(16), 8);
    const FsaWeights w = FsaWeights::random_full(8, 4, rng);
    GradTape tape;
    const AttentionOutput out = fsa_forward(g, w, tape);
    if (!(replay(tape) == out.output)) return "replayed output differs from the recorded one";
  }
  note() = "20 tapes replayed bit-identically";
  return "";
}

std::string check_param_scale(Rng& rng, const CheckOptions&) {
  Index sizes[2];
  int k = 0;
  for (Index n : {Index{100}, Index{100000}}) {
    const FeatureGraph g = random_graph(rng, n, 64);
    sizes[k++] = serialized_bytes(FsaWeights::random(g.dim(), 4, rng));
  }
  note() = "serialized weights " + std::to_string(sizes[0]) + " bytes at n=100 and n=100000";
  return sizes[0] == sizes[1] ? "" : "weight size depends on the node count";
}

std::string check_maxpool_oracle(Rng& rng, const CheckOptions&) {
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const FeatureGraph g = random_graph(rng, 2 + rng.below(30), 4);
    const Neighborhood nb = knn(g.positions, g.positions, 1 + rng.below(4));
    const Matrix h = rng.uniform_matrix(4, 4, -1.0, 1.0);
    worst = std::max(worst, max_abs_diff(local_maxpool_baseline(g, nb, h),
                                         ref_local_maxpool(g.features, to_indices(nb), h)));
  }
  note() = "max |diff| " + fmt(worst);
  return worst <= 1e-12 ? "" : "deviation " + fmt(worst);
}

std::string check_geometry(Rng& rng, const CheckOptions&) {
  for (int t = 0; t < 100; ++t) {
    const Index n = 1 + rng.below(128);
    Matrix pos = rng.uniform_matrix(n, 3, -3.0, 3.0);
    if (t % 4 == 0) {
      for (Index i = 0; i < n; ++i) {
        for (Index c = 0; c < 3; ++c) pos(i, c) = std::round(pos(i, c));
      }
    }
    const Index m = 1 + rng.below(n);
    const Index start = rng.below(n);
    const IndexSet s = fps(pos, m, start);
    if (s.indices != ref_fps(pos, m, start)) return "fps differs from exhaustive reference";
    const IndexSet longer = fps(pos, n, start);
    if (!std::equal(s.indices.begin(), s.indices.end(), longer.indices.begin())) {
      return "fps prefix property violated";
    }
    const Matrix q = rng.uniform_matrix(1 + rng.below(16), 3, -3.0, 3.0);
    const Index k = 1 + rng.below(20);
    if (to_indices(knn(q, pos, k)) != ref_knn(q, pos, k)) return "knn differs from reference";
    const double radius = rng.uniform(0.2, 3.0);
    if (to_indices(ball_query(q, pos, radius, k)) != ref_ball_query(q, pos, radius, k)) {
      return "ball query differs from reference";
    }
  }
  note() = "100 clouds";
  return "";
}

std::string check_zero_offset(Rng& rng, const CheckOptions&) {
  for (int t = 0; t < 50; ++t) {
    const Index n = 2 + rng.below(60);
    const FeatureGraph g = random_graph(rng, n, 8, 10.0);
    const IndexSet s = fps(g.positions, 1 + rng.below(n));
    const Matrix sampled = gather_rows(g.positions, s.indices);
    const Neighborhood nb = ball_query(sampled, g.positions, 3.0, 16);
    const Matrix align = rng.uniform_matrix(1, 3, -5.0, 5.0);
    const Deformation def = deform_vertices(g, s, nb, Matrix(8, 3), align);
    if (!(def.refined_positions == sampled)) return "W_offset = 0 moved a vertex";
  }
  note() = "50 instances bit-exact";
  return "";
}

std::string check_displacement(Rng& rng, const CheckOptions&) {
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Index n = 2 + rng.below(24);
    const double extent = std::pow(10.0, rng.uniform(-1.0, 3.0));
    const FeatureGraph g = random_graph(rng, n, 4, extent);
    const double scale = std::pow(10.0, rng.uniform(-2.0, 4.0));
    const Matrix off = rng.uniform_matrix(4, 3, -scale, scale);
    const Matrix align = rng.uniform_matrix(1, 3, -scale, scale);
    const IndexSet s = fps(g.positions, 1 + rng.below(n));
    const Neighborhood nb = ball_query(gather_rows(g.positions, s.indices), g.positions,
                                       3.0 * extent, 16);
    const Deformation def = deform_vertices(g, s, nb, off, align);
    for (Index r = 0; r < s.size(); ++r) {
      for (Index c = 0; c < 3; ++c) {
        const double dv = def.refined_positions(r, c) - g.positions(s.indices[r], c);
        worst = std::max(worst, std::abs(dv));
      }
    }
  }
  note() = "1000 draws, max |displacement| " + format_real(worst, 17);
  return worst < 1.0 ? "" : "displacement reached " + format_real(worst, 17);
}

std::string check_dsa_stages(Rng& rng, const CheckOptions&) {
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Index n = 4 + rng.below(28);
    const Index d = 4;
    const FeatureGraph g = random_graph(rng, n, d, 3.0);
    const IndexSet s = fps(g.positions, 1 + rng.below(n));
    const Matrix sampled = gather_rows(g.positions, s.indices);
    const Neighborhood nb = ball_query(sampled, g.positions, 3.0, 16);
    const Matrix off = rng.uniform_matrix(d, 3, -1.0, 1.0);
    const Matrix align = rng.uniform_matrix(1, 3, -1.0, 1.0);
    const Deformation def = deform_vertices(g, s, nb, off, align);
    worst = std::max(worst, max_abs_diff(def.refined_positions,
                                         ref_deform(g.features, g.positions, s.indices,
                                                    to_indices(nb), off, align)));
    const Matrix w_out = rng.uniform_matrix(d, d, -1.0, 1.0);
    const Aggregation agg = aggregate_features(g, def.refined_positions, w_out, 2.0, 16);
    auto pool = ref_ball_query(def.refined_positions, g.positions, 2.0, 16);
    for (Index r = 0; r < pool.size(); ++r) {
      if (pool[r].empty()) pool[r] = ref_knn(gather_rows(def.refined_positions, {&r, 1}), g.positions, 1)[0];
    }
    worst = std::max(worst, max_abs_diff(agg.features, ref_aggregate(g.features, pool, w_out)));
    const Matrix sub = rng.uniform_matrix(s.size(), d, -1.0, 1.0);
    IdwUpsampler up{rng.uniform(0.5, 2.0), 1 + rng.below(6), rng.uniform_matrix(d, d, -1.0, 1.0)};
    worst = std::max(worst, max_abs_diff(upsample_idw(sub, def.refined_positions, g.positions, up),
                                         ref_upsample_idw(sub, def.refined_positions, g.positions,
                                                          up.radius, up.max_samples, up.mlp)));
    AttentionUpsampler au{rng.uniform_matrix(d, d, -1.0, 1.0), rng.uniform_matrix(d, d, -1.0, 1.0),
                          rng.uniform_matrix(d, d, -1.0, 1.0)};
    worst = std::max(worst, max_abs_diff(upsample_attention(sub, g.features, au),
                                         ref_upsample_attention(sub, g.features, au)));
  }
  note() = "deform, pool, idw and attention up-sampling, max |diff| " + fmt(worst);
  return worst <= 1e-9 ? "" : "deviation " + fmt(worst);
}

std::string check_partition_of_unity(Rng& rng, const CheckOptions&) {
  double idw_worst = 0.0;
  double att_worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Index n = 8 + rng.below(120);
    const FeatureGraph g = random_graph(rng, n, 8, 4.0);
    const IndexSet s = fps(g.positions, 1 + rng.below(n));
    const Matrix sub_pos = gather_rows(g.positions, s.indices);
    const Matrix sub = rng.uniform_matrix(s.size(), 8, -1.0, 1.0);
    IdwTrace trace;
    upsample_idw(sub, sub_pos, g.positions, IdwUpsampler{1.6, 16, Matrix::identity(8)}, &trace);
    for (const auto& row : trace.sources) {
      double total = 0.0;
      for (const auto& src : row) total += src.dist2;
      idw_worst = std::max(idw_worst, std::abs(total - 1.0));
    }
    Matrix wts;
    AttentionUpsampler au{rng.glorot(8, 8), rng.glorot(8, 8), rng.glorot(8, 8)};
    upsample_attention(sub, g.features, au, &wts);
    bool in_range = true;
    att_worst = std::max(att_worst, row_sum_error(wts, in_range));
    if (!in_range) return "attention up-sampling weight outside [0, 1]";
  }
  note() = "idw " + fmt(idw_worst) + ", attention " + fmt(att_worst);
  if (idw_worst > 1e-9) return "idw weights deviate from 1 by " + fmt(idw_worst);
  return att_worst <= 1e-6 ? "" : "attention weights deviate from 1 by " + fmt(att_worst);
}

std::string check_dsa_composition(Rng& rng, const CheckOptions&) {
  for (int t = 0; t < 10; ++t) {
    const Index n = 8 + rng.below(40);
    const FeatureGraph g = random_graph(rng, n, 4, 2.0);
    const UpsampleMode mode = t % 2 ? UpsampleMode::attention : UpsampleMode::idw;
    const DsaWeights w = DsaWeights::random(4, 2, mode, rng);
    DsaConfig cfg;
    cfg.keypoints = 1 + rng.below(n);
    const DsaResult r = dsa_forward(g, w, cfg);

    const IndexSet s = fps(g.positions, cfg.keypoints);
    const Neighborhood nb =
        ball_query(gather_rows(g.positions, s.indices), g.positions, cfg.deform_radius, cfg.neighbors);
    const Deformation def = deform_vertices(g, s, nb, w.w_offset, w.w_align);
    const Aggregation agg =
        aggregate_features(g, def.refined_positions, w.w_out, cfg.pool_radius, cfg.neighbors);
    const AttentionOutput att = fsa_forward({agg.features, def.refined_positions, {}}, w.fsa);
    Matrix out = g.features;
    add_inplace(out, mode == UpsampleMode::idw
                         ? upsample_idw(att.update, def.refined_positions, g.positions, w.idw)
                         : upsample_attention(att.update, g.features, w.attention));
    if (!(out == r.out.output)) return "dsa_forward differs from its stage-by-stage composition";
  }
  note() = "10 instances bit-identical";
  return "";
}

std::string check_thread_invariance(Rng& rng, const CheckOptions&) {
  const FeatureGraph g = random_graph(rng, 300, 16, 6.0);
  const FsaWeights fw = FsaWeights::random(16, 4, rng);
  const DsaWeights dw = DsaWeights::random(16, 4, UpsampleMode::idw, rng);
  DsaConfig cfg;
  cfg.keypoints = 64;
  const std::size_t saved = thread_count();
  std::vector<Matrix> outs;
  for (std::size_t threads : {std::size_t{1}, std::size_t{4}, default_thread_count()}) {
    set_thread_count(threads);
    outs.push_back(fsa_forward(g, fw).output);
    outs.push_back(dsa_forward(g, dw, cfg).out.output);
  }
  set_thread_count(saved);
  for (Index i = 2; i < outs.size(); ++i) {
    if (!(outs[i] == outs[i % 2])) return "output depends on the thread count";
  }
  note() = "threads 1, 4 and " + std::to_string(default_thread_count()) + " bit-identical";
  return "";
}

ArchConfig sample_config(Count dim, Count heads, const std::string& kind) {
  ArchConfig cfg;
  cfg.name = kind;
  cfg.backbone = "PointPillars";
  cfg.variant = kind;
  cfg.dataset = "synthetic";
  AttentionConfig a;
  a.kind = kind;
  a.dim = dim;
  a.heads = heads;
  a.stages.push_back({"nodes", dim, NodeCount{std::string("n")}, std::nullopt});
  if (kind == "dsa") {
    a.keypoints = 2048;
    a.deform_radius = 3.0;
    a.pool_radius = 2.0;
    a.neighbors = 16;
    a.upsample = "idw";
    a.interp_mlp_dim = dim;
    a.interp_radius = 1.6;
    a.interp_samples = 16;
  }
  cfg.attention = a;
  return cfg;
}

std::string check_cost_model(Rng& rng, const CheckOptions&) {
  CountingRules rules;
  rules.heads["PointPillars"] = {};
  for (int t = 0; t < 50; ++t) {
    const Count n = 1 + rng.below(100000);
    const Count m = 1 + rng.below(n);
    const Count d = 8 * (1 + rng.below(16));
    const auto fsa = fsa_layer_cost(n, d, d, true);
    AttentionConfig a = *sample_config(d, 4, "dsa").attention;
    const auto dsa = dsa_layer_cost(n, m, d, a);
    const unsigned __int128 lhs = static_cast<unsigned __int128>(dsa.score_flops) * n * n;
    const unsigned __int128 rhs = static_cast<unsigned __int128>(fsa.score_flops) * m * m;
    if (lhs != rhs) return "score FLOP ratio differs from (m/n)^2";
  }
  for (const std::string kind : {"fsa", "dsa"}) {
    const ArchConfig cfg = sample_config(64, 4, kind);
    if (!(parse_config(serialize_config(cfg)) == cfg)) return "config round trip changed " + kind;
    ReferenceInputs small, large;
    small.datasets["synthetic"]["n"] = 100;
    large.datasets["synthetic"]["n"] = 1000000;
    if (count_flops(cfg, rules, small).params != count_flops(cfg, rules, large).params) {
      return "attention parameters depend on n";
    }
    Count prev = 0;
    for (Count n = 2100; n < 40000; n = n * 3 / 2) {
      ReferenceInputs in;
      in.datasets["synthetic"]["n"] = n;
      const Count f = count_flops(cfg, rules, in).flops;
      if (f <= prev) return "FLOPs are not strictly increasing in n";
      prev = f;
    }
  }
  FsaWeights fw = FsaWeights::random(64, 4, rng);
  if (fsa_layer_cost(1, 64, 64, true).params != fw.parameter_count()) {
    return "closed-form FSA parameter count disagrees with the weights";
  }
  DsaWeights dw = DsaWeights::random(64, 4, UpsampleMode::idw, rng);
  if (dsa_layer_cost(1, 1, 64, *sample_config(64, 4, "dsa").attention).params !=
      dw.parameter_count()) {
    return "closed-form DSA parameter count disagrees with the weights";
  }
  note() = "score ratio exact, n-invariant parameters, monotone FLOPs, round trip";
  return "";
}

const std::vector<Check>& all_checks() {
  static const std::vector<Check> checks = {
      {"fsa.oracle_equivalence", check_fsa_oracle},
      {"fsa.gradient", check_fsa_gradients},
      {"fsa.permutation_equivariance", check_fsa_permutation},
      {"fsa.row_stochastic", check_row_stochastic},
      {"fsa.softmax_shift", check_softmax_shift},
      {"fsa.tape_replay", check_tape_replay},
      {"fsa.param_scale_independence", check_param_scale},
      {"fsa.maxpool_baseline_oracle", check_maxpool_oracle},
      {"geom.oracles", check_geometry},
      {"dsa.zero_offset_identity", check_zero_offset},
      {"dsa.displacement_bound", check_displacement},
      {"dsa.stage_oracles", check_dsa_stages},
      {"dsa.partition_of_unity", check_partition_of_unity},
      {"dsa.composition", check_dsa_composition},
      {"determinism.threads", check_thread_invariance},
      {"costmodel.invariants", check_cost_model},
  };
  return checks;
}

}  // namespace

std::vector<std::string> check_names() {
  std::vector<std::string> out;
  for (const auto& c : all_checks()) out.push_back(c.name);
  return out;
}

namespace {

CheckResult execute(const Check& c, Index position, const CheckOptions& options) {
  Rng rng(options.seed * 1000003ULL + position);
  note().clear();
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r{c.name, false, "", 0.0};
  try {
    const std::string failure = c.run(rng, options);
    r.passed = failure.empty();
    r.detail = failure.empty() ? note() : failure;
  } catch (const std::exception& e) {
    r.detail = std::string("raised: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

void validate(const CheckOptions& options) {
  if (!options.inject_fault.empty() && options.inject_fault != "gradient") {
    throw ArgumentError("unknown fault '" + options.inject_fault + "' (expected gradient)");
  }
}

}  // namespace

std::vector<CheckResult> run_checks(const CheckOptions& options) {
  validate(options);
  std::vector<CheckResult> results;
  for (Index k = 0; k < all_checks().size(); ++k) {
    results.push_back(execute(all_checks()[k], k, options));
  }
  return results;
}

CheckResult run_check(const std::string& name, const CheckOptions& options) {
  validate(options);
  for (Index k = 0; k < all_checks().size(); ++k) {
    if (all_checks()[k].name == name) return execute(all_checks()[k], k, options);
  }
  throw ArgumentError("unknown check '" + name + "'");
}

}  // namespace pcsa::verify
