#pragma once

// Graph siamese network over dense matrices. Two weight-sharing branches
// (GCN 500 -> GCN 200 -> masked mean pool -> dense 200) produce embeddings;
// the head maps their elementwise absolute difference through 400/200/100
// ReLU layers to a single sigmoid similarity.
//
// Branch arithmetic runs on the real-node slice of the padded matrices. The
// padded rows and columns of the normalized adjacency are structurally zero
// and pooling masks padded rows, so sliced and full-matrix evaluation agree
// bit for bit; a test asserts this.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "irisgraph/dataset.hpp"
#include "irisgraph/error.hpp"
#include "irisgraph/matrix.hpp"
#include "irisgraph/rng.hpp"
#include "irisgraph/serialize.hpp"

namespace irisgraph {

enum class AdjacencyMode : std::uint8_t { binary = 0, weighted = 1 };
enum class HeadCombine : std::uint8_t { abs_diff = 0, signed_diff = 1 };

inline const char* to_string(AdjacencyMode m) {
  return m == AdjacencyMode::binary ? "binary" : "weighted";
}
inline const char* to_string(HeadCombine m) {
  return m == HeadCombine::abs_diff ? "abs_diff" : "signed_diff";
}

// ---------------------------------------------------------------------------
// parameters

struct ModelShapes {
  int features = kFeatureCount;
  int gcn1 = 500;
  int gcn2 = 200;
  int embed = 200;
  int head1 = 400;
  int head2 = 200;
  int head3 = 100;

  bool operator==(const ModelShapes& o) const = default;
};

struct ModelParams {
  ModelShapes shapes;
  AdjacencyMode adjacency_mode = AdjacencyMode::binary;
  HeadCombine head_combine = HeadCombine::abs_diff;

  Mat w1;                   // features x gcn1
  std::vector<double> b1;
  Mat w2;                   // gcn1 x gcn2
  std::vector<double> b2;
  Mat w3;                   // gcn2 x embed
  std::vector<double> b3;
  Mat u1;                   // embed x head1
  std::vector<double> c1;
  Mat u2;                   // head1 x head2
  std::vector<double> c2;
  Mat u3;                   // head2 x head3
  std::vector<double> c3;
  Mat u4;                   // head3 x 1
  std::vector<double> c4;
};

struct TensorView {
  const char* name;
  double* data;
  std::size_t len;
  int rows;
  int cols;
};

inline std::array<TensorView, 14> tensor_views(ModelParams& p) {
  auto m = [](const char* n, Mat& t) {
    return TensorView{n, t.a.data(), t.a.size(), t.rows, t.cols};
  };
  auto v = [](const char* n, std::vector<double>& t) {
    return TensorView{n, t.data(), t.size(), 1, int(t.size())};
  };
  return {m("w1", p.w1), v("b1", p.b1), m("w2", p.w2), v("b2", p.b2),
          m("w3", p.w3), v("b3", p.b3), m("u1", p.u1), v("c1", p.c1),
          m("u2", p.u2), v("c2", p.c2), m("u3", p.u3), v("c3", p.c3),
          m("u4", p.u4), v("c4", p.c4)};
}

inline ModelParams zero_params(const ModelShapes& s) {
  ModelParams p;
  p.shapes = s;
  p.w1 = Mat(s.features, s.gcn1);
  p.b1.assign(std::size_t(s.gcn1), 0.0);
  p.w2 = Mat(s.gcn1, s.gcn2);
  p.b2.assign(std::size_t(s.gcn2), 0.0);
  p.w3 = Mat(s.gcn2, s.embed);
  p.b3.assign(std::size_t(s.embed), 0.0);
  p.u1 = Mat(s.embed, s.head1);
  p.c1.assign(std::size_t(s.head1), 0.0);
  p.u2 = Mat(s.head1, s.head2);
  p.c2.assign(std::size_t(s.head2), 0.0);
  p.u3 = Mat(s.head2, s.head3);
  p.c3.assign(std::size_t(s.head3), 0.0);
  p.u4 = Mat(s.head3, 1);
  p.c4.assign(1, 0.0);
  return p;
}

// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
inline ModelParams init_params(const ModelShapes& s, std::uint64_t seed,
                               AdjacencyMode adj = AdjacencyMode::binary,
                               HeadCombine head = HeadCombine::abs_diff) {
  ModelParams p = zero_params(s);
  p.adjacency_mode = adj;
  p.head_combine = head;
  Rng rng(mix_seed(seed, 0x696e6974));  // "init" stream
  for (TensorView& t : tensor_views(p)) {
    if (t.name[0] == 'b' || t.name[0] == 'c') continue;  // biases stay zero
    const double bound = std::sqrt(6.0 / (t.rows + t.cols));
    for (std::size_t i = 0; i < t.len; ++i) t.data[i] = rng.range(-bound, bound);
    for (std::size_t i = 0; i < t.len; ++i) {
      if (std::abs(t.data[i]) > bound)
        throw TrainError("init_params: weight outside Glorot bound");
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// adjacency operator

namespace detail {

// D^(-1/2) (A + I) D^(-1/2) over the first `real` rows/cols of `padded`.
// `rows` selects the output size: pass real_nodes for the sliced operator or
// padded.n for the full matrix (padded block stays zero either way).
inline Mat normalized_adjacency_block(const PaddedGraph& g, AdjacencyMode mode,
                                      int out_n) {
  const int real = g.real_nodes;
  Mat a(out_n, out_n);
  for (int i = 0; i < real; ++i) {
    for (int j = 0; j < real; ++j) {
      const double w = g.adjacency(i, j);
      if (i != j && w != 0.0) a(i, j) = mode == AdjacencyMode::binary ? 1.0 : w;
    }
    a(i, i) = 1.0;  // self-loop on real nodes only
  }
  std::vector<double> inv_sqrt_deg(std::size_t(real), 0.0);
  for (int i = 0; i < real; ++i) {
    double deg = 0.0;
    for (int j = 0; j < real; ++j) deg += a(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);  // >= 1 thanks to the self-loop
  }
  for (int i = 0; i < real; ++i) {
    for (int j = 0; j < real; ++j) {
      a(i, j) *= inv_sqrt_deg[i] * inv_sqrt_deg[std::size_t(j)];
    }
  }
  return a;
}

}  // namespace detail

// Full n x n normalized operator (spec surface; training uses the slice).
inline Mat normalize_adjacency(const PaddedGraph& g,
                               AdjacencyMode mode = AdjacencyMode::binary) {
  for (int i = 0; i < g.real_nodes; ++i) {
    for (int j = i + 1; j < g.real_nodes; ++j) {
      if (g.adjacency(i, j) != g.adjacency(j, i))
        throw DataError("normalize_adjacency: adjacency not symmetric");
    }
  }
  return detail::normalized_adjacency_block(g, mode, g.n);
}

// ---------------------------------------------------------------------------
// forward

inline Mat tanh_inplace(Mat m) {
  for (double& x : m.a) x = std::tanh(x);
  return m;
}

// H' = tanh(A_hat * H * W + bias)
inline Mat gcn_forward(const Mat& a_hat, const Mat& h, const Mat& w,
                       const std::vector<double>& bias) {
  Mat pre = matmul(matmul(a_hat, h), w);
  add_row_broadcast(pre, bias);
  return tanh_inplace(std::move(pre));
}

// Column means over the first real_nodes rows; padded rows never contribute.
inline std::vector<double> masked_mean_pool(const Mat& h, int real_nodes) {
  if (real_nodes < 1) throw DataError("masked_mean_pool: graph has no real nodes");
  std::vector<double> out(std::size_t(h.cols), 0.0);
  for (int i = 0; i < real_nodes; ++i) {
    const double* hi = h.row(i);
    for (int j = 0; j < h.cols; ++j) out[std::size_t(j)] += hi[j];
  }
  for (double& x : out) x /= real_nodes;
  return out;
}

namespace detail {

// Per-branch forward intermediates kept for backprop.
struct BranchTrace {
  Mat a_hat;   // r x r sliced operator
  Mat agg_x;   // A_hat * X, r x F
  Mat h1;      // r x gcn1 (post-tanh)
  Mat agg_h1;  // A_hat * h1
  Mat h2;      // r x gcn2 (post-tanh)
  std::vector<double> pooled;  // 1 x gcn2
  std::vector<double> embed;   // 1 x embed (post-relu)
};

inline Mat slice_features(const PaddedGraph& g) {
  Mat x(g.real_nodes, g.f);
  for (int i = 0; i < g.real_nodes; ++i) {
    for (int k = 0; k < g.f; ++k) x(i, k) = g.features(i, k);
  }
  return x;
}

inline BranchTrace branch_trace(const PaddedGraph& g, const ModelParams& p) {
  if (g.f != p.shapes.features)
    throw DataError("branch_forward: feature width mismatch");
  BranchTrace t;
  t.a_hat = normalized_adjacency_block(g, p.adjacency_mode, g.real_nodes);
  t.agg_x = matmul(t.a_hat, slice_features(g));
  Mat pre1 = matmul(t.agg_x, p.w1);
  add_row_broadcast(pre1, p.b1);
  t.h1 = tanh_inplace(std::move(pre1));
  t.agg_h1 = matmul(t.a_hat, t.h1);
  Mat pre2 = matmul(t.agg_h1, p.w2);
  add_row_broadcast(pre2, p.b2);
  t.h2 = tanh_inplace(std::move(pre2));
  t.pooled = masked_mean_pool(t.h2, t.h2.rows);
  t.embed.assign(std::size_t(p.shapes.embed), 0.0);
  for (int k = 0; k < p.shapes.gcn2; ++k) {
    const double pk = t.pooled[std::size_t(k)];
    if (pk == 0.0) continue;
    const double* wk = p.w3.row(k);
    for (int j = 0; j < p.shapes.embed; ++j) t.embed[std::size_t(j)] += pk * wk[j];
  }
  for (int j = 0; j < p.shapes.embed; ++j) {
    t.embed[std::size_t(j)] = std::max(t.embed[std::size_t(j)] + p.b3[std::size_t(j)], 0.0);
  }
  return t;
}

// Dense head on the combined embedding difference.
struct HeadTrace {
  std::vector<double> diff;  // embed
  std::vector<double> a1, a2, a3;  // post-relu activations
  double logit = 0.0;
  double prob = 0.0;
};

inline std::vector<double> dense_relu(const std::vector<double>& in, const Mat& w,
                                      const std::vector<double>& bias) {
  std::vector<double> out(bias);
  for (int k = 0; k < w.rows; ++k) {
    const double ik = in[std::size_t(k)];
    if (ik == 0.0) continue;
    const double* wk = w.row(k);
    for (int j = 0; j < w.cols; ++j) out[std::size_t(j)] += ik * wk[j];
  }
  for (double& x : out) x = std::max(x, 0.0);
  return out;
}

inline HeadTrace head_trace(const std::vector<double>& ea,
                            const std::vector<double>& eb, const ModelParams& p) {
  HeadTrace t;
  t.diff.resize(ea.size());
  for (std::size_t i = 0; i < ea.size(); ++i) {
    const double d = ea[i] - eb[i];
    t.diff[i] = p.head_combine == HeadCombine::abs_diff ? std::fabs(d) : d;
  }
  t.a1 = dense_relu(t.diff, p.u1, p.c1);
  t.a2 = dense_relu(t.a1, p.u2, p.c2);
  t.a3 = dense_relu(t.a2, p.u3, p.c3);
  t.logit = p.c4[0];
  for (int k = 0; k < p.u4.rows; ++k) t.logit += t.a3[std::size_t(k)] * p.u4(k, 0);
  t.prob = 1.0 / (1.0 + std::exp(-t.logit));
  return t;
}

}  // namespace detail

// Embedding of one padded graph. Both branches share one ModelParams
// storage; weight sharing is structural.
inline std::vector<double> branch_forward(const PaddedGraph& g, const ModelParams& p) {
  return detail::branch_trace(g, p).embed;
}

// Same-person probability for a pair, in (0,1).
inline double siamese_forward(const PaddedGraph& a, const PaddedGraph& b,
                              const ModelParams& p) {
  return detail::head_trace(branch_forward(a, p), branch_forward(b, p), p).prob;
}

inline double siamese_forward(const GraphPair& pair, const ModelParams& p) {
  return siamese_forward(pair.a, pair.b, p);
}

// ---------------------------------------------------------------------------
// loss

// Binary cross-entropy with the probability clamped to [1e-12, 1 - 1e-12].
inline double bce_loss(double probability, int label) {
  const double p = std::clamp(probability, 1e-12, 1.0 - 1e-12);
  return label ? -std::log(p) : -std::log(1.0 - p);
}

// ---------------------------------------------------------------------------
// backward

// Analytic gradients of scale * bce_loss(siamese_forward(a,b), label) with
// respect to every parameter, accumulated into `grad` (gradients from both
// shared branches sum). Returns the unscaled pair loss.
inline double backward(const PaddedGraph& ga, const PaddedGraph& gb, int label,
                       const ModelParams& p, double scale, ModelParams& grad) {
  const detail::BranchTrace ta = detail::branch_trace(ga, p);
  const detail::BranchTrace tb = detail::branch_trace(gb, p);
  const detail::HeadTrace h = detail::head_trace(ta.embed, tb.embed, p);
  const double loss = bce_loss(h.prob, label);

  // head
  const double g_logit = (h.prob - double(label)) * scale;
  const int n3 = p.shapes.head3, n2 = p.shapes.head2, n1 = p.shapes.head1;
  const int ne = p.shapes.embed;

  std::vector<double> g_a3(std::size_t(n3));
  for (int k = 0; k < n3; ++k) {
    grad.u4(k, 0) += h.a3[std::size_t(k)] * g_logit;
    g_a3[std::size_t(k)] = h.a3[std::size_t(k)] > 0.0 ? p.u4(k, 0) * g_logit : 0.0;
  }
  grad.c4[0] += g_logit;

  std::vector<double> g_a2(std::size_t(n2), 0.0);
  for (int k = 0; k < n2; ++k) {
    const double ak = h.a2[std::size_t(k)];
    double acc = 0.0;
    const double* u3k = p.u3.row(k);
    for (int j = 0; j < n3; ++j) {
      const double gj = g_a3[std::size_t(j)];
      grad.u3(k, j) += ak * gj;
      acc += u3k[j] * gj;
    }
    g_a2[std::size_t(k)] = ak > 0.0 ? acc : 0.0;
  }
  for (int j = 0; j < n3; ++j) grad.c3[std::size_t(j)] += g_a3[std::size_t(j)];

  std::vector<double> g_a1(std::size_t(n1), 0.0);
  for (int k = 0; k < n1; ++k) {
    const double ak = h.a1[std::size_t(k)];
    double acc = 0.0;
    const double* u2k = p.u2.row(k);
    for (int j = 0; j < n2; ++j) {
      const double gj = g_a2[std::size_t(j)];
      grad.u2(k, j) += ak * gj;
      acc += u2k[j] * gj;
    }
    g_a1[std::size_t(k)] = ak > 0.0 ? acc : 0.0;
  }
  for (int j = 0; j < n2; ++j) grad.c2[std::size_t(j)] += g_a2[std::size_t(j)];

  std::vector<double> g_diff(std::size_t(ne), 0.0);
  for (int k = 0; k < ne; ++k) {
    const double dk = h.diff[std::size_t(k)];
    double acc = 0.0;
    const double* u1k = p.u1.row(k);
    for (int j = 0; j < n1; ++j) {
      const double gj = g_a1[std::size_t(j)];
      grad.u1(k, j) += dk * gj;
      acc += u1k[j] * gj;
    }
    g_diff[std::size_t(k)] = acc;
  }
  for (int j = 0; j < n1; ++j) grad.c1[std::size_t(j)] += g_a1[std::size_t(j)];

  // through the difference: subgradient 0 at exact zeros of |.|
  std::vector<double> g_ea(std::size_t(ne)), g_eb(std::size_t(ne));
  for (int k = 0; k < ne; ++k) {
    const double raw = ta.embed[std::size_t(k)] - tb.embed[std::size_t(k)];
    double s;
    if (p.head_combine == HeadCombine::abs_diff) {
      s = raw > 0.0 ? 1.0 : raw < 0.0 ? -1.0 : 0.0;
    } else {
      s = 1.0;
    }
    g_ea[std::size_t(k)] = g_diff[std::size_t(k)] * s;
    g_eb[std::size_t(k)] = -g_ea[std::size_t(k)];
  }

  // branches (shared weights accumulate both)
  auto branch_backward = [&](const detail::BranchTrace& t,
                             const std::vector<double>& g_embed) {
    const int g2 = p.shapes.gcn2;
    // embedding dense layer
    std::vector<double> g_pre3(std::size_t(ne));
    for (int j = 0; j < ne; ++j) {
      g_pre3[std::size_t(j)] =
          t.embed[std::size_t(j)] > 0.0 ? g_embed[std::size_t(j)] : 0.0;
      grad.b3[std::size_t(j)] += g_pre3[std::size_t(j)];
    }
    std::vector<double> g_pooled(std::size_t(g2), 0.0);
    for (int k = 0; k < g2; ++k) {
      const double pk = t.pooled[std::size_t(k)];
      double acc = 0.0;
      const double* w3k = p.w3.row(k);
      double* gw3k = grad.w3.row(k);
      for (int j = 0; j < ne; ++j) {
        gw3k[j] += pk * g_pre3[std::size_t(j)];
        acc += w3k[j] * g_pre3[std::size_t(j)];
      }
      g_pooled[std::size_t(k)] = acc;
    }

    // pooling: every real row receives g_pooled / r
    const int r = t.h2.rows;
    Mat g_pre2(r, g2);
    for (int i = 0; i < r; ++i) {
      const double* h2i = t.h2.row(i);
      double* gi = g_pre2.row(i);
      for (int j = 0; j < g2; ++j) {
        gi[j] = (g_pooled[std::size_t(j)] / r) * (1.0 - h2i[j] * h2i[j]);
      }
    }
    add_matmul_tn(grad.w2, t.agg_h1, g_pre2);            // dW2 += (A H1)^T gPre2
    for (int i = 0; i < r; ++i) {
      const double* gi = g_pre2.row(i);
      for (int j = 0; j < g2; ++j) grad.b2[std::size_t(j)] += gi[j];
    }

    // dH1 = A^T (gPre2 W2^T); A is symmetric
    const Mat g_h1 = matmul(t.a_hat, matmul_nt(g_pre2, p.w2));
    Mat g_pre1(r, p.shapes.gcn1);
    for (int i = 0; i < r; ++i) {
      const double* h1i = t.h1.row(i);
      const double* gh = g_h1.row(i);
      double* gi = g_pre1.row(i);
      for (int j = 0; j < p.shapes.gcn1; ++j) {
        gi[j] = gh[j] * (1.0 - h1i[j] * h1i[j]);
      }
    }
    add_matmul_tn(grad.w1, t.agg_x, g_pre1);             // dW1 += (A X)^T gPre1
    for (int i = 0; i < r; ++i) {
      const double* gi = g_pre1.row(i);
      for (int j = 0; j < p.shapes.gcn1; ++j) grad.b1[std::size_t(j)] += gi[j];
    }
  };
  branch_backward(ta, g_ea);
  branch_backward(tb, g_eb);
  return loss;
}

// ---------------------------------------------------------------------------
// metrics

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

inline Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn,
                                   std::size_t fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  const std::size_t total = tp + fp + tn + fn;
  m.accuracy = total ? double(tp + tn) / double(total) : 0.0;
  m.precision = (tp + fp) ? double(tp) / double(tp + fp) : 0.0;  // 0/0 -> 0
  m.recall = (tp + fn) ? double(tp) / double(tp + fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

// Predict "same user" iff probability >= threshold. Embeddings are computed
// once per distinct graph since params are fixed during evaluation.
inline Metrics evaluate(const ModelParams& p, const PairSet& pairs,
                        double threshold = 0.5) {
  if (pairs.pairs.empty()) throw DataError("evaluate: empty pair set");
  std::vector<std::vector<double>> embeds(pairs.graphs.size());
  std::vector<bool> have(pairs.graphs.size(), false);
  auto embed_of = [&](std::uint32_t g) -> const std::vector<double>& {
    if (!have[g]) {
      embeds[g] = branch_forward(pairs.graphs[g], p);
      have[g] = true;
    }
    return embeds[g];
  };
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (const PairRef& pr : pairs.pairs) {
    const double prob = detail::head_trace(embed_of(pr.a), embed_of(pr.b), p).prob;
    const bool predicted = prob >= threshold;
    if (pr.label) {
      predicted ? ++tp : ++fn;
    } else {
      predicted ? ++fp : ++tn;
    }
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

// ---------------------------------------------------------------------------
// training

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 10;  // epochs without validation-F1 improvement
  std::uint64_t seed = 0;
  AdjacencyMode adjacency_mode = AdjacencyMode::binary;
  HeadCombine head_combine = HeadCombine::abs_diff;
  ModelShapes shapes;
  int jobs = 1;                 // parallel pair gradients; results identical for any value
  double stop_at_val_f1 = 0.0;  // > 0: stop once validation F1 reaches this
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_f1 = 0.0;
};

struct TrainResult {
  ModelParams params;  // best-validation-F1 snapshot
  std::vector<EpochStats> history;
  int best_epoch = 0;
};

namespace detail {

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::int64_t t = 0;
};

inline void adam_step(ModelParams& params, const ModelParams& grad, AdamState& st,
                      double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ++st.t;
  const double bc1 = 1.0 - std::pow(beta1, double(st.t));
  const double bc2 = 1.0 - std::pow(beta2, double(st.t));
  auto tp = tensor_views(params);
  auto tg = tensor_views(const_cast<ModelParams&>(grad));
  auto tm = tensor_views(st.m);
  auto tv = tensor_views(st.v);
  for (std::size_t k = 0; k < tp.size(); ++k) {
    double* w = tp[k].data;
    const double* g = tg[k].data;
    double* m = tm[k].data;
    double* v = tv[k].data;
    for (std::size_t i = 0; i < tp[k].len; ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
}

inline void zero_tensors(ModelParams& p) {
  for (TensorView& t : tensor_views(p)) std::fill_n(t.data, t.len, 0.0);
}

inline void add_tensors(ModelParams& into, ModelParams& from) {
  auto ti = tensor_views(into);
  auto tf = tensor_views(from);
  for (std::size_t k = 0; k < ti.size(); ++k) {
    for (std::size_t i = 0; i < ti[k].len; ++i) ti[k].data[i] += tf[k].data[i];
  }
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Used only where the
// per-index results are stored independently, so the schedule cannot change
// the outcome.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const int workers = std::max(1, std::min<int>(jobs, int(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(std::size_t(workers));
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = std::size_t(w); i < n; i += std::size_t(workers)) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace detail

// Mini-batch Adam over shuffled pairs; per-epoch validation; keeps the
// best-validation-F1 parameters; stops on patience, max_epochs or the
// optional F1 target. Per-pair gradients may be computed in parallel but are
// reduced in pair order, so results are identical for every `jobs` value.
inline TrainResult train(const PairSet& train_pairs, const PairSet& val_pairs,
                         const TrainConfig& cfg,
                         const std::function<void(const EpochStats&)>& on_epoch = {}) {
  if (train_pairs.pairs.empty()) throw TrainError("train: empty training pair set");
  if (val_pairs.pairs.empty()) throw TrainError("train: empty validation pair set");
  if (cfg.learning_rate <= 0 || cfg.batch_size <= 0 || cfg.max_epochs <= 0 ||
      cfg.patience <= 0)
    throw ConfigError("train: config values must be positive");

  ModelParams params =
      init_params(cfg.shapes, cfg.seed, cfg.adjacency_mode, cfg.head_combine);
  detail::AdamState adam{zero_params(cfg.shapes), zero_params(cfg.shapes), 0};

  const std::size_t n_pairs = train_pairs.pairs.size();
  std::vector<std::uint32_t> order(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) order[i] = std::uint32_t(i);

  // one gradient buffer per batch slot; merged in slot order
  const std::size_t slots = std::min<std::size_t>(std::size_t(cfg.batch_size), n_pairs);
  std::vector<ModelParams> slot_grad;
  slot_grad.reserve(slots);
  for (std::size_t s = 0; s < slots; ++s) slot_grad.push_back(zero_params(cfg.shapes));
  std::vector<double> slot_loss(slots, 0.0);
  ModelParams grad = zero_params(cfg.shapes);

  TrainResult result;
  result.params = params;
  double best_f1 = -1.0;
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(cfg.seed, 0x65706f63 + std::uint64_t(epoch)));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n_pairs; start += slots) {
      const std::size_t count = std::min(slots, n_pairs - start);
      const double scale = 1.0 / double(count);
      detail::parallel_for(count, cfg.jobs, [&](std::size_t s) {
        detail::zero_tensors(slot_grad[s]);
        const PairRef& pr = train_pairs.pairs[order[start + s]];
        slot_loss[s] = backward(train_pairs.graphs[pr.a], train_pairs.graphs[pr.b],
                                pr.label, params, scale, slot_grad[s]);
      });
      detail::zero_tensors(grad);
      double batch_loss = 0.0;
      for (std::size_t s = 0; s < count; ++s) {
        detail::add_tensors(grad, slot_grad[s]);
        batch_loss += slot_loss[s];
      }
      batch_loss *= scale;
      if (!std::isfinite(batch_loss))
        throw TrainError("train: loss diverged (NaN/Inf) at epoch " +
                         std::to_string(epoch));
      loss_sum += batch_loss * double(count);
      detail::adam_step(params, grad, adam, cfg.learning_rate);
    }

    const Metrics val = evaluate(params, val_pairs);
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / double(n_pairs);
    stats.val_accuracy = val.accuracy;
    stats.val_f1 = val.f1;
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);

    if (val.f1 > best_f1) {
      best_f1 = val.f1;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (cfg.stop_at_val_f1 > 0.0 && val.f1 >= cfg.stop_at_val_f1) break;
    if (since_best >= cfg.patience) break;
  }
  return result;
}

// ---------------------------------------------------------------------------
// checkpoint + history files

inline constexpr char kCheckpointMagic[9] = "IGGSNNV1";
inline constexpr std::uint16_t kCheckpointVersion = 1;

inline void save_checkpoint(const ModelParams& params, const std::string& path,
                            const std::string& provenance = {}) {
  ByteWriter w;
  w.magic(kCheckpointMagic);
  w.u16(kCheckpointVersion);
  w.str(provenance);
  w.u8(std::uint8_t(params.adjacency_mode));
  w.u8(std::uint8_t(params.head_combine));
  auto views = tensor_views(const_cast<ModelParams&>(params));
  w.u32(std::uint32_t(views.size()));
  for (const TensorView& t : views) {
    w.str(t.name);
    w.u32(std::uint32_t(t.rows));
    w.u32(std::uint32_t(t.cols));
    for (std::size_t i = 0; i < t.len; ++i) w.f64(t.data[i]);
  }
  w.write_file(path);
}

// Shapes are taken from the file; mismatched tensor names/shapes are rejected.
inline ModelParams load_checkpoint(const std::string& path,
                                   std::string* provenance = nullptr) {
  ByteReader r = ByteReader::from_file(path);
  r.expect_magic(kCheckpointMagic);
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion)
    throw FormatError(path + ": unsupported checkpoint version " +
                      std::to_string(version));
  const std::string prov = r.str();
  if (provenance) *provenance = prov;
  const auto adj = AdjacencyMode(r.u8());
  const auto head = HeadCombine(r.u8());
  const std::uint32_t count = r.u32();
  if (count != 14) throw FormatError(path + ": unexpected tensor count");

  struct Entry {
    std::string name;
    int rows, cols;
    std::vector<double> data;
  };
  std::vector<Entry> entries;
  for (std::uint32_t k = 0; k < count; ++k) {
    Entry e;
    e.name = r.str();
    e.rows = int(r.u32());
    e.cols = int(r.u32());
    e.data.resize(std::size_t(e.rows) * std::size_t(e.cols));
    for (double& x : e.data) x = r.f64();
    entries.push_back(std::move(e));
  }

  ModelShapes s;
  auto find = [&](const std::string& name) -> const Entry& {
    for (const Entry& e : entries)
      if (e.name == name) return e;
    throw FormatError(path + ": missing tensor " + name);
  };
  s.features = find("w1").rows;
  s.gcn1 = find("w1").cols;
  s.gcn2 = find("w2").cols;
  s.embed = find("w3").cols;
  s.head1 = find("u1").cols;
  s.head2 = find("u2").cols;
  s.head3 = find("u3").cols;

  ModelParams p = zero_params(s);
  p.adjacency_mode = adj;
  p.head_combine = head;
  for (TensorView& t : tensor_views(p)) {
    const Entry& e = find(t.name);
    if (e.rows != t.rows || e.cols != t.cols)
      throw FormatError(path + ": tensor " + t.name + " has shape " +
                        std::to_string(e.rows) + "x" + std::to_string(e.cols) +
                        ", expected " + std::to_string(t.rows) + "x" +
                        std::to_string(t.cols));
    std::copy(e.data.begin(), e.data.end(), t.data);
  }
  return p;
}

inline void save_history_csv(const std::vector<EpochStats>& history,
                             const std::string& path,
                             const std::vector<std::string>& comments = {}) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot create file: " + path);
  for (const auto& c : comments) out << "# " << c << "\n";
  out << "epoch,train_loss,val_accuracy,val_f1\n";
  char line[160];
  for (const EpochStats& e : history) {
    std::snprintf(line, sizeof line, "%d,%.9f,%.6f,%.6f\n", e.epoch, e.train_loss,
                  e.val_accuracy, e.val_f1);
    out << line;
  }
  if (!out) throw FormatError("write failure: " + path);
}

}  // namespace irisgraph
