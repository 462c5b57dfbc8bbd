#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "procflow/cle.hpp"
#include "procflow/encoder.hpp"
#include "procflow/graph.hpp"
#include "procflow/params.hpp"

namespace procflow {

// Arc-factored biaffine scorer over node spans. Node representations are
// mean-pooled encoder rows; ROOT has a learned representation. Separate
// bilinear forms score arcs and the 13 labels.

struct BiaffineConfig {
  std::size_t proj_dim = 24;
};

struct LossWeights {
  double lambda = 0.5;  // weight on the edge loss; 1-lambda on the label loss
};

inline void add_biaffine_params(ParamStore& p, const EncoderConfig& enc,
                                const BiaffineConfig& cfg, Rng& rng) {
  const std::size_t H = enc.hidden_dim;
  const std::size_t D = cfg.proj_dim;
  init_fan_in(p.add("arc.head.W", D, H), rng);
  p.add("arc.head.b", 1, D);
  init_fan_in(p.add("arc.dep.W", D, H), rng);
  p.add("arc.dep.b", 1, D);
  init_uniform(p.add("root.vec", 1, H), rng, 0.1);
  init_fan_in(p.add("arc.U", D, D), rng);
  p.add("arc.wh", 1, D);
  p.add("arc.b", 1, 1);
  init_fan_in(p.add("lab.U", kEdgeLabelCount * D, D), rng);
  p.add("lab.wh", kEdgeLabelCount, D);
  p.add("lab.wd", kEdgeLabelCount, D);
  p.add("lab.b", 1, kEdgeLabelCount);
}

// Forward caches for the scorer.
struct BiaffineTrace {
  std::size_t n = 0;         // real nodes
  std::size_t proj_dim = 0;
  Mat pooled;                // (n+1) x H; row n is root.vec
  Mat head;                  // (n+1) x D
  Mat dep;                   // (n+1) x D
  ScoreTensor scores;
  std::vector<std::vector<std::size_t>> span_tokens;  // per real node
};

inline BiaffineTrace score_arcs(const ParamStore& p, const EncoderTrace& enc,
                                const std::vector<NodeSpan>& nodes, const BiaffineConfig& cfg) {
  if (nodes.empty()) throw std::invalid_argument("score_arcs needs at least one node");
  const std::size_t n = nodes.size();
  const std::size_t H = enc.out.cols;
  const std::size_t D = cfg.proj_dim;

  BiaffineTrace tr;
  tr.n = n;
  tr.proj_dim = D;
  tr.pooled = Mat(n + 1, H);
  tr.span_tokens.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = nodes[i].start; t <= nodes[i].end; ++t) tr.span_tokens[i].push_back(t);
    const double inv = 1.0 / static_cast<double>(tr.span_tokens[i].size());
    for (std::size_t t : tr.span_tokens[i]) {
      for (std::size_t h = 0; h < H; ++h) tr.pooled.at(i, h) += inv * enc.out.at(t, h);
    }
  }
  const Mat& root = p.value("root.vec");
  for (std::size_t h = 0; h < H; ++h) tr.pooled.at(n, h) = root.at(0, h);

  auto project = [&](const char* wk, const char* bk, Mat& out) {
    const Mat& W = p.value(wk);
    const Mat& b = p.value(bk);
    out = Mat(n + 1, D);
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t d = 0; d < D; ++d) {
        double s = b.at(0, d);
        for (std::size_t h = 0; h < H; ++h) s += W.at(d, h) * tr.pooled.at(i, h);
        out.at(i, d) = s;
      }
    }
  };
  project("arc.head.W", "arc.head.b", tr.head);
  project("arc.dep.W", "arc.dep.b", tr.dep);

  tr.scores.real_nodes = n;
  tr.scores.arc = Mat(n + 1, n + 1);
  tr.scores.label = Mat((n + 1) * (n + 1), kEdgeLabelCount);
  const Mat& aU = p.value("arc.U");
  const Mat& awh = p.value("arc.wh");
  const double ab = p.value("arc.b").at(0, 0);
  const Mat& lU = p.value("lab.U");
  const Mat& lwh = p.value("lab.wh");
  const Mat& lwd = p.value("lab.wd");
  const Mat& lb = p.value("lab.b");

  for (std::size_t u = 0; u <= n; ++u) {
    for (std::size_t v = 0; v <= n; ++v) {
      if (u == n || u == v) {  // ROOT is a sink; no self-arcs
        tr.scores.arc.at(u, v) = kScoreNegInf;
        continue;
      }
      // dep_u^T U head_v + wh . head_v + b
      double s = ab;
      for (std::size_t d = 0; d < D; ++d) {
        double row = 0.0;
        for (std::size_t e = 0; e < D; ++e) row += aU.at(d, e) * tr.head.at(v, e);
        s += tr.dep.at(u, d) * row;
      }
      for (std::size_t d = 0; d < D; ++d) s += awh.at(0, d) * tr.head.at(v, d);
      tr.scores.arc.at(u, v) = s;
      for (int l = 0; l < kEdgeLabelCount; ++l) {
        double ls = lb.at(0, l);
        for (std::size_t d = 0; d < D; ++d) {
          double row = 0.0;
          for (std::size_t e = 0; e < D; ++e) row += lU.at(l * D + d, e) * tr.head.at(v, e);
          ls += tr.dep.at(u, d) * row;
          ls += lwh.at(l, d) * tr.head.at(v, d) + lwd.at(l, d) * tr.dep.at(u, d);
        }
        tr.scores.label.at(u * (n + 1) + v, l) = ls;
      }
    }
  }
  return tr;
}

namespace detail {

// Backward from d(arc)/d(label) score gradients through the biaffine forms,
// the projections, the pooling, and into the encoder.
inline void biaffine_backward(const BiaffineTrace& tr, const Mat& d_arc, const Mat& d_label,
                              const EncoderTrace& enc, ParamStore& p) {
  const std::size_t n = tr.n;
  const std::size_t D = tr.proj_dim;
  const std::size_t H = tr.pooled.cols;
  const Mat& aU = p.value("arc.U");
  const Mat& awh = p.value("arc.wh");
  const Mat& lU = p.value("lab.U");
  const Mat& lwh = p.value("lab.wh");
  const Mat& lwd = p.value("lab.wd");

  Mat d_head(n + 1, D), d_dep(n + 1, D);
  Mat& g_aU = p.grad("arc.U");
  Mat& g_awh = p.grad("arc.wh");
  Mat& g_ab = p.grad("arc.b");
  Mat& g_lU = p.grad("lab.U");
  Mat& g_lwh = p.grad("lab.wh");
  Mat& g_lwd = p.grad("lab.wd");
  Mat& g_lb = p.grad("lab.b");

  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v <= n; ++v) {
      if (v == u) continue;
      const double ga = d_arc.at(u, v);
      if (ga != 0.0) {
        g_ab.at(0, 0) += ga;
        for (std::size_t d = 0; d < D; ++d) {
          double uh = 0.0, utd = 0.0;
          for (std::size_t e = 0; e < D; ++e) {
            uh += aU.at(d, e) * tr.head.at(v, e);
            utd += aU.at(e, d) * tr.dep.at(u, e);
            g_aU.at(d, e) += ga * tr.dep.at(u, d) * tr.head.at(v, e);
          }
          d_dep.at(u, d) += ga * uh;
          d_head.at(v, d) += ga * (utd + awh.at(0, d));
          g_awh.at(0, d) += ga * tr.head.at(v, d);
        }
      }
      for (int l = 0; l < kEdgeLabelCount; ++l) {
        const double gl = d_label.at(u * (n + 1) + v, l);
        if (gl == 0.0) continue;
        g_lb.at(0, l) += gl;
        for (std::size_t d = 0; d < D; ++d) {
          double uh = 0.0, utd = 0.0;
          for (std::size_t e = 0; e < D; ++e) {
            uh += lU.at(l * D + d, e) * tr.head.at(v, e);
            utd += lU.at(l * D + e, d) * tr.dep.at(u, e);
            g_lU.at(l * D + d, e) += gl * tr.dep.at(u, d) * tr.head.at(v, e);
          }
          d_dep.at(u, d) += gl * (uh + lwd.at(l, d));
          d_head.at(v, d) += gl * (utd + lwh.at(l, d));
          g_lwh.at(l, d) += gl * tr.head.at(v, d);
          g_lwd.at(l, d) += gl * tr.dep.at(u, d);
        }
      }
    }
  }

  // Through the projections into pooled representations.
  Mat d_pooled(n + 1, H);
  auto unproject = [&](const char* wk, const char* bk, const Mat& d_out) {
    const Mat& W = p.value(wk);
    Mat& gW = p.grad(wk);
    Mat& gb = p.grad(bk);
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t d = 0; d < D; ++d) {
        const double g = d_out.at(i, d);
        if (g == 0.0) continue;
        gb.at(0, d) += g;
        for (std::size_t h = 0; h < H; ++h) {
          gW.at(d, h) += g * tr.pooled.at(i, h);
          d_pooled.at(i, h) += g * W.at(d, h);
        }
      }
    }
  };
  unproject("arc.head.W", "arc.head.b", d_head);
  unproject("arc.dep.W", "arc.dep.b", d_dep);

  Mat& g_root = p.grad("root.vec");
  for (std::size_t h = 0; h < H; ++h) g_root.at(0, h) += d_pooled.at(n, h);
  Mat d_enc(enc.out.rows, enc.out.cols);
  for (std::size_t i = 0; i < n; ++i) {
    const double inv = 1.0 / static_cast<double>(tr.span_tokens[i].size());
    for (std::size_t t : tr.span_tokens[i]) {
      for (std::size_t h = 0; h < H; ++h) d_enc.at(t, h) += inv * d_pooled.at(i, h);
    }
  }
  encoder_backward(enc, d_enc, p);
}

inline double log_softmax_nll(const std::vector<double>& scores, std::size_t gold,
                              std::vector<double>& probs) {
  double m = scores[0];
  for (double s : scores) m = std::max(m, s);
  double z = 0.0;
  for (double s : scores) z += std::exp(s - m);
  const double log_z = m + std::log(z);
  probs.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) probs[i] = std::exp(scores[i] - log_z);
  return log_z - scores[gold];
}

}  // namespace detail

// Eq-style weighted loss: mean head cross-entropy over real nodes plus mean
// label cross-entropy over gold arcs, mixed by lambda. The gold graph must
// be complete (single-head, n-1 edges).
inline double joint_loss_and_grad(ParamStore& p, const EncoderTrace& enc, const FlowGraph& gold,
                                  const LossWeights& weights, const BiaffineConfig& cfg,
                                  bool compute_grad) {
  const std::size_t n = gold.nodes.size();
  if (n == 0) throw std::invalid_argument("joint loss needs at least one node");
  if (gold.edges.size() + 1 != n) {
    throw std::invalid_argument("gold graph is incomplete: " + std::to_string(gold.edges.size()) +
                                " edges over " + std::to_string(n) + " nodes");
  }
  std::vector<int> gold_head(n, static_cast<int>(n));  // default ROOT
  for (const Edge& e : gold.edges) gold_head[e.src] = e.dst;

  const BiaffineTrace tr = score_arcs(p, enc, gold.nodes, cfg);
  Mat d_arc(n + 1, n + 1);
  Mat d_label((n + 1) * (n + 1), kEdgeLabelCount);

  double edge_loss = 0.0;
  std::vector<double> cand_scores, probs;
  std::vector<std::size_t> cand_idx;
  for (std::size_t u = 0; u < n; ++u) {
    cand_scores.clear();
    cand_idx.clear();
    std::size_t gold_pos = 0;
    for (std::size_t v = 0; v <= n; ++v) {
      if (v == u) continue;
      if (static_cast<int>(v) == gold_head[u]) gold_pos = cand_scores.size();
      cand_scores.push_back(tr.scores.arc.at(u, v));
      cand_idx.push_back(v);
    }
    edge_loss += detail::log_softmax_nll(cand_scores, gold_pos, probs);
    if (compute_grad) {
      const double scale = weights.lambda / static_cast<double>(n);
      for (std::size_t k = 0; k < cand_idx.size(); ++k) {
        d_arc.at(u, cand_idx[k]) += scale * (probs[k] - (k == gold_pos ? 1.0 : 0.0));
      }
    }
  }
  edge_loss /= static_cast<double>(n);

  double label_loss = 0.0;
  if (!gold.edges.empty()) {
    for (const Edge& e : gold.edges) {
      cand_scores.assign(kEdgeLabelCount, 0.0);
      for (int l = 0; l < kEdgeLabelCount; ++l) {
        cand_scores[l] = tr.scores.label_at(e.src, e.dst, l);
      }
      label_loss += detail::log_softmax_nll(cand_scores, static_cast<std::size_t>(e.label), probs);
      if (compute_grad) {
        const double scale = (1.0 - weights.lambda) / static_cast<double>(gold.edges.size());
        for (int l = 0; l < kEdgeLabelCount; ++l) {
          d_label.at(e.src * (n + 1) + e.dst, l) +=
              scale * (probs[l] - (l == static_cast<int>(e.label) ? 1.0 : 0.0));
        }
      }
    }
    label_loss /= static_cast<double>(gold.edges.size());
  }

  if (compute_grad) detail::biaffine_backward(tr, d_arc, d_label, enc, p);
  return weights.lambda * edge_loss + (1.0 - weights.lambda) * label_loss;
}

// Full decode: biaffine scores -> CLE arborescence -> per-arc label argmax.
inline std::vector<Edge> predict_edges(const ParamStore& p, const EncoderTrace& enc,
                                       const std::vector<NodeSpan>& nodes,
                                       const BiaffineConfig& cfg) {
  const BiaffineTrace tr = score_arcs(p, enc, nodes, cfg);
  return assign_labels(tr.scores, cle_decode(tr.scores));
}

}  // namespace procflow
