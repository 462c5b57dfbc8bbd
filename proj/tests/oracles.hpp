#pragma once

// Brute-force oracles used by the unit and acceptance suites. Everything in
// this header is deliberately independent of the implementation paths it
// checks: plain enumeration, explicit closure matrices, no shared helpers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "procflow/cle.hpp"
#include "procflow/params.hpp"
#include "procflow/types.hpp"

namespace oracle {

// Explicit transitive closure by repeated squaring-free Floyd-Warshall.
inline std::vector<std::vector<bool>> closure(std::size_t n,
                                              const std::vector<procflow::Edge>& edges) {
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (const auto& e : edges) reach[e.src][e.dst] = true;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  return reach;
}

// Graph acceptability by explicit checks: dense ids, in-bounds non-crossing
// non-overlapping spans, out-degree <= 1, no i->...->i path.
inline bool graph_acceptable(const procflow::FlowGraph& g) {
  const std::size_t n = g.nodes.size();
  const std::size_t T = g.document.token_count();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = g.nodes[i];
    if (s.node_id != static_cast<int>(i)) return false;
    if (s.start > s.end || s.end >= T) return false;
    if (g.document.step_of(s.start) != g.document.step_of(s.end)) return false;
    for (std::size_t j = 0; j < i; ++j) {
      if (s.start <= g.nodes[j].end && g.nodes[j].start <= s.end) return false;
    }
  }
  std::vector<int> out_deg(n, 0);
  for (const auto& e : g.edges) {
    if (e.src < 0 || e.dst < 0 || e.src >= static_cast<int>(n) || e.dst >= static_cast<int>(n))
      return false;
    if (e.src == e.dst) return false;
    if (++out_deg[e.src] > 1) return false;
  }
  const auto reach = closure(n, g.edges);
  for (std::size_t i = 0; i < n; ++i)
    if (reach[i][i]) return false;
  return true;
}

// All ROOT-rooted arborescence head assignments over n real nodes (ROOT = n),
// by enumeration: every head vector whose reversed edges reach all nodes
// from ROOT and contain no cycle.
inline void enumerate_arborescences(std::size_t n,
                                    const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> heads(n, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t u) {
    if (u == n) {
      // acyclic iff following heads from every node terminates at ROOT
      for (std::size_t start = 0; start < n; ++start) {
        std::size_t v = start, hops = 0;
        while (v != n) {
          v = static_cast<std::size_t>(heads[v]);
          if (++hops > n) return;  // cycle
        }
      }
      visit(heads);
      return;
    }
    for (std::size_t v = 0; v <= n; ++v) {
      if (v == u) continue;
      heads[u] = static_cast<int>(v);
      rec(u + 1);
    }
  };
  rec(0);
}

struct BestArborescence {
  std::vector<int> heads;
  double total = -std::numeric_limits<double>::infinity();
};

// Max-score arborescence by enumeration; among ties keeps the
// lexicographically smallest head vector.
inline BestArborescence best_arborescence(const procflow::ScoreTensor& scores) {
  const std::size_t n = scores.real_nodes;
  BestArborescence best;
  enumerate_arborescences(n, [&](const std::vector<int>& heads) {
    double total = 0.0;
    for (std::size_t u = 0; u < n; ++u) total += scores.arc.at(u, heads[u]);
    if (total > best.total ||
        (total == best.total && (best.heads.empty() || heads < best.heads))) {
      best.total = total;
      best.heads = heads;
    }
  });
  return best;
}

// Joint labeled argmax over all arborescences: arcs into ROOT carry no label.
struct BestLabeled {
  std::vector<int> heads;
  std::vector<int> labels;  // per real node; -1 for arcs into ROOT
  double total = -std::numeric_limits<double>::infinity();
};

inline BestLabeled best_labeled_arborescence(const procflow::ScoreTensor& scores) {
  const std::size_t n = scores.real_nodes;
  BestLabeled best;
  enumerate_arborescences(n, [&](const std::vector<int>& heads) {
    double total = 0.0;
    std::vector<int> labels(n, -1);
    for (std::size_t u = 0; u < n; ++u) {
      total += scores.arc.at(u, heads[u]);
      if (static_cast<std::size_t>(heads[u]) != n) {
        int best_l = 0;
        for (int l = 1; l < procflow::kEdgeLabelCount; ++l) {
          if (scores.label_at(u, heads[u], l) > scores.label_at(u, heads[u], best_l)) best_l = l;
        }
        labels[u] = best_l;
        total += scores.label_at(u, heads[u], best_l);
      }
    }
    if (total > best.total) {
      best.total = total;
      best.heads = heads;
      best.labels = labels;
    }
  });
  return best;
}

// CRF by exhaustive sequence enumeration.
struct CrfEnumeration {
  double log_partition;
  double best_score;
  std::vector<int> best_sequence;  // lexicographically smallest among ties
};

inline CrfEnumeration enumerate_crf(const procflow::Mat& emissions, const procflow::Mat& trans,
                                    const procflow::Mat& start, const procflow::Mat& stop,
                                    int label_count) {
  const std::size_t T = emissions.rows;
  CrfEnumeration out;
  out.best_score = -std::numeric_limits<double>::infinity();
  double max_score = -std::numeric_limits<double>::infinity();
  std::vector<double> all_scores;
  std::vector<int> seq(T, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t t) {
    if (t == T) {
      double s = start.at(0, seq.front()) + stop.at(0, seq.back());
      for (std::size_t i = 0; i < T; ++i) {
        s += emissions.at(i, seq[i]);
        if (i > 0) s += trans.at(seq[i - 1], seq[i]);
      }
      all_scores.push_back(s);
      max_score = std::max(max_score, s);
      if (s > out.best_score) {
        out.best_score = s;
        out.best_sequence = seq;
      }
      return;
    }
    for (int l = 0; l < label_count; ++l) {
      seq[t] = l;
      rec(t + 1);
    }
  };
  rec(0);
  double z = 0.0;
  for (double s : all_scores) z += std::exp(s - max_score);
  out.log_partition = max_score + std::log(z);
  return out;
}

// Step-swap causality oracle: physically reorder the steps, then check that
// no edge of the reordered graph connects two steps whose relative order the
// swap reversed (an annotated dependency in either direction between such
// steps contradicts the reordering).
inline bool swap_causality_ok(const procflow::FlowGraph& g, std::size_t i, std::size_t j) {
  const std::size_t n = g.nodes.size();
  std::vector<std::size_t> step_of(n);
  for (std::size_t k = 0; k < n; ++k) step_of[k] = g.document.step_of(g.nodes[k].start);
  const auto reach = closure(n, g.edges);
  auto reversed = [&](std::size_t a, std::size_t b) {
    // does the swap of steps i and j reverse the relative order of steps a,b?
    auto pos = [&](std::size_t s) { return s == i ? j : s == j ? i : s; };
    return (a < b) != (pos(a) < pos(b));
  };
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (!reach[u][v]) continue;
      const std::size_t su = step_of[u], sv = step_of[v];
      if (su != sv && reversed(std::min(su, sv), std::max(su, sv))) return false;
    }
  }
  return true;
}

}  // namespace oracle
