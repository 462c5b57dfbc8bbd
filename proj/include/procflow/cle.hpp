#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "procflow/params.hpp"
#include "procflow/types.hpp"

namespace procflow {

// Large negative sentinel standing in for -inf in score arrays; keeps
// arithmetic total-order safe during contraction.
inline constexpr double kScoreNegInf = -1e18;

// Arc and label scores over n real nodes plus the virtual ROOT at index n.
// arc.at(u, v) is the score of u flowing into v; the ROOT row and the
// diagonal hold the sentinel (ROOT never has an outgoing arc, no self-arcs).
// label.at(u * (n+1) + v, l) is the score of label l on that arc.
struct ScoreTensor {
  std::size_t real_nodes = 0;
  Mat arc;    // (n+1) x (n+1)
  Mat label;  // (n+1)^2 x 13

  std::size_t root() const { return real_nodes; }
  double label_at(std::size_t u, std::size_t v, int l) const {
    return label.at(u * (real_nodes + 1) + v, l);
  }
};

namespace detail {

// Classic recursive contraction. W[p][c] is the score of tree arc p -> c
// (p the parent); returns the max-weight arborescence rooted at `root` as a
// parent vector. Argmax ties go to the smallest parent index.
inline std::vector<int> cle_parents(const std::vector<std::vector<double>>& W, int root) {
  const int m = static_cast<int>(W.size());
  std::vector<int> parent(m, -1);
  for (int c = 0; c < m; ++c) {
    if (c == root) continue;
    double best = -std::numeric_limits<double>::infinity();
    int best_p = -1;
    for (int p = 0; p < m; ++p) {
      if (p == c) continue;
      if (W[p][c] > best) {
        best = W[p][c];
        best_p = p;
      }
    }
    parent[c] = best_p;
  }

  // Look for a cycle among the greedy parent pointers.
  std::vector<int> mark(m, 0);
  std::vector<int> cycle;
  for (int start = 0; start < m && cycle.empty(); ++start) {
    if (mark[start] != 0) continue;
    std::vector<int> path;
    int v = start;
    while (v != -1 && mark[v] == 0) {
      mark[v] = 1;
      path.push_back(v);
      v = parent[v];
    }
    if (v != -1 && mark[v] == 1) {
      cycle.assign(std::find(path.begin(), path.end(), v), path.end());
    }
    for (int u : path) mark[u] = 2;
  }
  if (cycle.empty()) return parent;

  // Contract the cycle into a supernode (last index of the reduced graph).
  std::vector<bool> in_cycle(m, false);
  for (int v : cycle) in_cycle[v] = true;
  std::vector<int> new_id(m, -1);
  int k = 0;
  for (int v = 0; v < m; ++v) {
    if (!in_cycle[v]) new_id[v] = k++;
  }
  const int super = k;
  const int m2 = k + 1;
  std::vector<std::vector<double>> W2(m2, std::vector<double>(m2, kScoreNegInf));
  std::vector<int> enter_at(m, -1);  // external p -> cycle node its arc would enter
  std::vector<int> leave_from(m, -1);  // external c -> cycle node that exits to it

  for (int p = 0; p < m; ++p) {
    if (in_cycle[p]) continue;
    for (int c = 0; c < m; ++c) {
      if (c == p) continue;
      if (!in_cycle[c]) {
        W2[new_id[p]][new_id[c]] = W[p][c];
      } else {
        const double gain = W[p][c] - W[parent[c]][c];
        if (enter_at[p] == -1 || gain > W2[new_id[p]][super]) {
          W2[new_id[p]][super] = gain;
          enter_at[p] = c;
        }
      }
    }
  }
  for (int c = 0; c < m; ++c) {
    if (in_cycle[c]) continue;
    for (int p : cycle) {
      if (leave_from[c] == -1 || W[p][c] > W2[super][new_id[c]]) {
        W2[super][new_id[c]] = W[p][c];
        leave_from[c] = p;
      }
    }
  }

  const std::vector<int> parent2 = cle_parents(W2, new_id[root]);

  std::vector<int> old_of_new(m2, -1);
  for (int v = 0; v < m; ++v) {
    if (!in_cycle[v]) old_of_new[new_id[v]] = v;
  }
  std::vector<int> result(m, -1);
  for (int c2 = 0; c2 < m2; ++c2) {
    if (c2 == new_id[root] || c2 == super) continue;
    const int c_old = old_of_new[c2];
    result[c_old] = parent2[c2] == super ? leave_from[c_old] : old_of_new[parent2[c2]];
  }
  for (int v : cycle) result[v] = parent[v];
  const int entering = old_of_new[parent2[super]];
  result[enter_at[entering]] = entering;
  return result;
}

// Max arborescence with some heads pinned; pinning masks every other
// destination of that node to the sentinel.
inline std::vector<int> cle_solve(const ScoreTensor& scores, const std::vector<int>& forced) {
  const std::size_t n = scores.real_nodes;
  const std::size_t m = n + 1;
  std::vector<std::vector<double>> W(m, std::vector<double>(m, kScoreNegInf));
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < m; ++v) {
      if (v == u) continue;
      if (forced[u] >= 0 && static_cast<std::size_t>(forced[u]) != v) continue;
      W[v][u] = scores.arc.at(u, v);  // tree arc parent=v -> child=u
    }
  }
  std::vector<int> parent = cle_parents(W, static_cast<int>(n));
  return parent;  // parent[u] is u's destination
}

inline double heads_total(const ScoreTensor& scores, const std::vector<int>& heads) {
  double total = 0.0;
  for (std::size_t u = 0; u < scores.real_nodes; ++u) {
    total += scores.arc.at(u, heads[u]);
  }
  return total;
}

}  // namespace detail

// Maximum-spanning-arborescence decode toward the ROOT sink. Returns, per
// real node, the index of its unique destination (n = ROOT). Among optimal
// arborescences the lexicographically smallest head vector wins, enforced by
// re-solving with each head pinned in ascending candidate order.
inline std::vector<int> cle_decode(const ScoreTensor& scores) {
  const std::size_t n = scores.real_nodes;
  if (n == 0) throw std::invalid_argument("cle_decode needs at least one real node");

  std::vector<int> forced(n, -1);
  std::vector<int> heads = detail::cle_solve(scores, forced);
  const double opt = detail::heads_total(scores, heads);
  const double tol = 1e-9 * std::max(1.0, std::abs(opt));

  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v <= n; ++v) {
      if (v == u) continue;
      forced[u] = static_cast<int>(v);
      const std::vector<int> candidate = detail::cle_solve(scores, forced);
      bool honors_pins = true;
      for (std::size_t w = 0; w <= u; ++w) {
        if (forced[w] >= 0 && candidate[w] != forced[w]) {
          honors_pins = false;
          break;
        }
      }
      if (honors_pins && detail::heads_total(scores, candidate) >= opt - tol) {
        heads = candidate;
        break;
      }
      forced[u] = -1;
    }
    if (forced[u] == -1) forced[u] = heads[u];  // keep the unconstrained choice
  }
  return std::vector<int>(forced.begin(), forced.end());
}

// Per-arc label argmax; ties go to the lowest label index. Arcs into ROOT
// are virtual and dropped.
inline std::vector<Edge> assign_labels(const ScoreTensor& scores, const std::vector<int>& heads) {
  std::vector<Edge> edges;
  const std::size_t n = scores.real_nodes;
  for (std::size_t u = 0; u < n; ++u) {
    const std::size_t v = static_cast<std::size_t>(heads[u]);
    if (v == scores.root()) continue;
    int best_l = 0;
    double best = scores.label_at(u, v, 0);
    for (int l = 1; l < kEdgeLabelCount; ++l) {
      if (scores.label_at(u, v, l) > best) {
        best = scores.label_at(u, v, l);
        best_l = l;
      }
    }
    edges.push_back(Edge{static_cast<int>(u), static_cast<int>(v), static_cast<EdgeLabel>(best_l)});
  }
  return edges;
}

}  // namespace procflow
