#pragma once

#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "procflow/types.hpp"

namespace procflow {

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class ViolationKind {
  SpanOutOfBounds,
  SpanInverted,
  SpanCrossesStep,
  SpanOverlap,
  NodeIdNotDense,
  DanglingEdge,
  SelfLoop,
  MultiHead,
  Cycle,
  Disconnected,
  Incomplete,  // notice, not an error: fewer edges than nodes-1
};

struct Violation {
  ViolationKind kind;
  std::string detail;
};

inline bool is_notice(ViolationKind k) {
  return k == ViolationKind::Incomplete || k == ViolationKind::Disconnected;
}

inline const char* violation_kind_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::SpanOutOfBounds: return "span-out-of-bounds";
    case ViolationKind::SpanInverted: return "span-inverted";
    case ViolationKind::SpanCrossesStep: return "span-crosses-step";
    case ViolationKind::SpanOverlap: return "span-overlap";
    case ViolationKind::NodeIdNotDense: return "node-id-not-dense";
    case ViolationKind::DanglingEdge: return "dangling-edge";
    case ViolationKind::SelfLoop: return "self-loop";
    case ViolationKind::MultiHead: return "multi-head";
    case ViolationKind::Cycle: return "cycle";
    case ViolationKind::Disconnected: return "disconnected";
    default: return "incomplete";
  }
}

// Enumerates every violated flow-graph invariant. A complete valid graph
// yields an empty report. Incomplete graphs (fewer edges than nodes-1)
// produce only notices, which cmd_validate and loading treat as acceptable.
inline std::vector<Violation> validate_flow_graph(const FlowGraph& g) {
  std::vector<Violation> report;
  const std::size_t n_tokens = g.document.token_count();
  const int n = static_cast<int>(g.nodes.size());

  auto add = [&](ViolationKind k, const std::string& d) {
    report.push_back(Violation{k, d});
  };

  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const NodeSpan& s = g.nodes[i];
    if (s.node_id != static_cast<int>(i)) {
      add(ViolationKind::NodeIdNotDense,
          "node at position " + std::to_string(i) + " has id " + std::to_string(s.node_id));
    }
    if (s.start > s.end) {
      add(ViolationKind::SpanInverted, "node " + std::to_string(s.node_id));
      continue;
    }
    if (s.end >= n_tokens) {
      add(ViolationKind::SpanOutOfBounds, "node " + std::to_string(s.node_id));
      continue;
    }
    if (g.document.step_of(s.start) != g.document.step_of(s.end)) {
      add(ViolationKind::SpanCrossesStep, "node " + std::to_string(s.node_id));
    }
  }

  // Pairwise overlap on spans that are individually in bounds.
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < g.nodes.size(); ++j) {
      const NodeSpan& a = g.nodes[i];
      const NodeSpan& b = g.nodes[j];
      if (a.start > a.end || b.start > b.end) continue;
      if (a.start <= b.end && b.start <= a.end) {
        add(ViolationKind::SpanOverlap,
            "nodes " + std::to_string(a.node_id) + " and " + std::to_string(b.node_id));
      }
    }
  }

  std::vector<int> out_degree(g.nodes.size(), 0);
  std::vector<std::vector<int>> succ(g.nodes.size());
  bool edges_ok = true;
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const Edge& e = g.edges[i];
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
      add(ViolationKind::DanglingEdge, "edge " + std::to_string(i));
      edges_ok = false;
      continue;
    }
    if (e.src == e.dst) {
      add(ViolationKind::SelfLoop, "edge " + std::to_string(i));
      edges_ok = false;
      continue;
    }
    if (++out_degree[e.src] == 2) {
      add(ViolationKind::MultiHead, "node " + std::to_string(e.src));
    }
    succ[e.src].push_back(e.dst);
  }

  if (edges_ok && n > 0) {
    // Cycle check via iterative coloring.
    std::vector<int> color(g.nodes.size(), 0);
    bool cycle = false;
    for (int start = 0; start < n && !cycle; ++start) {
      if (color[start] != 0) continue;
      std::vector<std::pair<int, std::size_t>> stack{{start, 0}};
      color[start] = 1;
      while (!stack.empty() && !cycle) {
        auto& [v, idx] = stack.back();
        if (idx < succ[v].size()) {
          int w = succ[v][idx++];
          if (color[w] == 1) {
            cycle = true;
          } else if (color[w] == 0) {
            color[w] = 1;
            stack.push_back({w, 0});
          }
        } else {
          color[v] = 2;
          stack.pop_back();
        }
      }
    }
    if (cycle) add(ViolationKind::Cycle, "directed cycle among edges");

    if (g.edges.size() + 1 < g.nodes.size()) {
      add(ViolationKind::Incomplete,
          std::to_string(g.edges.size()) + " edges over " + std::to_string(n) + " nodes");
    } else if (!cycle) {
      // Complete single-head graph: check weak connectivity.
      std::vector<std::vector<int>> undirected(g.nodes.size());
      for (const Edge& e : g.edges) {
        undirected[e.src].push_back(e.dst);
        undirected[e.dst].push_back(e.src);
      }
      std::vector<bool> seen(g.nodes.size(), false);
      std::vector<int> stack{0};
      seen[0] = true;
      std::size_t reached = 1;
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : undirected[v]) {
          if (!seen[w]) {
            seen[w] = true;
            ++reached;
            stack.push_back(w);
          }
        }
      }
      if (reached != g.nodes.size()) {
        add(ViolationKind::Disconnected,
            std::to_string(reached) + " of " + std::to_string(n) + " nodes reachable");
      }
    }
  }

  return report;
}

inline bool is_valid(const std::vector<Violation>& report) {
  return std::all_of(report.begin(), report.end(),
                     [](const Violation& v) { return is_notice(v.kind); });
}

// ---------------------------------------------------------------------------
// IOB codec
// ---------------------------------------------------------------------------

inline TagSequence encode_iob(const std::vector<NodeSpan>& nodes, const Document& doc) {
  TagSequence tags(doc.token_count(), "O");
  std::vector<int> owner(doc.token_count(), -1);
  for (const NodeSpan& s : nodes) {
    if (s.start > s.end || s.end >= doc.token_count()) {
      throw std::invalid_argument("span out of bounds for node " + std::to_string(s.node_id));
    }
    for (std::size_t i = s.start; i <= s.end; ++i) {
      if (owner[i] >= 0) {
        throw std::invalid_argument("overlapping spans: nodes " + std::to_string(owner[i]) +
                                    " and " + std::to_string(s.node_id));
      }
      owner[i] = s.node_id;
      tags[i] = (i == s.start ? "B-" : "I-") + std::string(to_string(s.tag));
    }
  }
  return tags;
}

// Inverse of encode_iob on valid sequences. Malformed sequences are repaired
// deterministically: an orphan "I-X" (at sequence start, after "O", or after
// a span of a different tag) opens a new span as if it were "B-X". Spans are
// also closed at step boundaries.
inline std::vector<NodeSpan> decode_iob(const TagSequence& tags, const Document& doc) {
  if (tags.size() != doc.token_count()) {
    throw std::invalid_argument("tag sequence length " + std::to_string(tags.size()) +
                                " does not match document (" +
                                std::to_string(doc.token_count()) + " tokens)");
  }
  std::vector<NodeSpan> spans;
  int open = -1;  // index into spans of the span currently being extended
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& t = tags[i];
    if (i > 0 && doc.step_of(i) != doc.step_of(i - 1)) open = -1;
    if (t == "O") {
      open = -1;
      continue;
    }
    if (t.size() < 3 || (t[0] != 'B' && t[0] != 'I') || t[1] != '-') {
      throw std::invalid_argument("bad IOB tag '" + t + "' at offset " + std::to_string(i));
    }
    auto tag = parse_tag(t.substr(2));
    if (!tag) throw std::invalid_argument("unknown tag in '" + t + "'");
    const bool continues =
        t[0] == 'I' && open >= 0 && spans[open].tag == *tag;
    if (continues) {
      spans[open].end = i;
    } else {
      spans.push_back(NodeSpan{static_cast<int>(spans.size()), i, i, *tag});
      open = static_cast<int>(spans.size()) - 1;
    }
  }
  return spans;
}

// ---------------------------------------------------------------------------
// Reachability
// ---------------------------------------------------------------------------

// All nodes with a directed path to node_id.
inline std::set<int> ancestors(const FlowGraph& g, int node_id) {
  if (node_id < 0 || node_id >= static_cast<int>(g.nodes.size())) {
    throw std::out_of_range("unknown node id " + std::to_string(node_id));
  }
  std::vector<std::vector<int>> pred(g.nodes.size());
  for (const Edge& e : g.edges) pred[e.dst].push_back(e.src);
  std::set<int> out;
  std::vector<int> stack{node_id};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int p : pred[v]) {
      if (out.insert(p).second) stack.push_back(p);
    }
  }
  return out;
}

}  // namespace procflow
