#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "procflow/types.hpp"

namespace procflow {

// Precision/recall/F1 with pooled counts, so corpus-level scores are
// micro-averaged. Empty-vs-empty scores 0 by convention.
struct PRF {
  std::size_t true_positive = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;

  double precision() const {
    return predicted == 0 ? 0.0 : static_cast<double>(true_positive) / predicted;
  }
  double recall() const { return gold == 0 ? 0.0 : static_cast<double>(true_positive) / gold; }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }

  PRF& operator+=(const PRF& o) {
    true_positive += o.true_positive;
    predicted += o.predicted;
    gold += o.gold;
    return *this;
  }
};

namespace detail {

// Multiset intersection size over arbitrary keys.
template <typename Key>
PRF multiset_match(const std::vector<Key>& predicted, const std::vector<Key>& gold) {
  std::map<Key, std::size_t> counts;
  for (const Key& k : gold) ++counts[k];
  PRF out;
  out.predicted = predicted.size();
  out.gold = gold.size();
  for (const Key& k : predicted) {
    auto it = counts.find(k);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++out.true_positive;
    }
  }
  return out;
}

}  // namespace detail

// Exact (start, end, tag) span matching.
inline PRF node_f1(const std::vector<NodeSpan>& predicted, const std::vector<NodeSpan>& gold) {
  using Key = std::tuple<std::size_t, std::size_t, int>;
  auto keys = [](const std::vector<NodeSpan>& spans) {
    std::vector<Key> out;
    for (const NodeSpan& s : spans) out.emplace_back(s.start, s.end, static_cast<int>(s.tag));
    return out;
  };
  return detail::multiset_match(keys(predicted), keys(gold));
}

// Labeled edge matching over a shared (gold) node inventory: edges match on
// (src span, dst span, label).
inline PRF edge_f1(const std::vector<Edge>& predicted, const std::vector<Edge>& gold,
                   const std::vector<NodeSpan>& nodes) {
  using Key = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, int>;
  auto keys = [&](const std::vector<Edge>& edges) {
    std::vector<Key> out;
    for (const Edge& e : edges) {
      if (e.src < 0 || e.src >= static_cast<int>(nodes.size()) || e.dst < 0 ||
          e.dst >= static_cast<int>(nodes.size())) {
        throw std::invalid_argument("edge references a node outside the shared inventory");
      }
      out.emplace_back(nodes[e.src].start, nodes[e.src].end, nodes[e.dst].start,
                       nodes[e.dst].end, static_cast<int>(e.label));
    }
    return out;
  };
  return detail::multiset_match(keys(predicted), keys(gold));
}

// Pipeline tuples (u_span, v_span, label, tag_u, tag_v): node inventories of
// the two graphs may differ, so endpoints compare by span and tag.
struct EvalTuple {
  std::size_t u_start, u_end, v_start, v_end;
  int label;
  int tag_u, tag_v;

  auto key() const { return std::tie(u_start, u_end, v_start, v_end, label, tag_u, tag_v); }
  friend bool operator<(const EvalTuple& a, const EvalTuple& b) { return a.key() < b.key(); }
};

inline std::vector<EvalTuple> eval_tuples(const std::vector<Edge>& edges,
                                          const std::vector<NodeSpan>& nodes) {
  std::vector<EvalTuple> out;
  for (const Edge& e : edges) {
    const NodeSpan& u = nodes.at(static_cast<std::size_t>(e.src));
    const NodeSpan& v = nodes.at(static_cast<std::size_t>(e.dst));
    out.push_back(EvalTuple{u.start, u.end, v.start, v.end, static_cast<int>(e.label),
                            static_cast<int>(u.tag), static_cast<int>(v.tag)});
  }
  return out;
}

inline PRF pipeline_f1(const std::vector<Edge>& predicted_edges,
                       const std::vector<NodeSpan>& predicted_nodes,
                       const std::vector<Edge>& gold_edges,
                       const std::vector<NodeSpan>& gold_nodes) {
  return detail::multiset_match(eval_tuples(predicted_edges, predicted_nodes),
                                eval_tuples(gold_edges, gold_nodes));
}

// Inter-annotator agreement: annotation A plays ground truth.
struct AgreementResult {
  PRF node;
  PRF edge;
};

inline AgreementResult agreement(const FlowGraph& annotation_a, const FlowGraph& annotation_b) {
  if (annotation_a.document.id() != annotation_b.document.id()) {
    throw std::invalid_argument("agreement() called on different documents");
  }
  AgreementResult out;
  out.node = node_f1(annotation_b.nodes, annotation_a.nodes);
  out.edge = pipeline_f1(annotation_b.edges, annotation_b.nodes, annotation_a.edges,
                         annotation_a.nodes);
  return out;
}

}  // namespace procflow
