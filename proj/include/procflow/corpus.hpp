#pragma once

#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "procflow/graph.hpp"
#include "procflow/rng.hpp"
#include "procflow/types.hpp"

namespace procflow {

// Corpus interchange format: one JSON object per line, UTF-8, LF endings.
// Keys are emitted in a fixed order so that serialization is byte-stable.
//
//   {"id":..., "domain":..., "steps":[[tok,...],...],
//    "nodes":[{"id":..,"start":..,"end":..,"tag":..},...],
//    "edges":[{"src":..,"dst":..,"label":..},...]}

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline nlohmann::ordered_json graph_to_json(const FlowGraph& g) {
  nlohmann::ordered_json j;
  j["id"] = g.document.id();
  j["domain"] = g.document.domain();
  auto steps = nlohmann::ordered_json::array();
  for (const auto& step : g.document.steps()) {
    auto s = nlohmann::ordered_json::array();
    for (const auto& tok : step) s.push_back(tok.text);
    steps.push_back(std::move(s));
  }
  j["steps"] = std::move(steps);
  auto nodes = nlohmann::ordered_json::array();
  for (const NodeSpan& n : g.nodes) {
    nlohmann::ordered_json jn;
    jn["id"] = n.node_id;
    jn["start"] = n.start;
    jn["end"] = n.end;
    jn["tag"] = std::string(to_string(n.tag));
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  auto edges = nlohmann::ordered_json::array();
  for (const Edge& e : g.edges) {
    nlohmann::ordered_json je;
    je["src"] = e.src;
    je["dst"] = e.dst;
    je["label"] = std::string(to_string(e.label));
    edges.push_back(std::move(je));
  }
  j["edges"] = std::move(edges);
  return j;
}

inline FlowGraph graph_from_json(const nlohmann::json& j) {
  std::vector<std::vector<std::string>> steps;
  for (const auto& step : j.at("steps")) {
    steps.push_back(step.get<std::vector<std::string>>());
  }
  FlowGraph g;
  g.document = Document(j.at("id").get<std::string>(),
                        j.at("domain").get<std::string>(), std::move(steps));
  if (j.contains("nodes")) {
    for (const auto& jn : j.at("nodes")) {
      const std::string tag_s = jn.at("tag").get<std::string>();
      auto tag = parse_tag(tag_s);
      if (!tag) throw CorpusError("unknown tag \"" + tag_s + "\"");
      g.nodes.push_back(NodeSpan{jn.at("id").get<int>(), jn.at("start").get<std::size_t>(),
                                 jn.at("end").get<std::size_t>(), *tag});
    }
  }
  if (j.contains("edges")) {
    for (const auto& je : j.at("edges")) {
      const std::string label_s = je.at("label").get<std::string>();
      auto label = parse_edge_label(label_s);
      if (!label) throw CorpusError("unknown label \"" + label_s + "\"");
      g.edges.push_back(Edge{je.at("src").get<int>(), je.at("dst").get<int>(), *label});
    }
  }
  return g;
}

inline std::vector<FlowGraph> load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  std::vector<FlowGraph> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    FlowGraph g;
    try {
      g = graph_from_json(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      throw CorpusError("line " + std::to_string(line_no) + ": " + e.what());
    }
    auto report = validate_flow_graph(g);
    if (!is_valid(report)) {
      throw CorpusError("line " + std::to_string(line_no) + ": record \"" +
                        g.document.id() + "\": " + report.front().detail);
    }
    out.push_back(std::move(g));
  }
  return out;
}

inline void save_corpus(const std::vector<FlowGraph>& graphs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write corpus file: " + path);
  for (const FlowGraph& g : graphs) {
    out << graph_to_json(g).dump() << '\n';
  }
  if (!out) throw CorpusError("write failure: " + path);
}

// ---------------------------------------------------------------------------
// Source/target pairing and k-fold splitting
// ---------------------------------------------------------------------------

struct DatasetPair {
  std::vector<FlowGraph> source;  // N examples, cooking domain
  std::vector<FlowGraph> target;  // M examples, target domain
};

struct FoldSplit {
  int fold_count = 0;
  std::vector<int> assignments;  // per-document fold index

  // Round r: fold r trains, fold (r+1) mod k validates, the rest test.
  std::vector<std::size_t> train_indices(int round) const { return in_fold(round % fold_count); }
  std::vector<std::size_t> validation_indices(int round) const {
    return in_fold((round + 1) % fold_count);
  }
  std::vector<std::size_t> test_indices(int round) const {
    std::vector<std::size_t> out;
    const int tr = round % fold_count;
    const int va = (round + 1) % fold_count;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i] != tr && assignments[i] != va) out.push_back(i);
    }
    return out;
  }

private:
  std::vector<std::size_t> in_fold(int f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i] == f) out.push_back(i);
    }
    return out;
  }
};

inline FoldSplit make_folds(std::size_t corpus_size, int fold_count, std::uint64_t seed) {
  if (fold_count < 2) throw std::invalid_argument("fold_count must be >= 2");
  if (corpus_size < static_cast<std::size_t>(fold_count)) {
    throw std::invalid_argument("fold_count exceeds corpus size");
  }
  std::vector<std::size_t> order(corpus_size);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::derive(seed, "folds"));
  rng.shuffle(order);
  FoldSplit split;
  split.fold_count = fold_count;
  split.assignments.resize(corpus_size);
  for (std::size_t i = 0; i < corpus_size; ++i) {
    split.assignments[order[i]] = static_cast<int>(i % fold_count);
  }
  return split;
}

}  // namespace procflow
