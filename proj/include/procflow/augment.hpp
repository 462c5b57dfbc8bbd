#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "procflow/graph.hpp"
#include "procflow/rng.hpp"
#include "procflow/types.hpp"

namespace procflow {

struct AugmentConfig {
  std::size_t max_swaps_per_example = 5;
  std::size_t replacements_per_example = 10;
  double replace_probability = 0.5;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Synonym lexicon: one line per entry, `word<TAB>syn1,syn2,...`, UTF-8.
// Multi-word synonyms and self-mappings are rejected at load so replacement
// never changes the token count or maps a word to itself.
// ---------------------------------------------------------------------------

class SynonymLexicon {
public:
  SynonymLexicon() = default;

  void add(std::string word, std::vector<std::string> synonyms) {
    lowercase(word);
    std::vector<std::string> kept;
    for (std::string& s : synonyms) {
      if (s.empty() || s == word) continue;
      if (s.find_first_of(" \t") != std::string::npos) continue;
      kept.push_back(std::move(s));
    }
    if (!kept.empty()) entries_[std::move(word)] = std::move(kept);
  }

  const std::vector<std::string>* lookup(const std::string& word) const {
    std::string key = word;
    lowercase(key);
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return entries_.size(); }

  static SynonymLexicon load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open lexicon file: " + path);
    SynonymLexicon lex;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw std::runtime_error("lexicon line missing tab: " + line);
      }
      std::vector<std::string> syns;
      std::stringstream rest(line.substr(tab + 1));
      std::string syn;
      while (std::getline(rest, syn, ',')) syns.push_back(syn);
      lex.add(line.substr(0, tab), std::move(syns));
    }
    return lex;
  }

private:
  static void lowercase(std::string& s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }

  std::map<std::string, std::vector<std::string>> entries_;
};

// ---------------------------------------------------------------------------
// Step swapping
// ---------------------------------------------------------------------------

// True iff swapping steps i and j cannot contradict any annotated dependency:
// for every ordered step pair whose relative order the swap reverses, no
// directed path may run between their node sets in either direction.
inline bool swappable(const FlowGraph& g, std::size_t i, std::size_t j) {
  const std::size_t n_steps = g.document.step_count();
  if (i >= j || j >= n_steps) throw std::out_of_range("bad step pair for swappable()");

  // node -> step, plus per-node ancestor sets computed once.
  std::vector<std::size_t> step_of_node(g.nodes.size());
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    step_of_node[k] = g.document.step_of(g.nodes[k].start);
  }
  std::vector<std::set<int>> anc(g.nodes.size());
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    anc[k] = ancestors(g, static_cast<int>(k));
  }
  auto connected = [&](std::size_t step_a, std::size_t step_b) {
    for (std::size_t u = 0; u < g.nodes.size(); ++u) {
      if (step_of_node[u] != step_a && step_of_node[u] != step_b) continue;
      for (int p : anc[u]) {
        const std::size_t sp = step_of_node[p];
        if ((step_of_node[u] == step_a && sp == step_b) ||
            (step_of_node[u] == step_b && sp == step_a)) {
          return true;
        }
      }
    }
    return false;
  };

  // The swap reverses (i,k) for i<k<=j and (k,j) for i<=k<j.
  for (std::size_t k = i + 1; k <= j; ++k) {
    if (connected(i, k)) return false;
  }
  for (std::size_t k = i; k < j; ++k) {
    if (connected(k, j)) return false;
  }
  return true;
}

// Exchanges steps i and j, remapping every span offset; node ids and edges
// are untouched. Precondition: swappable(g, i, j).
inline FlowGraph swap_steps(const FlowGraph& g, std::size_t i, std::size_t j) {
  if (!swappable(g, i, j)) {
    throw std::invalid_argument("steps " + std::to_string(i) + " and " + std::to_string(j) +
                                " are not swappable");
  }
  const auto& old_steps = g.document.steps();
  std::vector<std::size_t> order(old_steps.size());
  for (std::size_t s = 0; s < order.size(); ++s) order[s] = s;
  std::swap(order[i], order[j]);

  std::vector<std::vector<std::string>> new_steps;
  std::vector<std::size_t> new_start_of_old_step(old_steps.size());
  std::size_t offset = 0;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t s = order[pos];
    new_start_of_old_step[s] = offset;
    std::vector<std::string> words;
    for (const Token& t : old_steps[s]) words.push_back(t.text);
    offset += words.size();
    new_steps.push_back(std::move(words));
  }

  FlowGraph out;
  out.document = Document(g.document.id(), g.document.domain(), std::move(new_steps));
  for (const NodeSpan& n : g.nodes) {
    const std::size_t old_step = g.document.step_of(n.start);
    const std::size_t old_step_start = old_steps[old_step].front().doc_offset;
    const std::size_t delta = new_start_of_old_step[old_step];
    out.nodes.push_back(NodeSpan{n.node_id, n.start - old_step_start + delta,
                                 n.end - old_step_start + delta, n.tag});
  }
  out.edges = g.edges;
  return out;
}

// Up to max_swaps_per_example augmented copies, one swapped pair each,
// sampled uniformly without replacement from the swappable pairs.
inline std::vector<FlowGraph> augment_by_swapping(const FlowGraph& g,
                                                  const AugmentConfig& config, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  const std::size_t n_steps = g.document.step_count();
  for (std::size_t i = 0; i < n_steps; ++i) {
    for (std::size_t j = i + 1; j < n_steps; ++j) {
      if (swappable(g, i, j)) pairs.emplace_back(i, j);
    }
  }
  rng.shuffle(pairs);
  std::vector<FlowGraph> out;
  for (std::size_t k = 0; k < pairs.size() && out.size() < config.max_swaps_per_example; ++k) {
    FlowGraph aug = swap_steps(g, pairs[k].first, pairs[k].second);
    std::vector<std::vector<std::string>> steps;
    for (const auto& st : aug.document.steps()) {
      std::vector<std::string> w;
      for (const Token& t : st) w.push_back(t.text);
      steps.push_back(std::move(w));
    }
    aug.document = Document(g.document.id() + "#swap" + std::to_string(out.size()),
                            g.document.domain(), std::move(steps));
    out.push_back(std::move(aug));
  }
  return out;
}

// Exactly replacements_per_example copies; in each copy every token whose
// lowercased text is in the lexicon is independently replaced with
// probability p by a uniformly chosen synonym. Annotations are unchanged.
inline std::vector<FlowGraph> augment_by_replacement(const FlowGraph& g,
                                                     const SynonymLexicon& lexicon,
                                                     const AugmentConfig& config, Rng& rng) {
  std::vector<FlowGraph> out;
  for (std::size_t copy = 0; copy < config.replacements_per_example; ++copy) {
    std::vector<std::vector<std::string>> steps;
    for (const auto& step : g.document.steps()) {
      std::vector<std::string> words;
      for (const Token& t : step) {
        const std::vector<std::string>* syns = lexicon.lookup(t.text);
        if (syns && rng.bernoulli(config.replace_probability)) {
          words.push_back((*syns)[rng.next_index(syns->size())]);
        } else {
          words.push_back(t.text);
        }
      }
      steps.push_back(std::move(words));
    }
    FlowGraph copy_g;
    copy_g.document = Document(g.document.id() + "#repl" + std::to_string(copy),
                               g.document.domain(), std::move(steps));
    copy_g.nodes = g.nodes;
    copy_g.edges = g.edges;
    out.push_back(std::move(copy_g));
  }
  return out;
}

}  // namespace procflow
