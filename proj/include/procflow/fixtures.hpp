#pragma once

#include <string>
#include <vector>

#include "procflow/graph.hpp"
#include "procflow/rng.hpp"
#include "procflow/types.hpp"

namespace procflow {

// Synthetic flow-graph generator. The real corpora are not redistributable,
// so tests and benchmarks run on random articles drawn from a small
// procedural grammar: each step is an action applied to a component,
// optionally with a tool or duration, and each step's action feeds a later
// step's action. The result is always a complete single-head arborescence
// rooted at the final action.

struct FixtureVocab {
  std::vector<std::string> verbs;
  std::vector<std::string> nouns;
  std::vector<std::string> tools;
};

// Deterministic pseudo-word vocabulary. Distinct name_space values yield
// disjoint content words, which is what the two-domain adaptation benchmark
// needs (shared structure, disjoint vocabulary).
inline FixtureVocab make_vocab(const std::string& name_space, std::size_t words_per_class = 12) {
  static const std::vector<std::string> onsets = {"b", "d", "f", "g", "k", "l",
                                                  "m", "n", "p", "r", "s", "t"};
  static const std::vector<std::string> nuclei = {"a", "e", "i", "o", "u"};
  Rng rng(Rng::derive(9001, name_space));
  auto word = [&](const std::string& suffix) {
    std::string w;
    for (int s = 0; s < 2; ++s) {
      w += onsets[rng.next_index(onsets.size())];
      w += nuclei[rng.next_index(nuclei.size())];
    }
    return w + suffix;
  };
  FixtureVocab v;
  for (std::size_t i = 0; i < words_per_class; ++i) {
    v.verbs.push_back(word(""));
    v.nouns.push_back(word("n"));
    v.tools.push_back(word("r"));
  }
  return v;
}

struct FixtureOptions {
  std::size_t min_steps = 3;
  std::size_t max_steps = 6;
  // When true every step's action feeds the next step's action, so no step
  // pair is swappable. When false actions attach to random later steps,
  // which leaves parallel branches that step swapping can reorder.
  bool chain_consecutively = false;
};

inline FlowGraph random_graph(const std::string& id, const std::string& domain,
                              const FixtureVocab& vocab, Rng& rng,
                              const FixtureOptions& opts = {}) {
  const std::size_t n_steps =
      opts.min_steps + rng.next_index(opts.max_steps - opts.min_steps + 1);

  std::vector<std::vector<std::string>> steps;
  struct PendingNode {
    std::size_t start, end;
    Tag tag;
  };
  std::vector<PendingNode> nodes;
  std::vector<int> action_of_step;
  std::vector<Edge> edges;
  std::size_t offset = 0;

  for (std::size_t s = 0; s < n_steps; ++s) {
    std::vector<std::string> words;
    auto push = [&](const std::string& w) {
      words.push_back(w);
      ++offset;
    };
    auto add_node = [&](std::size_t start, std::size_t end, Tag tag) {
      nodes.push_back(PendingNode{start, end, tag});
      return static_cast<int>(nodes.size()) - 1;
    };

    const std::size_t verb_at = offset;
    push(vocab.verbs[rng.next_index(vocab.verbs.size())]);
    const int action = add_node(verb_at, verb_at, Tag::Ae);
    action_of_step.push_back(action);

    push("the");
    const std::size_t noun_at = offset;
    push(vocab.nouns[rng.next_index(vocab.nouns.size())]);
    const int comp = add_node(noun_at, noun_at, Tag::C);
    edges.push_back(Edge{comp, action, EdgeLabel::Targ});

    switch (rng.next_index(3)) {
      case 0: {  // ... with the <tool>
        push("with");
        push("the");
        const std::size_t tool_at = offset;
        push(vocab.tools[rng.next_index(vocab.tools.size())]);
        const int tool = add_node(tool_at, tool_at, Tag::T);
        edges.push_back(Edge{tool, action, EdgeLabel::TComp});
        break;
      }
      case 1: {  // ... for <k> minutes
        push("for");
        const std::size_t dur_at = offset;
        push(std::to_string(1 + rng.next_index(30)));
        push("minutes");
        const int dur = add_node(dur_at, dur_at + 1, Tag::D);  // "<k> minutes"
        edges.push_back(Edge{dur, action, EdgeLabel::OtherMod});
        break;
      }
      default:
        break;  // bare "<verb> the <noun> ."
    }
    push(".");
    steps.push_back(std::move(words));
  }

  // Each non-final action flows into a later action.
  for (std::size_t s = 0; s + 1 < n_steps; ++s) {
    std::size_t target_step =
        opts.chain_consecutively ? s + 1 : s + 1 + rng.next_index(n_steps - s - 1);
    edges.push_back(Edge{action_of_step[s], action_of_step[target_step], EdgeLabel::Dest});
  }

  FlowGraph g;
  g.document = Document(id, domain, std::move(steps));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    g.nodes.push_back(
        NodeSpan{static_cast<int>(i), nodes[i].start, nodes[i].end, nodes[i].tag});
  }
  g.edges = std::move(edges);
  return g;
}

inline std::vector<FlowGraph> random_corpus(const std::string& id_prefix,
                                            const std::string& domain,
                                            const FixtureVocab& vocab, std::size_t count,
                                            std::uint64_t seed,
                                            const FixtureOptions& opts = {}) {
  std::vector<FlowGraph> out;
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(Rng::derive(seed, id_prefix + std::to_string(i)));
    out.push_back(random_graph(id_prefix + std::to_string(i), domain, vocab, rng, opts));
  }
  return out;
}

}  // namespace procflow
