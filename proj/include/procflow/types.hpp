#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace procflow {

// ---------------------------------------------------------------------------
// Node tags (closed set of 10) and edge labels (closed set of 13).
// ---------------------------------------------------------------------------

enum class Tag : int { C, T, D, Q, Ae, Ae2, Ac, At, Sc, St };

inline constexpr int kTagCount = 10;

inline constexpr std::array<std::string_view, kTagCount> kTagNames = {
    "C", "T", "D", "Q", "Ae", "Ae2", "Ac", "At", "Sc", "St"};

inline std::string_view to_string(Tag t) {
  return kTagNames[static_cast<int>(t)];
}

inline std::optional<Tag> parse_tag(std::string_view s) {
  for (int i = 0; i < kTagCount; ++i) {
    if (kTagNames[i] == s) return static_cast<Tag>(i);
  }
  return std::nullopt;
}

enum class EdgeLabel : int {
  Agent,
  Targ,
  Dest,
  TComp,
  CComp,
  CEq,
  CPartOf,
  CSet,
  TEq,
  TPartOf,
  AEq,
  VTm,
  OtherMod,
};

inline constexpr int kEdgeLabelCount = 13;

inline constexpr std::array<std::string_view, kEdgeLabelCount> kEdgeLabelNames = {
    "Agent", "Targ", "Dest", "T-comp", "C-comp", "C-eq", "C-part-of",
    "C-set", "T-eq",  "T-part-of", "A-eq", "V-tm", "other-mod"};

inline std::string_view to_string(EdgeLabel l) {
  return kEdgeLabelNames[static_cast<int>(l)];
}

inline std::optional<EdgeLabel> parse_edge_label(std::string_view s) {
  for (int i = 0; i < kEdgeLabelCount; ++i) {
    if (kEdgeLabelNames[i] == s) return static_cast<EdgeLabel>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Documents
// ---------------------------------------------------------------------------

struct Token {
  std::string text;
  std::size_t step_index = 0;
  std::size_t token_index = 0;   // position within its step
  std::size_t doc_offset = 0;    // position in the flattened document
};

// A multi-step procedural article. Steps are lists of tokens; the flattened
// token order (step by step) is the unit of sequence prediction.
class Document {
public:
  Document() = default;

  Document(std::string id, std::string domain,
           std::vector<std::vector<std::string>> step_texts)
      : id_(std::move(id)), domain_(std::move(domain)) {
    if (step_texts.empty()) throw std::invalid_argument("document has no steps");
    std::size_t offset = 0;
    steps_.reserve(step_texts.size());
    for (std::size_t s = 0; s < step_texts.size(); ++s) {
      const auto& words = step_texts[s];
      if (words.empty()) throw std::invalid_argument("empty step in document " + id_);
      std::vector<Token> step;
      step.reserve(words.size());
      for (std::size_t t = 0; t < words.size(); ++t) {
        if (words[t].empty() || words[t].find('\n') != std::string::npos) {
          throw std::invalid_argument("bad token text in document " + id_);
        }
        step.push_back(Token{words[t], s, t, offset++});
      }
      steps_.push_back(std::move(step));
    }
  }

  const std::string& id() const { return id_; }
  const std::string& domain() const { return domain_; }
  const std::vector<std::vector<Token>>& steps() const { return steps_; }

  std::size_t step_count() const { return steps_.size(); }

  std::size_t token_count() const {
    return steps_.empty() ? 0 : steps_.back().back().doc_offset + 1;
  }

  const Token& token_at(std::size_t doc_offset) const {
    for (const auto& step : steps_) {
      if (doc_offset <= step.back().doc_offset) {
        return step[doc_offset - step.front().doc_offset];
      }
    }
    throw std::out_of_range("doc_offset out of range");
  }

  // Flattened token list in document order.
  std::vector<const Token*> flat() const {
    std::vector<const Token*> out;
    out.reserve(token_count());
    for (const auto& step : steps_)
      for (const auto& tok : step) out.push_back(&tok);
    return out;
  }

  // Step index containing a doc offset.
  std::size_t step_of(std::size_t doc_offset) const {
    return token_at(doc_offset).step_index;
  }

private:
  std::string id_;
  std::string domain_;
  std::vector<std::vector<Token>> steps_;
};

// ---------------------------------------------------------------------------
// Flow graphs
// ---------------------------------------------------------------------------

struct NodeSpan {
  int node_id = 0;
  std::size_t start = 0;  // doc_offset, inclusive
  std::size_t end = 0;    // doc_offset, inclusive
  Tag tag = Tag::C;

  friend bool operator==(const NodeSpan&, const NodeSpan&) = default;
};

struct Edge {
  int src = 0;  // flow origin u
  int dst = 0;  // flow destination v
  EdgeLabel label = EdgeLabel::Agent;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct FlowGraph {
  Document document;
  std::vector<NodeSpan> nodes;
  std::vector<Edge> edges;
};

// Document-level IOB tag assignment ("O", "B-<Tag>", "I-<Tag>").
using TagSequence = std::vector<std::string>;

}  // namespace procflow
