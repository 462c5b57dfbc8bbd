#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "procflow/biaffine.hpp"
#include "procflow/crf.hpp"
#include "procflow/encoder.hpp"
#include "procflow/graph.hpp"
#include "procflow/metrics.hpp"
#include "procflow/params.hpp"

namespace procflow {

enum class ModelKind { Node, Edge };

inline std::string to_string(ModelKind k) { return k == ModelKind::Node ? "node" : "edge"; }

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "node") return ModelKind::Node;
  if (s == "edge") return ModelKind::Edge;
  throw std::invalid_argument("unknown model kind: " + s);
}

// One trained predictor: the encoder plus either the CRF tagger or the
// biaffine parser head.
struct Model {
  ModelKind kind = ModelKind::Node;
  EncoderConfig encoder;
  BiaffineConfig biaffine;
  LossWeights weights;
  ParamStore params;

  static Model make(ModelKind kind, const EncoderConfig& enc, const BiaffineConfig& biaf,
                    const LossWeights& weights, std::uint64_t seed) {
    Model m;
    m.kind = kind;
    m.encoder = enc;
    m.biaffine = biaf;
    m.weights = weights;
    Rng rng(Rng::derive(seed, "init-" + to_string(kind)));
    add_encoder_params(m.params, enc, rng);
    if (kind == ModelKind::Node) {
      add_crf_params(m.params, enc, rng);
    } else {
      add_biaffine_params(m.params, enc, biaf, rng);
    }
    return m;
  }

  // Per-document training loss; accumulates gradients when compute_grad.
  double document_loss(const FlowGraph& gold, bool compute_grad) {
    const EncoderTrace enc = encode_document(gold.document, params, encoder);
    if (kind == ModelKind::Node) {
      return crf_document_loss(params, enc, encode_iob(gold.nodes, gold.document), compute_grad);
    }
    return joint_loss_and_grad(params, enc, gold, weights, biaffine, compute_grad);
  }

  std::vector<NodeSpan> predict_node_spans(const Document& doc) const {
    return predict_nodes(params, doc, encoder);
  }

  std::vector<Edge> predict_edge_set(const Document& doc,
                                     const std::vector<NodeSpan>& nodes) const {
    if (nodes.empty()) return {};
    const EncoderTrace enc = encode_document(doc, params, encoder);
    return predict_edges(params, enc, nodes, biaffine);
  }

  nlohmann::ordered_json config_json() const {
    nlohmann::ordered_json j;
    j["kind"] = to_string(kind);
    j["embedding_dim"] = encoder.embedding_dim;
    j["hidden_dim"] = encoder.hidden_dim;
    j["buckets"] = encoder.buckets;
    j["lowercase"] = encoder.lowercase;
    j["proj_dim"] = biaffine.proj_dim;
    j["lambda"] = weights.lambda;
    return j;
  }

  void save(const std::string& path) const { save_checkpoint(params, config_json(), path); }

  static Model load(const std::string& path) {
    Model m;
    const nlohmann::json header = load_checkpoint(m.params, path);
    m.kind = parse_model_kind(header.at("kind").get<std::string>());
    m.encoder.embedding_dim = header.at("embedding_dim").get<std::size_t>();
    m.encoder.hidden_dim = header.at("hidden_dim").get<std::size_t>();
    m.encoder.buckets = header.at("buckets").get<std::size_t>();
    m.encoder.lowercase = header.at("lowercase").get<bool>();
    m.biaffine.proj_dim = header.at("proj_dim").get<std::size_t>();
    m.weights.lambda = header.at("lambda").get<double>();
    return m;
  }
};

// Micro-averaged span F1 of predicted nodes against gold.
inline PRF evaluate_node_model(const Model& model, const std::vector<FlowGraph>& gold) {
  PRF total;
  for (const FlowGraph& g : gold) {
    total += node_f1(model.predict_node_spans(g.document), g.nodes);
  }
  return total;
}

// Micro-averaged labeled-edge F1 with gold nodes.
inline PRF evaluate_edge_model(const Model& model, const std::vector<FlowGraph>& gold) {
  PRF total;
  for (const FlowGraph& g : gold) {
    total += edge_f1(model.predict_edge_set(g.document, g.nodes), g.edges, g.nodes);
  }
  return total;
}

}  // namespace procflow
