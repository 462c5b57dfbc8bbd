// Command-line surface for the flow-graph toolkit: corpus inspection,
// augmentation, training, prediction, and evaluation.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "procflow/procflow.hpp"

using namespace procflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTaskFailure = 1;
constexpr int kExitUsage = 2;

struct TaskFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double x, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const std::string& corpus_path) {
  const auto lines = read_lines(corpus_path);
  std::size_t bad_records = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::string id = "<line " + std::to_string(i + 1) + ">";
    std::vector<std::string> problems;
    try {
      const FlowGraph g = graph_from_json(nlohmann::json::parse(lines[i]));
      id = g.document.id();
      for (const Violation& v : validate_flow_graph(g)) {
        if (!is_notice(v.kind)) {
          problems.push_back(std::string(violation_kind_name(v.kind)) + " (" + v.detail + ")");
        }
      }
    } catch (const std::exception& e) {
      problems.push_back(std::string("malformed record: ") + e.what());
    }
    if (!problems.empty()) {
      ++bad_records;
      for (const std::string& p : problems) std::cout << id << "\t" << p << "\n";
    }
  }
  return bad_records == 0 ? kExitOk : kExitTaskFailure;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

struct RunningStats {
  std::vector<double> values;
  void push(double v) { values.push_back(v); }
  double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return values.empty() ? 0.0 : s / static_cast<double>(values.size());
  }
  double stddev() const {
    if (values.size() < 2) return 0.0;
    const double m = mean();
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(values.size()));
  }
};

int cmd_stats(const std::string& corpus_path) {
  const auto corpus = load_corpus(corpus_path);
  struct DomainStats {
    std::size_t docs = 0;
    RunningStats characters, words, steps, nodes, edges;
  };
  std::map<std::string, DomainStats> by_domain;
  for (const FlowGraph& g : corpus) {
    DomainStats& d = by_domain[g.document.domain()];
    ++d.docs;
    // characters: token text plus single spaces between tokens within a step
    std::size_t chars = 0;
    for (const auto& step : g.document.steps()) {
      for (const Token& t : step) chars += t.text.size();
      if (!step.empty()) chars += step.size() - 1;
    }
    d.characters.push(static_cast<double>(chars));
    d.words.push(static_cast<double>(g.document.token_count()));
    d.steps.push(static_cast<double>(g.document.step_count()));
    d.nodes.push(static_cast<double>(g.nodes.size()));
    d.edges.push(static_cast<double>(g.edges.size()));
  }
  std::cout << "domain\tdocs\tchars\twords\tsteps\ttags\tlabels\n";
  auto row = [](const std::string& name, const DomainStats& d) {
    auto cell = [](const RunningStats& s) { return fmt(s.mean(), 2) + "±" + fmt(s.stddev(), 2); };
    std::cout << name << "\t" << d.docs << "\t" << cell(d.characters) << "\t" << cell(d.words)
              << "\t" << cell(d.steps) << "\t" << cell(d.nodes) << "\t" << cell(d.edges) << "\n";
  };
  DomainStats all;
  for (const auto& [name, d] : by_domain) {
    row(name, d);
    all.docs += d.docs;
    for (double v : d.characters.values) all.characters.push(v);
    for (double v : d.words.values) all.words.push(v);
    for (double v : d.steps.values) all.steps.push(v);
    for (double v : d.nodes.values) all.nodes.push(v);
    for (double v : d.edges.values) all.edges.push(v);
  }
  if (by_domain.size() > 1) row("all", all);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// folds
// ---------------------------------------------------------------------------

int cmd_folds(const std::string& corpus_path, int fold_count, std::uint64_t seed) {
  const auto corpus = load_corpus(corpus_path);
  const FoldSplit split = make_folds(corpus.size(), fold_count, seed);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::cout << corpus[i].document.id() << "\t" << split.assignments[i] << "\n";
  }
  auto ids = [&](const std::vector<std::size_t>& idx) {
    std::string out;
    for (std::size_t i : idx) {
      if (!out.empty()) out += ",";
      out += corpus[i].document.id();
    }
    return out;
  };
  for (int r = 0; r < fold_count; ++r) {
    std::cout << "round " << r << "\ttrain " << ids(split.train_indices(r)) << "\tvalidation "
              << ids(split.validation_indices(r)) << "\ttest " << ids(split.test_indices(r))
              << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

int cmd_augment(const std::string& corpus_path, const std::string& output_path, bool swap,
                bool replace, const std::string& lexicon_path, const AugmentConfig& cfg) {
  const auto corpus = load_corpus(corpus_path);
  std::optional<SynonymLexicon> lexicon;
  if (replace) {
    if (lexicon_path.empty()) throw CLI::ValidationError("--replace requires --lexicon");
    lexicon = SynonymLexicon::load(lexicon_path);
  }
  std::vector<FlowGraph> out = corpus;
  for (const FlowGraph& g : corpus) {
    if (swap) {
      Rng rng(Rng::derive(cfg.seed, "swap-" + g.document.id()));
      for (FlowGraph& a : augment_by_swapping(g, cfg, rng)) out.push_back(std::move(a));
    }
    if (replace) {
      Rng rng(Rng::derive(cfg.seed, "repl-" + g.document.id()));
      for (FlowGraph& a : augment_by_replacement(g, *lexicon, cfg, rng)) {
        out.push_back(std::move(a));
      }
    }
  }
  save_corpus(out, output_path);
  std::cout << corpus.size() << " documents in, " << out.size() << " out\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(ModelKind kind, const std::string& config_path,
              const std::vector<std::string>& overrides, const std::string& target_path,
              const std::string& source_path, const std::string& validation_path,
              const std::string& output_path, const std::string& trace_path) {
  nlohmann::json config = nlohmann::json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config " + config_path);
    in >> config;
  }
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--set expects key=value: " + kv);
    const std::string key = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    config[key] = nlohmann::json::accept(raw) ? nlohmann::json::parse(raw)
                                              : nlohmann::json(raw);
  }
  TrainPlan plan = train_plan_from_json(config);
  plan.kind = kind;

  DatasetPair data;
  data.target = target_path.empty() ? std::vector<FlowGraph>{} : load_corpus(target_path);
  data.source = source_path.empty() ? std::vector<FlowGraph>{} : load_corpus(source_path);
  const std::vector<FlowGraph> validation =
      validation_path.empty() ? std::vector<FlowGraph>{} : load_corpus(validation_path);

  const TrainResult result = train(plan, data, validation);
  result.model.save(output_path);
  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    if (!out) throw std::runtime_error("cannot write trace " + trace_path);
    for (const TraceEntry& e : result.trace) {
      nlohmann::ordered_json j;
      j["phase"] = e.phase;
      j["step"] = e.step;
      j["lr"] = e.lr;
      j["loss"] = e.batch_loss;
      if (e.validation_f1) j["validation_f1"] = *e.validation_f1;
      out << j.dump() << "\n";
    }
  }
  std::cout << "saved " << output_path;
  if (result.best_validation_f1 >= 0.0) {
    std::cout << " (best validation F1 " << fmt(result.best_validation_f1) << ")";
  }
  std::cout << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

int cmd_predict(const std::string& node_ckpt, const std::string& edge_ckpt,
                const std::string& input_path, const std::string& output_path, bool gold_nodes) {
  if (!gold_nodes && node_ckpt.empty()) {
    throw CLI::ValidationError("--node-model is required unless --gold-nodes is set");
  }
  std::optional<Model> node_model;
  if (!node_ckpt.empty()) {
    node_model = Model::load(node_ckpt);
    if (node_model->kind != ModelKind::Node) {
      throw std::runtime_error(node_ckpt + " is not a node model checkpoint");
    }
  }
  Model edge_model = Model::load(edge_ckpt);
  if (edge_model.kind != ModelKind::Edge) {
    throw std::runtime_error(edge_ckpt + " is not an edge model checkpoint");
  }
  const auto corpus = load_corpus(input_path);
  std::vector<FlowGraph> out;
  for (const FlowGraph& g : corpus) {
    FlowGraph pred;
    pred.document = g.document;
    pred.nodes = gold_nodes ? g.nodes : node_model->predict_node_spans(g.document);
    if (!pred.nodes.empty()) {
      pred.edges = edge_model.predict_edge_set(g.document, pred.nodes);
    }
    out.push_back(std::move(pred));
  }
  save_corpus(out, output_path);
  std::cout << out.size() << " documents predicted\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate / agreement
// ---------------------------------------------------------------------------

std::map<std::string, const FlowGraph*> index_by_id(const std::vector<FlowGraph>& corpus) {
  std::map<std::string, const FlowGraph*> out;
  for (const FlowGraph& g : corpus) out[g.document.id()] = &g;
  return out;
}

const FlowGraph& matching(const std::map<std::string, const FlowGraph*>& index,
                          const std::string& id) {
  auto it = index.find(id);
  if (it == index.end()) throw std::runtime_error("no record with id " + id + " in gold corpus");
  return *it->second;
}

int cmd_evaluate(const std::string& predicted_path, const std::string& gold_path,
                 const std::string& mode, const std::string& gold_node_predicted_path) {
  const auto predicted = load_corpus(predicted_path);
  const auto gold_corpus = load_corpus(gold_path);
  const auto gold_index = index_by_id(gold_corpus);
  if (predicted.size() != gold_corpus.size()) {
    throw std::runtime_error("corpus sizes differ: " + std::to_string(predicted.size()) +
                             " predicted vs " + std::to_string(gold_corpus.size()) + " gold");
  }
  PRF micro;
  for (const FlowGraph& p : predicted) {
    const FlowGraph& g = matching(gold_index, p.document.id());
    PRF doc;
    if (mode == "node") {
      doc = node_f1(p.nodes, g.nodes);
    } else if (mode == "edge") {
      doc = edge_f1(p.edges, g.edges, g.nodes);
    } else {
      doc = pipeline_f1(p.edges, p.nodes, g.edges, g.nodes);
    }
    micro += doc;
    std::cout << p.document.id() << "\tP " << fmt(doc.precision()) << "\tR " << fmt(doc.recall())
              << "\tF1 " << fmt(doc.f1()) << "\n";
  }
  std::cout << "micro\tP " << fmt(micro.precision()) << "\tR " << fmt(micro.recall()) << "\tF1 "
            << fmt(micro.f1()) << "\n";
  if (mode == "pipeline" && !gold_node_predicted_path.empty()) {
    PRF gold_node_micro;
    for (const FlowGraph& p : load_corpus(gold_node_predicted_path)) {
      const FlowGraph& g = matching(gold_index, p.document.id());
      gold_node_micro += edge_f1(p.edges, g.edges, g.nodes);
    }
    std::cout << "gold-node edge\tF1 " << fmt(gold_node_micro.f1()) << "\n";
    std::cout << "pipeline drop\t" << fmt(gold_node_micro.f1() - micro.f1()) << "\n";
  }
  return kExitOk;
}

int cmd_agreement(const std::string& a_path, const std::string& b_path) {
  const auto a_corpus = load_corpus(a_path);
  const auto b_corpus = load_corpus(b_path);
  const auto b_index = index_by_id(b_corpus);
  PRF node_micro, edge_micro;
  for (const FlowGraph& a : a_corpus) {
    auto it = b_index.find(a.document.id());
    if (it == b_index.end()) {
      throw std::runtime_error("no record with id " + a.document.id() + " in " + b_path);
    }
    const AgreementResult r = agreement(a, *it->second);
    node_micro += r.node;
    edge_micro += r.edge;
    std::cout << a.document.id() << "\tnode F1 " << fmt(r.node.f1()) << "\tedge F1 "
              << fmt(r.edge.f1()) << "\n";
  }
  std::cout << "micro\tnode F1 " << fmt(node_micro.f1()) << "\tedge F1 " << fmt(edge_micro.f1())
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flow-graph prediction toolkit"};
  app.require_subcommand(1);

  std::string corpus_path, output_path, lexicon_path;
  int fold_count = 6;
  std::uint64_t seed = 0;
  bool do_swap = false, do_replace = false;
  AugmentConfig aug_cfg;

  auto* validate = app.add_subcommand("validate", "check every corpus record");
  validate->add_option("corpus", corpus_path)->required();

  auto* stats = app.add_subcommand("stats", "per-domain corpus statistics");
  stats->add_option("corpus", corpus_path)->required();

  auto* folds = app.add_subcommand("folds", "cross-validation fold assignment");
  folds->add_option("corpus", corpus_path)->required();
  folds->add_option("--folds", fold_count);
  folds->add_option("--seed", seed);

  auto* augment = app.add_subcommand("augment", "write an augmented corpus");
  augment->add_option("corpus", corpus_path)->required();
  augment->add_option("-o,--output", output_path)->required();
  augment->add_flag("--swap", do_swap, "causality-preserving step swapping");
  augment->add_flag("--replace", do_replace, "synonym word replacement");
  augment->add_option("--lexicon", lexicon_path);
  augment->add_option("--max-swaps", aug_cfg.max_swaps_per_example);
  augment->add_option("--replacements", aug_cfg.replacements_per_example);
  augment->add_option("--p", aug_cfg.replace_probability);
  augment->add_option("--seed", aug_cfg.seed);

  std::string config_path, target_path, source_path, validation_path, trace_path;
  std::vector<std::string> overrides;
  auto add_train_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON training plan");
    cmd->add_option("--set", overrides, "override a plan field, key=value")->take_all();
    cmd->add_option("--target", target_path);
    cmd->add_option("--source", source_path);
    cmd->add_option("--validation", validation_path);
    cmd->add_option("-o,--output", output_path)->required();
    cmd->add_option("--trace", trace_path);
  };
  auto* train_node = app.add_subcommand("train-node", "train a node prediction model");
  add_train_options(train_node);
  auto* train_edge = app.add_subcommand("train-edge", "train an edge prediction model");
  add_train_options(train_edge);

  std::string node_ckpt, edge_ckpt, input_path;
  bool gold_nodes = false;
  auto* predict = app.add_subcommand("predict", "run the full pipeline over a corpus");
  predict->add_option("--node-model", node_ckpt);
  predict->add_option("--edge-model", edge_ckpt)->required();
  predict->add_option("-i,--input", input_path)->required();
  predict->add_option("-o,--output", output_path)->required();
  predict->add_flag("--gold-nodes", gold_nodes, "copy nodes from input, predict edges only");

  std::string predicted_path, gold_path, mode = "node", gold_node_predicted_path;
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold");
  evaluate->add_option("--predicted", predicted_path)->required();
  evaluate->add_option("--gold", gold_path)->required();
  evaluate->add_option("--mode", mode)->check(CLI::IsMember({"node", "edge", "pipeline"}));
  evaluate->add_option("--gold-node-predicted", gold_node_predicted_path,
                       "gold-node edge predictions, for the pipeline drop report");

  std::string a_path, b_path;
  auto* agree = app.add_subcommand("agreement", "inter-annotator agreement");
  agree->add_option("--a", a_path)->required();
  agree->add_option("--b", b_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(corpus_path);
    if (*stats) return cmd_stats(corpus_path);
    if (*folds) return cmd_folds(corpus_path, fold_count, seed);
    if (*augment) {
      return cmd_augment(corpus_path, output_path, do_swap, do_replace, lexicon_path, aug_cfg);
    }
    if (*train_node || *train_edge) {
      return cmd_train(*train_node ? ModelKind::Node : ModelKind::Edge, config_path, overrides,
                       target_path, source_path, validation_path, output_path, trace_path);
    }
    if (*predict) return cmd_predict(node_ckpt, edge_ckpt, input_path, output_path, gold_nodes);
    if (*evaluate) {
      return cmd_evaluate(predicted_path, gold_path, mode, gold_node_predicted_path);
    }
    if (*agree) return cmd_agreement(a_path, b_path);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TaskFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTaskFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
