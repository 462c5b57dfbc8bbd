#pragma once

#include <cstdlib>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "procflow/augment.hpp"
#include "procflow/corpus.hpp"
#include "procflow/model.hpp"
#include "procflow/optim.hpp"

namespace procflow {

enum class Regime { TargetOnly, SourceOnly, DomainAdaptation };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::TargetOnly: return "target-only";
    case Regime::SourceOnly: return "source-only";
    default: return "domain-adaptation";
  }
}

inline Regime parse_regime(const std::string& s) {
  if (s == "target-only") return Regime::TargetOnly;
  if (s == "source-only") return Regime::SourceOnly;
  if (s == "domain-adaptation") return Regime::DomainAdaptation;
  throw std::invalid_argument("unknown regime: " + s);
}

// The full experimental configuration for one training run: regime, per-phase
// batch size and schedule, optimizer, augmentation switches, seed.
struct TrainPlan {
  Regime regime = Regime::TargetOnly;
  ModelKind kind = ModelKind::Node;

  OptimizerConfig optimizer;
  std::size_t source_batch = 5;
  SchedulerConfig source_sched{500, 4500};
  std::size_t target_batch = 3;
  SchedulerConfig target_sched{100, 900};

  bool step_swap = false;
  bool word_replace = false;
  AugmentConfig augment;
  std::string lexicon_path;  // required when word_replace is on

  EncoderConfig encoder;
  BiaffineConfig biaffine;
  LossWeights weights;

  std::uint64_t seed = 0;
  std::size_t eval_every = 25;  // validation cadence for model selection
};

// Key/value config document (JSON object; every field optional). The
// PROCFLOW_SEED environment variable overrides the seed when set.
inline TrainPlan train_plan_from_json(const nlohmann::json& j) {
  TrainPlan plan;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  if (j.contains("regime")) plan.regime = parse_regime(j.at("regime").get<std::string>());
  if (j.contains("model")) plan.kind = parse_model_kind(j.at("model").get<std::string>());
  get("initial_lr", plan.optimizer.initial_lr);
  get("weight_decay", plan.optimizer.weight_decay);
  get("source_batch", plan.source_batch);
  get("source_warmup_steps", plan.source_sched.warmup_steps);
  get("source_decay_steps", plan.source_sched.decay_steps);
  get("target_batch", plan.target_batch);
  get("target_warmup_steps", plan.target_sched.warmup_steps);
  get("target_decay_steps", plan.target_sched.decay_steps);
  get("step_swap", plan.step_swap);
  get("word_replace", plan.word_replace);
  get("max_swaps_per_example", plan.augment.max_swaps_per_example);
  get("replacements_per_example", plan.augment.replacements_per_example);
  get("replace_probability", plan.augment.replace_probability);
  get("lexicon", plan.lexicon_path);
  get("embedding_dim", plan.encoder.embedding_dim);
  get("hidden_dim", plan.encoder.hidden_dim);
  get("buckets", plan.encoder.buckets);
  get("lowercase", plan.encoder.lowercase);
  get("proj_dim", plan.biaffine.proj_dim);
  get("lambda", plan.weights.lambda);
  get("seed", plan.seed);
  get("eval_every", plan.eval_every);
  if (const char* env = std::getenv("PROCFLOW_SEED")) {
    plan.seed = std::stoull(env);
  }
  return plan;
}

struct TraceEntry {
  std::string phase;
  std::size_t step;
  double lr;
  double batch_loss;
  std::optional<double> validation_f1;
};

struct TrainResult {
  Model model;
  std::vector<TraceEntry> trace;
  double best_validation_f1 = -1.0;
};

namespace detail {

inline double validation_metric(const Model& model, const std::vector<FlowGraph>& validation) {
  if (model.kind == ModelKind::Node) return evaluate_node_model(model, validation).f1();
  return evaluate_edge_model(model, validation).f1();
}

// One scheduler-exhausting phase over `docs`. Reshuffles per epoch, averages
// gradients over each mini-batch, snapshots the best validation model.
inline void run_phase(const std::string& phase_name, Model& model,
                      const std::vector<const FlowGraph*>& docs, std::size_t batch_size,
                      const SchedulerConfig& sched, const TrainPlan& plan,
                      const std::vector<FlowGraph>& validation, TrainResult& result,
                      std::optional<ParamStore>& best_params) {
  if (docs.empty()) throw std::invalid_argument("empty training split for phase " + phase_name);
  AdamW optimizer(plan.optimizer);
  Rng rng(Rng::derive(plan.seed, "phase-" + phase_name));
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::size_t cursor = 0;

  auto maybe_validate = [&](std::size_t step, double loss, double lr) {
    std::optional<double> val;
    if (!validation.empty() &&
        (step % plan.eval_every == plan.eval_every - 1 || step + 1 == sched.total_steps())) {
      const double f1 = validation_metric(model, validation);
      val = f1;
      if (f1 > result.best_validation_f1) {
        result.best_validation_f1 = f1;
        best_params = model.params;
      }
    }
    result.trace.push_back(TraceEntry{phase_name, step, lr, loss, val});
  };

  for (std::size_t step = 0; step < sched.total_steps(); ++step) {
    model.params.zero_grad();
    double batch_loss = 0.0;
    const std::size_t b = std::min(batch_size, docs.size());
    for (std::size_t k = 0; k < b; ++k) {
      if (cursor == docs.size()) {
        cursor = 0;
        rng.shuffle(order);
      }
      batch_loss += model.document_loss(*docs[order[cursor++]], true);
    }
    model.params.scale_grad(1.0 / static_cast<double>(b));
    batch_loss /= static_cast<double>(b);
    const double lr = lr_at(step, plan.optimizer, sched);
    optimizer.step(model.params, lr);
    maybe_validate(step, batch_loss, lr);
  }
}

inline std::vector<FlowGraph> expand_with_augmentation(const std::vector<FlowGraph>& target,
                                                       const TrainPlan& plan) {
  std::vector<FlowGraph> out = target;
  std::optional<SynonymLexicon> lexicon;
  if (plan.word_replace) {
    if (plan.lexicon_path.empty()) {
      throw std::invalid_argument("word_replace requires a lexicon path");
    }
    lexicon = SynonymLexicon::load(plan.lexicon_path);
  }
  AugmentConfig cfg = plan.augment;
  cfg.seed = plan.seed;
  for (const FlowGraph& g : target) {
    if (plan.step_swap) {
      Rng rng(Rng::derive(cfg.seed, "swap-" + g.document.id()));
      for (FlowGraph& aug : augment_by_swapping(g, cfg, rng)) out.push_back(std::move(aug));
    }
    if (plan.word_replace) {
      Rng rng(Rng::derive(cfg.seed, "repl-" + g.document.id()));
      for (FlowGraph& aug : augment_by_replacement(g, *lexicon, cfg, rng)) {
        out.push_back(std::move(aug));
      }
    }
  }
  return out;
}

}  // namespace detail

// Runs the plan's regime. Domain adaptation trains the source phase to
// completion, then continues from those parameters with a fresh optimizer
// and the target-phase schedule. Augmentation only ever expands the target
// split. Returns the best-validation snapshot when validation data is given,
// otherwise the final parameters.
inline TrainResult train(const TrainPlan& plan, const DatasetPair& data,
                         const std::vector<FlowGraph>& validation = {}) {
  TrainResult result;
  result.model = Model::make(plan.kind, plan.encoder, plan.biaffine, plan.weights, plan.seed);
  std::optional<ParamStore> best_params;

  auto as_ptrs = [](const std::vector<FlowGraph>& v) {
    std::vector<const FlowGraph*> out;
    for (const FlowGraph& g : v) out.push_back(&g);
    return out;
  };

  const bool use_source =
      plan.regime != Regime::TargetOnly && !data.source.empty();
  if (plan.regime == Regime::SourceOnly && data.source.empty()) {
    throw std::invalid_argument("source-only regime requires source data");
  }
  if (use_source) {
    detail::run_phase("source", result.model, as_ptrs(data.source), plan.source_batch,
                      plan.source_sched, plan, validation, result, best_params);
  }
  if (plan.regime != Regime::SourceOnly) {
    if (data.target.empty()) {
      throw std::invalid_argument(to_string(plan.regime) + " regime requires target data");
    }
    const std::vector<FlowGraph> expanded = detail::expand_with_augmentation(data.target, plan);
    detail::run_phase("target", result.model, as_ptrs(expanded), plan.target_batch,
                      plan.target_sched, plan, validation, result, best_params);
  }
  if (best_params) result.model.params = std::move(*best_params);
  return result;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

struct CrossValidationRound {
  int round;
  PRF test;
};

struct CrossValidationResult {
  std::vector<CrossValidationRound> rounds;

  double mean_f1() const {
    double s = 0.0;
    for (const auto& r : rounds) s += r.test.f1();
    return rounds.empty() ? 0.0 : s / static_cast<double>(rounds.size());
  }
  double mean_precision() const {
    double s = 0.0;
    for (const auto& r : rounds) s += r.test.precision();
    return rounds.empty() ? 0.0 : s / static_cast<double>(rounds.size());
  }
  double mean_recall() const {
    double s = 0.0;
    for (const auto& r : rounds) s += r.test.recall();
    return rounds.empty() ? 0.0 : s / static_cast<double>(rounds.size());
  }
};

// 6-fold protocol: round r trains on fold r, validates on fold r+1, tests on
// the rest; scores are averaged over rounds.
inline CrossValidationResult run_cross_validation(const std::vector<FlowGraph>& target_corpus,
                                                  const std::vector<FlowGraph>& source_corpus,
                                                  const TrainPlan& plan, int fold_count = 6) {
  const FoldSplit split = make_folds(target_corpus.size(), fold_count, plan.seed);
  CrossValidationResult result;
  for (int round = 0; round < fold_count; ++round) {
    DatasetPair data;
    data.source = source_corpus;
    std::vector<FlowGraph> validation, test;
    for (std::size_t i : split.train_indices(round)) data.target.push_back(target_corpus[i]);
    for (std::size_t i : split.validation_indices(round)) validation.push_back(target_corpus[i]);
    for (std::size_t i : split.test_indices(round)) test.push_back(target_corpus[i]);
    TrainResult trained = train(plan, data, validation);
    const PRF score = plan.kind == ModelKind::Node
                          ? evaluate_node_model(trained.model, test)
                          : evaluate_edge_model(trained.model, test);
    result.rounds.push_back(CrossValidationRound{round, score});
  }
  return result;
}

}  // namespace procflow
