#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "procflow/encoder.hpp"
#include "procflow/graph.hpp"
#include "procflow/params.hpp"
#include "procflow/types.hpp"

namespace procflow {

// Linear-chain CRF over encoder outputs, decoded at document level.
//
// Label inventory (fixed): index 0 is "O", then "B-<Tag>", "I-<Tag>" per tag
// in enum order -- 21 labels. "O" first makes the all-tie decode (untrained
// model) produce the all-O sequence under the lowest-index tie rule.

inline constexpr int kCrfLabelCount = 1 + 2 * kTagCount;

inline std::string crf_label_name(int index) {
  if (index == 0) return "O";
  const int tag = (index - 1) / 2;
  return ((index - 1) % 2 == 0 ? "B-" : "I-") + std::string(kTagNames[tag]);
}

inline int crf_label_index(const std::string& name) {
  for (int i = 0; i < kCrfLabelCount; ++i) {
    if (crf_label_name(i) == name) return i;
  }
  throw std::invalid_argument("unknown CRF label: " + name);
}

inline void add_crf_params(ParamStore& p, const EncoderConfig& enc, Rng& rng) {
  init_fan_in(p.add("crf.emit.W", kCrfLabelCount, enc.hidden_dim), rng);
  p.add("crf.emit.b", 1, kCrfLabelCount);
  p.add("crf.trans", kCrfLabelCount, kCrfLabelCount);  // trans[i][j]: i followed by j
  p.add("crf.start", 1, kCrfLabelCount);
  p.add("crf.stop", 1, kCrfLabelCount);
}

// Emission scores, one row per token.
inline Mat crf_emissions(const EncoderTrace& enc, const ParamStore& p) {
  const Mat& W = p.value("crf.emit.W");
  const Mat& b = p.value("crf.emit.b");
  Mat em(enc.out.rows, kCrfLabelCount);
  for (std::size_t t = 0; t < enc.out.rows; ++t) {
    for (int l = 0; l < kCrfLabelCount; ++l) {
      double s = b.at(0, l);
      for (std::size_t h = 0; h < enc.out.cols; ++h) s += W.at(l, h) * enc.out.at(t, h);
      em.at(t, l) = s;
    }
  }
  return em;
}

// The generic CRF recursions below take an emission matrix and the shared
// transition blocks; label_count may be smaller than the full inventory,
// which the enumeration oracles in the tests rely on.

inline double crf_score_sequence(const Mat& emissions, const Mat& trans, const Mat& start,
                                 const Mat& stop, const std::vector<int>& labels) {
  if (labels.size() != emissions.rows) {
    throw std::invalid_argument("label sequence length does not match emissions");
  }
  double s = start.at(0, labels.front()) + stop.at(0, labels.back());
  for (std::size_t t = 0; t < labels.size(); ++t) {
    s += emissions.at(t, labels[t]);
    if (t > 0) s += trans.at(labels[t - 1], labels[t]);
  }
  return s;
}

namespace detail {
inline double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}
}  // namespace detail

inline double crf_log_partition(const Mat& emissions, const Mat& trans, const Mat& start,
                                const Mat& stop, int label_count) {
  const std::size_t T = emissions.rows;
  std::vector<double> alpha(label_count), scratch(label_count);
  for (int l = 0; l < label_count; ++l) alpha[l] = start.at(0, l) + emissions.at(0, l);
  for (std::size_t t = 1; t < T; ++t) {
    std::vector<double> next(label_count);
    for (int j = 0; j < label_count; ++j) {
      for (int i = 0; i < label_count; ++i) scratch[i] = alpha[i] + trans.at(i, j);
      next[j] = detail::log_sum_exp(scratch) + emissions.at(t, j);
    }
    alpha = std::move(next);
  }
  for (int l = 0; l < label_count; ++l) alpha[l] += stop.at(0, l);
  return detail::log_sum_exp(alpha);
}

// Max-scoring label sequence; ties resolved toward the lowest label index at
// every backtrace step (strict > comparisons over ascending candidates).
inline std::vector<int> crf_viterbi(const Mat& emissions, const Mat& trans, const Mat& start,
                                    const Mat& stop, int label_count) {
  const std::size_t T = emissions.rows;
  Mat delta(T, label_count);
  std::vector<std::vector<int>> back(T, std::vector<int>(label_count, -1));
  for (int l = 0; l < label_count; ++l) delta.at(0, l) = start.at(0, l) + emissions.at(0, l);
  for (std::size_t t = 1; t < T; ++t) {
    for (int j = 0; j < label_count; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      int best_i = 0;
      for (int i = 0; i < label_count; ++i) {
        const double s = delta.at(t - 1, i) + trans.at(i, j);
        if (s > best) {
          best = s;
          best_i = i;
        }
      }
      delta.at(t, j) = best + emissions.at(t, j);
      back[t][j] = best_i;
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  int best_l = 0;
  for (int l = 0; l < label_count; ++l) {
    const double s = delta.at(T - 1, l) + stop.at(0, l);
    if (s > best) {
      best = s;
      best_l = l;
    }
  }
  std::vector<int> labels(T);
  labels[T - 1] = best_l;
  for (std::size_t t = T - 1; t > 0; --t) labels[t - 1] = back[t][labels[t]];
  return labels;
}

// Negative log-likelihood and its gradient with respect to the emissions and
// the transition blocks. Expected counts come from forward-backward;
// d(emissions) is returned for chaining into the encoder.
inline double crf_nll_grad(const Mat& emissions, const Mat& trans, const Mat& start,
                           const Mat& stop, int label_count, const std::vector<int>& gold,
                           Mat& d_emissions, Mat& d_trans, Mat& d_start, Mat& d_stop) {
  const std::size_t T = emissions.rows;
  const double log_z = crf_log_partition(emissions, trans, start, stop, label_count);
  const double gold_score = crf_score_sequence(emissions, trans, start, stop, gold);

  // Forward and backward log messages.
  Mat alpha(T, label_count), beta(T, label_count);
  std::vector<double> scratch(label_count);
  for (int l = 0; l < label_count; ++l) alpha.at(0, l) = start.at(0, l) + emissions.at(0, l);
  for (std::size_t t = 1; t < T; ++t) {
    for (int j = 0; j < label_count; ++j) {
      for (int i = 0; i < label_count; ++i) scratch[i] = alpha.at(t - 1, i) + trans.at(i, j);
      alpha.at(t, j) = detail::log_sum_exp(scratch) + emissions.at(t, j);
    }
  }
  for (int l = 0; l < label_count; ++l) beta.at(T - 1, l) = stop.at(0, l);
  for (std::size_t t = T - 1; t > 0; --t) {
    for (int i = 0; i < label_count; ++i) {
      for (int j = 0; j < label_count; ++j) {
        scratch[j] = trans.at(i, j) + emissions.at(t, j) + beta.at(t, j);
      }
      beta.at(t - 1, i) = detail::log_sum_exp(scratch);
    }
  }

  // Unary marginals minus observed counts.
  for (std::size_t t = 0; t < T; ++t) {
    for (int l = 0; l < label_count; ++l) {
      const double marginal = std::exp(alpha.at(t, l) + beta.at(t, l) - log_z);
      d_emissions.at(t, l) += marginal;
    }
    d_emissions.at(t, gold[t]) -= 1.0;
  }
  // Start/stop expected counts.
  for (int l = 0; l < label_count; ++l) {
    d_start.at(0, l) += std::exp(alpha.at(0, l) + beta.at(0, l) - log_z);
    d_stop.at(0, l) += std::exp(alpha.at(T - 1, l) + beta.at(T - 1, l) - log_z);
  }
  d_start.at(0, gold.front()) -= 1.0;
  d_stop.at(0, gold.back()) -= 1.0;
  // Pairwise marginals.
  for (std::size_t t = 1; t < T; ++t) {
    for (int i = 0; i < label_count; ++i) {
      for (int j = 0; j < label_count; ++j) {
        const double m = std::exp(alpha.at(t - 1, i) + trans.at(i, j) + emissions.at(t, j) +
                                  beta.at(t, j) - log_z);
        d_trans.at(i, j) += m;
      }
    }
    d_trans.at(gold[t - 1], gold[t]) -= 1.0;
  }
  return log_z - gold_score;
}

// ---------------------------------------------------------------------------
// Full-model wrappers (encoder + CRF over the 21-label inventory)
// ---------------------------------------------------------------------------

inline std::vector<int> tags_to_indices(const TagSequence& tags) {
  std::vector<int> out;
  out.reserve(tags.size());
  for (const auto& t : tags) out.push_back(crf_label_index(t));
  return out;
}

inline TagSequence indices_to_tags(const std::vector<int>& idx) {
  TagSequence out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(crf_label_name(i));
  return out;
}

inline TagSequence viterbi_decode(const ParamStore& p, const EncoderTrace& enc) {
  const Mat em = crf_emissions(enc, p);
  return indices_to_tags(crf_viterbi(em, p.value("crf.trans"), p.value("crf.start"),
                                     p.value("crf.stop"), kCrfLabelCount));
}

// NLL loss for one document; accumulates all gradients including the encoder.
inline double crf_document_loss(ParamStore& p, const EncoderTrace& enc, const TagSequence& gold,
                                bool compute_grad) {
  const Mat em = crf_emissions(enc, p);
  const std::vector<int> gold_idx = tags_to_indices(gold);
  if (!compute_grad) {
    const double log_z = crf_log_partition(em, p.value("crf.trans"), p.value("crf.start"),
                                           p.value("crf.stop"), kCrfLabelCount);
    return log_z - crf_score_sequence(em, p.value("crf.trans"), p.value("crf.start"),
                                      p.value("crf.stop"), gold_idx);
  }
  Mat d_em(em.rows, kCrfLabelCount);
  const double loss =
      crf_nll_grad(em, p.value("crf.trans"), p.value("crf.start"), p.value("crf.stop"),
                   kCrfLabelCount, gold_idx, d_em, p.grad("crf.trans"), p.grad("crf.start"),
                   p.grad("crf.stop"));
  // Chain d_em through the emission projection into the encoder.
  const Mat& W = p.value("crf.emit.W");
  Mat& dW = p.grad("crf.emit.W");
  Mat& db = p.grad("crf.emit.b");
  Mat d_enc(enc.out.rows, enc.out.cols);
  for (std::size_t t = 0; t < em.rows; ++t) {
    for (int l = 0; l < kCrfLabelCount; ++l) {
      const double g = d_em.at(t, l);
      if (g == 0.0) continue;
      db.at(0, l) += g;
      for (std::size_t h = 0; h < enc.out.cols; ++h) {
        dW.at(l, h) += g * enc.out.at(t, h);
        d_enc.at(t, h) += g * W.at(l, h);
      }
    }
  }
  encoder_backward(enc, d_enc, p);
  return loss;
}

// Node prediction: Viterbi decode then IOB repair.
inline std::vector<NodeSpan> predict_nodes(const ParamStore& p, const Document& doc,
                                           const EncoderConfig& cfg) {
  const EncoderTrace enc = encode_document(doc, p, cfg);
  return decode_iob(viterbi_decode(p, enc), doc);
}

}  // namespace procflow
