#pragma once

#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include "procflow/params.hpp"
#include "procflow/types.hpp"

namespace procflow {

// Contextual token encoder: hashed embedding lookup followed by a
// bidirectional tanh recurrence over the flattened document. The hashed open
// vocabulary keeps source- and target-domain tokens in one shared embedding
// space, which is what lets the adaptation regime transfer lexical knowledge.
struct EncoderConfig {
  std::size_t embedding_dim = 16;
  std::size_t hidden_dim = 32;  // even; forward and backward halves
  std::size_t buckets = 4096;
  bool lowercase = true;
};

inline std::size_t hash_token(const std::string& text, const EncoderConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    if (cfg.lowercase) c = static_cast<unsigned char>(std::tolower(c));
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h % cfg.buckets);
}

inline void add_encoder_params(ParamStore& p, const EncoderConfig& cfg, Rng& rng) {
  const std::size_t half = cfg.hidden_dim / 2;
  init_uniform(p.add("enc.embed", cfg.buckets, cfg.embedding_dim), rng, 0.1);
  init_fan_in(p.add("enc.fwd.W", half, cfg.embedding_dim), rng);
  init_fan_in(p.add("enc.fwd.U", half, half), rng);
  p.add("enc.fwd.b", 1, half);
  init_fan_in(p.add("enc.bwd.W", half, cfg.embedding_dim), rng);
  init_fan_in(p.add("enc.bwd.U", half, half), rng);
  p.add("enc.bwd.b", 1, half);
}

// Forward pass with the caches needed for backpropagation through time.
struct EncoderTrace {
  EncoderConfig config;
  std::vector<std::size_t> bucket;  // per token
  Mat embed;                        // T x E
  Mat fwd;                          // T x H/2 (post-tanh states)
  Mat bwd;                          // T x H/2
  Mat out;                          // T x H, [fwd ; bwd] per row
};

inline EncoderTrace encode_document(const Document& doc, const ParamStore& p,
                                    const EncoderConfig& cfg) {
  const std::size_t T = doc.token_count();
  const std::size_t E = cfg.embedding_dim;
  const std::size_t half = cfg.hidden_dim / 2;
  EncoderTrace tr;
  tr.config = cfg;
  tr.bucket.resize(T);
  tr.embed = Mat(T, E);
  tr.fwd = Mat(T, half);
  tr.bwd = Mat(T, half);
  tr.out = Mat(T, cfg.hidden_dim);

  const Mat& emb = p.value("enc.embed");
  auto flat = doc.flat();
  for (std::size_t t = 0; t < T; ++t) {
    tr.bucket[t] = hash_token(flat[t]->text, cfg);
    for (std::size_t e = 0; e < E; ++e) tr.embed.at(t, e) = emb.at(tr.bucket[t], e);
  }

  auto run = [&](const Mat& W, const Mat& U, const Mat& b, Mat& state, bool reverse) {
    std::vector<double> prev(half, 0.0);
    for (std::size_t i = 0; i < T; ++i) {
      const std::size_t t = reverse ? T - 1 - i : i;
      for (std::size_t h = 0; h < half; ++h) {
        double z = b.at(0, h);
        for (std::size_t e = 0; e < E; ++e) z += W.at(h, e) * tr.embed.at(t, e);
        for (std::size_t k = 0; k < half; ++k) z += U.at(h, k) * prev[k];
        state.at(t, h) = std::tanh(z);
      }
      for (std::size_t h = 0; h < half; ++h) prev[h] = state.at(t, h);
    }
  };
  run(p.value("enc.fwd.W"), p.value("enc.fwd.U"), p.value("enc.fwd.b"), tr.fwd, false);
  run(p.value("enc.bwd.W"), p.value("enc.bwd.U"), p.value("enc.bwd.b"), tr.bwd, true);

  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t h = 0; h < half; ++h) {
      tr.out.at(t, h) = tr.fwd.at(t, h);
      tr.out.at(t, half + h) = tr.bwd.at(t, h);
    }
  }
  return tr;
}

// Accumulates gradients into the store given d(loss)/d(out). BPTT over both
// directions; embedding gradients scatter into the hashed table.
inline void encoder_backward(const EncoderTrace& tr, const Mat& d_out, ParamStore& p) {
  const EncoderConfig& cfg = tr.config;
  const std::size_t T = tr.out.rows;
  const std::size_t E = cfg.embedding_dim;
  const std::size_t half = cfg.hidden_dim / 2;

  Mat d_embed(T, E);

  auto run = [&](const char* wk, const char* uk, const char* bk, const Mat& state,
                 std::size_t out_col, bool reverse) {
    const Mat& W = p.value(wk);
    const Mat& U = p.value(uk);
    Mat& dW = p.grad(wk);
    Mat& dU = p.grad(uk);
    Mat& db = p.grad(bk);
    std::vector<double> carry(half, 0.0);  // d(loss)/d(state at next time step)
    for (std::size_t i = 0; i < T; ++i) {
      const std::size_t t = reverse ? i : T - 1 - i;  // walk opposite to forward order
      std::vector<double> dz(half);
      for (std::size_t h = 0; h < half; ++h) {
        const double dh = d_out.at(t, out_col + h) + carry[h];
        const double s = state.at(t, h);
        dz[h] = dh * (1.0 - s * s);
      }
      // prev state in the forward pass direction
      const bool has_prev = reverse ? (t + 1 < T) : (t > 0);
      const std::size_t prev_t = reverse ? t + 1 : t - 1;
      for (std::size_t h = 0; h < half; ++h) {
        db.at(0, h) += dz[h];
        for (std::size_t e = 0; e < E; ++e) {
          dW.at(h, e) += dz[h] * tr.embed.at(t, e);
          d_embed.at(t, e) += dz[h] * W.at(h, e);
        }
        if (has_prev) {
          for (std::size_t k = 0; k < half; ++k) {
            dU.at(h, k) += dz[h] * state.at(prev_t, k);
          }
        }
      }
      std::fill(carry.begin(), carry.end(), 0.0);
      if (has_prev) {
        for (std::size_t k = 0; k < half; ++k) {
          double c = 0.0;
          for (std::size_t h = 0; h < half; ++h) c += dz[h] * U.at(h, k);
          carry[k] = c;
        }
      }
    }
  };
  run("enc.fwd.W", "enc.fwd.U", "enc.fwd.b", tr.fwd, 0, false);
  run("enc.bwd.W", "enc.bwd.U", "enc.bwd.b", tr.bwd, half, true);

  Mat& d_emb = p.grad("enc.embed");
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t e = 0; e < E; ++e) d_emb.at(tr.bucket[t], e) += d_embed.at(t, e);
  }
}

}  // namespace procflow
