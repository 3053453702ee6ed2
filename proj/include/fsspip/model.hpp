#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fsspip/core.hpp"
#include "fsspip/embed.hpp"
#include "fsspip/schema.hpp"
#include "fsspip/user.hpp"
#include "fsspip/vocab.hpp"

namespace fsspip {

inline constexpr double kNormEps = 1e-12;

enum class AttentionVariant { dyattn, fixedattn, autoattn };

inline const char* to_string(AttentionVariant v) {
  switch (v) {
    case AttentionVariant::dyattn: return "dyattn";
    case AttentionVariant::fixedattn: return "fixedattn";
    case AttentionVariant::autoattn: return "auto";
  }
  return "?";
}

inline AttentionVariant variant_from_string(const std::string& s) {
  if (s == "dyattn") return AttentionVariant::dyattn;
  if (s == "fixedattn") return AttentionVariant::fixedattn;
  if (s == "auto") return AttentionVariant::autoattn;
  throw ValidationError("unknown attention variant: " + s);
}

struct ModelDims {
  std::size_t d = 8;
  std::size_t d_em = 768;
  int num_classes = 2;
};

/// Every learnable tensor of the model. Sparse channels carry an embedding
/// table (Vlen_r x d); dense channels a projection (d x d_em). The mixture
/// scalars p,q,k live as unconstrained logits so plain gradient steps keep
/// them inside (0,1).
struct ModelParams {
  ModelDims dims;
  std::string schema_hash;
  std::vector<ChannelKind> kinds;      // per channel
  std::vector<std::size_t> vlens;      // per channel, 0 for dense
  AttentionVariant variant = AttentionVariant::dyattn;

  std::vector<Mat> channel_weight;     // H_r or W_r, by channel id
  std::vector<Vec> query;              // q_r
  std::vector<Vec> key;                // k_r
  double rho_p = 0.0;
  double rho_q = 0.0;
  double rho_k = 0.0;
  Vec attn_logits;                     // a_r, used by fixedattn
  Mat head_weight;                     // d x K
  Vec head_bias;                       // K

  double p() const { return logistic(rho_p); }
  double q() const { return logistic(rho_q); }
  double k() const { return logistic(rho_k); }

  std::size_t num_channels() const { return kinds.size(); }

  /// Zeroed clone of the same shapes; used for gradients and optimizer state.
  static ModelParams like(const ModelParams& o) {
    ModelParams g;
    g.dims = o.dims;
    g.schema_hash = o.schema_hash;
    g.kinds = o.kinds;
    g.vlens = o.vlens;
    g.variant = o.variant;
    g.channel_weight.reserve(o.channel_weight.size());
    for (const auto& m : o.channel_weight) g.channel_weight.emplace_back(m.rows, m.cols);
    g.query.assign(o.query.size(), Vec(o.dims.d, 0.0));
    g.key.assign(o.key.size(), Vec(o.dims.d, 0.0));
    g.attn_logits.assign(o.attn_logits.size(), 0.0);
    g.head_weight = Mat(o.head_weight.rows, o.head_weight.cols);
    g.head_bias.assign(o.head_bias.size(), 0.0);
    return g;
  }

  /// All scalars in a fixed order; aligned across like-shaped instances.
  std::vector<std::span<double>> spans() {
    std::vector<std::span<double>> out;
    out.emplace_back(&rho_p, 1);
    out.emplace_back(&rho_q, 1);
    out.emplace_back(&rho_k, 1);
    out.emplace_back(attn_logits);
    for (auto& m : channel_weight) out.emplace_back(m.data);
    for (auto& v : query) out.emplace_back(v);
    for (auto& v : key) out.emplace_back(v);
    out.emplace_back(head_weight.data);
    out.emplace_back(head_bias);
    return out;
  }

  bool shape_matches(const ModelParams& o) const {
    if (kinds.size() != o.kinds.size() || dims.d != o.dims.d ||
        dims.num_classes != o.dims.num_classes) {
      return false;
    }
    for (std::size_t r = 0; r < channel_weight.size(); ++r) {
      if (channel_weight[r].rows != o.channel_weight[r].rows ||
          channel_weight[r].cols != o.channel_weight[r].cols) {
        return false;
      }
    }
    return true;
  }
};

/// Fresh parameters: weight matrices i.i.d. uniform in [-1/sqrt(d), 1/sqrt(d)],
/// rho logits at 0 so p=q=k=0.5, fixed-attention logits and head bias at 0.
inline ModelParams init_params(const ChannelSchema& schema,
                               const std::vector<std::size_t>& vlens, const ModelDims& dims,
                               std::uint64_t seed) {
  if (dims.d < 1) throw ValidationError("embedding size d must be >= 1");
  if (dims.num_classes < 2) throw ValidationError("K must be >= 2");
  if (vlens.size() != schema.size()) {
    throw ValidationError("vocabulary does not match schema: " + std::to_string(vlens.size()) +
                          " channels vs " + std::to_string(schema.size()));
  }
  ModelParams m;
  m.dims = dims;
  m.schema_hash = schema.hash();
  m.vlens = vlens;
  m.kinds.reserve(schema.size());
  for (const auto& c : schema.channels) m.kinds.push_back(c.kind);

  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dims.d));
  auto rand_fill = [&](Vec& v) {
    for (double& x : v) x = rng.uniform(-bound, bound);
  };

  m.channel_weight.reserve(schema.size());
  for (std::size_t r = 0; r < schema.size(); ++r) {
    if (schema.is_sparse(r)) {
      Mat h(vlens[r], dims.d);
      rand_fill(h.data);
      m.channel_weight.push_back(std::move(h));
    } else {
      Mat w(dims.d, dims.d_em);
      rand_fill(w.data);
      m.channel_weight.push_back(std::move(w));
    }
  }
  m.query.assign(schema.size(), Vec(dims.d, 0.0));
  m.key.assign(schema.size(), Vec(dims.d, 0.0));
  for (auto& v : m.query) rand_fill(v);
  for (auto& v : m.key) rand_fill(v);
  m.attn_logits.assign(schema.size(), 0.0);
  m.head_weight = Mat(dims.d, static_cast<std::size_t>(dims.num_classes));
  rand_fill(m.head_weight.data);
  m.head_bias.assign(static_cast<std::size_t>(dims.num_classes), 0.0);
  return m;
}

/// Eq-level channel embedding: sum of embedding rows at the active indices
/// for sparse channels, projection of the text vector for dense ones. Empty
/// channels embed to zero.
inline Vec channel_embedding(const ChannelizedUser& user, const ModelParams& params,
                             std::size_t r) {
  const std::size_t d = params.dims.d;
  Vec e(d, 0.0);
  if (params.kinds[r] == ChannelKind::sparse) {
    const Mat& h = params.channel_weight[r];
    for (std::uint32_t j : user.sparse[r]) {
      if (j >= h.rows) {
        throw NumericalError("sparse index " + std::to_string(j) + " out of range for channel " +
                             std::to_string(r) + " (user " + user.user_id + ")");
      }
      const double* row = h[j];
      for (std::size_t i = 0; i < d; ++i) e[i] += row[i];
    }
  } else {
    const Vec& x = user.dense[r];
    if (x.empty()) return e;
    const Mat& w = params.channel_weight[r];
    if (x.size() != w.cols) {
      throw NumericalError("dense vector length mismatch on channel " + std::to_string(r));
    }
    for (std::size_t i = 0; i < d; ++i) {
      const double* row = w[i];
      double s = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) s += row[j] * x[j];
      e[i] = s;
    }
  }
  return e;
}

/// Everything the forward pass produces, kept for the backward pass.
struct ForwardCache {
  std::vector<Vec> e;      // channel embeddings
  Vec norms;               // ||e_r||
  std::vector<Vec> ehat;   // e_r / ||e_r||, zero when ||e_r|| < eps
  std::vector<Vec> qv;     // q_ir (dyattn)
  std::vector<Vec> kv;     // k_ir (dyattn)
  Vec scores;              // q_ir . k_ir
  Vec softmax_w;           // softmax over scores (dyattn) or logits (fixedattn)
  Vec alpha;               // final attention weights
  Vec h;                   // user embedding
  Vec logits;              // K
  Vec probs;               // K
};

inline ForwardCache forward(const ChannelizedUser& user, const ModelParams& params,
                            AttentionVariant variant) {
  const std::size_t R = params.num_channels();
  const std::size_t d = params.dims.d;
  const std::size_t K = static_cast<std::size_t>(params.dims.num_classes);

  ForwardCache c;
  c.e.resize(R);
  c.norms.assign(R, 0.0);
  c.ehat.assign(R, Vec(d, 0.0));
  c.alpha.assign(R, 0.0);

  for (std::size_t r = 0; r < R; ++r) {
    c.e[r] = channel_embedding(user, params, r);
    c.norms[r] = norm2(c.e[r]);
    if (c.norms[r] >= kNormEps) {
      for (std::size_t i = 0; i < d; ++i) c.ehat[r][i] = c.e[r][i] / c.norms[r];
    }
  }

  switch (variant) {
    case AttentionVariant::dyattn: {
      const double p = params.p();
      const double q = params.q();
      const double k = params.k();
      c.qv.assign(R, Vec(d, 0.0));
      c.kv.assign(R, Vec(d, 0.0));
      c.scores.assign(R, 0.0);
      for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t i = 0; i < d; ++i) {
          c.qv[r][i] = q * c.e[r][i] + (1.0 - q) * params.query[r][i];
          c.kv[r][i] = k * c.e[r][i] + (1.0 - k) * params.key[r][i];
        }
        c.scores[r] = dot(c.qv[r], c.kv[r]);
      }
      c.softmax_w = c.scores;
      softmax_inplace(c.softmax_w);
      for (std::size_t r = 0; r < R; ++r) {
        c.alpha[r] = p * c.softmax_w[r] + (1.0 - p) * c.norms[r];
      }
      break;
    }
    case AttentionVariant::fixedattn: {
      c.softmax_w = params.attn_logits;
      softmax_inplace(c.softmax_w);
      c.alpha = c.softmax_w;
      break;
    }
    case AttentionVariant::autoattn: {
      c.alpha.assign(R, 1.0);
      break;
    }
  }

  c.h.assign(d, 0.0);
  for (std::size_t r = 0; r < R; ++r) axpy(c.alpha[r], c.ehat[r], c.h);

  c.logits.assign(K, 0.0);
  for (std::size_t j = 0; j < K; ++j) {
    double s = params.head_bias[j];
    for (std::size_t i = 0; i < d; ++i) s += params.head_weight[i][j] * c.h[i];
    c.logits[j] = s;
  }
  if (K == 2) {
    const double s = logistic(c.logits[1] - c.logits[0]);
    c.probs = {1.0 - s, s};
  } else {
    c.probs = c.logits;
    softmax_inplace(c.probs);
  }
  return c;
}

inline Vec attention_weights(const ChannelizedUser& user, const ModelParams& params,
                             AttentionVariant variant) {
  return forward(user, params, variant).alpha;
}

inline Vec user_embedding(const ChannelizedUser& user, const ModelParams& params,
                          AttentionVariant variant) {
  return forward(user, params, variant).h;
}

inline Vec predict_proba(const ChannelizedUser& user, const ModelParams& params,
                         AttentionVariant variant) {
  return forward(user, params, variant).probs;
}

inline int predict_class(const ChannelizedUser& user, const ModelParams& params,
                         AttentionVariant variant) {
  const Vec probs = forward(user, params, variant).probs;
  std::size_t best = 0;
  for (std::size_t c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[best]) best = c;
  }
  return static_cast<int>(best);
}

}  // namespace fsspip
