#pragma once

#include <span>
#include <vector>

#include "fsspip/core.hpp"
#include "fsspip/model.hpp"

namespace fsspip {

/// One training example: a (possibly augmented) user plus a soft label on the
/// K-simplex. Hard labels are one-hot.
struct Example {
  const ChannelizedUser* user = nullptr;
  Vec soft_label;
};

inline Vec one_hot(int label, int num_classes) {
  Vec y(static_cast<std::size_t>(num_classes), 0.0);
  y[static_cast<std::size_t>(label)] = 1.0;
  return y;
}

inline constexpr double kProbClamp = 1e-12;

/// Cross-entropy against a hard or soft target. Zero probabilities under
/// positive target weight are clamped at 1e-12 and counted in *clamped.
inline double classification_loss(const Vec& probs, const Vec& target,
                                  long* clamped = nullptr) {
  if (probs.size() != target.size()) {
    throw ValidationError("loss: probability and target sizes differ");
  }
  double loss = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (target[c] <= 0.0) continue;
    double p = probs[c];
    if (p < kProbClamp) {
      p = kProbClamp;
      if (clamped) ++*clamped;
    }
    loss -= target[c] * std::log(p);
  }
  return loss;
}

inline double classification_loss(const Vec& probs, int label, long* clamped = nullptr) {
  return classification_loss(probs, one_hot(label, static_cast<int>(probs.size())), clamped);
}

/// Backward pass from dL/dh down to every parameter, for one user whose
/// forward cache is given. Adds into `g`; `dh` is the upstream gradient.
///
/// Zero-norm channels contribute nothing through the normalization path but
/// their static queries/keys still receive gradient through the softmax.
inline void backward_from_h(const ChannelizedUser& user, const ModelParams& params,
                            AttentionVariant variant, const ForwardCache& c, const Vec& dh,
                            ModelParams& g) {
  const std::size_t R = params.num_channels();
  const std::size_t d = params.dims.d;

  Vec dalpha(R, 0.0);
  std::vector<Vec> de(R, Vec(d, 0.0));
  for (std::size_t r = 0; r < R; ++r) {
    dalpha[r] = dot(dh, c.ehat[r]);
    if (c.norms[r] >= kNormEps) {
      // ehat = e/n: d(ehat)/de = I/n - e e^T / n^3, applied to alpha_r * dh
      const double n = c.norms[r];
      const double a = c.alpha[r];
      const double edh = dot(c.e[r], dh);
      const double n3 = n * n * n;
      for (std::size_t i = 0; i < d; ++i) {
        de[r][i] += a * dh[i] / n - a * edh * c.e[r][i] / n3;
      }
    }
  }

  Vec dnorm(R, 0.0);
  switch (variant) {
    case AttentionVariant::dyattn: {
      const double p = params.p();
      const double q = params.q();
      const double k = params.k();
      Vec dw(R, 0.0);
      double dp = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        dw[r] = p * dalpha[r];
        dnorm[r] += (1.0 - p) * dalpha[r];
        dp += (c.softmax_w[r] - c.norms[r]) * dalpha[r];
      }
      g.rho_p += dp * p * (1.0 - p);

      double wsum = 0.0;
      for (std::size_t r = 0; r < R; ++r) wsum += c.softmax_w[r] * dw[r];
      double dq_scalar = 0.0;
      double dk_scalar = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        const double ds = c.softmax_w[r] * (dw[r] - wsum);
        for (std::size_t i = 0; i < d; ++i) {
          const double dqv = ds * c.kv[r][i];
          const double dkv = ds * c.qv[r][i];
          de[r][i] += q * dqv + k * dkv;
          g.query[r][i] += (1.0 - q) * dqv;
          g.key[r][i] += (1.0 - k) * dkv;
          dq_scalar += (c.e[r][i] - params.query[r][i]) * dqv;
          dk_scalar += (c.e[r][i] - params.key[r][i]) * dkv;
        }
      }
      g.rho_q += dq_scalar * q * (1.0 - q);
      g.rho_k += dk_scalar * k * (1.0 - k);
      break;
    }
    case AttentionVariant::fixedattn: {
      double wsum = 0.0;
      for (std::size_t r = 0; r < R; ++r) wsum += c.softmax_w[r] * dalpha[r];
      for (std::size_t r = 0; r < R; ++r) {
        g.attn_logits[r] += c.softmax_w[r] * (dalpha[r] - wsum);
      }
      break;
    }
    case AttentionVariant::autoattn:
      break;
  }

  for (std::size_t r = 0; r < R; ++r) {
    if (dnorm[r] != 0.0 && c.norms[r] >= kNormEps) {
      const double s = dnorm[r] / c.norms[r];
      for (std::size_t i = 0; i < d; ++i) de[r][i] += s * c.e[r][i];
    }
  }

  for (std::size_t r = 0; r < R; ++r) {
    if (params.kinds[r] == ChannelKind::sparse) {
      Mat& gh = g.channel_weight[r];
      for (std::uint32_t j : user.sparse[r]) {
        double* row = gh[j];
        for (std::size_t i = 0; i < d; ++i) row[i] += de[r][i];
      }
    } else {
      const Vec& x = user.dense[r];
      if (x.empty()) continue;
      Mat& gw = g.channel_weight[r];
      for (std::size_t i = 0; i < d; ++i) {
        double* row = gw[i];
        const double s = de[r][i];
        if (s == 0.0) continue;
        for (std::size_t j = 0; j < x.size(); ++j) row[j] += s * x[j];
      }
    }
  }
}

struct BatchGradients {
  double loss = 0.0;
  ModelParams grads;
};

/// Gradient of the mean cross-entropy loss over the batch with respect to
/// every parameter, differentiated exactly through the attention graph.
inline BatchGradients gradients(std::span<const Example> batch, const ModelParams& params,
                                AttentionVariant variant) {
  if (batch.empty()) throw ValidationError("gradient batch is empty");
  const std::size_t K = static_cast<std::size_t>(params.dims.num_classes);
  const std::size_t d = params.dims.d;
  const double scale = 1.0 / static_cast<double>(batch.size());

  BatchGradients out;
  out.grads = ModelParams::like(params);

  for (const Example& ex : batch) {
    const ForwardCache c = forward(*ex.user, params, variant);
    const double loss = classification_loss(c.probs, ex.soft_label);
    if (!std::isfinite(loss)) {
      throw NumericalError("non-finite loss for user " + ex.user->user_id);
    }
    out.loss += loss * scale;

    // Softmax (and the K=2 sigmoid it reduces to) + CE: dL/dz = p - y.
    Vec dlogits(K);
    for (std::size_t cc = 0; cc < K; ++cc) {
      dlogits[cc] = (c.probs[cc] - ex.soft_label[cc]) * scale;
    }
    Vec dh(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t cc = 0; cc < K; ++cc) {
        out.grads.head_weight[i][cc] += c.h[i] * dlogits[cc];
        s += params.head_weight[i][cc] * dlogits[cc];
      }
      dh[i] = s;
    }
    for (std::size_t cc = 0; cc < K; ++cc) out.grads.head_bias[cc] += dlogits[cc];

    backward_from_h(*ex.user, params, variant, c, dh, out.grads);
  }
  return out;
}

}  // namespace fsspip
