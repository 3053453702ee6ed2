#pragma once

#include <span>
#include <vector>

#include "fsspip/core.hpp"
#include "fsspip/model.hpp"

namespace fsspip {

/// One affine head per sparse channel mapping the user embedding to logits
/// over that channel's vocabulary; predicts the features removed by sampling.
struct SelfSupHeads {
  std::vector<Mat> weight;  // per channel: d x Vlen_r (empty for dense channels)
  std::vector<Vec> bias;    // per channel: Vlen_r

  static SelfSupHeads init(const ModelParams& base, std::uint64_t seed) {
    SelfSupHeads h;
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(base.dims.d));
    h.weight.resize(base.num_channels());
    h.bias.resize(base.num_channels());
    for (std::size_t r = 0; r < base.num_channels(); ++r) {
      if (base.kinds[r] != ChannelKind::sparse || base.vlens[r] == 0) continue;
      h.weight[r] = Mat(base.dims.d, base.vlens[r]);
      for (double& x : h.weight[r].data) x = rng.uniform(-bound, bound);
      h.bias[r].assign(base.vlens[r], 0.0);
    }
    return h;
  }

  static SelfSupHeads like(const SelfSupHeads& o) {
    SelfSupHeads h;
    h.weight.reserve(o.weight.size());
    for (const auto& m : o.weight) h.weight.emplace_back(m.rows, m.cols);
    h.bias.resize(o.bias.size());
    for (std::size_t r = 0; r < o.bias.size(); ++r) h.bias[r].assign(o.bias[r].size(), 0.0);
    return h;
  }

  std::vector<std::span<double>> spans() {
    std::vector<std::span<double>> out;
    for (auto& m : weight) out.emplace_back(m.data);
    for (auto& v : bias) out.emplace_back(v);
    return out;
  }
};

using MaskSets = std::vector<std::vector<std::uint32_t>>;

namespace detail {
inline void selfsup_channel_logits(const Vec& h, const Mat& w, const Vec& b, Vec& logits) {
  const std::size_t vlen = b.size();
  logits.assign(vlen, 0.0);
  for (std::size_t v = 0; v < vlen; ++v) logits[v] = b[v];
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double hi = h[i];
    if (hi == 0.0) continue;
    const double* row = w[i];
    for (std::size_t v = 0; v < vlen; ++v) logits[v] += hi * row[v];
  }
}
}  // namespace detail

/// Sum over channels and masked features of the negative log softmax over the
/// channel's full vocabulary. Empty masks contribute zero.
inline double selfsup_loss(const Vec& h, const MaskSets& masked, const SelfSupHeads& heads) {
  double loss = 0.0;
  Vec logits;
  for (std::size_t r = 0; r < masked.size(); ++r) {
    if (masked[r].empty()) continue;
    if (r >= heads.bias.size() || heads.bias[r].empty()) {
      throw ValidationError("self-supervision head missing for channel " + std::to_string(r));
    }
    detail::selfsup_channel_logits(h, heads.weight[r], heads.bias[r], logits);
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double lse = 0.0;
    for (double v : logits) lse += std::exp(v - mx);
    lse = mx + std::log(lse);
    for (std::uint32_t j : masked[r]) {
      if (j >= logits.size()) {
        throw NumericalError("masked index " + std::to_string(j) +
                             " out of vocabulary range on channel " + std::to_string(r));
      }
      loss += lse - logits[j];
    }
  }
  return loss;
}

/// Loss plus gradients: head gradients accumulate into g_heads and the
/// chain-rule contribution to the user embedding adds into dh.
inline double selfsup_backward(const Vec& h, const MaskSets& masked,
                               const SelfSupHeads& heads, double scale,
                               SelfSupHeads& g_heads, Vec& dh) {
  double loss = 0.0;
  Vec logits;
  Vec sm;
  for (std::size_t r = 0; r < masked.size(); ++r) {
    if (masked[r].empty()) continue;
    if (r >= heads.bias.size() || heads.bias[r].empty()) {
      throw ValidationError("self-supervision head missing for channel " + std::to_string(r));
    }
    detail::selfsup_channel_logits(h, heads.weight[r], heads.bias[r], logits);
    sm = logits;
    softmax_inplace(sm);
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double lse = 0.0;
    for (double v : logits) lse += std::exp(v - mx);
    lse = mx + std::log(lse);

    const double m_count = static_cast<double>(masked[r].size());
    Vec dlogits(logits.size());
    for (std::size_t v = 0; v < logits.size(); ++v) dlogits[v] = scale * m_count * sm[v];
    for (std::uint32_t j : masked[r]) {
      if (j >= logits.size()) {
        throw NumericalError("masked index out of vocabulary range on channel " +
                             std::to_string(r));
      }
      loss += lse - logits[j];
      dlogits[j] -= scale;
    }

    const Mat& w = heads.weight[r];
    Mat& gw = g_heads.weight[r];
    Vec& gb = g_heads.bias[r];
    for (std::size_t v = 0; v < dlogits.size(); ++v) gb[v] += dlogits[v];
    for (std::size_t i = 0; i < w.rows; ++i) {
      const double* wrow = w[i];
      double* grow = gw[i];
      double acc = 0.0;
      const double hi = h[i];
      for (std::size_t v = 0; v < dlogits.size(); ++v) {
        grow[v] += hi * dlogits[v];
        acc += wrow[v] * dlogits[v];
      }
      dh[i] += acc;
    }
  }
  return loss;
}

}  // namespace fsspip
