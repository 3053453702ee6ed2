#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "fsspip/autodiff.hpp"
#include "fsspip/core.hpp"
#include "fsspip/user.hpp"

namespace fsspip {

struct MixupResult {
  ChannelizedUser user;
  Vec soft_label;
  double lambda = 0.0;
};

namespace detail {
inline Vec mix_dense(const Vec& a, const Vec& b, double lambda) {
  if (a.empty() && b.empty()) return {};
  const std::size_t n = a.empty() ? b.size() : a.size();
  Vec out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double va = i < a.size() ? a[i] : 0.0;
    const double vb = i < b.size() ? b[i] : 0.0;
    out[i] = lambda * va + (1.0 - lambda) * vb;
  }
  return out;
}
}  // namespace detail

/// Mixup at a given mixing weight: every sparse feature of u1 survives with
/// probability lambda, of u2 with probability 1-lambda (union of survivors);
/// dense vectors and one-hot labels interpolate linearly.
inline MixupResult augment_mixup_at(const ChannelizedUser& u1, const ChannelizedUser& u2,
                                    int num_classes, Rng& rng, double lambda) {
  if (!u1.label || !u2.label) throw ValidationError("mixup needs labeled users");
  if (u1.num_channels() != u2.num_channels()) {
    throw ValidationError("mixup users disagree on channel count");
  }
  MixupResult out;
  out.lambda = lambda;
  out.user.user_id = u1.user_id + "*" + u2.user_id;
  const std::size_t R = u1.num_channels();
  out.user.sparse.resize(R);
  out.user.dense.resize(R);
  for (std::size_t r = 0; r < R; ++r) {
    if (u1.sparse[r].empty() && u2.sparse[r].empty()) {
      out.user.dense[r] = detail::mix_dense(u1.dense[r], u2.dense[r], lambda);
      continue;
    }
    std::set<std::uint32_t> kept;
    for (std::uint32_t j : u1.sparse[r]) {
      if (rng.bernoulli(lambda)) kept.insert(j);
    }
    for (std::uint32_t j : u2.sparse[r]) {
      if (rng.bernoulli(1.0 - lambda)) kept.insert(j);
    }
    out.user.sparse[r].assign(kept.begin(), kept.end());
  }
  out.soft_label.assign(static_cast<std::size_t>(num_classes), 0.0);
  out.soft_label[static_cast<std::size_t>(*u1.label)] += lambda;
  out.soft_label[static_cast<std::size_t>(*u2.label)] += 1.0 - lambda;
  return out;
}

/// Mixup with lambda ~ Beta(alpha, alpha).
inline MixupResult augment_mixup(const ChannelizedUser& u1, const ChannelizedUser& u2,
                                 int num_classes, Rng& rng, double alpha) {
  const double lambda = rng.beta(alpha, alpha);
  return augment_mixup_at(u1, u2, num_classes, rng, lambda);
}

struct SampleResult {
  ChannelizedUser user;
  std::vector<std::vector<std::uint32_t>> masked;  // per channel, sorted
};

/// Feature sampling: per sparse channel draw a mask rate m ~ U(0, rate_max)
/// and drop each feature independently with probability m. Dropped features
/// are returned for the self-supervision objective. Dense channels pass
/// through untouched.
inline SampleResult augment_sample(const ChannelizedUser& u, Rng& rng, double rate_max) {
  if (rate_max < 0.0 || rate_max > 1.0) {
    throw ValidationError("sample rate_max must be in [0,1]");
  }
  SampleResult out;
  out.user = u;
  out.masked.assign(u.num_channels(), {});
  for (std::size_t r = 0; r < u.num_channels(); ++r) {
    if (u.sparse[r].empty()) continue;
    const double m = rate_max > 0.0 ? rng.uniform(0.0, rate_max) : 0.0;
    std::vector<std::uint32_t> kept;
    kept.reserve(u.sparse[r].size());
    for (std::uint32_t j : u.sparse[r]) {
      if (m > 0.0 && rng.bernoulli(m)) {
        out.masked[r].push_back(j);
      } else {
        kept.push_back(j);
      }
    }
    out.user.sparse[r] = std::move(kept);
  }
  return out;
}

/// Channel dropout: each channel is independently emptied with the given
/// probability (sparse set cleared, dense vector zeroed).
inline ChannelizedUser augment_channel_dropout(const ChannelizedUser& u, Rng& rng,
                                               double prob) {
  if (prob < 0.0 || prob > 1.0) throw ValidationError("dropout prob must be in [0,1]");
  ChannelizedUser out = u;
  for (std::size_t r = 0; r < u.num_channels(); ++r) {
    if (rng.bernoulli(prob)) {
      out.sparse[r].clear();
      out.dense[r].clear();
    }
  }
  return out;
}

}  // namespace fsspip
