#pragma once

#include <string>
#include <vector>

#include "fsspip/model.hpp"
#include "fsspip/schema.hpp"
#include "fsspip/simgen.hpp"
#include "fsspip/user.hpp"

namespace testutil {

using namespace fsspip;

/// Small model setup: n_sparse index channels with the given vocab size and
/// n_dense channels, fresh params.
struct TinyModel {
  ChannelSchema schema;
  std::vector<std::size_t> vlens;
  ModelParams params;
};

inline TinyModel tiny_model(std::size_t n_sparse, std::size_t n_dense, std::size_t vlen,
                            std::size_t d, std::size_t d_em, int num_classes,
                            std::uint64_t seed) {
  TinyModel t;
  t.schema = schema_synthetic(n_sparse, n_dense);
  t.vlens.assign(t.schema.size(), 0);
  for (std::size_t r = 0; r < n_sparse; ++r) t.vlens[r] = vlen;
  t.params = init_params(t.schema, t.vlens, ModelDims{d, d_em, num_classes}, seed);
  return t;
}

inline ChannelizedUser random_user(const TinyModel& t, Rng& rng, const std::string& id,
                                   double empty_prob = 0.1) {
  ChannelizedUser u;
  u.user_id = id;
  u.sparse.resize(t.schema.size());
  u.dense.resize(t.schema.size());
  for (std::size_t r = 0; r < t.schema.size(); ++r) {
    if (t.schema.is_sparse(r)) {
      if (rng.bernoulli(empty_prob)) continue;
      const std::size_t n = 1 + rng.uniform_index(std::min<std::size_t>(t.vlens[r], 5));
      std::set<std::uint32_t> idx;
      for (std::size_t i = 0; i < n; ++i) {
        idx.insert(static_cast<std::uint32_t>(rng.uniform_index(t.vlens[r])));
      }
      u.sparse[r].assign(idx.begin(), idx.end());
    } else {
      if (rng.bernoulli(empty_prob)) continue;
      Vec x(t.params.dims.d_em);
      for (double& v : x) v = rng.normal();
      u.dense[r] = std::move(x);
    }
  }
  return u;
}

/// A 2-class generative spec that a linear-in-features model can separate
/// cleanly; used by training-path tests.
inline GenerativeSpec easy_spec(double noise = 0.0) {
  GenerativeSpec s;
  s.num_classes = 2;
  s.prior = {0.5, 0.5};
  s.d_em = 6;
  s.follow_noise = noise;
  SparseChannelSpec ch;
  ch.vocab_size = 6;
  ch.count.is_fixed = false;
  ch.count.poisson_lambda = 3.0;
  ch.theta = {Vec{0.45, 0.25, 0.15, 0.05, 0.05, 0.05}, Vec{0.05, 0.05, 0.05, 0.15, 0.25, 0.45}};
  s.sparse_channels.push_back(ch);
  SparseChannelSpec ch2 = ch;
  ch2.theta = {Vec{0.55, 0.2, 0.1, 0.05, 0.05, 0.05}, Vec{0.05, 0.05, 0.05, 0.1, 0.2, 0.55}};
  s.sparse_channels.push_back(ch2);
  DenseChannelSpec dch;
  dch.sigma = 1.0;
  dch.mu = {Vec(s.d_em, -0.6), Vec(s.d_em, 0.6)};
  s.dense_channels.push_back(dch);
  return s;
}

}  // namespace testutil
