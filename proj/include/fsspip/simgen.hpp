#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsspip/core.hpp"
#include "fsspip/schema.hpp"
#include "fsspip/silver.hpp"
#include "fsspip/user.hpp"
#include "fsspip/vocab.hpp"

namespace fsspip {

/// How many tokens a user draws from a sparse channel.
struct CountModel {
  bool is_fixed = false;
  double poisson_lambda = 1.0;
  unsigned fixed_n = 1;

  unsigned draw(Rng& rng) const {
    return is_fixed ? fixed_n : rng.poisson(poisson_lambda);
  }
};

struct SparseChannelSpec {
  std::size_t vocab_size = 0;
  CountModel count;
  std::vector<Vec> theta;  // per class, sums to 1 over vocab
};

struct DenseChannelSpec {
  std::vector<Vec> mu;  // per class, length d_em
  double sigma = 1.0;
};

/// Class-conditional generative model for synthetic populations: categorical
/// token draws per sparse channel, isotropic Gaussians per dense channel,
/// plus the anchor-membership noise used to stress weak supervision.
struct GenerativeSpec {
  int num_classes = 2;
  Vec prior;
  std::size_t d_em = 16;
  std::vector<SparseChannelSpec> sparse_channels;
  std::vector<DenseChannelSpec> dense_channels;
  double follow_noise = 0.0;  // eta

  void validate() const {
    if (num_classes < 2) throw ValidationError("generative spec needs K >= 2");
    if (prior.size() != static_cast<std::size_t>(num_classes)) {
      throw ValidationError("prior length must equal K");
    }
    double ps = 0.0;
    for (double p : prior) {
      if (p < 0.0) throw ValidationError("prior entries must be nonnegative");
      ps += p;
    }
    if (std::fabs(ps - 1.0) > 1e-9) throw ValidationError("prior must sum to 1");
    if (follow_noise < 0.0 || follow_noise >= 0.5) {
      throw ValidationError("follow_noise must lie in [0, 0.5)");
    }
    for (const auto& ch : sparse_channels) {
      if (ch.vocab_size == 0) throw ValidationError("sparse channel has empty vocabulary");
      if (ch.theta.size() != static_cast<std::size_t>(num_classes)) {
        throw ValidationError("theta must have one row per class");
      }
      for (const auto& row : ch.theta) {
        if (row.size() != ch.vocab_size) throw ValidationError("theta row length mismatch");
        double s = 0.0;
        for (double v : row) {
          if (v < 0.0) throw ValidationError("theta entries must be nonnegative");
          s += v;
        }
        if (std::fabs(s - 1.0) > 1e-9) throw ValidationError("theta rows must sum to 1");
      }
    }
    for (const auto& ch : dense_channels) {
      if (ch.mu.size() != static_cast<std::size_t>(num_classes)) {
        throw ValidationError("mu must have one row per class");
      }
      for (const auto& row : ch.mu) {
        if (row.size() != d_em) throw ValidationError("mu row length must equal d_em");
      }
      if (ch.sigma <= 0.0) throw ValidationError("sigma must be positive");
    }
  }

  ChannelSchema schema() const {
    return schema_synthetic(sparse_channels.size(), dense_channels.size());
  }

  std::vector<std::size_t> vlens() const {
    std::vector<std::size_t> v;
    for (const auto& ch : sparse_channels) v.push_back(ch.vocab_size);
    for (std::size_t i = 0; i < dense_channels.size(); ++i) v.push_back(0);
    return v;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["k"] = num_classes;
    j["prior"] = prior;
    j["d_em"] = d_em;
    j["follow_noise"] = follow_noise;
    j["sparse_channels"] = nlohmann::json::array();
    for (const auto& ch : sparse_channels) {
      nlohmann::json cj;
      cj["vocab"] = ch.vocab_size;
      if (ch.count.is_fixed) {
        cj["count"] = {{"fixed", ch.count.fixed_n}};
      } else {
        cj["count"] = {{"poisson", ch.count.poisson_lambda}};
      }
      cj["theta"] = ch.theta;
      j["sparse_channels"].push_back(cj);
    }
    j["dense_channels"] = nlohmann::json::array();
    for (const auto& ch : dense_channels) {
      j["dense_channels"].push_back({{"mu", ch.mu}, {"sigma", ch.sigma}});
    }
    return j;
  }

  static GenerativeSpec from_json(const nlohmann::json& j) {
    GenerativeSpec s;
    s.num_classes = j.at("k").get<int>();
    s.prior = j.at("prior").get<Vec>();
    s.d_em = j.value("d_em", std::size_t{16});
    s.follow_noise = j.value("follow_noise", 0.0);
    for (const auto& cj : j.value("sparse_channels", nlohmann::json::array())) {
      SparseChannelSpec ch;
      ch.vocab_size = cj.at("vocab").get<std::size_t>();
      const auto& cm = cj.at("count");
      if (cm.contains("fixed")) {
        ch.count.is_fixed = true;
        ch.count.fixed_n = cm.at("fixed").get<unsigned>();
      } else {
        ch.count.is_fixed = false;
        ch.count.poisson_lambda = cm.at("poisson").get<double>();
      }
      ch.theta = cj.at("theta").get<std::vector<Vec>>();
      s.sparse_channels.push_back(std::move(ch));
    }
    for (const auto& cj : j.value("dense_channels", nlohmann::json::array())) {
      DenseChannelSpec ch;
      ch.mu = cj.at("mu").get<std::vector<Vec>>();
      ch.sigma = cj.at("sigma").get<double>();
      s.dense_channels.push_back(std::move(ch));
    }
    s.validate();
    return s;
  }
};

namespace detail {
inline std::size_t draw_categorical(const Vec& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}
}  // namespace detail

struct Population {
  LabeledDataset data;
  std::vector<PartyAnchor> anchors;
  Vocabulary vocab;
};

/// I.i.d. users from the spec, bit-reproducible per seed (each user has a
/// derived stream). Anchor lists assign each user to its own class's anchor
/// with probability 1 - eta, otherwise to a uniformly chosen other anchor;
/// the follower-vs-retweeter slot is a fair coin so a party's two pools stay
/// disjoint.
inline Population sample_population(const GenerativeSpec& spec, std::size_t n,
                                    std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw ValidationError("population size must be >= 1");

  Population pop;
  pop.data.num_classes = spec.num_classes;
  pop.data.provenance = Provenance::synthetic;
  pop.data.schema = spec.schema();
  pop.data.vlens = spec.vlens();
  pop.data.d_em = spec.d_em;

  pop.vocab = Vocabulary(pop.data.schema.size());
  for (std::size_t r = 0; r < spec.sparse_channels.size(); ++r) {
    std::vector<std::string> toks;
    for (std::size_t t = 0; t < spec.sparse_channels[r].vocab_size; ++t) {
      toks.push_back("t" + std::to_string(t));
    }
    pop.vocab.set_channel_tokens(r, std::move(toks));
  }

  pop.anchors.resize(static_cast<std::size_t>(spec.num_classes));
  for (int c = 0; c < spec.num_classes; ++c) {
    pop.anchors[static_cast<std::size_t>(c)].party = "party_" + std::to_string(c);
  }

  const std::size_t n_sparse = spec.sparse_channels.size();
  Rng root(seed);
  pop.data.users.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = root.derive(i + 1);
    ChannelizedUser u;
    u.user_id = "u" + std::to_string(i);
    u.sparse.resize(pop.data.schema.size());
    u.dense.resize(pop.data.schema.size());
    const std::size_t cls = detail::draw_categorical(spec.prior, rng);
    u.label = static_cast<int>(cls);

    for (std::size_t r = 0; r < n_sparse; ++r) {
      const auto& ch = spec.sparse_channels[r];
      const unsigned count = ch.count.draw(rng);
      std::set<std::uint32_t> idx;
      for (unsigned t = 0; t < count; ++t) {
        idx.insert(static_cast<std::uint32_t>(detail::draw_categorical(ch.theta[cls], rng)));
      }
      u.sparse[r].assign(idx.begin(), idx.end());
    }
    for (std::size_t d = 0; d < spec.dense_channels.size(); ++d) {
      const auto& ch = spec.dense_channels[d];
      Vec x(spec.d_em);
      for (std::size_t j = 0; j < spec.d_em; ++j) {
        x[j] = ch.mu[cls][j] + ch.sigma * rng.normal();
      }
      u.dense[n_sparse + d] = std::move(x);
    }

    std::size_t anchor = cls;
    if (spec.follow_noise > 0.0 && rng.bernoulli(spec.follow_noise)) {
      const std::size_t other =
          detail::draw_categorical(Vec(spec.num_classes - 1,
                                       1.0 / static_cast<double>(spec.num_classes - 1)),
                                   rng);
      anchor = other >= cls ? other + 1 : other;
    }
    if (rng.bernoulli(0.5)) {
      pop.anchors[anchor].follower_ids.push_back(u.user_id);
    } else {
      pop.anchors[anchor].retweeter_ids.push_back(u.user_id);
    }
    pop.data.users.push_back(std::move(u));
  }
  return pop;
}

/// Exact posterior argmax under the generative model, in log space: product
/// of categorical likelihoods over the observed indices and Gaussian
/// likelihoods over dense channels. Ties resolve to the lowest class.
inline int bayes_oracle_predict(const GenerativeSpec& spec, const ChannelizedUser& user) {
  const std::size_t K = static_cast<std::size_t>(spec.num_classes);
  const std::size_t n_sparse = spec.sparse_channels.size();
  Vec logp(K);
  for (std::size_t c = 0; c < K; ++c) {
    double lp = std::log(std::max(spec.prior[c], 1e-300));
    for (std::size_t r = 0; r < n_sparse; ++r) {
      for (std::uint32_t j : user.sparse[r]) {
        lp += std::log(std::max(spec.sparse_channels[r].theta[c][j], 1e-300));
      }
    }
    for (std::size_t d = 0; d < spec.dense_channels.size(); ++d) {
      const Vec& x = user.dense[n_sparse + d];
      if (x.empty()) continue;
      const auto& ch = spec.dense_channels[d];
      const double inv2s2 = 1.0 / (2.0 * ch.sigma * ch.sigma);
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = x[j] - ch.mu[c][j];
        lp -= diff * diff * inv2s2;
      }
    }
    logp[c] = lp;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < K; ++c) {
    if (logp[c] > logp[best]) best = c;
  }
  return static_cast<int>(best);
}

inline double bayes_oracle_accuracy(const GenerativeSpec& spec, const LabeledDataset& ds) {
  if (ds.users.empty()) throw ValidationError("oracle: empty dataset");
  std::vector<int> pred(ds.users.size());
  parallel_for(ds.users.size(), [&](std::size_t i) {
    pred[i] = bayes_oracle_predict(spec, ds.users[i]);
  });
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.users.size(); ++i) {
    if (!ds.users[i].label) throw ValidationError("oracle: unlabeled user");
    correct += (pred[i] == *ds.users[i].label);
  }
  return static_cast<double>(correct) / static_cast<double>(ds.users.size());
}

}  // namespace fsspip
