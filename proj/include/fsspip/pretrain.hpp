#pragma once

#include <string>
#include <vector>

#include "fsspip/adam.hpp"
#include "fsspip/augment.hpp"
#include "fsspip/autodiff.hpp"
#include "fsspip/selfsup.hpp"
#include "fsspip/train.hpp"

namespace fsspip {

struct PretrainConfig {
  int batch_size = 32;
  double learning_rate = 3e-5;
  int epochs = 5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  AttentionVariant variant = AttentionVariant::dyattn;
  bool mixup = true;
  double mixup_alpha = 0.1;
  double sample_rate_max = 0.15;
  int embed_dim = 8;

  void validate() const {
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (epochs < 0) throw ValidationError("epochs must be >= 0");
    if (sample_rate_max < 0.0 || sample_rate_max > 1.0) {
      throw ValidationError("sample_rate_max must be in [0,1]");
    }
    if (mixup_alpha <= 0.0) throw ValidationError("mixup_alpha must be positive");
    if (embed_dim < 1) throw ValidationError("embed_dim must be >= 1");
  }
};

inline PretrainConfig pretrain_config_from_text(const std::string& text) {
  PretrainConfig c;
  detail::parse_kv(text, [&](const std::string& k, const std::string& v) {
    if (k == "batch_size") c.batch_size = std::stoi(v);
    else if (k == "learning_rate") c.learning_rate = std::stod(v);
    else if (k == "epochs") c.epochs = std::stoi(v);
    else if (k == "adam_beta1") c.adam_beta1 = std::stod(v);
    else if (k == "adam_beta2") c.adam_beta2 = std::stod(v);
    else if (k == "adam_eps") c.adam_eps = std::stod(v);
    else if (k == "seed") c.seed = std::stoull(v);
    else if (k == "variant") c.variant = variant_from_string(v);
    else if (k == "mixup") c.mixup = detail::parse_bool(v);
    else if (k == "mixup_alpha") c.mixup_alpha = std::stod(v);
    else if (k == "sample_rate_max") c.sample_rate_max = std::stod(v);
    else if (k == "embed_dim") c.embed_dim = std::stoi(v);
    else return false;
    return true;
  });
  c.validate();
  return c;
}

struct PretrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;
};

/// Masked-feature pretraining: per batch the total objective is the
/// cross-entropy on mixup-mixed silver-labeled examples plus the
/// self-supervision loss over the features removed by sampling. On unlabeled
/// data the mixup term is disabled and only the masked-feature loss trains.
/// Prediction heads are internal and discarded; only base parameters return.
inline PretrainResult pretrain(const LabeledDataset& ds, const PretrainConfig& cfg,
                               const ModelParams* init = nullptr) {
  cfg.validate();
  if (ds.users.empty()) throw ValidationError("pretraining dataset is empty");

  const bool labeled = ds.fully_labeled();
  const bool use_mixup = cfg.mixup && labeled;

  ModelParams params =
      init ? *init
           : init_params(ds.schema, ds.vlens,
                         ModelDims{static_cast<std::size_t>(cfg.embed_dim), ds.d_em,
                                   ds.num_classes},
                         cfg.seed);
  params.variant = cfg.variant;
  SelfSupHeads heads = SelfSupHeads::init(params, cfg.seed ^ 0x9e3779b9ull);

  PretrainResult result;
  if (cfg.epochs == 0) {
    result.params = std::move(params);
    return result;
  }

  Adam adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  Rng rng(cfg.seed);
  const int K = ds.num_classes;

  std::vector<std::size_t> index(ds.users.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng erng = rng.derive(static_cast<std::uint64_t>(epoch) + 1);
    std::vector<std::size_t> order = index;
    erng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::size_t B = stop - start;

      std::vector<SampleResult> sampled;
      sampled.reserve(B);
      for (std::size_t i = start; i < stop; ++i) {
        sampled.push_back(augment_sample(ds.users[order[i]], erng, cfg.sample_rate_max));
      }

      ModelParams g = ModelParams::like(params);
      SelfSupHeads gh = SelfSupHeads::like(heads);
      double batch_loss = 0.0;

      // L_ss over the masked features of every sampled user.
      const double ss_scale = 1.0 / static_cast<double>(B);
      for (const auto& s : sampled) {
        const ForwardCache c = forward(s.user, params, cfg.variant);
        Vec dh(params.dims.d, 0.0);
        const double l = selfsup_backward(c.h, s.masked, heads, ss_scale, gh, dh);
        if (!std::isfinite(l)) {
          throw NumericalError("non-finite self-supervision loss for user " + s.user.user_id);
        }
        batch_loss += l * ss_scale;
        bool any = false;
        for (double x : dh) any |= (x != 0.0);
        if (any) backward_from_h(s.user, params, cfg.variant, c, dh, g);
      }

      // L_mixup: cross-entropy on mixed pairs of post-sampling users.
      if (use_mixup && B >= 2) {
        std::vector<ChannelizedUser> mixed_users;
        std::vector<Vec> mixed_labels;
        for (std::size_t i = 0; i + 1 < B; i += 2) {
          ChannelizedUser a = sampled[i].user;
          ChannelizedUser b = sampled[i + 1].user;
          a.label = ds.users[order[start + i]].label;
          b.label = ds.users[order[start + i + 1]].label;
          MixupResult mr = augment_mixup(a, b, K, erng, cfg.mixup_alpha);
          mixed_users.push_back(std::move(mr.user));
          mixed_labels.push_back(std::move(mr.soft_label));
        }
        std::vector<Example> batch(mixed_users.size());
        for (std::size_t i = 0; i < mixed_users.size(); ++i) {
          batch[i] = Example{&mixed_users[i], mixed_labels[i]};
        }
        BatchGradients bg = gradients(batch, params, cfg.variant);
        batch_loss += bg.loss;
        auto gs = g.spans();
        auto bs = bg.grads.spans();
        for (std::size_t i = 0; i < gs.size(); ++i) {
          for (std::size_t j = 0; j < gs[i].size(); ++j) gs[i][j] += bs[i][j];
        }
      }

      auto pspans = params.spans();
      auto hspans = heads.spans();
      auto gspans = g.spans();
      auto ghspans = gh.spans();
      pspans.insert(pspans.end(), hspans.begin(), hspans.end());
      gspans.insert(gspans.end(), ghspans.begin(), ghspans.end());
      adam.step(std::move(pspans), std::move(gspans));

      loss_sum += batch_loss;
      ++batches;
    }
    result.epoch_loss.push_back(batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0);
  }

  result.params = std::move(params);
  return result;
}

}  // namespace fsspip
