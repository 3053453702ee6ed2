#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fsspip/adam.hpp"
#include "fsspip/augment.hpp"
#include "fsspip/autodiff.hpp"
#include "fsspip/metrics.hpp"
#include "fsspip/model.hpp"
#include "fsspip/user.hpp"

namespace fsspip {

struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 0.01;
  int epochs = 50;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  AttentionVariant variant = AttentionVariant::dyattn;
  bool mixup = true;
  bool sampling = true;
  bool channel_dropout = true;
  double mixup_alpha = 0.1;
  double sample_rate_max = 0.15;
  double channel_dropout_prob = 0.1;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  int embed_dim = 8;  // d

  void validate() const {
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (epochs < 0) throw ValidationError("epochs must be >= 0");
    if (val_fraction < 0.0 || val_fraction >= 1.0 || test_fraction < 0.0 ||
        test_fraction >= 1.0 || val_fraction + test_fraction >= 1.0) {
      throw ValidationError("split fractions must lie in [0,1) and leave a training split");
    }
    if (mixup_alpha <= 0.0) throw ValidationError("mixup_alpha must be positive");
    if (sample_rate_max < 0.0 || sample_rate_max > 1.0) {
      throw ValidationError("sample_rate_max must be in [0,1]");
    }
    if (channel_dropout_prob < 0.0 || channel_dropout_prob > 1.0) {
      throw ValidationError("channel_dropout_prob must be in [0,1]");
    }
    if (embed_dim < 1) throw ValidationError("embed_dim must be >= 1");
  }
};

namespace detail {

inline bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ValidationError("expected boolean, got: " + v);
}

/// key=value lines; '#' starts a comment.
inline void parse_kv(const std::string& text,
                     const std::function<bool(const std::string&, const std::string&)>& set) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    std::size_t b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const std::size_t x = s.find_first_not_of(" \t");
      const std::size_t y = s.find_last_not_of(" \t");
      s = x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
    };
    trim(key);
    trim(value);
    if (!set(key, value)) {
      throw ValidationError("config line " + std::to_string(line_no) + ": unknown key " + key);
    }
  }
}

}  // namespace detail

inline TrainConfig train_config_from_text(const std::string& text) {
  TrainConfig c;
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
    else if (k == "sampling") c.sampling = detail::parse_bool(v);
    else if (k == "channel_dropout") c.channel_dropout = detail::parse_bool(v);
    else if (k == "mixup_alpha") c.mixup_alpha = std::stod(v);
    else if (k == "sample_rate_max") c.sample_rate_max = std::stod(v);
    else if (k == "channel_dropout_prob") c.channel_dropout_prob = std::stod(v);
    else if (k == "val_fraction") c.val_fraction = std::stod(v);
    else if (k == "test_fraction") c.test_fraction = std::stod(v);
    else if (k == "embed_dim") c.embed_dim = std::stoi(v);
    else return false;
    return true;
  });
  c.validate();
  return c;
}

inline std::string train_config_to_text(const TrainConfig& c) {
  std::string out;
  out += "batch_size=" + std::to_string(c.batch_size) + "\n";
  out += "learning_rate=" + format_double(c.learning_rate) + "\n";
  out += "epochs=" + std::to_string(c.epochs) + "\n";
  out += "adam_beta1=" + format_double(c.adam_beta1) + "\n";
  out += "adam_beta2=" + format_double(c.adam_beta2) + "\n";
  out += "adam_eps=" + format_double(c.adam_eps) + "\n";
  out += "seed=" + std::to_string(c.seed) + "\n";
  out += std::string("variant=") + to_string(c.variant) + "\n";
  out += std::string("mixup=") + (c.mixup ? "1" : "0") + "\n";
  out += std::string("sampling=") + (c.sampling ? "1" : "0") + "\n";
  out += std::string("channel_dropout=") + (c.channel_dropout ? "1" : "0") + "\n";
  out += "mixup_alpha=" + format_double(c.mixup_alpha) + "\n";
  out += "sample_rate_max=" + format_double(c.sample_rate_max) + "\n";
  out += "channel_dropout_prob=" + format_double(c.channel_dropout_prob) + "\n";
  out += "val_fraction=" + format_double(c.val_fraction) + "\n";
  out += "test_fraction=" + format_double(c.test_fraction) + "\n";
  out += "embed_dim=" + std::to_string(c.embed_dim) + "\n";
  return out;
}

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_acc = 0.0;
  double val_f1 = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;

  std::string to_csv() const {
    std::string out = "epoch,train_loss,val_acc,val_f1,seconds\n";
    char buf[160];
    for (const auto& e : epochs) {
      std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.3f\n", e.epoch, e.train_loss,
                    e.val_acc, e.val_f1, e.seconds);
      out += buf;
    }
    return out;
  }
};

struct TrainResult {
  ModelParams params;
  TrainLog log;
  double best_val_acc = 0.0;
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Seeded shuffle, then test and validation slices by fraction; remainder
/// trains.
inline DatasetSplit split_dataset(std::size_t n, double val_fraction, double test_fraction,
                                  std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed ^ 0x5bd1e995ull);
  rng.shuffle(idx);
  const std::size_t n_test = static_cast<std::size_t>(test_fraction * static_cast<double>(n));
  const std::size_t n_val = static_cast<std::size_t>(val_fraction * static_cast<double>(n));
  DatasetSplit s;
  s.test.assign(idx.begin(), idx.begin() + n_test);
  s.val.assign(idx.begin() + n_test, idx.begin() + n_test + n_val);
  s.train.assign(idx.begin() + n_test + n_val, idx.end());
  return s;
}

/// Minibatch training over explicit train/val index sets. Augmentations run
/// per batch in the order sampling -> channel dropout -> mixup; the model
/// with the best validation accuracy is returned (final model when there is
/// no validation split).
inline TrainResult train_on_splits(const LabeledDataset& ds,
                                   const std::vector<std::size_t>& train_idx,
                                   const std::vector<std::size_t>& val_idx,
                                   const TrainConfig& cfg,
                                   const ModelParams* init = nullptr) {
  cfg.validate();
  ds.validate_labels();
  if (train_idx.empty()) throw ValidationError("training split is empty");
  for (std::size_t i : train_idx) {
    if (!ds.users[i].label) {
      throw ValidationError("training user " + ds.users[i].user_id + " has no label");
    }
  }

  ModelParams params =
      init ? *init
           : init_params(ds.schema, ds.vlens,
                         ModelDims{static_cast<std::size_t>(cfg.embed_dim), ds.d_em,
                                   ds.num_classes},
                         cfg.seed);
  params.variant = cfg.variant;
  if (init && init->schema_hash != ds.schema_hash()) {
    throw ValidationError("checkpoint schema hash does not match dataset");
  }

  TrainResult result;
  result.params = params;
  if (cfg.epochs == 0) return result;

  Adam adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  Rng rng(cfg.seed);
  const int K = ds.num_classes;

  std::optional<ModelParams> best;
  double best_acc = -1.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng erng = rng.derive(static_cast<std::uint64_t>(epoch) + 1);
    std::vector<std::size_t> order = train_idx;
    erng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<ChannelizedUser> storage;
      storage.reserve((stop - start) * 2);
      std::vector<Vec> labels;

      for (std::size_t i = start; i < stop; ++i) {
        const ChannelizedUser& orig = ds.users[order[i]];
        ChannelizedUser u = orig;
        if (cfg.sampling) u = augment_sample(u, erng, cfg.sample_rate_max).user;
        storage.push_back(std::move(u));
        labels.push_back(one_hot(*orig.label, K));
      }
      const std::size_t base_count = storage.size();
      if (cfg.channel_dropout) {
        for (std::size_t i = 0; i < base_count; ++i) {
          storage[i] = augment_channel_dropout(storage[i], erng, cfg.channel_dropout_prob);
        }
      }
      if (cfg.mixup && base_count >= 2) {
        for (std::size_t i = 0; i + 1 < base_count; i += 2) {
          ChannelizedUser a = storage[i];
          ChannelizedUser b = storage[i + 1];
          a.label = ds.users[order[start + i]].label;
          b.label = ds.users[order[start + i + 1]].label;
          MixupResult mixed = augment_mixup(a, b, K, erng, cfg.mixup_alpha);
          storage.push_back(std::move(mixed.user));
          labels.push_back(std::move(mixed.soft_label));
        }
      }

      std::vector<Example> batch(storage.size());
      for (std::size_t i = 0; i < storage.size(); ++i) {
        batch[i] = Example{&storage[i], labels[i]};
      }
      BatchGradients bg = gradients(batch, params, cfg.variant);
      loss_sum += bg.loss;
      ++batches;
      adam.step(params.spans(), bg.grads.spans());
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
    if (!val_idx.empty()) {
      const Metrics m = evaluate_subset(params, ds, val_idx, cfg.variant);
      log.val_acc = m.accuracy;
      log.val_f1 = m.f1_headline;
      if (m.accuracy > best_acc) {
        best_acc = m.accuracy;
        best = params;
      }
    }
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.epochs.push_back(log);
  }

  result.params = best ? *best : params;
  result.best_val_acc = best_acc >= 0.0 ? best_acc : 0.0;
  return result;
}

/// Full supervised entry point: internal seeded 80/10/10-style split by the
/// config fractions, then train_on_splits.
inline TrainResult train(const LabeledDataset& ds, const TrainConfig& cfg,
                         const ModelParams* init = nullptr) {
  cfg.validate();
  const DatasetSplit split =
      split_dataset(ds.users.size(), cfg.val_fraction, cfg.test_fraction, cfg.seed);
  return train_on_splits(ds, split.train, split.val, cfg, init);
}

}  // namespace fsspip
