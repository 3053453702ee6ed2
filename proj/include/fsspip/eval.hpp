#pragma once

#include <string>
#include <vector>

#include "fsspip/metrics.hpp"
#include "fsspip/stats.hpp"
#include "fsspip/train.hpp"

namespace fsspip {

struct RunSummary {
  std::vector<Metrics> runs;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;

  static RunSummary from_runs(std::vector<Metrics> runs) {
    RunSummary s;
    s.runs = std::move(runs);
    Vec acc, f1;
    for (const auto& m : s.runs) {
      acc.push_back(m.accuracy);
      f1.push_back(m.f1_headline);
    }
    s.mean_accuracy = mean_of(acc);
    s.std_accuracy = sample_stddev(acc);
    s.mean_f1 = mean_of(f1);
    s.std_f1 = sample_stddev(f1);
    return s;
  }
};

namespace detail {

/// Class-balanced subsample of `shots` indices from the pool (already
/// shuffled). Per-class quotas are shots/K plus remainder by class order;
/// shortfalls refill round-robin from classes with spare examples.
inline std::vector<std::size_t> balanced_subsample(const LabeledDataset& ds,
                                                   const std::vector<std::size_t>& pool,
                                                   std::size_t shots) {
  if (shots > pool.size()) {
    throw ValidationError("requested " + std::to_string(shots) + " shots but only " +
                          std::to_string(pool.size()) + " training examples are available");
  }
  const std::size_t K = static_cast<std::size_t>(ds.num_classes);
  std::vector<std::vector<std::size_t>> by_class(K);
  for (std::size_t i : pool) {
    by_class[static_cast<std::size_t>(*ds.users[i].label)].push_back(i);
  }
  std::vector<std::size_t> quota(K, shots / K);
  for (std::size_t c = 0; c < shots % K; ++c) ++quota[c];

  std::vector<std::size_t> taken(K, 0);
  std::vector<std::size_t> out;
  out.reserve(shots);
  for (std::size_t c = 0; c < K; ++c) {
    taken[c] = std::min(quota[c], by_class[c].size());
    for (std::size_t i = 0; i < taken[c]; ++i) out.push_back(by_class[c][i]);
  }
  // spread any shortfall over the classes that still have examples
  while (out.size() < shots) {
    bool progressed = false;
    for (std::size_t c = 0; c < K && out.size() < shots; ++c) {
      if (taken[c] < by_class[c].size()) {
        out.push_back(by_class[c][taken[c]++]);
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  if (out.size() != shots) {
    throw ValidationError("could not assemble a subsample of the requested size");
  }
  return out;
}

}  // namespace detail

/// The few-shot protocol: per run, reseed and re-split the dataset, draw a
/// class-balanced training subsample of `shots` examples, train, and score
/// on the held-out test split. Returns per-run metrics with mean and sample
/// standard deviation.
inline RunSummary few_shot_protocol(const LabeledDataset& ds, std::size_t shots,
                                    std::size_t runs, const TrainConfig& cfg) {
  if (runs < 1) throw ValidationError("few-shot needs at least 1 run");
  ds.validate_labels();
  if (!ds.fully_labeled()) throw ValidationError("few-shot needs a fully labeled dataset");

  std::vector<Metrics> results;
  for (std::size_t run = 0; run < runs; ++run) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = splitmix64(cfg.seed ^ splitmix64(run + 1));
    const DatasetSplit split =
        split_dataset(ds.users.size(), cfg.val_fraction, cfg.test_fraction, run_cfg.seed);
    const auto sub = detail::balanced_subsample(ds, split.train, shots);
    const TrainResult tr = train_on_splits(ds, sub, split.val, run_cfg);
    results.push_back(evaluate_subset(tr.params, ds, split.test, cfg.variant));
  }
  return RunSummary::from_runs(std::move(results));
}

struct ChannelImportance {
  double baseline_accuracy = 0.0;
  std::vector<double> drop;  // percentage points, by channel id
};

/// Leave-one-channel-out importance: baseline accuracy on a seeded split,
/// then for each channel empty it everywhere, retrain with the same seed and
/// report the accuracy drop in percentage points.
inline ChannelImportance channel_importance(const LabeledDataset& ds,
                                            const TrainConfig& cfg) {
  ds.validate_labels();
  if (!ds.fully_labeled()) throw ValidationError("importance needs a fully labeled dataset");
  const DatasetSplit split =
      split_dataset(ds.users.size(), cfg.val_fraction, cfg.test_fraction, cfg.seed);
  if (split.test.empty()) throw ValidationError("importance needs a non-empty test split");

  ChannelImportance out;
  {
    const TrainResult tr = train_on_splits(ds, split.train, split.val, cfg);
    out.baseline_accuracy = evaluate_subset(tr.params, ds, split.test, cfg.variant).accuracy;
  }
  out.drop.resize(ds.schema.size());
  for (std::size_t r = 0; r < ds.schema.size(); ++r) {
    LabeledDataset ablated = ds;
    for (auto& u : ablated.users) {
      u.sparse[r].clear();
      u.dense[r].clear();
    }
    const TrainResult tr = train_on_splits(ablated, split.train, split.val, cfg);
    const double acc = evaluate_subset(tr.params, ablated, split.test, cfg.variant).accuracy;
    out.drop[r] = (out.baseline_accuracy - acc) * 100.0;
  }
  return out;
}

}  // namespace fsspip
