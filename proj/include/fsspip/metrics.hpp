#pragma once

#include <chrono>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fsspip/embed.hpp"
#include "fsspip/ingest.hpp"
#include "fsspip/model.hpp"
#include "fsspip/user.hpp"

namespace fsspip {

struct Metrics {
  double accuracy = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::vector<long>> confusion;  // rows = true class
  std::size_t n = 0;
  int num_classes = 0;
  double f1_macro = 0.0;
  double f1_weighted = 0.0;
  /// Positive-class F1 for binary tasks, macro-F1 otherwise.
  double f1_headline = 0.0;
};

inline Metrics metrics_from_confusion(const std::vector<std::vector<long>>& cm) {
  Metrics m;
  m.confusion = cm;
  m.num_classes = static_cast<int>(cm.size());
  const std::size_t K = cm.size();
  long total = 0;
  long correct = 0;
  std::vector<long> row_sum(K, 0), col_sum(K, 0);
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      total += cm[i][j];
      row_sum[i] += cm[i][j];
      col_sum[j] += cm[i][j];
    }
    correct += cm[i][i];
  }
  m.n = static_cast<std::size_t>(total);
  m.accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
  m.precision.assign(K, 0.0);
  m.recall.assign(K, 0.0);
  m.f1.assign(K, 0.0);
  for (std::size_t c = 0; c < K; ++c) {
    const double tp = static_cast<double>(cm[c][c]);
    m.precision[c] = col_sum[c] > 0 ? tp / col_sum[c] : 0.0;
    m.recall[c] = row_sum[c] > 0 ? tp / row_sum[c] : 0.0;
    const double pr = m.precision[c] + m.recall[c];
    m.f1[c] = pr > 0.0 ? 2.0 * m.precision[c] * m.recall[c] / pr : 0.0;
  }
  double macro = 0.0;
  double weighted = 0.0;
  for (std::size_t c = 0; c < K; ++c) {
    macro += m.f1[c];
    if (total > 0) weighted += m.f1[c] * static_cast<double>(row_sum[c]) / total;
  }
  m.f1_macro = macro / static_cast<double>(K);
  m.f1_weighted = weighted;
  m.f1_headline = K == 2 ? m.f1[1] : m.f1_macro;
  return m;
}

/// Deterministic evaluation over a subset of dataset indices. Forward passes
/// run in parallel into per-index slots, so the tally is thread-count
/// independent.
inline Metrics evaluate_subset(const ModelParams& params, const LabeledDataset& ds,
                               std::span<const std::size_t> idx, AttentionVariant variant) {
  if (idx.empty()) throw ValidationError("evaluate: empty dataset");
  const std::size_t K = static_cast<std::size_t>(ds.num_classes);
  std::vector<int> pred(idx.size());
  parallel_for(idx.size(), [&](std::size_t i) {
    pred[i] = predict_class(ds.users[idx[i]], params, variant);
  });
  std::vector<std::vector<long>> cm(K, std::vector<long>(K, 0));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& u = ds.users[idx[i]];
    if (!u.label) throw ValidationError("evaluate: user " + u.user_id + " has no label");
    ++cm[static_cast<std::size_t>(*u.label)][static_cast<std::size_t>(pred[i])];
  }
  return metrics_from_confusion(cm);
}

inline Metrics evaluate(const ModelParams& params, const LabeledDataset& ds,
                        AttentionVariant variant) {
  std::vector<std::size_t> idx(ds.users.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return evaluate_subset(params, ds, idx, variant);
}

inline double agreement_rate(std::span<const int> preds_a, std::span<const int> preds_b) {
  if (preds_a.size() != preds_b.size()) {
    throw ValidationError("agreement: prediction lists have different lengths");
  }
  if (preds_a.empty()) throw ValidationError("agreement: empty prediction lists");
  std::size_t match = 0;
  for (std::size_t i = 0; i < preds_a.size(); ++i) match += (preds_a[i] == preds_b[i]);
  return static_cast<double>(match) / static_cast<double>(preds_a.size());
}

struct GroupLeaning {
  std::map<std::string, double> mean_leaning;
  std::map<std::string, std::size_t> group_size;
  std::vector<std::string> skipped_empty;
};

/// Mean predicted probability of the designated class per group.
inline GroupLeaning group_leaning(
    const ModelParams& params, AttentionVariant variant,
    const std::map<std::string, std::vector<const ChannelizedUser*>>& groups,
    int class_index = 1) {
  if (class_index < 0 || class_index >= params.dims.num_classes) {
    throw ValidationError("group leaning: class index out of range");
  }
  GroupLeaning out;
  for (const auto& [name, users] : groups) {
    if (users.empty()) {
      out.skipped_empty.push_back(name);
      continue;
    }
    double sum = 0.0;
    for (const ChannelizedUser* u : users) {
      sum += predict_proba(*u, params, variant)[static_cast<std::size_t>(class_index)];
    }
    out.mean_leaning[name] = sum / static_cast<double>(users.size());
    out.group_size[name] = users.size();
  }
  return out;
}

/// Wall-clock seconds per user for channelize (vectorize + embed) plus the
/// forward pass, averaged over `repeats` passes of the whole list.
inline double time_inference(const ModelParams& params, AttentionVariant variant,
                             const ChannelSchema& schema, const Vocabulary& vocab,
                             const EmbeddingProvider& embedder,
                             const std::vector<ExtractedChannels>& users, int repeats) {
  if (users.empty()) throw ValidationError("time_inference: no users");
  if (repeats < 1) throw ValidationError("time_inference: repeats must be >= 1");
  double sink = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int rep = 0; rep < repeats; ++rep) {
    for (const auto& ex : users) {
      std::vector<Vec> dense(schema.size());
      for (std::size_t r = 0; r < schema.size(); ++r) {
        if (schema.is_dense(r)) dense[r] = embedder.embed(ex.docs[r]);
      }
      const ChannelizedUser u =
          vectorize(schema, ex.bags, vocab, dense, embedder.dim(), "timing");
      sink += predict_proba(u, params, variant)[0];
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  if (!std::isfinite(sink)) throw NumericalError("non-finite prediction during timing");
  const double secs = std::chrono::duration<double>(t1 - t0).count();
  return secs / (static_cast<double>(repeats) * static_cast<double>(users.size()));
}

}  // namespace fsspip
