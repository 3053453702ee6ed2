#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fsspip/core.hpp"
#include "fsspip/schema.hpp"
#include "fsspip/vocab.hpp"

namespace fsspip {

/// One user in model space: per sparse channel a sorted set of vocabulary
/// indices (the presence-absence realization), per dense channel a text
/// embedding. An empty slot means "no activity" and is legal everywhere.
struct ChannelizedUser {
  std::string user_id;
  std::vector<std::vector<std::uint32_t>> sparse;  // by channel id, sorted unique
  std::vector<Vec> dense;                          // by channel id; empty == zero
  std::optional<int> label;
  std::map<std::string, std::string> attrs;

  std::size_t num_channels() const { return sparse.size(); }

  bool channel_empty(std::size_t r) const {
    return sparse[r].empty() && dense[r].empty();
  }
};

enum class Provenance { gold, silver, synthetic };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::gold: return "gold";
    case Provenance::silver: return "silver";
    case Provenance::synthetic: return "synthetic";
  }
  return "?";
}

inline Provenance provenance_from_string(const std::string& s) {
  if (s == "gold") return Provenance::gold;
  if (s == "silver") return Provenance::silver;
  if (s == "synthetic") return Provenance::synthetic;
  throw ValidationError("unknown provenance: " + s);
}

struct LabeledDataset {
  std::vector<ChannelizedUser> users;
  int num_classes = 2;
  Provenance provenance = Provenance::gold;
  ChannelSchema schema;
  std::vector<std::size_t> vlens;  // per channel; 0 for dense channels
  std::size_t d_em = 0;

  std::string schema_hash() const { return schema.hash(); }

  void validate_labels() const {
    if (num_classes < 2) throw ValidationError("dataset needs K >= 2 classes");
    for (const auto& u : users) {
      if (u.label && (*u.label < 0 || *u.label >= num_classes)) {
        throw ValidationError("label out of range for user " + u.user_id);
      }
    }
  }

  bool fully_labeled() const {
    for (const auto& u : users) {
      if (!u.label) return false;
    }
    return !users.empty();
  }
};

/// Maps token bags and precomputed dense vectors into a ChannelizedUser.
/// Out-of-vocabulary tokens are dropped; duplicates collapse (presence-absence
/// is binary).
inline ChannelizedUser vectorize(const ChannelSchema& schema, const TokenBags& bags,
                                 const Vocabulary& vocab,
                                 const std::vector<Vec>& dense_vectors,
                                 std::size_t d_em, const std::string& user_id = {}) {
  ChannelizedUser u;
  u.user_id = user_id;
  u.sparse.resize(schema.size());
  u.dense.resize(schema.size());
  for (std::size_t r = 0; r < schema.size(); ++r) {
    if (schema.is_sparse(r)) {
      if (r >= bags.size()) continue;
      std::set<std::uint32_t> idx;
      for (const auto& tok : bags[r]) {
        const long i = vocab.lookup(r, tok);
        if (i >= 0) idx.insert(static_cast<std::uint32_t>(i));
      }
      u.sparse[r].assign(idx.begin(), idx.end());
    } else {
      if (r >= dense_vectors.size() || dense_vectors[r].empty()) continue;
      if (dense_vectors[r].size() != d_em) {
        throw ValidationError("dense vector for channel " + schema[r].name + " has length " +
                              std::to_string(dense_vectors[r].size()) + ", expected " +
                              std::to_string(d_em));
      }
      u.dense[r] = dense_vectors[r];
    }
  }
  return u;
}

}  // namespace fsspip
