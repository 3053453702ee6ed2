#pragma once

#include <string>
#include <vector>

#include "fsspip/core.hpp"

namespace fsspip {

enum class ChannelKind { sparse, dense };
enum class ChannelSource { tweet, reply, retweet, profile };

inline const char* to_string(ChannelKind k) {
  return k == ChannelKind::sparse ? "sparse" : "dense";
}

inline const char* to_string(ChannelSource s) {
  switch (s) {
    case ChannelSource::tweet: return "tweet";
    case ChannelSource::reply: return "reply";
    case ChannelSource::retweet: return "retweet";
    case ChannelSource::profile: return "profile";
  }
  return "?";
}

struct ChannelDescriptor {
  int id = 0;
  std::string name;
  ChannelKind kind = ChannelKind::sparse;
  ChannelSource source = ChannelSource::tweet;
};

/// Ordered list of feature channels. Immutable once built; the hash pins a
/// checkpoint or dataset to the schema it was produced under.
struct ChannelSchema {
  std::vector<ChannelDescriptor> channels;

  std::size_t size() const { return channels.size(); }
  const ChannelDescriptor& operator[](std::size_t i) const { return channels[i]; }

  std::size_t dense_count() const {
    std::size_t n = 0;
    for (const auto& c : channels) n += (c.kind == ChannelKind::dense);
    return n;
  }

  bool is_sparse(std::size_t id) const { return channels[id].kind == ChannelKind::sparse; }
  bool is_dense(std::size_t id) const { return channels[id].kind == ChannelKind::dense; }

  int find(const std::string& name) const {
    for (const auto& c : channels) {
      if (c.name == name) return c.id;
    }
    return -1;
  }

  std::string hash() const {
    std::uint64_t h = kFnvOffset;
    for (const auto& c : channels) {
      h = fnv1a64(std::to_string(c.id), h);
      h = fnv1a64(c.name, h);
      h = fnv1a64(to_string(c.kind), h);
      h = fnv1a64(to_string(c.source), h);
    }
    return to_hex(h);
  }
};

/// The default 22-channel schema: six content channels (text and bios dense,
/// hashtags, domains, domain+codomain, mentions sparse) per source among
/// tweet/reply/retweet, plus four id channels.
inline ChannelSchema schema_default() {
  ChannelSchema s;
  int id = 0;
  const ChannelSource sources[] = {ChannelSource::tweet, ChannelSource::reply,
                                   ChannelSource::retweet};
  for (ChannelSource src : sources) {
    const std::string prefix = to_string(src);
    s.channels.push_back({id++, prefix + "_text", ChannelKind::dense, src});
    s.channels.push_back({id++, prefix + "_bios", ChannelKind::dense, src});
    s.channels.push_back({id++, prefix + "_hashtags", ChannelKind::sparse, src});
    s.channels.push_back({id++, prefix + "_domains", ChannelKind::sparse, src});
    s.channels.push_back({id++, prefix + "_domains_co", ChannelKind::sparse, src});
    s.channels.push_back({id++, prefix + "_mentions", ChannelKind::sparse, src});
  }
  s.channels.push_back({id++, "follower_ids", ChannelKind::sparse, ChannelSource::profile});
  s.channels.push_back({id++, "friend_ids", ChannelKind::sparse, ChannelSource::profile});
  s.channels.push_back({id++, "retweetee_ids", ChannelKind::sparse, ChannelSource::retweet});
  s.channels.push_back({id++, "repliee_ids", ChannelKind::sparse, ChannelSource::reply});
  return s;
}

/// Schema for synthetic populations: n_sparse index channels followed by
/// n_dense vector channels.
inline ChannelSchema schema_synthetic(std::size_t n_sparse, std::size_t n_dense) {
  ChannelSchema s;
  int id = 0;
  for (std::size_t i = 0; i < n_sparse; ++i) {
    s.channels.push_back({id++, "sparse_" + std::to_string(i), ChannelKind::sparse,
                          ChannelSource::profile});
  }
  for (std::size_t i = 0; i < n_dense; ++i) {
    s.channels.push_back({id++, "dense_" + std::to_string(i), ChannelKind::dense,
                          ChannelSource::profile});
  }
  return s;
}

}  // namespace fsspip
