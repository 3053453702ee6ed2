#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "fsspip/core.hpp"
#include "fsspip/user.hpp"

namespace fsspip {

/// A party's anchor account: the crawled follower and retweeter id lists,
/// most recent first.
struct PartyAnchor {
  std::string party;
  std::vector<std::string> follower_ids;
  std::vector<std::string> retweeter_ids;
};

inline std::vector<PartyAnchor> parse_anchors(const std::string& text) {
  std::vector<PartyAnchor> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PartyAnchor a;
      a.party = j.at("party").get<std::string>();
      for (const auto& v : j.value("follower_ids", nlohmann::json::array())) {
        a.follower_ids.push_back(v.get<std::string>());
      }
      for (const auto& v : j.value("retweeter_ids", nlohmann::json::array())) {
        a.retweeter_ids.push_back(v.get<std::string>());
      }
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("anchor file line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::string anchors_to_jsonl(const std::vector<PartyAnchor>& anchors) {
  std::string out;
  for (const auto& a : anchors) {
    nlohmann::json j;
    j["party"] = a.party;
    j["follower_ids"] = a.follower_ids;
    j["retweeter_ids"] = a.retweeter_ids;
    out += j.dump();
    out += '\n';
  }
  return out;
}

/// Weak supervision: label users by the party whose anchor they follow or
/// retweet. Pools are the first pool_size entries of each list; any id seen
/// in more than one party's pools is removed; sample_per_party users are then
/// drawn without replacement from the follower pool and from the retweeter
/// pool of each party.
///
/// `users_by_id` supplies the feature records; pool ids without a record are
/// not samplable. The output never repeats a user id, within or across
/// parties.
inline LabeledDataset build_silver_labels(
    const std::vector<PartyAnchor>& anchors,
    const std::unordered_map<std::string, const ChannelizedUser*>& users_by_id,
    std::size_t pool_size, std::size_t sample_per_party, Rng& rng,
    const LabeledDataset& like) {
  if (anchors.size() < 2) throw ValidationError("need at least 2 party anchors");
  if (pool_size < sample_per_party) {
    throw ValidationError("pool_size must be >= sample_per_party");
  }

  struct Pools {
    std::vector<std::string> followers;
    std::vector<std::string> retweeters;
  };
  std::vector<Pools> pools(anchors.size());
  std::unordered_map<std::string, int> membership;  // id -> party count marker
  for (std::size_t p = 0; p < anchors.size(); ++p) {
    const auto take = [&](const std::vector<std::string>& src) {
      std::vector<std::string> out;
      const std::size_t n = std::min(pool_size, src.size());
      out.assign(src.begin(), src.begin() + n);
      return out;
    };
    pools[p].followers = take(anchors[p].follower_ids);
    pools[p].retweeters = take(anchors[p].retweeter_ids);
    std::unordered_set<std::string> party_ids(pools[p].followers.begin(),
                                              pools[p].followers.end());
    party_ids.insert(pools[p].retweeters.begin(), pools[p].retweeters.end());
    for (const auto& id : party_ids) ++membership[id];
  }

  LabeledDataset out;
  out.num_classes = static_cast<int>(anchors.size());
  out.provenance = Provenance::silver;
  out.schema = like.schema;
  out.vlens = like.vlens;
  out.d_em = like.d_em;

  std::unordered_set<std::string> emitted;
  for (std::size_t p = 0; p < anchors.size(); ++p) {
    auto eligible = [&](const std::vector<std::string>& pool) {
      std::vector<std::string> ids;
      for (const auto& id : pool) {
        if (membership[id] == 1 && users_by_id.count(id)) ids.push_back(id);
      }
      return ids;
    };
    auto draw = [&](std::vector<std::string> ids, const char* which) {
      if (ids.size() < sample_per_party) {
        throw ValidationError("party " + anchors[p].party + " has only " +
                              std::to_string(ids.size()) + " unique " + which +
                              ", need " + std::to_string(sample_per_party));
      }
      rng.shuffle(ids);
      ids.resize(sample_per_party);
      return ids;
    };
    const auto picked_f = draw(eligible(pools[p].followers), "followers");
    const auto picked_r = draw(eligible(pools[p].retweeters), "retweeters");
    for (const auto* picked : {&picked_f, &picked_r}) {
      for (const auto& id : *picked) {
        if (!emitted.insert(id).second) continue;  // same user in both pools of its party
        ChannelizedUser u = *users_by_id.at(id);
        u.label = static_cast<int>(p);
        out.users.push_back(std::move(u));
      }
    }
  }
  return out;
}

}  // namespace fsspip
