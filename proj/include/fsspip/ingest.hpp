#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsspip/core.hpp"
#include "fsspip/schema.hpp"
#include "fsspip/text.hpp"
#include "fsspip/vocab.hpp"

namespace fsspip {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Timestamps

namespace detail {
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097LL + static_cast<std::int64_t>(doe) - 719468;
}
}  // namespace detail

/// Parses ISO-8601 timestamps ("2020-11-03", "2020-11-03T12:30:00Z",
/// "2020-11-03T12:30:00+05:30") and bare years ("2017") to UTC epoch seconds.
inline std::optional<std::int64_t> parse_timestamp(const std::string& s) {
  int y = 0;
  unsigned mo = 1, d = 1, h = 0, mi = 0, sec = 0;
  int n = 0;
  if (std::sscanf(s.c_str(), "%4d-%2u-%2u%n", &y, &mo, &d, &n) == 3) {
    // optional time part
  } else if (std::sscanf(s.c_str(), "%4d%n", &y, &n) == 1 &&
             n == static_cast<int>(s.size())) {
    mo = 1;
    d = 1;
  } else {
    return std::nullopt;
  }
  std::int64_t offset = 0;
  if (n < static_cast<int>(s.size())) {
    const char sep = s[n];
    if (sep == 'T' || sep == ' ') {
      int m2 = 0;
      if (std::sscanf(s.c_str() + n + 1, "%2u:%2u:%2u%n", &h, &mi, &sec, &m2) != 3) {
        return std::nullopt;
      }
      n += 1 + m2;
    }
    if (n < static_cast<int>(s.size())) {
      const char tz = s[n];
      if (tz == 'Z' && n + 1 == static_cast<int>(s.size())) {
        // UTC
      } else if (tz == '+' || tz == '-') {
        unsigned oh = 0, om = 0;
        const int got = std::sscanf(s.c_str() + n + 1, "%2u:%2u", &oh, &om);
        if (got < 1) return std::nullopt;
        offset = static_cast<std::int64_t>(oh) * 3600 + static_cast<std::int64_t>(om) * 60;
        if (tz == '-') offset = -offset;
      } else {
        return std::nullopt;
      }
    }
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) {
    return std::nullopt;
  }
  const std::int64_t days = detail::days_from_civil(y, mo, d);
  return days * 86400 + h * 3600 + mi * 60 + sec - offset;
}

/// Half-open time filter [after, before) on tweet timestamps.
struct TimeWindow {
  std::optional<std::int64_t> after;
  std::optional<std::int64_t> before;

  TimeWindow() = default;
  TimeWindow(std::optional<std::int64_t> after_, std::optional<std::int64_t> before_)
      : after(after_), before(before_) {
    if (after && before && *before <= *after) {
      throw ValidationError("time window is empty: before <= after");
    }
  }

  bool contains(std::int64_t t) const {
    if (after && t < *after) return false;
    if (before && t >= *before) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Raw archive records

enum class TweetKind { original, retweet, reply, quote };

inline std::optional<TweetKind> tweet_kind_from_string(const std::string& s) {
  if (s == "original") return TweetKind::original;
  if (s == "retweet") return TweetKind::retweet;
  if (s == "reply") return TweetKind::reply;
  if (s == "quote") return TweetKind::quote;
  return std::nullopt;
}

struct Counterpart {
  std::string user_id;
  std::string bio;
  std::string text;
  std::vector<std::string> urls;
  std::vector<std::string> mentions;
  std::vector<std::string> hashtags;
};

struct RawTweet {
  std::string text;
  std::int64_t created_at = 0;
  TweetKind kind = TweetKind::original;
  std::vector<std::string> urls;
  std::vector<std::string> mentions;
  std::vector<std::string> hashtags;
  std::optional<Counterpart> counterpart;
};

struct RawUserRecord {
  std::string user_id;
  std::string bio;
  std::vector<std::string> follower_ids;
  std::vector<std::string> friend_ids;
  std::vector<RawTweet> tweets;
  std::optional<int> label;
  std::map<std::string, std::string> attrs;
};

struct ParseIssue {
  std::size_t line_no = 0;
  std::string message;
};

struct ArchiveParseResult {
  std::vector<RawUserRecord> records;
  std::vector<ParseIssue> issues;
};

namespace detail {

inline std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  for (const auto& v : j.at(key)) out.push_back(v.get<std::string>());
  return out;
}

inline RawUserRecord record_from_json(const json& j) {
  RawUserRecord rec;
  rec.user_id = j.at("user_id").get<std::string>();
  if (rec.user_id.empty()) throw ValidationError("user_id must be non-empty");
  rec.bio = j.value("bio", std::string());
  rec.follower_ids = string_list(j, "follower_ids");
  rec.friend_ids = string_list(j, "friend_ids");
  if (j.contains("label") && !j.at("label").is_null()) {
    rec.label = j.at("label").get<int>();
  }
  if (j.contains("attrs")) {
    for (const auto& [k, v] : j.at("attrs").items()) {
      rec.attrs[k] = v.get<std::string>();
    }
  }
  if (!j.contains("tweets")) return rec;
  for (const auto& tj : j.at("tweets")) {
    RawTweet t;
    t.text = tj.value("text", std::string());
    const auto ts = parse_timestamp(tj.at("created_at").get<std::string>());
    if (!ts) throw ValidationError("unparseable created_at");
    t.created_at = *ts;
    const auto kind = tweet_kind_from_string(tj.value("kind", std::string("original")));
    if (!kind) throw ValidationError("unknown tweet kind");
    t.kind = *kind;
    t.urls = string_list(tj, "urls");
    t.mentions = string_list(tj, "mentions");
    t.hashtags = string_list(tj, "hashtags");
    if (tj.contains("counterpart") && !tj.at("counterpart").is_null()) {
      const auto& cj = tj.at("counterpart");
      Counterpart c;
      c.user_id = cj.value("user_id", std::string());
      c.bio = cj.value("bio", std::string());
      c.text = cj.value("text", std::string());
      c.urls = string_list(cj, "urls");
      c.mentions = string_list(cj, "mentions");
      c.hashtags = string_list(cj, "hashtags");
      t.counterpart = std::move(c);
    }
    if (t.kind != TweetKind::original && !t.counterpart) {
      throw ValidationError("tweet of kind " + tj.value("kind", std::string()) +
                            " is missing its counterpart");
    }
    rec.tweets.push_back(std::move(t));
  }
  return rec;
}

}  // namespace detail

/// Reads a JSON-lines archive, one RawUserRecord per line. Malformed lines
/// are isolated and reported with their line number; well-formed records
/// stream through in file order.
inline ArchiveParseResult parse_archive(const std::string& path) {
  ArchiveParseResult result;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open archive: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      result.records.push_back(detail::record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      result.issues.push_back({line_no, e.what()});
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Channel extraction

/// Token bags plus one raw document per dense channel, both indexed by
/// channel id of the given schema.
struct ExtractedChannels {
  TokenBags bags;
  std::vector<std::string> docs;
};

namespace detail {

struct SourceSlots {
  int text = -1, bios = -1, hashtags = -1, domains = -1, domains_co = -1, mentions = -1;
};

inline SourceSlots slots_for(const ChannelSchema& schema, ChannelSource src) {
  const std::string p = to_string(src);
  SourceSlots s;
  s.text = schema.find(p + "_text");
  s.bios = schema.find(p + "_bios");
  s.hashtags = schema.find(p + "_hashtags");
  s.domains = schema.find(p + "_domains");
  s.domains_co = schema.find(p + "_domains_co");
  s.mentions = schema.find(p + "_mentions");
  return s;
}

inline void append_doc(std::vector<std::string>& docs, int slot, const std::string& piece) {
  if (slot < 0 || piece.empty()) return;
  auto& doc = docs[slot];
  if (!doc.empty()) doc += '\n';
  doc += piece;
}

inline void append_content(ExtractedChannels& out, const SourceSlots& slots,
                           const std::string& text, const std::vector<std::string>& urls,
                           const std::vector<std::string>& mentions,
                           const std::vector<std::string>& hashtags) {
  append_doc(out.docs, slots.text, text);
  if (slots.hashtags >= 0) {
    if (!hashtags.empty()) {
      for (const auto& h : hashtags) {
        const std::string t = strip_hash(h);
        if (!t.empty()) out.bags[slots.hashtags].push_back(t);
      }
    } else {
      for (auto& t : scan_hashtags(text)) out.bags[slots.hashtags].push_back(std::move(t));
    }
  }
  if (slots.mentions >= 0) {
    for (const auto& m : mentions) {
      if (!m.empty()) out.bags[slots.mentions].push_back(m);
    }
  }
  if (slots.domains >= 0 || slots.domains_co >= 0) {
    for (const auto& url : urls) {
      const auto parts = split_domain(url);
      if (!parts) continue;
      if (slots.domains >= 0) out.bags[slots.domains].push_back(parts->domain);
      if (slots.domains_co >= 0) out.bags[slots.domains_co].push_back(parts->codomain);
    }
  }
}

}  // namespace detail

/// Turns one raw record into per-channel token bags and dense-channel
/// documents. Tweets outside the window are ignored entirely; follower and
/// friend lists are profile data and are never time-filtered.
inline ExtractedChannels extract_channels(const ChannelSchema& schema,
                                          const RawUserRecord& record,
                                          const TimeWindow& window = {}) {
  ExtractedChannels out;
  out.bags.resize(schema.size());
  out.docs.resize(schema.size());

  const auto tweet_slots = detail::slots_for(schema, ChannelSource::tweet);
  const auto reply_slots = detail::slots_for(schema, ChannelSource::reply);
  const auto rt_slots = detail::slots_for(schema, ChannelSource::retweet);
  const int followers = schema.find("follower_ids");
  const int friends = schema.find("friend_ids");
  const int retweetees = schema.find("retweetee_ids");
  const int repliees = schema.find("repliee_ids");

  // The user's own profile bio backs the tweet-source bios document.
  detail::append_doc(out.docs, tweet_slots.bios, record.bio);

  for (const auto& t : record.tweets) {
    if (!window.contains(t.created_at)) continue;
    switch (t.kind) {
      case TweetKind::original:
        detail::append_content(out, tweet_slots, t.text, t.urls, t.mentions, t.hashtags);
        break;
      case TweetKind::reply: {
        detail::append_content(out, reply_slots, t.text, t.urls, t.mentions, t.hashtags);
        if (t.counterpart) {
          detail::append_doc(out.docs, reply_slots.bios, t.counterpart->bio);
          if (repliees >= 0 && !t.counterpart->user_id.empty()) {
            out.bags[repliees].push_back(t.counterpart->user_id);
          }
        }
        break;
      }
      case TweetKind::retweet:
      case TweetKind::quote: {
        // Content comes from the original (counterpart) tweet.
        if (t.counterpart) {
          detail::append_content(out, rt_slots, t.counterpart->text, t.counterpart->urls,
                                 t.counterpart->mentions, t.counterpart->hashtags);
          detail::append_doc(out.docs, rt_slots.bios, t.counterpart->bio);
          if (retweetees >= 0 && !t.counterpart->user_id.empty()) {
            out.bags[retweetees].push_back(t.counterpart->user_id);
          }
        }
        break;
      }
    }
  }

  if (followers >= 0) {
    for (const auto& id : record.follower_ids) {
      if (!id.empty()) out.bags[followers].push_back(id);
    }
  }
  if (friends >= 0) {
    for (const auto& id : record.friend_ids) {
      if (!id.empty()) out.bags[friends].push_back(id);
    }
  }
  return out;
}

}  // namespace fsspip
