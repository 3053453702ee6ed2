#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "fsspip/core.hpp"
#include "fsspip/schema.hpp"

namespace fsspip {

/// Per-user token bags, one multiset of tokens per channel id. Dense channel
/// slots stay empty; their documents travel separately.
using TokenBags = std::vector<std::vector<std::string>>;

/// Per-channel token <-> index maps with document frequencies.
///
/// Tokens are matched case-insensitively (ASCII fold); indices are dense,
/// assigned by descending document frequency with lexicographic tie-break so
/// rebuilds are reproducible.
class Vocabulary {
 public:
  struct Channel {
    std::vector<std::string> tokens;           // index -> token
    std::vector<std::uint32_t> doc_freq;       // index -> #users containing it
    std::unordered_map<std::string, std::uint32_t> index;  // token -> index
  };

  Vocabulary() = default;
  explicit Vocabulary(std::size_t n_channels) : channels_(n_channels) {}

  static Vocabulary build(const ChannelSchema& schema,
                          const std::vector<TokenBags>& users, int min_count) {
    if (min_count < 1) throw ValidationError("min_count must be >= 1");
    Vocabulary v(schema.size());
    for (std::size_t r = 0; r < schema.size(); ++r) {
      if (!schema.is_sparse(r)) continue;
      std::map<std::string, std::uint32_t> freq;  // folded token -> user count
      for (const auto& bags : users) {
        if (r >= bags.size()) continue;
        std::map<std::string, bool> seen;
        for (const auto& tok : bags[r]) {
          seen.emplace(ascii_lower(tok), true);
        }
        for (const auto& [tok, _] : seen) ++freq[tok];
      }
      // Descending frequency, ties lexicographic.
      std::vector<std::pair<std::string, std::uint32_t>> kept;
      for (const auto& [tok, n] : freq) {
        if (n >= static_cast<std::uint32_t>(min_count)) kept.emplace_back(tok, n);
      }
      std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      auto& ch = v.channels_[r];
      ch.tokens.reserve(kept.size());
      ch.doc_freq.reserve(kept.size());
      for (std::uint32_t i = 0; i < kept.size(); ++i) {
        ch.tokens.push_back(kept[i].first);
        ch.doc_freq.push_back(kept[i].second);
        ch.index.emplace(kept[i].first, i);
      }
    }
    return v;
  }

  std::size_t num_channels() const { return channels_.size(); }

  std::size_t vlen(std::size_t channel) const { return channels_[channel].tokens.size(); }

  /// -1 when the token is out of vocabulary.
  long lookup(std::size_t channel, const std::string& token) const {
    const auto& idx = channels_[channel].index;
    auto it = idx.find(ascii_lower(token));
    return it == idx.end() ? -1 : static_cast<long>(it->second);
  }

  const std::string& token(std::size_t channel, std::uint32_t index) const {
    return channels_[channel].tokens[index];
  }

  std::uint32_t doc_freq(std::size_t channel, std::uint32_t index) const {
    return channels_[channel].doc_freq[index];
  }

  Channel& channel(std::size_t r) { return channels_[r]; }
  const Channel& channel(std::size_t r) const { return channels_[r]; }

  std::vector<std::size_t> vlens() const {
    std::vector<std::size_t> out(channels_.size());
    for (std::size_t r = 0; r < channels_.size(); ++r) out[r] = channels_[r].tokens.size();
    return out;
  }

  /// Test helper: register tokens for one channel in the given index order.
  void set_channel_tokens(std::size_t r, std::vector<std::string> tokens) {
    auto& ch = channels_[r];
    ch.tokens = std::move(tokens);
    ch.doc_freq.assign(ch.tokens.size(), 1);
    ch.index.clear();
    for (std::uint32_t i = 0; i < ch.tokens.size(); ++i) {
      ch.tokens[i] = ascii_lower(ch.tokens[i]);
      ch.index.emplace(ch.tokens[i], i);
    }
  }

  /// TSV: channel_id, index, token, doc_frequency; sorted by (channel, index).
  std::string to_tsv() const {
    std::string out;
    for (std::size_t r = 0; r < channels_.size(); ++r) {
      const auto& ch = channels_[r];
      for (std::uint32_t i = 0; i < ch.tokens.size(); ++i) {
        out += std::to_string(r);
        out += '\t';
        out += std::to_string(i);
        out += '\t';
        out += ch.tokens[i];
        out += '\t';
        out += std::to_string(ch.doc_freq[i]);
        out += '\n';
      }
    }
    return out;
  }

  static Vocabulary from_tsv(const std::string& text, std::size_t n_channels) {
    Vocabulary v(n_channels);
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string::npos) end = text.size();
      const std::string_view line(text.data() + pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (line.empty()) continue;
      std::size_t t1 = line.find('\t');
      std::size_t t2 = line.find('\t', t1 + 1);
      std::size_t t3 = line.find('\t', t2 + 1);
      if (t1 == std::string_view::npos || t2 == std::string_view::npos ||
          t3 == std::string_view::npos) {
        throw ValidationError("vocabulary line " + std::to_string(line_no) +
                              ": expected 4 tab-separated fields");
      }
      const std::size_t channel = std::stoul(std::string(line.substr(0, t1)));
      const std::uint32_t index =
          static_cast<std::uint32_t>(std::stoul(std::string(line.substr(t1 + 1, t2 - t1 - 1))));
      const std::string token(line.substr(t2 + 1, t3 - t2 - 1));
      const std::uint32_t freq =
          static_cast<std::uint32_t>(std::stoul(std::string(line.substr(t3 + 1))));
      if (channel >= n_channels) {
        throw ValidationError("vocabulary line " + std::to_string(line_no) +
                              ": channel id out of range");
      }
      auto& ch = v.channels_[channel];
      if (index != ch.tokens.size()) {
        throw ValidationError("vocabulary line " + std::to_string(line_no) +
                              ": indices must be dense and sorted");
      }
      ch.tokens.push_back(token);
      ch.doc_freq.push_back(freq);
      ch.index.emplace(token, index);
    }
    return v;
  }

 private:
  std::vector<Channel> channels_;
};

}  // namespace fsspip
