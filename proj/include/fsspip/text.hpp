#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "fsspip/core.hpp"

namespace fsspip {

/// Bundled public-suffix snapshot. Enough coverage for link-domain feature
/// extraction; unknown TLDs fall back to the last label, mirroring the PSL
/// default rule.
inline const std::unordered_set<std::string>& public_suffixes() {
  static const std::unordered_set<std::string> kSuffixes = {
      // generic
      "com", "net", "org", "edu", "gov", "mil", "int", "info", "biz", "io", "co",
      "tv", "me", "cc", "ly", "gl", "gd", "app", "dev", "news", "blog", "xyz",
      "site", "online", "tech", "store", "fun", "live", "media", "social", "ai",
      "fm", "am", "ws", "is", "to", "gg", "eu",
      // country codes
      "uk", "de", "fr", "in", "jp", "au", "ca", "us", "ru", "br", "it", "nl",
      "es", "se", "ch", "at", "be", "dk", "fi", "no", "pl", "cz", "gr", "pt",
      "tr", "mx", "ar", "cl", "nz", "za", "kr", "cn", "tw", "hk", "sg", "my",
      "id", "th", "ph", "vn", "ie", "il", "ae", "sa", "pk", "bd", "np", "lk",
      "ua", "by", "kz", "ge", "az", "uz", "al",
      // common second-level registrations
      "co.uk", "org.uk", "ac.uk", "gov.uk", "me.uk", "net.uk", "co.in",
      "net.in", "org.in", "gov.in", "ac.in", "firm.in", "co.jp", "ne.jp",
      "or.jp", "ac.jp", "go.jp", "com.au", "net.au", "org.au", "edu.au",
      "gov.au", "co.nz", "net.nz", "org.nz", "com.br", "net.br", "org.br",
      "gov.br", "com.mx", "com.ar", "com.cn", "net.cn", "org.cn", "gov.cn",
      "com.tw", "com.hk", "com.sg", "com.my", "co.id", "co.th", "com.ph",
      "com.vn", "co.kr", "co.za", "com.tr", "com.eg", "com.sa", "com.pk",
      "com.bd", "com.np", "com.ua"};
  return kSuffixes;
}

struct DomainParts {
  std::string domain;      // registered-domain label, no suffix: "theguardian"
  std::string codomain;    // "<subdomain>.<domain>" or the domain label alone
};

inline std::string url_host(std::string_view url) {
  // scheme
  const std::size_t scheme = url.find("://");
  if (scheme != std::string_view::npos) url.remove_prefix(scheme + 3);
  // path / query / fragment
  const std::size_t cut = url.find_first_of("/?#");
  if (cut != std::string_view::npos) url = url.substr(0, cut);
  // userinfo
  const std::size_t at = url.rfind('@');
  if (at != std::string_view::npos) url.remove_prefix(at + 1);
  // port
  const std::size_t colon = url.find(':');
  if (colon != std::string_view::npos) url = url.substr(0, colon);
  return ascii_lower(url);
}

/// Splits a host into registered-domain label and its subdomain qualifier.
/// Returns nullopt when the host is empty or is itself a public suffix, so a
/// bare suffix can never leak out as a feature token.
inline std::optional<DomainParts> split_domain(std::string_view host_or_url) {
  const std::string host = url_host(host_or_url);
  if (host.empty()) return std::nullopt;

  std::vector<std::string> labels;
  std::size_t pos = 0;
  while (pos <= host.size()) {
    std::size_t dot = host.find('.', pos);
    if (dot == std::string::npos) dot = host.size();
    if (dot == pos) return std::nullopt;  // empty label, malformed host
    labels.push_back(host.substr(pos, dot - pos));
    pos = dot + 1;
    if (dot == host.size()) break;
  }
  if (labels.size() < 1) return std::nullopt;

  const auto& suffixes = public_suffixes();
  std::size_t suffix_labels = 0;
  for (std::size_t k = labels.size(); k >= 1; --k) {
    std::string cand;
    for (std::size_t i = labels.size() - k; i < labels.size(); ++i) {
      if (!cand.empty()) cand += '.';
      cand += labels[i];
    }
    if (suffixes.count(cand)) {
      suffix_labels = k;
      break;
    }
  }
  if (suffix_labels == 0) suffix_labels = 1;  // PSL default rule
  if (suffix_labels >= labels.size()) return std::nullopt;

  DomainParts parts;
  parts.domain = labels[labels.size() - suffix_labels - 1];
  std::string sub;
  for (std::size_t i = 0; i + suffix_labels + 1 < labels.size(); ++i) {
    if (!sub.empty()) sub += '.';
    sub += labels[i];
  }
  parts.codomain = sub.empty() ? parts.domain : sub + "." + parts.domain;
  return parts;
}

inline bool hashtag_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_';
}

/// Fallback extraction of #tags from raw text; lowercased, '#' stripped.
inline std::vector<std::string> scan_hashtags(std::string_view text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '#') continue;
    std::size_t j = i + 1;
    while (j < text.size() && hashtag_char(text[j])) ++j;
    if (j > i + 1) out.push_back(ascii_lower(text.substr(i + 1, j - i - 1)));
    i = j - 1;
  }
  return out;
}

inline std::string strip_hash(std::string_view tag) {
  if (!tag.empty() && tag.front() == '#') tag.remove_prefix(1);
  return ascii_lower(tag);
}

inline std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace fsspip
