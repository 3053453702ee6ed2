#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "fsspip/core.hpp"
#include "fsspip/text.hpp"

namespace fsspip {

/// Text-embedding source for the dense channels. Embeddings are inputs to the
/// model, produced outside of it; the hashing provider is the bundled
/// fallback so the pipeline runs without an external encoder.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  virtual Vec embed(const std::string& document) const = 0;
  virtual std::string kind() const = 0;
  virtual std::uint64_t seed() const { return 0; }
};

/// Seeded feature hashing: each whitespace token lands on one signed slot,
/// the result is L2-normalized. Empty documents map to the zero vector.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  HashingEmbedder(std::size_t d_em, std::uint64_t seed) : d_em_(d_em), seed_(seed) {}

  std::size_t dim() const override { return d_em_; }
  std::string kind() const override { return "hashing"; }
  std::uint64_t seed() const override { return seed_; }

  Vec embed(const std::string& document) const override {
    Vec v(d_em_, 0.0);
    bool any = false;
    for (const auto& tok : whitespace_tokens(document)) {
      const std::uint64_t h = fnv1a64(tok, splitmix64(seed_) ^ kFnvOffset);
      const std::size_t slot = h % d_em_;
      const double sign = (h >> 63) ? -1.0 : 1.0;
      v[slot] += sign;
      any = true;
    }
    if (!any) return Vec(d_em_, 0.0);
    const double n = norm2(v);
    if (n > 0.0) {
      for (double& x : v) x /= n;
    }
    return v;
  }

 private:
  std::size_t d_em_;
  std::uint64_t seed_;
};

/// Precomputed embeddings loaded from a provider file:
///   d_em=<n>
///   <key> <f1> ... <fn>
/// where <key> is the fnv1a-64 hex digest of the exact document bytes.
class FileEmbedder final : public EmbeddingProvider {
 public:
  static FileEmbedder load(const std::string& path) {
    FileEmbedder e;
    const std::string text = read_file(path);
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string::npos) end = text.size();
      std::string line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (line.empty()) continue;
      if (line_no == 1) {
        if (line.rfind("d_em=", 0) != 0) {
          throw ValidationError("embedding file must start with d_em=<n>");
        }
        e.d_em_ = std::stoul(line.substr(5));
        if (e.d_em_ == 0) throw ValidationError("embedding d_em must be positive");
        continue;
      }
      const std::size_t sp = line.find(' ');
      if (sp == std::string::npos) {
        throw ValidationError("embedding file line " + std::to_string(line_no) +
                              ": expected key and values");
      }
      const std::string key = line.substr(0, sp);
      Vec v;
      v.reserve(e.d_em_);
      std::size_t p = sp;
      while (p < line.size()) {
        while (p < line.size() && line[p] == ' ') ++p;
        if (p >= line.size()) break;
        std::size_t used = 0;
        v.push_back(std::stod(line.substr(p), &used));
        p += used;
      }
      if (v.size() != e.d_em_) {
        throw ValidationError("embedding file line " + std::to_string(line_no) + ": got " +
                              std::to_string(v.size()) + " values, expected " +
                              std::to_string(e.d_em_));
      }
      e.table_.emplace(key, std::move(v));
    }
    if (e.d_em_ == 0) throw ValidationError("embedding file has no d_em header");
    return e;
  }

  std::size_t dim() const override { return d_em_; }
  std::string kind() const override { return "file"; }

  Vec embed(const std::string& document) const override {
    if (document.empty()) return Vec(d_em_, 0.0);
    const std::string key = to_hex(fnv1a64(document));
    auto it = table_.find(key);
    if (it == table_.end()) {
      throw ValidationError("embedding provider has no record for document key " + key);
    }
    return it->second;
  }

  static std::string document_key(const std::string& document) {
    return to_hex(fnv1a64(document));
  }

 private:
  std::size_t d_em_ = 0;
  std::unordered_map<std::string, Vec> table_;
};

/// How the dense vectors of a dataset/checkpoint were produced; carried in
/// both files so inference can rebuild the identical provider.
struct EmbeddingInfo {
  std::string kind = "hashing";
  std::size_t d_em = 768;
  std::uint64_t seed = 0;

  std::unique_ptr<EmbeddingProvider> make(const std::string& file_path = {}) const {
    if (kind == "hashing") return std::make_unique<HashingEmbedder>(d_em, seed);
    if (kind == "file") {
      if (file_path.empty()) {
        throw ValidationError(
            "dataset was embedded from a provider file; pass --embeddings");
      }
      auto e = std::make_unique<FileEmbedder>(FileEmbedder::load(file_path));
      if (e->dim() != d_em) {
        throw ValidationError("embedding file d_em mismatch: expected " +
                              std::to_string(d_em));
      }
      return e;
    }
    throw ValidationError("unknown embedding provider kind: " + kind);
  }
};

}  // namespace fsspip
