#pragma once

#include <chrono>
#include <ctime>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsspip/embed.hpp"
#include "fsspip/ingest.hpp"
#include "fsspip/model.hpp"
#include "fsspip/user.hpp"
#include "fsspip/vocab.hpp"

namespace fsspip {

// ---------------------------------------------------------------------------
// Schema <-> JSON

inline json schema_to_json(const ChannelSchema& schema) {
  json channels = json::array();
  for (const auto& c : schema.channels) {
    channels.push_back({{"id", c.id},
                        {"name", c.name},
                        {"kind", to_string(c.kind)},
                        {"source", to_string(c.source)}});
  }
  return json{{"hash", schema.hash()}, {"channels", channels}};
}

inline ChannelSchema schema_from_json(const json& j) {
  ChannelSchema s;
  for (const auto& cj : j.at("channels")) {
    ChannelDescriptor d;
    d.id = cj.at("id").get<int>();
    d.name = cj.at("name").get<std::string>();
    const std::string kind = cj.at("kind").get<std::string>();
    if (kind == "sparse") d.kind = ChannelKind::sparse;
    else if (kind == "dense") d.kind = ChannelKind::dense;
    else throw ValidationError("unknown channel kind: " + kind);
    const std::string src = cj.at("source").get<std::string>();
    if (src == "tweet") d.source = ChannelSource::tweet;
    else if (src == "reply") d.source = ChannelSource::reply;
    else if (src == "retweet") d.source = ChannelSource::retweet;
    else if (src == "profile") d.source = ChannelSource::profile;
    else throw ValidationError("unknown channel source: " + src);
    s.channels.push_back(std::move(d));
  }
  if (j.contains("hash") && j.at("hash").get<std::string>() != s.hash()) {
    throw ValidationError("schema hash mismatch: file is corrupt or from another version");
  }
  return s;
}

inline json vocab_to_json(const Vocabulary& vocab) {
  json out = json::object();
  for (std::size_t r = 0; r < vocab.num_channels(); ++r) {
    if (vocab.vlen(r) == 0) continue;
    json entries = json::array();
    for (std::uint32_t i = 0; i < vocab.vlen(r); ++i) {
      entries.push_back({vocab.token(r, i), vocab.doc_freq(r, i)});
    }
    out[std::to_string(r)] = std::move(entries);
  }
  return out;
}

inline Vocabulary vocab_from_json(const json& j, std::size_t n_channels) {
  Vocabulary v(n_channels);
  for (const auto& [key, entries] : j.items()) {
    const std::size_t r = std::stoul(key);
    if (r >= n_channels) throw ValidationError("vocabulary channel id out of range");
    auto& ch = v.channel(r);
    for (const auto& e : entries) {
      const std::string tok = e.at(0).get<std::string>();
      ch.index.emplace(tok, static_cast<std::uint32_t>(ch.tokens.size()));
      ch.tokens.push_back(tok);
      ch.doc_freq.push_back(e.at(1).get<std::uint32_t>());
    }
  }
  return v;
}

inline json embedding_info_to_json(const EmbeddingInfo& e) {
  return json{{"kind", e.kind}, {"d_em", e.d_em}, {"seed", e.seed}};
}

inline EmbeddingInfo embedding_info_from_json(const json& j) {
  EmbeddingInfo e;
  e.kind = j.at("kind").get<std::string>();
  e.d_em = j.at("d_em").get<std::size_t>();
  e.seed = j.value("seed", std::uint64_t{0});
  return e;
}

// ---------------------------------------------------------------------------
// Dataset files

struct DatasetBundle {
  LabeledDataset data;
  Vocabulary vocab;
  EmbeddingInfo embedding;
};

inline json dataset_to_json(const DatasetBundle& b) {
  json j;
  j["format"] = "fsspip-dataset";
  j["version"] = 1;
  j["k"] = b.data.num_classes;
  j["provenance"] = to_string(b.data.provenance);
  j["d_em"] = b.data.d_em;
  j["schema"] = schema_to_json(b.data.schema);
  j["embedding"] = embedding_info_to_json(b.embedding);
  j["vocab"] = vocab_to_json(b.vocab);
  json users = json::array();
  for (const auto& u : b.data.users) {
    json uj;
    uj["user_id"] = u.user_id;
    if (u.label) uj["label"] = *u.label;
    if (!u.attrs.empty()) uj["attrs"] = u.attrs;
    json sp = json::object();
    json dn = json::object();
    for (std::size_t r = 0; r < u.sparse.size(); ++r) {
      if (!u.sparse[r].empty()) sp[std::to_string(r)] = u.sparse[r];
      if (!u.dense[r].empty()) dn[std::to_string(r)] = u.dense[r];
    }
    uj["sparse"] = std::move(sp);
    uj["dense"] = std::move(dn);
    users.push_back(std::move(uj));
  }
  j["users"] = std::move(users);
  return j;
}

inline DatasetBundle dataset_from_json(const json& j) {
  if (j.value("format", std::string()) != "fsspip-dataset") {
    throw ValidationError("not a dataset file");
  }
  DatasetBundle b;
  b.data.num_classes = j.at("k").get<int>();
  b.data.provenance = provenance_from_string(j.at("provenance").get<std::string>());
  b.data.d_em = j.at("d_em").get<std::size_t>();
  b.data.schema = schema_from_json(j.at("schema"));
  b.embedding = embedding_info_from_json(j.at("embedding"));
  b.vocab = vocab_from_json(j.at("vocab"), b.data.schema.size());
  b.data.vlens = b.vocab.vlens();
  const std::size_t R = b.data.schema.size();
  for (const auto& uj : j.at("users")) {
    ChannelizedUser u;
    u.user_id = uj.at("user_id").get<std::string>();
    u.sparse.resize(R);
    u.dense.resize(R);
    if (uj.contains("label") && !uj.at("label").is_null()) {
      u.label = uj.at("label").get<int>();
    }
    if (uj.contains("attrs")) {
      for (const auto& [k, v] : uj.at("attrs").items()) u.attrs[k] = v.get<std::string>();
    }
    for (const auto& [key, idx] : uj.at("sparse").items()) {
      const std::size_t r = std::stoul(key);
      if (r >= R || !b.data.schema.is_sparse(r)) {
        throw ValidationError("user " + u.user_id + ": bad sparse channel id " + key);
      }
      u.sparse[r] = idx.get<std::vector<std::uint32_t>>();
      for (std::uint32_t v : u.sparse[r]) {
        if (v >= b.data.vlens[r]) {
          throw ValidationError("user " + u.user_id + ": sparse index out of range on channel " +
                                key);
        }
      }
    }
    for (const auto& [key, vec] : uj.at("dense").items()) {
      const std::size_t r = std::stoul(key);
      if (r >= R || !b.data.schema.is_dense(r)) {
        throw ValidationError("user " + u.user_id + ": bad dense channel id " + key);
      }
      u.dense[r] = vec.get<Vec>();
      if (u.dense[r].size() != b.data.d_em) {
        throw ValidationError("user " + u.user_id + ": dense vector length mismatch");
      }
    }
    b.data.users.push_back(std::move(u));
  }
  b.data.validate_labels();
  return b;
}

inline void save_dataset(const std::string& path, const DatasetBundle& b) {
  atomic_write_file(path, dataset_to_json(b).dump(1));
}

inline DatasetBundle load_dataset(const std::string& path) {
  try {
    return dataset_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw ValidationError("dataset " + path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Channel-bag files (ingest output)

struct UserBags {
  std::string user_id;
  std::optional<int> label;
  std::map<std::string, std::string> attrs;
  TokenBags bags;                  // by channel id
  std::vector<std::string> docs;   // by channel id, dense channels only
};

inline std::string bags_to_jsonl(const ChannelSchema& schema,
                                 const std::vector<UserBags>& users) {
  std::string out;
  for (const auto& u : users) {
    json j;
    j["user_id"] = u.user_id;
    if (u.label) j["label"] = *u.label;
    if (!u.attrs.empty()) j["attrs"] = u.attrs;
    json bags = json::object();
    json docs = json::object();
    for (std::size_t r = 0; r < schema.size(); ++r) {
      if (schema.is_sparse(r)) {
        if (!u.bags[r].empty()) bags[schema[r].name] = u.bags[r];
      } else if (!u.docs[r].empty()) {
        docs[schema[r].name] = u.docs[r];
      }
    }
    j["bags"] = std::move(bags);
    j["docs"] = std::move(docs);
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline std::vector<UserBags> bags_from_jsonl(const ChannelSchema& schema,
                                             const std::string& text) {
  std::vector<UserBags> out;
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
      const json j = json::parse(line);
      UserBags u;
      u.user_id = j.at("user_id").get<std::string>();
      if (j.contains("label") && !j.at("label").is_null()) u.label = j.at("label").get<int>();
      if (j.contains("attrs")) {
        for (const auto& [k, v] : j.at("attrs").items()) u.attrs[k] = v.get<std::string>();
      }
      u.bags.resize(schema.size());
      u.docs.resize(schema.size());
      const json bag_obj = j.value("bags", json::object());
      for (const auto& [name, toks] : bag_obj.items()) {
        const int r = schema.find(name);
        if (r < 0) throw ValidationError("unknown channel name: " + name);
        u.bags[static_cast<std::size_t>(r)] = toks.get<std::vector<std::string>>();
      }
      const json doc_obj = j.value("docs", json::object());
      for (const auto& [name, doc] : doc_obj.items()) {
        const int r = schema.find(name);
        if (r < 0) throw ValidationError("unknown channel name: " + name);
        u.docs[static_cast<std::size_t>(r)] = doc.get<std::string>();
      }
      out.push_back(std::move(u));
    } catch (const std::exception& e) {
      throw ValidationError("bags file line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    rows.push_back(json(std::vector<double>(m[r], m[r] + m.cols)));
  }
  return rows;
}

inline Mat mat_from_json(const json& j, std::size_t rows, std::size_t cols,
                         const std::string& what) {
  if (j.size() != rows) throw ValidationError(what + ": expected " + std::to_string(rows) +
                                              " rows, got " + std::to_string(j.size()));
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = j.at(r).get<Vec>();
    if (row.size() != cols) throw ValidationError(what + ": row length mismatch");
    for (std::size_t c = 0; c < cols; ++c) m[r][c] = row[c];
  }
  return m;
}

struct Checkpoint {
  ModelParams params;
  ChannelSchema schema;
  Vocabulary vocab;
  EmbeddingInfo embedding;
};

inline json checkpoint_to_json(const Checkpoint& ck) {
  const ModelParams& p = ck.params;
  json j;
  j["format"] = "fsspip-checkpoint";
  j["version"] = 1;
  j["variant"] = to_string(p.variant);
  j["dims"] = {{"d", p.dims.d}, {"d_em", p.dims.d_em}, {"k", p.dims.num_classes}};
  j["schema"] = schema_to_json(ck.schema);
  j["vlens"] = p.vlens;
  j["vocab"] = vocab_to_json(ck.vocab);
  j["embedding"] = embedding_info_to_json(ck.embedding);
  json pp;
  pp["rho_p"] = p.rho_p;
  pp["rho_q"] = p.rho_q;
  pp["rho_k"] = p.rho_k;
  pp["attn_logits"] = p.attn_logits;
  json cw = json::array();
  for (const auto& m : p.channel_weight) cw.push_back(mat_to_json(m));
  pp["channel_weight"] = std::move(cw);
  json qs = json::array();
  json ks = json::array();
  for (const auto& v : p.query) qs.push_back(v);
  for (const auto& v : p.key) ks.push_back(v);
  pp["query"] = std::move(qs);
  pp["key"] = std::move(ks);
  pp["head_weight"] = mat_to_json(p.head_weight);
  pp["head_bias"] = p.head_bias;
  j["params"] = std::move(pp);
  return j;
}

inline Checkpoint checkpoint_from_json(const json& j) {
  if (j.value("format", std::string()) != "fsspip-checkpoint") {
    throw ValidationError("not a checkpoint file");
  }
  Checkpoint ck;
  ck.schema = schema_from_json(j.at("schema"));
  ck.embedding = embedding_info_from_json(j.at("embedding"));
  ck.vocab = vocab_from_json(j.at("vocab"), ck.schema.size());

  ModelParams& p = ck.params;
  p.variant = variant_from_string(j.at("variant").get<std::string>());
  p.dims.d = j.at("dims").at("d").get<std::size_t>();
  p.dims.d_em = j.at("dims").at("d_em").get<std::size_t>();
  p.dims.num_classes = j.at("dims").at("k").get<int>();
  p.schema_hash = ck.schema.hash();
  p.vlens = j.at("vlens").get<std::vector<std::size_t>>();
  if (p.vlens.size() != ck.schema.size()) {
    throw ValidationError("checkpoint vlens do not match schema");
  }
  p.kinds.clear();
  for (const auto& c : ck.schema.channels) p.kinds.push_back(c.kind);

  const json& pp = j.at("params");
  p.rho_p = pp.at("rho_p").get<double>();
  p.rho_q = pp.at("rho_q").get<double>();
  p.rho_k = pp.at("rho_k").get<double>();
  p.attn_logits = pp.at("attn_logits").get<Vec>();
  if (p.attn_logits.size() != ck.schema.size()) {
    throw ValidationError("checkpoint attn_logits length mismatch");
  }
  const json& cw = pp.at("channel_weight");
  if (cw.size() != ck.schema.size()) {
    throw ValidationError("checkpoint channel_weight count mismatch");
  }
  for (std::size_t r = 0; r < ck.schema.size(); ++r) {
    const std::string what = "channel " + std::to_string(r);
    if (ck.schema.is_sparse(r)) {
      p.channel_weight.push_back(mat_from_json(cw.at(r), p.vlens[r], p.dims.d, what));
      if (ck.vocab.vlen(r) != p.vlens[r]) {
        throw ValidationError("checkpoint vocabulary size mismatch on " + what);
      }
    } else {
      p.channel_weight.push_back(mat_from_json(cw.at(r), p.dims.d, p.dims.d_em, what));
    }
  }
  const json& qs = pp.at("query");
  const json& ks = pp.at("key");
  if (qs.size() != ck.schema.size() || ks.size() != ck.schema.size()) {
    throw ValidationError("checkpoint query/key count mismatch");
  }
  for (std::size_t r = 0; r < ck.schema.size(); ++r) {
    Vec q = qs.at(r).get<Vec>();
    Vec k = ks.at(r).get<Vec>();
    if (q.size() != p.dims.d || k.size() != p.dims.d) {
      throw ValidationError("checkpoint query/key length mismatch");
    }
    p.query.push_back(std::move(q));
    p.key.push_back(std::move(k));
  }
  p.head_weight = mat_from_json(pp.at("head_weight"), p.dims.d,
                                static_cast<std::size_t>(p.dims.num_classes), "head");
  p.head_bias = pp.at("head_bias").get<Vec>();
  if (p.head_bias.size() != static_cast<std::size_t>(p.dims.num_classes)) {
    throw ValidationError("checkpoint head bias length mismatch");
  }
  return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  atomic_write_file(path, checkpoint_to_json(ck).dump(1));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  try {
    return checkpoint_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint " + path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Labeled-archive export (silver datasets in raw archive form)

inline json record_to_json(const RawUserRecord& rec) {
  json j;
  j["user_id"] = rec.user_id;
  j["bio"] = rec.bio;
  j["follower_ids"] = rec.follower_ids;
  j["friend_ids"] = rec.friend_ids;
  if (rec.label) j["label"] = *rec.label;
  if (!rec.attrs.empty()) j["attrs"] = rec.attrs;
  json tweets = json::array();
  for (const auto& t : rec.tweets) {
    json tj;
    tj["text"] = t.text;
    {
      // epoch seconds back to ISO-8601 UTC
      const std::time_t tt = static_cast<std::time_t>(t.created_at);
      std::tm tm{};
      gmtime_r(&tt, &tm);
      char buf[32];
      std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
      tj["created_at"] = buf;
    }
    switch (t.kind) {
      case TweetKind::original: tj["kind"] = "original"; break;
      case TweetKind::retweet: tj["kind"] = "retweet"; break;
      case TweetKind::reply: tj["kind"] = "reply"; break;
      case TweetKind::quote: tj["kind"] = "quote"; break;
    }
    tj["urls"] = t.urls;
    tj["mentions"] = t.mentions;
    tj["hashtags"] = t.hashtags;
    if (t.counterpart) {
      tj["counterpart"] = {{"user_id", t.counterpart->user_id},
                           {"bio", t.counterpart->bio},
                           {"text", t.counterpart->text},
                           {"urls", t.counterpart->urls},
                           {"mentions", t.counterpart->mentions},
                           {"hashtags", t.counterpart->hashtags}};
    }
    tweets.push_back(std::move(tj));
  }
  j["tweets"] = std::move(tweets);
  return j;
}

// ---------------------------------------------------------------------------
// Run manifests

/// Written atomically before any output artifact; records what went in and
/// what will come out.
inline void write_manifest(const std::string& primary_output, const std::string& command,
                           const json& config, std::uint64_t seed,
                           const std::vector<std::string>& input_paths,
                           const std::vector<std::string>& output_paths) {
  json j;
  j["format"] = "fsspip-manifest";
  j["version"] = 1;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = config;
  {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    j["created_at"] = buf;
  }
  json inputs = json::array();
  for (const auto& p : input_paths) {
    inputs.push_back({{"path", p}, {"digest", file_digest(p)}});
  }
  j["inputs"] = std::move(inputs);
  j["outputs"] = output_paths;
  atomic_write_file(primary_output + ".manifest.json", j.dump(1));
}

}  // namespace fsspip
