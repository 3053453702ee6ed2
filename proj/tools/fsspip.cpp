// fsspip: multi-channel self-attentive political-inclination classifier.
// One subcommand per pipeline stage; every file-writing command drops a
// <output>.manifest.json next to its primary artifact first.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>

#include "fsspip/dataset_io.hpp"
#include "fsspip/eval.hpp"
#include "fsspip/ingest.hpp"
#include "fsspip/pretrain.hpp"
#include "fsspip/silver.hpp"
#include "fsspip/simgen.hpp"
#include "fsspip/stats.hpp"
#include "fsspip/train.hpp"

using namespace fsspip;
namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

std::optional<std::int64_t> parse_bound(const std::string& s, const char* flag) {
  if (s.empty()) return std::nullopt;
  const auto t = parse_timestamp(s);
  if (!t) throw ValidationError(std::string(flag) + ": unparseable timestamp '" + s + "'");
  return t;
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

TrainConfig load_train_config(const std::string& path) {
  if (path.empty()) return TrainConfig{};
  return train_config_from_text(read_file(path));
}

PretrainConfig load_pretrain_config(const std::string& path) {
  if (path.empty()) return PretrainConfig{};
  return pretrain_config_from_text(read_file(path));
}

void require_match(const Checkpoint& ck, const DatasetBundle& ds) {
  if (ck.schema.hash() != ds.data.schema.hash()) {
    throw ValidationError("checkpoint schema hash does not match the dataset");
  }
  if (ck.params.vlens != ds.data.vlens) {
    throw ValidationError("checkpoint vocabulary sizes do not match the dataset");
  }
  if (ck.params.dims.d_em != ds.data.d_em) {
    throw ValidationError("checkpoint embedding width does not match the dataset");
  }
  if (ck.params.dims.num_classes != ds.data.num_classes) {
    throw ValidationError("checkpoint class count does not match the dataset");
  }
}

json metrics_to_json(const Metrics& m, AttentionVariant variant) {
  json j;
  j["accuracy"] = m.accuracy;
  j["f1"] = m.f1_headline;
  j["f1_macro"] = m.f1_macro;
  j["f1_weighted"] = m.f1_weighted;
  j["n"] = m.n;
  j["k"] = m.num_classes;
  j["variant"] = to_string(variant);
  j["per_class"] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  j["confusion"] = m.confusion;
  return j;
}

std::string metrics_to_csv(const Metrics& m) {
  std::string out = "metric,value\n";
  out += "accuracy," + format_double(m.accuracy) + "\n";
  out += "f1," + format_double(m.f1_headline) + "\n";
  out += "f1_macro," + format_double(m.f1_macro) + "\n";
  out += "f1_weighted," + format_double(m.f1_weighted) + "\n";
  out += "n," + std::to_string(m.n) + "\n";
  return out;
}

std::string confusion_to_csv(const Metrics& m) {
  std::string out;
  for (const auto& row : m.confusion) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += std::to_string(row[j]);
    }
    out += '\n';
  }
  return out;
}

/// Accepts either the fewshot report format (shots,run,accuracy,f1) or a
/// plain list with one number per line.
std::vector<double> load_runs(const std::string& path, const std::string& metric,
                              std::optional<long> shots_filter) {
  const std::string text = read_file(path);
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    if (end > pos) lines.emplace_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  if (lines.empty()) throw ValidationError(path + ": no runs found");

  std::vector<double> out;
  if (lines[0].rfind("shots,", 0) == 0) {
    const bool want_f1 = metric == "f1";
    if (metric != "accuracy" && metric != "f1") {
      throw ValidationError("unknown metric: " + metric);
    }
    std::set<long> shot_values;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      std::vector<std::string> cells;
      std::size_t p = 0;
      while (p <= lines[i].size()) {
        std::size_t c = lines[i].find(',', p);
        if (c == std::string::npos) c = lines[i].size();
        cells.push_back(lines[i].substr(p, c - p));
        p = c + 1;
      }
      if (cells.size() < 4 || cells[1] == "mean" || cells[1] == "std") continue;
      const long shots = std::stol(cells[0]);
      shot_values.insert(shots);
      if (shots_filter && shots != *shots_filter) continue;
      out.push_back(std::stod(want_f1 ? cells[3] : cells[2]));
    }
    if (!shots_filter && shot_values.size() > 1) {
      throw ValidationError(path + " holds several shot counts; pass --shots");
    }
  } else {
    for (const auto& l : lines) out.push_back(std::stod(l));
  }
  if (out.empty()) throw ValidationError(path + ": no run rows matched");
  return out;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& archive, const std::string& before,
               const std::string& after, const std::string& out) {
  const ChannelSchema schema = schema_default();
  const TimeWindow window(parse_bound(after, "--after"), parse_bound(before, "--before"));

  const ArchiveParseResult parsed = parse_archive(archive);
  std::vector<UserBags> users;
  users.reserve(parsed.records.size());
  for (const auto& rec : parsed.records) {
    ExtractedChannels ex = extract_channels(schema, rec, window);
    UserBags u;
    u.user_id = rec.user_id;
    u.label = rec.label;
    u.attrs = rec.attrs;
    u.bags = std::move(ex.bags);
    u.docs = std::move(ex.docs);
    users.push_back(std::move(u));
  }
  write_manifest(out, "ingest",
                 json{{"archive", archive}, {"before", before}, {"after", after}}, 0,
                 {archive}, {out});
  atomic_write_file(out, bags_to_jsonl(schema, users));
  for (const auto& issue : parsed.issues) {
    std::cerr << "warning: line " << issue.line_no << ": " << issue.message << "\n";
  }
  std::cerr << "ingested " << users.size() << " users";
  if (!parsed.issues.empty()) std::cerr << ", " << parsed.issues.size() << " malformed";
  std::cerr << "\n";
  return 0;
}

int cmd_vocab(const std::string& bags_path, int min_count, const std::string& out) {
  const ChannelSchema schema = schema_default();
  const auto users = bags_from_jsonl(schema, read_file(bags_path));
  std::vector<TokenBags> token_bags;
  token_bags.reserve(users.size());
  for (const auto& u : users) token_bags.push_back(u.bags);
  const Vocabulary vocab = Vocabulary::build(schema, token_bags, min_count);
  write_manifest(out, "vocab", json{{"bags", bags_path}, {"min_count", min_count}}, 0,
                 {bags_path}, {out});
  atomic_write_file(out, vocab.to_tsv());
  std::size_t total = 0;
  for (std::size_t r = 0; r < schema.size(); ++r) total += vocab.vlen(r);
  std::cerr << "vocabulary: " << total << " tokens across " << schema.size()
            << " channels\n";
  return 0;
}

struct EmbedOpts {
  std::string file;
  std::size_t d_em = 768;
  std::uint64_t seed = 0;

  EmbeddingInfo info() const {
    EmbeddingInfo e;
    if (!file.empty()) {
      e.kind = "file";
      e.d_em = FileEmbedder::load(file).dim();
    } else {
      e.kind = "hashing";
      e.d_em = d_em;
      e.seed = seed;
    }
    return e;
  }
};

DatasetBundle vectorize_bags(const ChannelSchema& schema, const std::vector<UserBags>& users,
                             const Vocabulary& vocab, const EmbedOpts& eo, int num_classes,
                             Provenance provenance) {
  const EmbeddingInfo info = eo.info();
  const auto provider = info.make(eo.file);

  DatasetBundle b;
  b.vocab = vocab;
  b.embedding = info;
  b.data.schema = schema;
  b.data.vlens = vocab.vlens();
  b.data.d_em = info.d_em;
  b.data.provenance = provenance;

  int max_label = -1;
  b.data.users.reserve(users.size());
  for (const auto& u : users) {
    std::vector<Vec> dense(schema.size());
    for (std::size_t r = 0; r < schema.size(); ++r) {
      if (schema.is_dense(r) && !u.docs[r].empty()) dense[r] = provider->embed(u.docs[r]);
    }
    ChannelizedUser cu = vectorize(schema, u.bags, vocab, dense, info.d_em, u.user_id);
    cu.label = u.label;
    cu.attrs = u.attrs;
    if (cu.label) max_label = std::max(max_label, *cu.label);
    b.data.users.push_back(std::move(cu));
  }
  b.data.num_classes = num_classes > 0 ? num_classes : std::max(2, max_label + 1);
  b.data.validate_labels();
  return b;
}

int cmd_vectorize(const std::string& bags_path, const std::string& vocab_path,
                  const EmbedOpts& eo, int num_classes, const std::string& provenance,
                  const std::string& out) {
  const ChannelSchema schema = schema_default();
  const auto users = bags_from_jsonl(schema, read_file(bags_path));
  const Vocabulary vocab = Vocabulary::from_tsv(read_file(vocab_path), schema.size());
  DatasetBundle b = vectorize_bags(schema, users, vocab, eo, num_classes,
                                   provenance_from_string(provenance));
  std::vector<std::string> inputs{bags_path, vocab_path};
  if (!eo.file.empty()) inputs.push_back(eo.file);
  write_manifest(out, "vectorize",
                 json{{"bags", bags_path},
                      {"vocab", vocab_path},
                      {"embedding", embedding_info_to_json(b.embedding)}},
                 0, inputs, {out});
  save_dataset(out, b);
  std::cerr << "dataset: " << b.data.users.size() << " users, k=" << b.data.num_classes
            << "\n";
  return 0;
}

int cmd_silver(const std::string& anchors_path, const std::string& data_path,
               const std::string& archive_path, const std::string& vocab_path,
               int min_count, const EmbedOpts& eo, std::size_t pool, std::size_t sample,
               std::uint64_t seed, const std::string& export_archive,
               const std::string& out) {
  const auto anchors = parse_anchors(read_file(anchors_path));
  if (data_path.empty() == archive_path.empty()) {
    throw ValidationError("pass exactly one of --data or --archive");
  }
  if (!export_archive.empty() && archive_path.empty()) {
    throw ValidationError("--export-archive needs --archive input");
  }

  Rng rng(seed);
  DatasetBundle source;
  std::vector<RawUserRecord> records;
  std::vector<std::string> inputs{anchors_path};

  if (!data_path.empty()) {
    source = load_dataset(data_path);
    inputs.push_back(data_path);
  } else {
    const ChannelSchema schema = schema_default();
    const ArchiveParseResult parsed = parse_archive(archive_path);
    for (const auto& issue : parsed.issues) {
      std::cerr << "warning: line " << issue.line_no << ": " << issue.message << "\n";
    }
    records = parsed.records;
    std::vector<UserBags> users;
    for (const auto& rec : records) {
      ExtractedChannels ex = extract_channels(schema, rec, TimeWindow{});
      UserBags u;
      u.user_id = rec.user_id;
      u.attrs = rec.attrs;
      u.bags = std::move(ex.bags);
      u.docs = std::move(ex.docs);
      users.push_back(std::move(u));
    }
    Vocabulary vocab;
    if (!vocab_path.empty()) {
      vocab = Vocabulary::from_tsv(read_file(vocab_path), schema.size());
      inputs.push_back(vocab_path);
    } else {
      std::vector<TokenBags> token_bags;
      for (const auto& u : users) token_bags.push_back(u.bags);
      vocab = Vocabulary::build(schema, token_bags, min_count);
    }
    source = vectorize_bags(schema, users, vocab, eo, static_cast<int>(anchors.size()),
                            Provenance::silver);
    inputs.push_back(archive_path);
    if (!eo.file.empty()) inputs.push_back(eo.file);
  }

  std::unordered_map<std::string, const ChannelizedUser*> by_id;
  for (const auto& u : source.data.users) by_id.emplace(u.user_id, &u);

  LabeledDataset silver =
      build_silver_labels(anchors, by_id, pool, sample, rng, source.data);

  DatasetBundle out_bundle;
  out_bundle.data = std::move(silver);
  out_bundle.vocab = source.vocab;
  out_bundle.embedding = source.embedding;

  std::vector<std::string> outputs{out};
  if (!export_archive.empty()) outputs.push_back(export_archive);
  write_manifest(out, "silver",
                 json{{"anchors", anchors_path},
                      {"pool", pool},
                      {"sample", sample},
                      {"seed", seed}},
                 seed, inputs, outputs);
  save_dataset(out, out_bundle);

  if (!export_archive.empty()) {
    std::unordered_map<std::string, int> label_of;
    for (const auto& u : out_bundle.data.users) label_of.emplace(u.user_id, *u.label);
    std::string text;
    for (auto& rec : records) {
      auto it = label_of.find(rec.user_id);
      if (it == label_of.end()) continue;
      rec.label = it->second;
      text += record_to_json(rec).dump();
      text += '\n';
    }
    atomic_write_file(export_archive, text);
  }
  std::cerr << "silver dataset: " << out_bundle.data.users.size() << " users across "
            << anchors.size() << " parties\n";
  return 0;
}

int cmd_pretrain(const std::string& data_path, const std::string& config_path,
                 const std::string& init_path, std::optional<std::uint64_t> seed,
                 const std::string& out) {
  const DatasetBundle ds = load_dataset(data_path);
  PretrainConfig cfg = load_pretrain_config(config_path);
  if (seed) cfg.seed = *seed;

  std::optional<Checkpoint> init;
  if (!init_path.empty()) {
    init = load_checkpoint(init_path);
    require_match(*init, ds);
    cfg.variant = init->params.variant;
  }

  const PretrainResult r = pretrain(ds.data, cfg, init ? &init->params : nullptr);

  Checkpoint ck;
  ck.params = r.params;
  ck.schema = ds.data.schema;
  ck.vocab = ds.vocab;
  ck.embedding = ds.embedding;

  std::vector<std::string> inputs{data_path};
  if (!config_path.empty()) inputs.push_back(config_path);
  if (!init_path.empty()) inputs.push_back(init_path);
  write_manifest(out, "pretrain",
                 json{{"data", data_path},
                      {"config", config_path},
                      {"seed", cfg.seed},
                      {"epochs", cfg.epochs},
                      {"learning_rate", cfg.learning_rate}},
                 cfg.seed, inputs, {out});
  save_checkpoint(out, ck);
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) {
    std::cerr << "epoch " << e << " loss " << fmt(r.epoch_loss[e]) << "\n";
  }
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& config_path,
              const std::string& init_path, const std::string& variant,
              std::optional<std::uint64_t> seed, const std::string& out,
              const std::string& log_path) {
  const DatasetBundle ds = load_dataset(data_path);
  TrainConfig cfg = load_train_config(config_path);
  if (!variant.empty()) cfg.variant = variant_from_string(variant);
  if (seed) cfg.seed = *seed;

  std::optional<Checkpoint> init;
  if (!init_path.empty()) {
    init = load_checkpoint(init_path);
    require_match(*init, ds);
  }

  const TrainResult r = train(ds.data, cfg, init ? &init->params : nullptr);

  Checkpoint ck;
  ck.params = r.params;
  ck.schema = ds.data.schema;
  ck.vocab = ds.vocab;
  ck.embedding = ds.embedding;

  std::vector<std::string> inputs{data_path};
  if (!config_path.empty()) inputs.push_back(config_path);
  if (!init_path.empty()) inputs.push_back(init_path);
  std::vector<std::string> outputs{out};
  if (!log_path.empty()) outputs.push_back(log_path);
  write_manifest(out, "train",
                 json{{"data", data_path},
                      {"config_text", train_config_to_text(cfg)},
                      {"variant", to_string(cfg.variant)}},
                 cfg.seed, inputs, outputs);
  save_checkpoint(out, ck);
  if (!log_path.empty()) atomic_write_file(log_path, r.log.to_csv());
  std::cerr << "trained " << r.log.epochs.size() << " epochs, best val acc "
            << fmt(r.best_val_acc) << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& report, const std::string& csv_path,
             const std::string& confusion_path) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const DatasetBundle ds = load_dataset(data_path);
  require_match(ck, ds);
  const Metrics m = evaluate(ck.params, ds.data, ck.params.variant);

  std::vector<std::string> outputs{report};
  if (!csv_path.empty()) outputs.push_back(csv_path);
  if (!confusion_path.empty()) outputs.push_back(confusion_path);
  write_manifest(report, "eval", json{{"ckpt", ckpt_path}, {"data", data_path}}, 0,
                 {ckpt_path, data_path}, outputs);
  atomic_write_file(report, metrics_to_json(m, ck.params.variant).dump(1));
  if (!csv_path.empty()) atomic_write_file(csv_path, metrics_to_csv(m));
  if (!confusion_path.empty()) atomic_write_file(confusion_path, confusion_to_csv(m));
  std::cout << "accuracy " << fmt(m.accuracy) << " f1 " << fmt(m.f1_headline) << " n "
            << m.n << "\n";
  return 0;
}

int cmd_fewshot(const std::string& data_path, const std::string& shots_csv,
                std::size_t runs, const std::string& config_path,
                std::optional<std::uint64_t> seed, const std::string& report) {
  const DatasetBundle ds = load_dataset(data_path);
  TrainConfig cfg = load_train_config(config_path);
  if (seed) cfg.seed = *seed;

  std::vector<std::size_t> shot_list;
  std::size_t pos = 0;
  while (pos <= shots_csv.size()) {
    std::size_t c = shots_csv.find(',', pos);
    if (c == std::string::npos) c = shots_csv.size();
    if (c > pos) shot_list.push_back(std::stoul(shots_csv.substr(pos, c - pos)));
    pos = c + 1;
  }
  if (shot_list.empty()) throw ValidationError("--shots needs at least one value");

  std::string csv = "shots,run,accuracy,f1\n";
  for (std::size_t shots : shot_list) {
    const RunSummary s = few_shot_protocol(ds.data, shots, runs, cfg);
    for (std::size_t run = 0; run < s.runs.size(); ++run) {
      csv += std::to_string(shots) + "," + std::to_string(run) + "," +
             format_double(s.runs[run].accuracy) + "," +
             format_double(s.runs[run].f1_headline) + "\n";
    }
    csv += std::to_string(shots) + ",mean," + format_double(s.mean_accuracy) + "," +
           format_double(s.mean_f1) + "\n";
    csv += std::to_string(shots) + ",std," + format_double(s.std_accuracy) + "," +
           format_double(s.std_f1) + "\n";
    std::cout << "shots " << shots << ": acc " << fmt(s.mean_accuracy) << " +- "
              << fmt(s.std_accuracy) << "\n";
  }
  std::vector<std::string> inputs{data_path};
  if (!config_path.empty()) inputs.push_back(config_path);
  write_manifest(report, "fewshot",
                 json{{"data", data_path},
                      {"shots", shots_csv},
                      {"runs", runs},
                      {"seed", cfg.seed}},
                 cfg.seed, inputs, {report});
  atomic_write_file(report, csv);
  return 0;
}

int cmd_importance(const std::string& data_path, const std::string& config_path,
                   std::optional<std::uint64_t> seed, const std::string& report) {
  const DatasetBundle ds = load_dataset(data_path);
  TrainConfig cfg = load_train_config(config_path);
  if (seed) cfg.seed = *seed;
  const ChannelImportance imp = channel_importance(ds.data, cfg);

  std::string csv = "channel_id,channel_name,baseline_accuracy,accuracy_drop_pp\n";
  for (std::size_t r = 0; r < imp.drop.size(); ++r) {
    csv += std::to_string(r) + "," + ds.data.schema[r].name + "," +
           format_double(imp.baseline_accuracy) + "," + format_double(imp.drop[r]) + "\n";
  }
  std::vector<std::string> inputs{data_path};
  if (!config_path.empty()) inputs.push_back(config_path);
  write_manifest(report, "importance", json{{"data", data_path}, {"seed", cfg.seed}},
                 cfg.seed, inputs, {report});
  atomic_write_file(report, csv);
  std::cout << "baseline accuracy " << fmt(imp.baseline_accuracy) << "\n";
  return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& archive_path,
                const std::string& embeddings, const std::string& out) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const auto provider = ck.embedding.make(embeddings);

  const ArchiveParseResult parsed = parse_archive(archive_path);
  for (const auto& issue : parsed.issues) {
    std::cerr << "warning: line " << issue.line_no << ": " << issue.message << "\n";
  }

  const std::size_t K = static_cast<std::size_t>(ck.params.dims.num_classes);
  std::string csv = "user_id,prediction";
  for (std::size_t c = 0; c < K; ++c) csv += ",p_" + std::to_string(c);
  csv += "\n";

  std::vector<std::string> inputs{ckpt_path, archive_path};
  if (!embeddings.empty()) inputs.push_back(embeddings);
  write_manifest(out, "predict", json{{"ckpt", ckpt_path}, {"archive", archive_path}}, 0,
                 inputs, {out});

  for (const auto& rec : parsed.records) {
    ExtractedChannels ex = extract_channels(ck.schema, rec, TimeWindow{});
    std::vector<Vec> dense(ck.schema.size());
    for (std::size_t r = 0; r < ck.schema.size(); ++r) {
      if (ck.schema.is_dense(r) && !ex.docs[r].empty()) {
        dense[r] = provider->embed(ex.docs[r]);
      }
    }
    const ChannelizedUser u =
        vectorize(ck.schema, ex.bags, ck.vocab, dense, ck.params.dims.d_em, rec.user_id);
    const Vec probs = predict_proba(u, ck.params, ck.params.variant);
    std::size_t best = 0;
    for (std::size_t c = 1; c < K; ++c) {
      if (probs[c] > probs[best]) best = c;
    }
    csv += rec.user_id + "," + std::to_string(best);
    for (std::size_t c = 0; c < K; ++c) csv += "," + format_double(probs[c]);
    csv += "\n";
  }
  atomic_write_file(out, csv);
  std::cerr << "predicted " << parsed.records.size() << " users\n";
  return 0;
}

int cmd_simulate(const std::string& spec_path, std::size_t n, std::uint64_t seed,
                 const std::string& out, const std::string& anchors_out) {
  const GenerativeSpec spec = GenerativeSpec::from_json(json::parse(read_file(spec_path)));
  Population pop = sample_population(spec, n, seed);

  DatasetBundle b;
  b.data = std::move(pop.data);
  b.vocab = std::move(pop.vocab);
  b.embedding.kind = "hashing";
  b.embedding.d_em = spec.d_em;
  b.embedding.seed = seed;

  std::vector<std::string> outputs{out};
  if (!anchors_out.empty()) outputs.push_back(anchors_out);
  write_manifest(out, "simulate", json{{"spec", spec_path}, {"n", n}, {"seed", seed}},
                 seed, {spec_path}, outputs);
  save_dataset(out, b);
  if (!anchors_out.empty()) atomic_write_file(anchors_out, anchors_to_jsonl(pop.anchors));
  std::cerr << "sampled " << b.data.users.size() << " users\n";
  return 0;
}

int cmd_oracle(const std::string& spec_path, const std::string& data_path,
               const std::string& report) {
  const GenerativeSpec spec = GenerativeSpec::from_json(json::parse(read_file(spec_path)));
  const DatasetBundle ds = load_dataset(data_path);
  if (ds.data.schema.hash() != spec.schema().hash()) {
    throw ValidationError("dataset schema does not match the generative spec");
  }
  const double acc = bayes_oracle_accuracy(spec, ds.data);
  const json j{{"oracle_accuracy", acc}, {"n", ds.data.users.size()}};
  if (!report.empty()) {
    write_manifest(report, "oracle", json{{"spec", spec_path}, {"data", data_path}}, 0,
                   {spec_path, data_path}, {report});
    atomic_write_file(report, j.dump(1));
  }
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_groups(const std::string& ckpt_path, const std::string& data_path,
               const std::string& field, int class_index, const std::string& report) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const DatasetBundle ds = load_dataset(data_path);
  require_match(ck, ds);

  std::map<std::string, std::vector<const ChannelizedUser*>> groups;
  std::size_t missing = 0;
  for (const auto& u : ds.data.users) {
    if (field == "label") {
      if (u.label) {
        groups[std::to_string(*u.label)].push_back(&u);
      } else {
        ++missing;
      }
      continue;
    }
    auto it = u.attrs.find(field);
    if (it == u.attrs.end()) {
      ++missing;
      continue;
    }
    groups[it->second].push_back(&u);
  }
  if (groups.empty()) {
    throw ValidationError("no user carries the group-by field '" + field + "'");
  }
  if (missing > 0) {
    std::cerr << "warning: " << missing << " users lack field '" << field << "'\n";
  }

  const GroupLeaning g =
      group_leaning(ck.params, ck.params.variant, groups, class_index);
  for (const auto& name : g.skipped_empty) {
    std::cerr << "warning: group '" << name << "' is empty, excluded\n";
  }
  std::string csv = "group,mean_leaning,n\n";
  for (const auto& [name, mean] : g.mean_leaning) {
    csv += name + "," + format_double(mean) + "," + std::to_string(g.group_size.at(name)) +
           "\n";
  }
  write_manifest(report, "groups",
                 json{{"ckpt", ckpt_path},
                      {"data", data_path},
                      {"group_by", field},
                      {"class_index", class_index}},
                 0, {ckpt_path, data_path}, {report});
  atomic_write_file(report, csv);
  return 0;
}

int cmd_ttest(const std::string& a_path, const std::string& b_path,
              const std::string& metric, std::optional<long> shots) {
  const auto a = load_runs(a_path, metric, shots);
  const auto b = load_runs(b_path, metric, shots);
  const TTestResult r = two_sample_t_test(a, b);
  json j{{"t", r.t},
         {"p", r.p},
         {"df", r.df},
         {"degenerate", r.degenerate},
         {"significant_at_0.05", r.p < 0.05}};
  std::cout << j.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fsspip: few-shot self-attentive political inclination prediction"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "archive -> channel bags");
  std::string in_archive, in_before, in_after, in_out;
  bool in_window = false;
  ingest->add_option("--archive", in_archive)->required();
  ingest->add_flag("--window", in_window, "window bounds follow");
  ingest->add_option("--before", in_before, "keep tweets strictly before (ISO-8601)");
  ingest->add_option("--after", in_after, "keep tweets at or after (ISO-8601)");
  ingest->add_option("--out", in_out)->required();

  // vocab
  auto* vocab = app.add_subcommand("vocab", "channel bags -> vocabulary TSV");
  std::string vo_bags, vo_out;
  int vo_min_count = 5;
  vocab->add_option("--bags", vo_bags)->required();
  vocab->add_option("--min-count", vo_min_count);
  vocab->add_option("--out", vo_out)->required();

  // vectorize
  auto* vect = app.add_subcommand("vectorize", "bags + vocabulary -> dataset");
  std::string ve_bags, ve_vocab, ve_out, ve_prov = "gold";
  EmbedOpts ve_embed;
  int ve_k = 0;
  vect->add_option("--bags", ve_bags)->required();
  vect->add_option("--vocab", ve_vocab)->required();
  vect->add_option("--embeddings", ve_embed.file, "precomputed embedding file");
  vect->add_option("--d-em", ve_embed.d_em, "hashing fallback dimension");
  vect->add_option("--embed-seed", ve_embed.seed);
  vect->add_option("--k", ve_k, "class count (default: inferred)");
  vect->add_option("--provenance", ve_prov)->check(CLI::IsMember({"gold", "silver"}));
  vect->add_option("--out", ve_out)->required();

  // silver
  auto* silver = app.add_subcommand("silver", "party anchors -> silver-labeled dataset");
  std::string si_anchors, si_data, si_archive, si_vocab, si_export, si_out;
  EmbedOpts si_embed;
  int si_min_count = 5;
  std::size_t si_pool = 75000, si_sample = 2500;
  std::uint64_t si_seed = 0;
  silver->add_option("--anchors", si_anchors)->required();
  silver->add_option("--data", si_data, "channelized dataset with features");
  silver->add_option("--archive", si_archive, "raw archive with features");
  silver->add_option("--vocab", si_vocab, "vocabulary TSV (archive mode)");
  silver->add_option("--min-count", si_min_count);
  silver->add_option("--embeddings", si_embed.file);
  silver->add_option("--d-em", si_embed.d_em);
  silver->add_option("--embed-seed", si_embed.seed);
  silver->add_option("--pool", si_pool);
  silver->add_option("--sample", si_sample);
  silver->add_option("--seed", si_seed);
  silver->add_option("--export-archive", si_export, "also write archive + label records");
  silver->add_option("--out", si_out)->required();

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "masked-feature + mixup pretraining");
  std::string pr_data, pr_config, pr_init, pr_out;
  std::optional<std::uint64_t> pr_seed;
  pre->add_option("--data", pr_data)->required();
  pre->add_option("--config", pr_config);
  pre->add_option("--init", pr_init);
  pre->add_option("--seed", pr_seed);
  pre->add_option("--out", pr_out)->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "supervised training -> checkpoint");
  std::string tr_data, tr_config, tr_init, tr_variant, tr_out, tr_log;
  std::optional<std::uint64_t> tr_seed;
  train_cmd->add_option("--data", tr_data)->required();
  train_cmd->add_option("--config", tr_config);
  train_cmd->add_option("--init", tr_init);
  train_cmd->add_option("--variant", tr_variant)
      ->check(CLI::IsMember({"dyattn", "fixedattn", "auto"}));
  train_cmd->add_option("--seed", tr_seed);
  train_cmd->add_option("--out", tr_out)->required();
  train_cmd->add_option("--log", tr_log, "training log CSV");

  // eval
  auto* ev = app.add_subcommand("eval", "checkpoint + dataset -> metrics report");
  std::string ev_ckpt, ev_data, ev_report, ev_csv, ev_confusion;
  ev->add_option("--ckpt", ev_ckpt)->required();
  ev->add_option("--data", ev_data)->required();
  ev->add_option("--report", ev_report)->required();
  ev->add_option("--csv", ev_csv);
  ev->add_option("--confusion", ev_confusion);

  // fewshot
  auto* fs_cmd = app.add_subcommand("fewshot", "few-shot protocol over shot counts");
  std::string fw_data, fw_shots, fw_config, fw_report;
  std::size_t fw_runs = 5;
  std::optional<std::uint64_t> fw_seed;
  fs_cmd->add_option("--data", fw_data)->required();
  fs_cmd->add_option("--shots", fw_shots)->required();
  fs_cmd->add_option("--runs", fw_runs);
  fs_cmd->add_option("--config", fw_config);
  fs_cmd->add_option("--seed", fw_seed);
  fs_cmd->add_option("--report", fw_report)->required();

  // importance
  auto* imp = app.add_subcommand("importance", "leave-one-channel-out importance");
  std::string im_data, im_config, im_report;
  std::optional<std::uint64_t> im_seed;
  imp->add_option("--data", im_data)->required();
  imp->add_option("--config", im_config);
  imp->add_option("--seed", im_seed);
  imp->add_option("--report", im_report)->required();

  // predict
  auto* pd = app.add_subcommand("predict", "checkpoint + raw archive -> predictions CSV");
  std::string pd_ckpt, pd_archive, pd_embeddings, pd_out;
  pd->add_option("--ckpt", pd_ckpt)->required();
  pd->add_option("--archive", pd_archive)->required();
  pd->add_option("--embeddings", pd_embeddings);
  pd->add_option("--out", pd_out)->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "generative spec -> synthetic dataset");
  std::string sm_spec, sm_out, sm_anchors;
  std::size_t sm_n = 0;
  std::uint64_t sm_seed = 0;
  sim->add_option("--spec", sm_spec)->required();
  sim->add_option("--n", sm_n)->required();
  sim->add_option("--seed", sm_seed);
  sim->add_option("--out", sm_out)->required();
  sim->add_option("--anchors-out", sm_anchors);

  // oracle
  auto* orc = app.add_subcommand("oracle", "Bayes-oracle accuracy on a dataset");
  std::string or_spec, or_data, or_report;
  orc->add_option("--spec", or_spec)->required();
  orc->add_option("--data", or_data)->required();
  orc->add_option("--report", or_report);

  // groups
  auto* gr = app.add_subcommand("groups", "mean predicted leaning per group");
  std::string gr_ckpt, gr_data, gr_field, gr_report;
  int gr_class = 1;
  gr->add_option("--ckpt", gr_ckpt)->required();
  gr->add_option("--data", gr_data)->required();
  gr->add_option("--group-by", gr_field)->required();
  gr->add_option("--class-index", gr_class);
  gr->add_option("--report", gr_report)->required();

  // ttest
  auto* tt = app.add_subcommand("ttest", "two-sample Student's t-test on run files");
  std::string tt_a, tt_b, tt_metric = "accuracy";
  std::optional<long> tt_shots;
  tt->add_option("--a", tt_a)->required();
  tt->add_option("--b", tt_b)->required();
  tt->add_option("--metric", tt_metric)->check(CLI::IsMember({"accuracy", "f1"}));
  tt->add_option("--shots", tt_shots, "filter fewshot reports to one shot count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: validation: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (*ingest) return cmd_ingest(in_archive, in_before, in_after, in_out);
    if (*vocab) return cmd_vocab(vo_bags, vo_min_count, vo_out);
    if (*vect) return cmd_vectorize(ve_bags, ve_vocab, ve_embed, ve_k, ve_prov, ve_out);
    if (*silver) {
      return cmd_silver(si_anchors, si_data, si_archive, si_vocab, si_min_count, si_embed,
                        si_pool, si_sample, si_seed, si_export, si_out);
    }
    if (*pre) return cmd_pretrain(pr_data, pr_config, pr_init, pr_seed, pr_out);
    if (*train_cmd) {
      return cmd_train(tr_data, tr_config, tr_init, tr_variant, tr_seed, tr_out, tr_log);
    }
    if (*ev) return cmd_eval(ev_ckpt, ev_data, ev_report, ev_csv, ev_confusion);
    if (*fs_cmd) return cmd_fewshot(fw_data, fw_shots, fw_runs, fw_config, fw_seed, fw_report);
    if (*imp) return cmd_importance(im_data, im_config, im_seed, im_report);
    if (*pd) return cmd_predict(pd_ckpt, pd_archive, pd_embeddings, pd_out);
    if (*sim) return cmd_simulate(sm_spec, sm_n, sm_seed, sm_out, sm_anchors);
    if (*orc) return cmd_oracle(or_spec, or_data, or_report);
    if (*gr) return cmd_groups(gr_ckpt, gr_data, gr_field, gr_class, gr_report);
    if (*tt) return cmd_ttest(tt_a, tt_b, tt_metric, tt_shots);
  } catch (const ValidationError& e) {
    std::cerr << "error: validation: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return kExitIo;
  } catch (const json::exception& e) {
    std::cerr << "error: validation: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: validation: malformed number: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: validation: value out of range: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
