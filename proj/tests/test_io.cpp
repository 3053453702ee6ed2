#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "fsspip/dataset_io.hpp"
#include "fsspip/simgen.hpp"
#include "helpers.hpp"

using namespace fsspip;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
  const fs::path d = fs::temp_directory_path() / "fsspip_io_test";
  fs::create_directories(d);
  return d;
}

DatasetBundle sample_bundle(std::size_t n = 12) {
  Population pop = sample_population(testutil::easy_spec(0.1), n, 5);
  DatasetBundle b;
  b.data = std::move(pop.data);
  b.vocab = std::move(pop.vocab);
  b.embedding.kind = "hashing";
  b.embedding.d_em = b.data.d_em;
  b.embedding.seed = 3;
  b.data.users[0].attrs["state"] = "KA";
  return b;
}

}  // namespace

TEST_CASE("dataset files round-trip users, vocab, schema and labels", "[io]") {
  const DatasetBundle b = sample_bundle();
  const fs::path p = tmp_dir() / "ds.json";
  save_dataset(p.string(), b);
  const DatasetBundle back = load_dataset(p.string());

  CHECK(back.data.num_classes == b.data.num_classes);
  CHECK(back.data.provenance == b.data.provenance);
  CHECK(back.data.d_em == b.data.d_em);
  CHECK(back.data.schema.hash() == b.data.schema.hash());
  CHECK(back.data.vlens == b.data.vlens);
  CHECK(back.embedding.kind == "hashing");
  CHECK(back.embedding.seed == 3);
  REQUIRE(back.data.users.size() == b.data.users.size());
  for (std::size_t i = 0; i < b.data.users.size(); ++i) {
    CHECK(back.data.users[i].user_id == b.data.users[i].user_id);
    CHECK(back.data.users[i].sparse == b.data.users[i].sparse);
    CHECK(back.data.users[i].dense == b.data.users[i].dense);
    CHECK(back.data.users[i].label == b.data.users[i].label);
  }
  CHECK(back.data.users[0].attrs.at("state") == "KA");
  for (std::uint32_t i = 0; i < back.vocab.vlen(0); ++i) {
    CHECK(back.vocab.token(0, i) == b.vocab.token(0, i));
  }
}

TEST_CASE("dataset loading validates structure", "[io]") {
  const DatasetBundle b = sample_bundle();
  json j = dataset_to_json(b);

  json bad = j;
  bad["format"] = "something-else";
  CHECK_THROWS_AS(dataset_from_json(bad), ValidationError);

  bad = j;
  bad["users"][0]["label"] = 7;
  CHECK_THROWS_AS(dataset_from_json(bad), ValidationError);

  bad = j;
  bad["users"][0]["sparse"]["0"] = {999};
  CHECK_THROWS_AS(dataset_from_json(bad), ValidationError);

  bad = j;
  bad["schema"]["channels"][0]["name"] = "tampered";
  CHECK_THROWS_AS(dataset_from_json(bad), ValidationError);  // hash mismatch

  CHECK_THROWS_AS(load_dataset("/nonexistent/ds.json"), IoError);
}

TEST_CASE("checkpoints round-trip bit-exactly and validate shapes", "[io]") {
  auto t = testutil::tiny_model(2, 1, 6, 4, 3, 2, 77);
  t.params.variant = AttentionVariant::fixedattn;
  t.params.rho_p = 0.37;

  Checkpoint ck;
  ck.params = t.params;
  ck.schema = t.schema;
  ck.vocab = Vocabulary(t.schema.size());
  ck.vocab.set_channel_tokens(0, {"a", "b", "c", "d", "e", "f"});
  ck.vocab.set_channel_tokens(1, {"g", "h", "i", "j", "k", "l"});
  ck.embedding.kind = "hashing";
  ck.embedding.d_em = 3;
  ck.embedding.seed = 9;

  const fs::path p = tmp_dir() / "ck.json";
  save_checkpoint(p.string(), ck);
  Checkpoint back = load_checkpoint(p.string());

  CHECK(back.params.variant == AttentionVariant::fixedattn);
  CHECK(back.params.dims.d == 4);
  CHECK(back.params.dims.num_classes == 2);
  CHECK(back.schema.hash() == t.schema.hash());
  CHECK(back.vocab.token(0, 2) == "c");

  auto sa = t.params.spans();
  auto sb = back.params.spans();
  REQUIRE(sa.size() == sb.size());
  for (std::size_t s = 0; s < sa.size(); ++s) {
    REQUIRE(sa[s].size() == sb[s].size());
    for (std::size_t j = 0; j < sa[s].size(); ++j) CHECK(sa[s][j] == sb[s][j]);
  }

  // identical forward behavior after reload
  Rng rng(4);
  const ChannelizedUser u = testutil::random_user(t, rng, "rt", 0.2);
  CHECK(predict_proba(u, t.params, t.params.variant) ==
        predict_proba(u, back.params, back.params.variant));

  // shape tampering is caught
  json j = checkpoint_to_json(ck);
  j["params"]["head_bias"] = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(checkpoint_from_json(j), ValidationError);
  j = checkpoint_to_json(ck);
  j["vlens"][0] = 17;
  CHECK_THROWS_AS(checkpoint_from_json(j), ValidationError);
}

TEST_CASE("bags jsonl round-trips through the default schema", "[io]") {
  const ChannelSchema s = schema_default();
  UserBags u;
  u.user_id = "b1";
  u.label = 1;
  u.attrs["state"] = "WB";
  u.bags.resize(s.size());
  u.docs.resize(s.size());
  u.bags[static_cast<std::size_t>(s.find("tweet_hashtags"))] = {"maga", "vote"};
  u.bags[static_cast<std::size_t>(s.find("follower_ids"))] = {"123"};
  u.docs[static_cast<std::size_t>(s.find("tweet_text"))] = "some text\nwith lines";

  const std::string text = bags_to_jsonl(s, {u});
  const auto back = bags_from_jsonl(s, text);
  REQUIRE(back.size() == 1);
  CHECK(back[0].user_id == "b1");
  CHECK(back[0].label == 1);
  CHECK(back[0].attrs.at("state") == "WB");
  CHECK(back[0].bags[static_cast<std::size_t>(s.find("tweet_hashtags"))] ==
        std::vector<std::string>{"maga", "vote"});
  CHECK(back[0].docs[static_cast<std::size_t>(s.find("tweet_text"))] ==
        "some text\nwith lines");

  CHECK_THROWS_AS(bags_from_jsonl(s, "{\"user_id\":\"x\",\"bags\":{\"nope\":[]}}\n"),
                  ValidationError);
}

TEST_CASE("manifests carry input digests and land atomically", "[io]") {
  const fs::path dir = tmp_dir();
  const fs::path input = dir / "in.txt";
  atomic_write_file(input, "source data");
  const fs::path out = dir / "result.csv";

  write_manifest(out.string(), "test-command", json{{"alpha", 1}}, 42,
                 {input.string()}, {out.string()});
  const fs::path mp = out.string() + ".manifest.json";
  REQUIRE(fs::exists(mp));
  const json m = json::parse(read_file(mp));
  CHECK(m.at("command") == "test-command");
  CHECK(m.at("seed") == 42);
  CHECK(m.at("inputs").at(0).at("digest") == file_digest(input));
  CHECK(m.at("outputs").at(0) == out.string());
  CHECK(m.contains("created_at"));
}
