#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "fsspip/schema.hpp"
#include "fsspip/user.hpp"
#include "fsspip/vocab.hpp"

using namespace fsspip;

namespace {

ChannelSchema tiny_schema() { return schema_synthetic(2, 0); }

TokenBags bags_for(std::vector<std::string> ch0, std::vector<std::string> ch1 = {}) {
  TokenBags b(2);
  b[0] = std::move(ch0);
  b[1] = std::move(ch1);
  return b;
}

}  // namespace

TEST_CASE("min_count keeps tokens at the boundary and drops below it", "[vocab]") {
  const ChannelSchema s = tiny_schema();
  std::vector<TokenBags> users;
  for (int i = 0; i < 7; ++i) users.push_back(bags_for({"maga"}));
  for (int i = 0; i < 4; ++i) users.push_back(bags_for({"rare"}));
  const Vocabulary v = Vocabulary::build(s, users, 5);
  CHECK(v.lookup(0, "maga") >= 0);
  CHECK(v.lookup(0, "rare") == -1);
  CHECK(v.vlen(0) == 1);
}

TEST_CASE("frequency counts are per-user, duplicates collapse", "[vocab]") {
  const ChannelSchema s = tiny_schema();
  // one user repeating a token 10 times still counts once
  std::vector<TokenBags> users{bags_for({"x", "x", "x", "x", "x", "x", "x", "x", "x", "x"})};
  const Vocabulary v = Vocabulary::build(s, users, 2);
  CHECK(v.vlen(0) == 0);
}

TEST_CASE("index assignment: descending frequency then lexicographic", "[vocab]") {
  const ChannelSchema s = tiny_schema();
  std::vector<TokenBags> users;
  // "zeta" and "alpha" both appear in 9 users; "common" in 12
  for (int i = 0; i < 9; ++i) users.push_back(bags_for({"zeta", "alpha", "common"}));
  for (int i = 0; i < 3; ++i) users.push_back(bags_for({"common"}));
  const Vocabulary v = Vocabulary::build(s, users, 1);

  // independent oracle: brute-force sort of (token, freq) pairs
  std::vector<std::pair<std::string, int>> expect{{"common", 12}, {"alpha", 9}, {"zeta", 9}};
  std::sort(expect.begin(), expect.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  REQUIRE(v.vlen(0) == 3);
  for (std::uint32_t i = 0; i < 3; ++i) {
    CHECK(v.token(0, i) == expect[i].first);
    CHECK(v.doc_freq(0, i) == static_cast<std::uint32_t>(expect[i].second));
  }
}

TEST_CASE("empty input yields an empty vocabulary", "[vocab]") {
  const Vocabulary v = Vocabulary::build(tiny_schema(), {}, 5);
  CHECK(v.vlen(0) == 0);
  CHECK(v.vlen(1) == 0);
}

TEST_CASE("raising min_count retains a subset", "[vocab]") {
  const ChannelSchema s = tiny_schema();
  Rng rng(11);
  std::vector<TokenBags> users;
  for (int i = 0; i < 40; ++i) {
    std::vector<std::string> toks;
    for (int t = 0; t < 6; ++t) {
      toks.push_back("tok" + std::to_string(rng.uniform_index(12)));
    }
    users.push_back(bags_for(toks));
  }
  for (int m = 1; m < 8; ++m) {
    const Vocabulary lo = Vocabulary::build(s, users, m);
    const Vocabulary hi = Vocabulary::build(s, users, m + 1);
    for (std::uint32_t i = 0; i < hi.vlen(0); ++i) {
      CHECK(lo.lookup(0, hi.token(0, i)) >= 0);
    }
    CHECK(hi.vlen(0) <= lo.vlen(0));
  }
}

TEST_CASE("round trip: every retained index maps back to exactly one token", "[vocab]") {
  const ChannelSchema s = tiny_schema();
  std::vector<TokenBags> users;
  for (int i = 0; i < 6; ++i) users.push_back(bags_for({"aa", "bb", "cc"}, {"dd"}));
  const Vocabulary v = Vocabulary::build(s, users, 2);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::uint32_t i = 0; i < v.vlen(r); ++i) {
      CHECK(v.lookup(r, v.token(r, i)) == static_cast<long>(i));
    }
  }
}

TEST_CASE("matching is case-insensitive", "[vocab]") {
  const ChannelSchema s = tiny_schema();
  std::vector<TokenBags> users;
  for (int i = 0; i < 3; ++i) users.push_back(bags_for({"JoeBiden"}));
  for (int i = 0; i < 3; ++i) users.push_back(bags_for({"joebiden"}));
  const Vocabulary v = Vocabulary::build(s, users, 6);
  REQUIRE(v.vlen(0) == 1);
  CHECK(v.lookup(0, "JOEBIDEN") == 0);
  CHECK(v.doc_freq(0, 0) == 6);
}

TEST_CASE("vocabulary TSV round-trips", "[vocab]") {
  const ChannelSchema s = tiny_schema();
  std::vector<TokenBags> users;
  for (int i = 0; i < 5; ++i) users.push_back(bags_for({"aa", "bb"}, {"cc"}));
  const Vocabulary v = Vocabulary::build(s, users, 2);
  const std::string tsv = v.to_tsv();
  const Vocabulary w = Vocabulary::from_tsv(tsv, s.size());
  CHECK(w.vlen(0) == v.vlen(0));
  CHECK(w.vlen(1) == v.vlen(1));
  CHECK(w.to_tsv() == tsv);
}

TEST_CASE("vectorize: duplicates collapse, OOV drops, empties stay empty", "[vocab]") {
  const ChannelSchema s = tiny_schema();
  std::vector<TokenBags> users;
  for (int i = 0; i < 5; ++i) users.push_back(bags_for({"maga"}));
  const Vocabulary v = Vocabulary::build(s, users, 5);

  const ChannelizedUser a = vectorize(s, bags_for({"maga", "maga"}), v, {}, 0, "a");
  CHECK(a.sparse[0].size() == 1);

  const ChannelizedUser b = vectorize(s, bags_for({}), v, {}, 0, "b");
  CHECK(b.sparse[0].empty());

  const ChannelizedUser c = vectorize(s, bags_for({"maga", "zzz_unseen"}), v, {}, 0, "c");
  REQUIRE(c.sparse[0].size() == 1);
  CHECK(c.sparse[0][0] == static_cast<std::uint32_t>(v.lookup(0, "maga")));
}

TEST_CASE("vectorize is idempotent under bag duplication", "[vocab]") {
  const ChannelSchema s = tiny_schema();
  std::vector<TokenBags> users;
  for (int i = 0; i < 5; ++i) users.push_back(bags_for({"aa", "bb", "cc"}));
  const Vocabulary v = Vocabulary::build(s, users, 5);

  TokenBags bag = bags_for({"aa", "cc"});
  TokenBags doubled = bags_for({"aa", "cc", "aa", "cc"});
  const auto u1 = vectorize(s, bag, v, {}, 0);
  const auto u2 = vectorize(s, doubled, v, {}, 0);
  CHECK(u1.sparse == u2.sparse);
}

TEST_CASE("vectorize rejects wrong-length dense vectors", "[vocab]") {
  const ChannelSchema s = schema_synthetic(1, 1);
  Vocabulary v(s.size());
  std::vector<Vec> dense(s.size());
  dense[1] = Vec{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(vectorize(s, TokenBags(2), v, dense, 4), ValidationError);
  CHECK_NOTHROW(vectorize(s, TokenBags(2), v, dense, 3));
}
