#include <catch2/catch_amalgamated.hpp>

#include "fsspip/model.hpp"
#include "helpers.hpp"

using namespace fsspip;
using testutil::TinyModel;
using testutil::random_user;
using testutil::tiny_model;

namespace {

ChannelizedUser blank_user(const TinyModel& t, const std::string& id = "u") {
  ChannelizedUser u;
  u.user_id = id;
  u.sparse.resize(t.schema.size());
  u.dense.resize(t.schema.size());
  return u;
}

}  // namespace

TEST_CASE("init is deterministic per seed and shapes follow the schema", "[model]") {
  const TinyModel a = tiny_model(1, 0, 10, 8, 4, 2, 33);
  const TinyModel b = tiny_model(1, 0, 10, 8, 4, 2, 33);
  const TinyModel c = tiny_model(1, 0, 10, 8, 4, 2, 34);

  CHECK(a.params.channel_weight[0].rows == 10);
  CHECK(a.params.channel_weight[0].cols == 8);
  CHECK(a.params.channel_weight[0].data == b.params.channel_weight[0].data);
  CHECK(a.params.channel_weight[0].data != c.params.channel_weight[0].data);
  CHECK(a.params.p() == Catch::Approx(0.5));
  CHECK(a.params.q() == Catch::Approx(0.5));
  CHECK(a.params.k() == Catch::Approx(0.5));

  const double bound = 1.0 / std::sqrt(8.0);
  for (double x : a.params.channel_weight[0].data) {
    CHECK(std::fabs(x) <= bound);
  }
}

TEST_CASE("init validates dimensions", "[model]") {
  const ChannelSchema s = schema_synthetic(1, 0);
  CHECK_THROWS_AS(init_params(s, {10}, ModelDims{0, 4, 2}, 1), ValidationError);
  CHECK_THROWS_AS(init_params(s, {10}, ModelDims{4, 4, 1}, 1), ValidationError);
  CHECK_THROWS_AS(init_params(s, {10, 10}, ModelDims{4, 4, 2}, 1), ValidationError);
}

TEST_CASE("channel embedding sums active rows; empty channel is zero", "[model]") {
  TinyModel t = tiny_model(1, 1, 10, 4, 3, 2, 1);
  Mat& h = t.params.channel_weight[0];
  h.fill(0.0);
  h[0][0] = 1.0;
  h[1][1] = 1.0;
  h[2][0] = 0.5;
  h[2][3] = -2.0;

  ChannelizedUser u = blank_user(t);
  u.sparse[0] = {2};
  CHECK(channel_embedding(u, t.params, 0) == Vec{0.5, 0.0, 0.0, -2.0});

  u.sparse[0] = {0, 1};
  // independent oracle: dense A x H multiply
  Vec expect(4, 0.0);
  Vec a(10, 0.0);
  a[0] = a[1] = 1.0;
  for (std::size_t j = 0; j < 10; ++j) {
    for (std::size_t i = 0; i < 4; ++i) expect[i] += a[j] * h[j][i];
  }
  CHECK(channel_embedding(u, t.params, 0) == expect);

  u.sparse[0] = {};
  CHECK(channel_embedding(u, t.params, 0) == Vec(4, 0.0));
  CHECK(channel_embedding(u, t.params, 1) == Vec(4, 0.0));  // empty dense
}

TEST_CASE("dense channel embedding is the projection of the input", "[model]") {
  TinyModel t = tiny_model(0, 1, 0, 2, 3, 2, 5);
  Mat& w = t.params.channel_weight[0];
  w[0][0] = 1.0; w[0][1] = 0.0; w[0][2] = 2.0;
  w[1][0] = -1.0; w[1][1] = 3.0; w[1][2] = 0.0;
  ChannelizedUser u = blank_user(t);
  u.dense[0] = {1.0, 2.0, 0.5};
  const Vec e = channel_embedding(u, t.params, 0);
  CHECK(e[0] == Catch::Approx(1.0 + 0.0 + 1.0));
  CHECK(e[1] == Catch::Approx(-1.0 + 6.0 + 0.0));
}

TEST_CASE("out-of-range sparse index raises a corruption error", "[model]") {
  TinyModel t = tiny_model(1, 0, 4, 2, 2, 2, 1);
  ChannelizedUser u = blank_user(t);
  u.sparse[0] = {9};
  CHECK_THROWS_AS(channel_embedding(u, t.params, 0), NumericalError);
}

TEST_CASE("dyattn with p -> 0: attention weight equals the channel norm", "[model]") {
  TinyModel t = tiny_model(3, 0, 6, 4, 2, 2, 7);
  t.params.rho_p = -45.0;
  Rng rng(2);
  const ChannelizedUser u = random_user(t, rng, "u", 0.2);
  const Vec alpha = attention_weights(u, t.params, AttentionVariant::dyattn);
  for (std::size_t r = 0; r < 3; ++r) {
    const double n = norm2(channel_embedding(u, t.params, r));
    CHECK(alpha[r] == Catch::Approx(n).margin(1e-9));
  }
}

TEST_CASE("dyattn single channel with p -> 1 gives weight 1", "[model]") {
  TinyModel t = tiny_model(1, 0, 6, 4, 2, 2, 7);
  t.params.rho_p = 45.0;
  ChannelizedUser u = blank_user(t);
  u.sparse[0] = {1, 3};
  const Vec alpha = attention_weights(u, t.params, AttentionVariant::dyattn);
  CHECK(alpha[0] == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("dyattn softmax matches an independent evaluation", "[model]") {
  // q = k = 1 (up to 4e-18), static queries/keys zeroed, so scores are the
  // squared channel norms: softmax(1, 4, 0).
  TinyModel t = tiny_model(3, 0, 4, 4, 2, 2, 7);
  t.params.rho_p = 45.0;  // alpha = softmax component
  t.params.rho_q = 45.0;
  t.params.rho_k = 45.0;
  for (std::size_t r = 0; r < 3; ++r) {
    t.params.query[r].assign(4, 0.0);
    t.params.key[r].assign(4, 0.0);
    t.params.channel_weight[r].fill(0.0);
  }
  t.params.channel_weight[0][0][0] = 1.0;  // ||e1||^2 = 1
  t.params.channel_weight[1][0][1] = 2.0;  // ||e2||^2 = 4
  ChannelizedUser u = blank_user(t);
  u.sparse[0] = {0};
  u.sparse[1] = {0};
  // channel 2 left empty: ||e3||^2 = 0

  const Vec alpha = attention_weights(u, t.params, AttentionVariant::dyattn);
  // direct-summation oracle, frozen: softmax(1,4,0)
  CHECK(alpha[0] == Catch::Approx(0.04661262257797389).margin(1e-9));
  CHECK(alpha[1] == Catch::Approx(0.93623955187650565).margin(1e-9));
  CHECK(alpha[2] == Catch::Approx(0.017147825545520391).margin(1e-9));
}

TEST_CASE("dyattn softmax component always sums to 1", "[model]") {
  TinyModel t = tiny_model(4, 1, 8, 6, 5, 2, 11);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const ChannelizedUser u = random_user(t, rng, "u" + std::to_string(i), 0.3);
    const ForwardCache c = forward(u, t.params, AttentionVariant::dyattn);
    double sum = 0.0;
    for (double w : c.softmax_w) sum += w;
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("q = k = 0 makes the softmax component user-independent", "[model]") {
  TinyModel t = tiny_model(3, 1, 8, 4, 3, 2, 13);
  t.params.rho_q = -45.0;
  t.params.rho_k = -45.0;
  Rng rng(4);
  const ForwardCache base =
      forward(random_user(t, rng, "a", 0.2), t.params, AttentionVariant::dyattn);
  for (int i = 0; i < 20; ++i) {
    const ForwardCache c =
        forward(random_user(t, rng, "u" + std::to_string(i), 0.2), t.params,
                AttentionVariant::dyattn);
    for (std::size_t r = 0; r < c.softmax_w.size(); ++r) {
      CHECK(c.softmax_w[r] == Catch::Approx(base.softmax_w[r]).margin(1e-9));
    }
  }
}

TEST_CASE("p -> 0 user embedding reduces to the plain channel sum", "[model]") {
  TinyModel t = tiny_model(3, 1, 8, 5, 4, 2, 17);
  t.params.rho_p = -45.0;
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    const ChannelizedUser u = random_user(t, rng, "u" + std::to_string(i), 0.25);
    const Vec h = user_embedding(u, t.params, AttentionVariant::dyattn);
    Vec expect(5, 0.0);
    for (std::size_t r = 0; r < t.schema.size(); ++r) {
      axpy(1.0, channel_embedding(u, t.params, r), expect);
    }
    for (std::size_t i2 = 0; i2 < 5; ++i2) {
      CHECK(std::fabs(h[i2] - expect[i2]) < 1e-9);
    }
  }
}

TEST_CASE("all channels empty embeds to zero", "[model]") {
  TinyModel t = tiny_model(2, 1, 4, 4, 3, 2, 19);
  const ChannelizedUser u = blank_user(t);
  for (auto variant : {AttentionVariant::dyattn, AttentionVariant::fixedattn,
                       AttentionVariant::autoattn}) {
    const Vec h = user_embedding(u, t.params, variant);
    for (double x : h) CHECK(x == 0.0);
  }
}

TEST_CASE("auto variant is normalize-and-sum", "[model]") {
  TinyModel t = tiny_model(2, 0, 4, 4, 2, 2, 23);
  t.params.channel_weight[0].fill(0.0);
  t.params.channel_weight[1].fill(0.0);
  t.params.channel_weight[0][0][0] = 3.0;
  t.params.channel_weight[1][0][1] = 4.0;
  ChannelizedUser u = blank_user(t);
  u.sparse[0] = {0};
  u.sparse[1] = {0};
  const Vec h = user_embedding(u, t.params, AttentionVariant::autoattn);
  CHECK(h[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(h[1] == Catch::Approx(1.0).margin(1e-12));
  CHECK(h[2] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("fixedattn and auto weights ignore the user's features", "[model]") {
  TinyModel t = tiny_model(3, 1, 8, 4, 3, 2, 29);
  Rng rng(8);
  t.params.attn_logits = {0.3, -1.0, 2.0, 0.0};
  const ChannelizedUser a = random_user(t, rng, "a", 0.2);
  const ChannelizedUser b = random_user(t, rng, "b", 0.2);
  const Vec wa = attention_weights(a, t.params, AttentionVariant::fixedattn);
  const Vec wb = attention_weights(b, t.params, AttentionVariant::fixedattn);
  CHECK(wa == wb);
  double sum = 0.0;
  for (double w : wa) sum += w;
  CHECK(sum == Catch::Approx(1.0).margin(1e-12));

  const Vec ua = attention_weights(a, t.params, AttentionVariant::autoattn);
  const Vec ub = attention_weights(b, t.params, AttentionVariant::autoattn);
  CHECK(ua == ub);
  for (double w : ua) CHECK(w == 1.0);
}

TEST_CASE("at p -> 0 scaling a channel's table scales its weight linearly", "[model]") {
  TinyModel t = tiny_model(2, 0, 6, 4, 2, 2, 31);
  t.params.rho_p = -45.0;
  Rng rng(9);
  ChannelizedUser u = random_user(t, rng, "u", 0.0);
  const Vec before = attention_weights(u, t.params, AttentionVariant::dyattn);
  const double c = 3.5;
  for (double& x : t.params.channel_weight[0].data) x *= c;
  const Vec after = attention_weights(u, t.params, AttentionVariant::dyattn);
  CHECK(after[0] == Catch::Approx(c * before[0]).margin(1e-9));
  CHECK(after[1] == Catch::Approx(before[1]).margin(1e-9));
}

TEST_CASE("predict_proba: zero head gives uniform; known logit gives sigmoid",
          "[model]") {
  TinyModel t2 = tiny_model(1, 0, 4, 4, 2, 2, 37);
  t2.params.head_weight.fill(0.0);
  t2.params.head_bias.assign(2, 0.0);
  ChannelizedUser u = blank_user(t2);
  u.sparse[0] = {1};
  Vec p = predict_proba(u, t2.params, AttentionVariant::dyattn);
  CHECK(p[0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(p[1] == Catch::Approx(0.5).margin(1e-12));

  TinyModel t3 = tiny_model(1, 0, 4, 4, 2, 3, 37);
  t3.params.head_weight.fill(0.0);
  t3.params.head_bias.assign(3, 0.0);
  ChannelizedUser u3 = blank_user(t3);
  p = predict_proba(u3, t3.params, AttentionVariant::autoattn);
  for (double x : p) CHECK(x == Catch::Approx(1.0 / 3.0).margin(1e-12));

  // engineered h = (1, 0, ...) with w_out column difference (2, 0, ...)
  TinyModel t4 = tiny_model(1, 0, 4, 4, 2, 2, 41);
  t4.params.channel_weight[0].fill(0.0);
  t4.params.channel_weight[0][0][0] = 1.0;
  t4.params.head_weight.fill(0.0);
  t4.params.head_weight[0][1] = 2.0;
  t4.params.head_bias.assign(2, 0.0);
  ChannelizedUser u4 = blank_user(t4);
  u4.sparse[0] = {0};
  p = predict_proba(u4, t4.params, AttentionVariant::autoattn);
  CHECK(p[1] == Catch::Approx(0.88079707797788231).margin(1e-12));
  CHECK(p[0] + p[1] == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("probabilities stay finite and normalized under extreme parameters",
          "[model]") {
  TinyModel t = tiny_model(2, 1, 6, 4, 3, 3, 43);
  for (auto& m : t.params.channel_weight) {
    for (double& x : m.data) x *= 1e4;
  }
  t.params.head_weight.fill(500.0);
  Rng rng(10);
  for (int i = 0; i < 20; ++i) {
    const ChannelizedUser u = random_user(t, rng, "u" + std::to_string(i), 0.2);
    for (auto variant : {AttentionVariant::dyattn, AttentionVariant::fixedattn,
                         AttentionVariant::autoattn}) {
      const Vec p = predict_proba(u, t.params, variant);
      double sum = 0.0;
      for (double x : p) {
        CHECK(std::isfinite(x));
        sum += x;
      }
      CHECK(sum == Catch::Approx(1.0).margin(1e-9));
    }
  }
}
