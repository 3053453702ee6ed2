#include <catch2/catch_amalgamated.hpp>

#include "fsspip/eval.hpp"
#include "fsspip/simgen.hpp"
#include "helpers.hpp"

using namespace fsspip;

namespace {

TrainConfig fast_cfg(std::uint64_t seed, int epochs = 15) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.epochs = epochs;
  cfg.embed_dim = 4;
  return cfg;
}

}  // namespace

TEST_CASE("few-shot with shots = full training split equals one train+evaluate",
          "[eval]") {
  const Population pop = sample_population(testutil::easy_spec(), 200, 41);
  TrainConfig cfg = fast_cfg(7, 10);

  const DatasetSplit expect_split =
      split_dataset(pop.data.users.size(), cfg.val_fraction, cfg.test_fraction,
                    splitmix64(cfg.seed ^ splitmix64(1)));
  const std::size_t shots = expect_split.train.size();

  const RunSummary summary = few_shot_protocol(pop.data, shots, 1, cfg);
  REQUIRE(summary.runs.size() == 1);

  TrainConfig run_cfg = cfg;
  run_cfg.seed = splitmix64(cfg.seed ^ splitmix64(1));
  std::vector<std::size_t> sub = expect_split.train;  // balanced subsample of everything
  const TrainResult tr = train_on_splits(pop.data, sub, expect_split.val, run_cfg);
  const Metrics direct = evaluate_subset(tr.params, pop.data, expect_split.test, cfg.variant);
  CHECK(summary.runs[0].accuracy == Catch::Approx(direct.accuracy).margin(1e-12));
}

TEST_CASE("few-shot summaries are reproducible for a fixed master seed", "[eval]") {
  const Population pop = sample_population(testutil::easy_spec(), 150, 43);
  TrainConfig cfg = fast_cfg(3, 8);
  const RunSummary a = few_shot_protocol(pop.data, 30, 3, cfg);
  const RunSummary b = few_shot_protocol(pop.data, 30, 3, cfg);
  REQUIRE(a.runs.size() == b.runs.size());
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    CHECK(a.runs[i].accuracy == b.runs[i].accuracy);
    CHECK(a.runs[i].f1_headline == b.runs[i].f1_headline);
  }
  CHECK(a.mean_accuracy == b.mean_accuracy);
  CHECK(a.std_accuracy == b.std_accuracy);
}

TEST_CASE("requesting more shots than the split holds is an error", "[eval]") {
  const Population pop = sample_population(testutil::easy_spec(), 50, 47);
  TrainConfig cfg = fast_cfg(1, 2);
  CHECK_THROWS_AS(few_shot_protocol(pop.data, 200, 1, cfg), ValidationError);
  CHECK_THROWS_AS(few_shot_protocol(pop.data, 10, 0, cfg), ValidationError);
}

TEST_CASE("balanced subsamples keep classes in near-equal shares", "[eval]") {
  const Population pop = sample_population(testutil::easy_spec(), 300, 53);
  const DatasetSplit split = split_dataset(pop.data.users.size(), 0.1, 0.1, 17);
  const auto sub = detail::balanced_subsample(pop.data, split.train, 20);
  std::size_t ones = 0;
  for (std::size_t i : sub) ones += (*pop.data.users[i].label == 1);
  CHECK(sub.size() == 20);
  CHECK(ones == 10);
}

TEST_CASE("more shots do not hurt on an easy synthetic task", "[eval]") {
  const Population pop = sample_population(testutil::easy_spec(), 400, 59);
  TrainConfig cfg = fast_cfg(11, 12);
  const RunSummary few = few_shot_protocol(pop.data, 20, 3, cfg);
  const RunSummary many = few_shot_protocol(pop.data, 200, 3, cfg);
  CHECK(many.mean_accuracy >= few.mean_accuracy - 0.02);
}

TEST_CASE("three-party weak supervision trains a working K=3 classifier", "[eval]") {
  GenerativeSpec spec;
  spec.num_classes = 3;
  spec.prior = {0.2, 0.44, 0.36};
  spec.d_em = 4;
  spec.follow_noise = 0.05;
  SparseChannelSpec ch;
  ch.vocab_size = 9;
  ch.count.is_fixed = false;
  ch.count.poisson_lambda = 3.0;
  ch.theta = {Vec{0.5, 0.2, 0.1, 0.05, 0.05, 0.04, 0.03, 0.02, 0.01},
              Vec{0.01, 0.02, 0.03, 0.5, 0.2, 0.1, 0.05, 0.05, 0.04},
              Vec{0.04, 0.05, 0.05, 0.01, 0.02, 0.03, 0.5, 0.2, 0.1}};
  spec.sparse_channels.push_back(ch);
  DenseChannelSpec dch;
  dch.sigma = 1.0;
  dch.mu = {Vec{-0.5, -0.5, 0.0, 0.0}, Vec{0.5, -0.5, 0.0, 0.0}, Vec{0.0, 0.9, 0.0, 0.0}};
  spec.dense_channels.push_back(dch);

  const Population pop = sample_population(spec, 1200, 71);
  REQUIRE(pop.anchors.size() == 3);

  std::unordered_map<std::string, const ChannelizedUser*> by_id;
  for (const auto& u : pop.data.users) by_id.emplace(u.user_id, &u);
  Rng rng(3);
  const LabeledDataset silver =
      build_silver_labels(pop.anchors, by_id, 1000, 30, rng, pop.data);
  CHECK(silver.num_classes == 3);
  CHECK(silver.users.size() == 180);  // 30 followers + 30 retweeters per party

  TrainConfig cfg = fast_cfg(7, 40);
  const TrainResult tr = train(silver, cfg);
  const Metrics m = evaluate(tr.params, pop.data, cfg.variant);
  CHECK(m.num_classes == 3);
  CHECK(m.confusion.size() == 3);
  CHECK(m.accuracy > 0.75);  // well above the 0.44 majority share
  CHECK(m.f1_headline == Catch::Approx(m.f1_macro));
  const double oracle = bayes_oracle_accuracy(spec, pop.data);
  CHECK(m.accuracy <= oracle + 3.0 * std::sqrt(oracle * (1 - oracle) / 1200.0));
}

TEST_CASE("no trained model beats the Bayes oracle beyond sampling noise", "[eval]") {
  const GenerativeSpec spec = testutil::easy_spec();
  const Population pop = sample_population(spec, 1200, 67);
  TrainConfig cfg = fast_cfg(9, 30);
  const DatasetSplit split = split_dataset(pop.data.users.size(), 0.1, 0.1, cfg.seed);
  const TrainResult tr = train_on_splits(pop.data, split.train, split.val, cfg);
  const Metrics m = evaluate_subset(tr.params, pop.data, split.test, cfg.variant);

  LabeledDataset test_set;
  test_set.num_classes = pop.data.num_classes;
  test_set.schema = pop.data.schema;
  test_set.vlens = pop.data.vlens;
  test_set.d_em = pop.data.d_em;
  for (std::size_t i : split.test) test_set.users.push_back(pop.data.users[i]);
  const double oracle = bayes_oracle_accuracy(spec, test_set);
  const double sigma = std::sqrt(oracle * (1.0 - oracle) / static_cast<double>(m.n));
  CHECK(m.accuracy <= oracle + 3.0 * sigma);
}

TEST_CASE("channel importance ranks the informative channel first", "[eval]") {
  // channel 0 carries all the signal; channel 1 is class-independent noise;
  // channel 2 is always empty.
  GenerativeSpec spec;
  spec.num_classes = 2;
  spec.prior = {0.5, 0.5};
  spec.d_em = 2;
  SparseChannelSpec informative;
  informative.vocab_size = 4;
  informative.count.is_fixed = true;
  informative.count.fixed_n = 2;
  informative.theta = {Vec{0.45, 0.45, 0.05, 0.05}, Vec{0.05, 0.05, 0.45, 0.45}};
  spec.sparse_channels.push_back(informative);
  SparseChannelSpec noise;
  noise.vocab_size = 4;
  noise.count.is_fixed = true;
  noise.count.fixed_n = 1;
  noise.theta = {Vec{0.25, 0.25, 0.25, 0.25}, Vec{0.25, 0.25, 0.25, 0.25}};
  spec.sparse_channels.push_back(noise);
  SparseChannelSpec empty;
  empty.vocab_size = 2;
  empty.count.is_fixed = true;
  empty.count.fixed_n = 0;
  empty.theta = {Vec{0.5, 0.5}, Vec{0.5, 0.5}};
  spec.sparse_channels.push_back(empty);

  const Population pop = sample_population(spec, 300, 61);
  TrainConfig cfg = fast_cfg(13, 15);
  cfg.mixup = false;
  cfg.channel_dropout = false;

  const ChannelImportance imp = channel_importance(pop.data, cfg);
  REQUIRE(imp.drop.size() == 3);
  CHECK(imp.drop[0] > imp.drop[1]);
  CHECK(imp.drop[0] > imp.drop[2]);
  CHECK(imp.drop[0] > 10.0);  // losing the only signal is catastrophic
  // ablating an always-empty channel replays the identical run
  CHECK(imp.drop[2] == 0.0);
}
