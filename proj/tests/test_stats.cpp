#include <catch2/catch_amalgamated.hpp>

#include "fsspip/stats.hpp"

using namespace fsspip;

TEST_CASE("identical samples give t=0, p=1", "[stats]") {
  const Vec a{1.0, 2.0, 3.0};
  const TTestResult r = two_sample_t_test(a, a);
  CHECK(r.t == 0.0);
  CHECK(r.p == 1.0);
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("shifted sample matches the hand formula and scipy", "[stats]") {
  const Vec a{1.0, 2.0, 3.0};
  const Vec b{11.0, 12.0, 13.0};
  const TTestResult r = two_sample_t_test(a, b);
  // pooled sd = 1, t = -10 / sqrt(2/3)
  CHECK(r.t == Catch::Approx(-10.0 / std::sqrt(2.0 / 3.0)).margin(1e-12));
  CHECK(r.t == Catch::Approx(-12.24744871391589).margin(1e-10));
  CHECK(r.df == Catch::Approx(4.0));
  // scipy.stats.ttest_ind reference
  CHECK(r.p == Catch::Approx(0.00025521674944192687).margin(1e-9));
}

TEST_CASE("a second scipy cross-check with unequal variances", "[stats]") {
  const Vec a{1.0, 2.0, 3.0, 4.0};
  const Vec b{1.5, 2.5, 3.25, 4.75};
  const TTestResult r = two_sample_t_test(a, b);
  CHECK(r.t == Catch::Approx(-0.53136893132405716).margin(1e-10));
  CHECK(r.p == Catch::Approx(0.6142502980735598).margin(1e-9));
}

TEST_CASE("t-test is antisymmetric in its arguments", "[stats]") {
  const Vec a{0.93, 0.95, 0.97, 0.96, 0.95};
  const Vec b{0.90, 0.92, 0.91, 0.93, 0.94};
  const TTestResult ab = two_sample_t_test(a, b);
  const TTestResult ba = two_sample_t_test(b, a);
  CHECK(ab.t == Catch::Approx(-ba.t).margin(1e-12));
  CHECK(ab.p == Catch::Approx(ba.p).margin(1e-12));
}

TEST_CASE("zero variance cases: equal means vs degenerate", "[stats]") {
  const Vec a{2.0, 2.0, 2.0};
  const Vec b{2.0, 2.0};
  const TTestResult same = two_sample_t_test(a, b);
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);
  CHECK_FALSE(same.degenerate);

  const Vec c{3.0, 3.0};
  const TTestResult deg = two_sample_t_test(a, c);
  CHECK(deg.degenerate);
  CHECK(deg.p == 0.0);
}

TEST_CASE("t-test needs two points per side", "[stats]") {
  const Vec a{1.0};
  const Vec b{1.0, 2.0};
  CHECK_THROWS_AS(two_sample_t_test(a, b), ValidationError);
}

TEST_CASE("the 0.05 dagger convention is reproduced", "[stats]") {
  // clearly separated five-run accuracy lists cross the threshold
  const Vec fsspip{0.971, 0.968, 0.973, 0.970, 0.969};
  const Vec baseline{0.952, 0.955, 0.950, 0.954, 0.951};
  const TTestResult r = two_sample_t_test(fsspip, baseline);
  CHECK(r.p < 0.05);
  // near-identical lists do not
  const Vec same_a{0.95, 0.96, 0.95, 0.96, 0.955};
  const Vec same_b{0.955, 0.95, 0.96, 0.95, 0.958};
  CHECK(two_sample_t_test(same_a, same_b).p > 0.05);
}

TEST_CASE("pearson correlation on exact lines and the worked example", "[stats]") {
  const Vec x{1.0, 2.0, 3.0, 4.0};
  Vec y;
  for (double v : x) y.push_back(2.0 * v + 1.0);
  CHECK(pearson_corr(x, y) == Catch::Approx(1.0).margin(1e-12));
  Vec neg;
  for (double v : x) neg.push_back(-v);
  CHECK(pearson_corr(x, neg) == Catch::Approx(-1.0).margin(1e-12));
  const Vec y2{1.0, 3.0, 2.0, 4.0};
  CHECK(pearson_corr(x, y2) == Catch::Approx(0.8).margin(1e-12));
}

TEST_CASE("pearson is invariant under positive affine maps", "[stats]") {
  Rng rng(5);
  Vec x, y;
  for (int i = 0; i < 50; ++i) {
    x.push_back(rng.normal());
    y.push_back(0.4 * x.back() + rng.normal());
  }
  const double base = pearson_corr(x, y);
  for (double a : {0.5, 2.0, 17.0}) {
    Vec ax;
    for (double v : x) ax.push_back(a * v + 3.7);
    CHECK(std::fabs(pearson_corr(ax, y) - base) < 1e-12);
  }
}

TEST_CASE("pearson rejects degenerate input", "[stats]") {
  const Vec flat{2.0, 2.0, 2.0};
  const Vec y{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(pearson_corr(flat, y), ValidationError);
  const Vec one{1.0};
  CHECK_THROWS_AS(pearson_corr(one, one), ValidationError);
  const Vec mism{1.0, 2.0};
  CHECK_THROWS_AS(pearson_corr(mism, y), ValidationError);
}

TEST_CASE("regularized incomplete beta obeys its reflection identity", "[stats]") {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const double a = 0.5 + rng.uniform() * 5.0;
    const double b = 0.5 + rng.uniform() * 5.0;
    const double x = rng.uniform();
    const double lhs = reg_inc_beta(a, b, x);
    const double rhs = 1.0 - reg_inc_beta(b, a, 1.0 - x);
    CHECK(lhs == Catch::Approx(rhs).margin(1e-10));
    CHECK(lhs >= 0.0);
    CHECK(lhs <= 1.0);
  }
  CHECK(reg_inc_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(reg_inc_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("mean and sample stddev helpers", "[stats]") {
  const Vec v{2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  CHECK(mean_of(v) == Catch::Approx(5.0));
  CHECK(sample_stddev(v) == Catch::Approx(std::sqrt(32.0 / 7.0)).margin(1e-12));
  CHECK(sample_stddev(Vec{1.0}) == 0.0);
}
