#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <set>

#include "oved/distribution.hpp"
#include "oved/empirical_cdf.hpp"
#include "oved/sampling.hpp"
#include "test_util.hpp"

using namespace oved;

TEST_CASE("rng streams are reproducible and independent of call pattern") {
  const RngSpec spec{1234, 7};
  RngStream a(spec), b(spec);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  // distinct stream ids decorrelate
  RngStream c(RngSpec{1234, 8});
  int equal = 0;
  RngStream a2(spec);
  for (int i = 0; i < 1000; ++i)
    if (a2.next_u64() == c.next_u64()) ++equal;
  CHECK(equal == 0);

  // substream derivation is deterministic
  CHECK(spec.substream(3).stream_id == spec.substream(3).stream_id);
  CHECK(spec.substream(3).stream_id != spec.substream(4).stream_id);
}

TEST_CASE("uniform and normal draws have sane moments") {
  RngStream s(RngSpec{99, 0});
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(sum2 / n - 1.0) < 0.02);
}

TEST_CASE("dirac sampling returns its point") {
  const double point = -2.0 * std::log(10.0);
  const auto draws = sample(Distribution::dirac(point), 3, RngSpec{5, 0});
  REQUIRE(draws.size() == 3);
  for (const auto& d : draws) CHECK(d[0] == point);
}

TEST_CASE("normal sample mean within the CLT bound") {
  const int n = 100000;
  const auto draws = sample(Distribution::normal(9.81, 0.01), n, RngSpec{42, 1});
  double mean = 0.0;
  for (const auto& d : draws) mean += d[0];
  mean /= n;
  CHECK(std::abs(mean - 9.81) < 4.0 * 0.01 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("product distribution marginals pass a KS test at alpha=0.01") {
  const double mu = -5.0 * std::log(10.0);
  const auto theta = Distribution::product(
      {Distribution::normal(9.81, 0.01), Distribution::normal(mu, 0.5)});
  const int n = 20000;
  const auto draws = sample(theta, n, RngSpec{2024, 3});
  std::vector<double> g, u;
  for (const auto& d : draws) {
    g.push_back(d[0]);
    u.push_back(d[1]);
  }
  const double d_g = testutil::ks_statistic(
      g, [](double x) { return testutil::normal_cdf((x - 9.81) / 0.01); });
  const double d_u = testutil::ks_statistic(
      u, [&](double x) { return testutil::normal_cdf((x - mu) / 0.5); });
  CHECK(d_g < testutil::ks_critical_01(n));
  CHECK(d_u < testutil::ks_critical_01(n));
}

TEST_CASE("distribution construction validates parameters") {
  CHECK_THROWS_AS(Distribution::normal(0.0, 0.0), invalid_argument);
  CHECK_THROWS_AS(Distribution::normal(0.0, -1.0), invalid_argument);
  CHECK_THROWS_AS(Distribution::uniform(1.0, 1.0), invalid_argument);
  CHECK_THROWS_AS(Distribution::empirical({}), invalid_argument);
  CHECK_THROWS_AS(Distribution::dirac(std::nan("")), invalid_argument);
}

TEST_CASE("lhs occupies one stratum per coordinate") {
  SUBCASE("unit interval, n=4") {
    const Box box{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
    const auto pts = lhs_sample(box, 4, RngSpec{7, 0});
    std::set<int> strata;
    for (const auto& p : pts) {
      CHECK(p[0] >= 0.0);
      CHECK(p[0] <= 1.0);
      strata.insert(static_cast<int>(p[0] * 4.0));
    }
    CHECK(strata.size() == 4);
  }

  SUBCASE("appendix-style 4-d box, n=10: per-column rank permutation") {
    Eigen::VectorXd lo(4), hi(4);
    lo << 0.005, 0.005, 0.0, 10.0;
    hi << 5.0, 0.1, 2.0, 120.0;
    const Box box{lo, hi};
    const int n = 10;
    const auto pts = lhs_sample(box, n, RngSpec{11, 2});
    for (int j = 0; j < 4; ++j) {
      std::set<int> strata;
      for (const auto& p : pts) {
        CHECK(p[j] >= lo[j]);
        CHECK(p[j] <= hi[j]);
        const double t = (p[j] - lo[j]) / (hi[j] - lo[j]);
        strata.insert(std::min(n - 1, static_cast<int>(t * n)));
      }
      CHECK(strata.size() == static_cast<std::size_t>(n));
    }
  }

  SUBCASE("degenerate coordinate collapses") {
    const Box box{Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 2.0)};
    const auto pts = lhs_sample(box, 5, RngSpec{1, 1});
    for (const auto& p : pts) CHECK(p[0] == 2.0);
  }
}

TEST_CASE("empirical cdf counts correctly") {
  const EmpiricalCdf f({1.0, 2.0, 3.0});
  CHECK(f(2.0) == doctest::Approx(2.0 / 3.0));
  CHECK(f(0.5) == 0.0);
  CHECK(f(3.0) == 1.0);

  const EmpiricalCdf atom({5.0});
  CHECK(atom(4.999) == 0.0);
  CHECK(atom(5.0) == 1.0);

  CHECK_THROWS_AS(EmpiricalCdf({}), invalid_argument);
}

TEST_CASE("empirical cdf of a large normal sample hits the median") {
  const auto draws = sample(Distribution::normal(0.0, 1.0), 10000, RngSpec{3, 3});
  std::vector<double> v;
  for (const auto& d : draws) v.push_back(d[0]);
  const EmpiricalCdf f(std::move(v));
  CHECK(std::abs(f(0.0) - 0.5) < 0.02);
}

TEST_CASE("empirical cdf is monotone and bounded for arbitrary input") {
  RngStream s(RngSpec{17, 4});
  std::vector<double> v;
  for (int i = 0; i < 500; ++i) v.push_back(std::round(s.uniform(-5.0, 5.0) * 4.0) / 4.0);
  const EmpiricalCdf f(v);
  double prev = 0.0;
  for (double x = -6.0; x <= 6.0; x += 0.05) {
    const double fx = f(x);
    CHECK(fx >= prev);
    CHECK(fx >= 0.0);
    CHECK(fx <= 1.0);
    prev = fx;
  }
}

TEST_CASE("empirical distribution resampling stays within the atoms") {
  const auto dist = Distribution::empirical({1.0, 2.0, 5.0});
  RngStream s(RngSpec{8, 8});
  for (int i = 0; i < 100; ++i) {
    const double v = dist.sample(s)[0];
    CHECK((v == 1.0 || v == 2.0 || v == 5.0));
  }
}
