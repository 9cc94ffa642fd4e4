#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "abundance/stats.hpp"
#include "abundance/trend.hpp"
#include "oracles.hpp"

using namespace abundance;
using namespace abundance::trend;

TEST_SUITE("trend") {

TEST_CASE("mann_kendall_u examples") {
  std::vector<double> a{1, 2, 3, 4};
  CHECK(mann_kendall_s(a) == 6);
  CHECK(mann_kendall_u(a) == doctest::Approx(6.0 / std::sqrt(4.0 * 3 * 13 / 18.0)).epsilon(1e-12));
  CHECK(mann_kendall_u(a) == doctest::Approx(2.0381).epsilon(1e-4));
  CHECK(mann_kendall_u(std::vector<double>{5, 5, 5}) == 0.0);
  std::vector<double> b{3, 1, 2};
  CHECK(mann_kendall_s(b) == -1);
  CHECK(mann_kendall_u(b) == doctest::Approx(-1.0 / std::sqrt(3.0 * 2 * 11 / 18.0)).epsilon(1e-12));
  CHECK(mann_kendall_u(b) == doctest::Approx(-0.5222).epsilon(1e-3));
  CHECK_THROWS(mann_kendall_u(std::vector<double>{1, 2}));
}

TEST_CASE("mann_kendall_u properties") {
  stats::RngStream rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 3 + rep % 20;
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    std::vector<double> r(v.rbegin(), v.rend());
    CHECK(mann_kendall_u(r) == doctest::Approx(-mann_kendall_u(v)).epsilon(1e-12));
    std::vector<double> e(n);
    std::transform(v.begin(), v.end(), e.begin(), [](double x) { return std::exp(3 * x) + 1; });
    CHECK(mann_kendall_u(e) == mann_kendall_u(v));
    CHECK(mann_kendall_u(v) == oracle::mann_kendall_u(v));
  }
  AbundanceSeries s({2001, 2002, 2003}, {1, 3, 2});
  CHECK(mann_kendall_u(s) == mann_kendall_u(std::vector<double>{1, 3, 2}));
}

TEST_CASE("AbundanceSeries invariants") {
  CHECK_THROWS(AbundanceSeries({1, 2}, {1.0}));
  CHECK_THROWS(AbundanceSeries({2, 1}, {1.0, 2.0}));
}

TEST_CASE("mk_posterior examples") {
  std::vector<double> draws;
  for (int d = 0; d < 5; ++d)
    for (double x : {1.0, 2.0, 4.0, 7.0}) draws.push_back(x);
  const auto u = mk_posterior(draws, 4);
  CHECK(u.size() == 5);
  for (double x : u) CHECK(x == mann_kendall_u(std::vector<double>{1, 2, 4, 7}));

  std::vector<double> two{1, 3, 2, 5, 5, 4, 1, 0};
  const auto u2 = mk_posterior(two, 4);
  REQUIRE(u2.size() == 2);
  CHECK(u2[0] == oracle::mann_kendall_u({1, 3, 2, 5}));
  CHECK(u2[1] == oracle::mann_kendall_u({5, 4, 1, 0}));

  std::vector<AbundanceSeries> series{AbundanceSeries({1, 2, 3}, {1, 2, 3}), AbundanceSeries({1, 2, 3}, {3, 2, 1})};
  const auto u3 = mk_posterior(series);
  CHECK(u3.size() == 2);
  CHECK(u3[0] == -u3[1]);
  CHECK_THROWS(mk_posterior(std::vector<AbundanceSeries>{}));
  CHECK_THROWS(mk_posterior(std::vector<double>{}, 3));
}

TEST_CASE("mad_from_truth examples") {
  AbundanceSeries truth({1, 2, 3}, {10, 10, 10});
  CHECK(mad_from_truth(truth, truth) == 0.0);
  AbundanceSeries means({1, 2, 3}, {12, 10, 7});
  CHECK(mad_from_truth(means, truth) == 2.0);
  AbundanceSeries truth_p({1, 2, 3}, {10, 10, 10});
  AbundanceSeries means_p({1, 2, 3}, {7, 12, 10});
  CHECK(mad_from_truth(means_p, truth_p) == 2.0);
  CHECK_THROWS(mad_from_truth(AbundanceSeries({1, 2}, {1, 2}), truth));
  AbundanceSeries even_t({1, 2, 3, 4}, {0, 0, 0, 0});
  AbundanceSeries even_m({1, 2, 3, 4}, {1, -2, 3, 4});
  CHECK(mad_from_truth(even_m, even_t) == 2.5);
}

TEST_CASE("interval examples") {
  std::vector<double> d(100);
  for (int i = 0; i < 100; ++i) d[i] = i + 1;
  const auto ci = interval(d, 0.95);
  CHECK(ci.lo == doctest::Approx(3.475).epsilon(1e-12));
  CHECK(ci.hi == doctest::Approx(97.525).epsilon(1e-12));
  const auto c = interval(std::vector<double>(10, 4.2), 0.9);
  CHECK(c.lo == 4.2);
  CHECK(c.hi == 4.2);
  const auto h = interval(std::vector<double>{5, 3, 1, 2, 4}, 0.5);
  CHECK(h.lo == 2.0);
  CHECK(h.hi == 4.0);
  CHECK_THROWS(interval(std::vector<double>{1.0}, 0.95));
  CHECK_THROWS(interval(d, 1.0));
  stats::RngStream rng(3);
  std::vector<double> r(57);
  for (auto& x : r) x = rng.normal();
  double prev_lo = INFINITY, prev_hi = -INFINITY;
  for (double level = 0.05; level < 1.0; level += 0.05) {
    const auto w = interval(r, level);
    CHECK(w.lo <= w.hi);
    CHECK(w.lo <= prev_lo);
    CHECK(w.hi >= prev_hi);
    prev_lo = w.lo;
    prev_hi = w.hi;
  }
}

TEST_CASE("empirical_coverage examples") {
  std::vector<CredibleInterval> ivs(4, CredibleInterval{0.95, 0.0, 1.0});
  CHECK(empirical_coverage(ivs, std::vector<double>{0, 0.5, 1, 0.2}) == 1.0);
  CHECK(empirical_coverage(ivs, std::vector<double>{-1, 2, 3, 4}) == 0.0);
  CHECK(empirical_coverage(ivs, std::vector<double>{0.1, 0.2, 0.3, 4}) == 0.75);
  CHECK_THROWS(empirical_coverage(ivs, std::vector<double>{0.1}));
}

TEST_CASE("quantile interpolation") {
  std::vector<double> d{4, 1, 3, 2};
  CHECK(quantile(d, 0.0) == 1.0);
  CHECK(quantile(d, 1.0) == 4.0);
  CHECK(quantile(d, 0.5) == 2.5);
  CHECK(quantile(d, 1.0 / 3.0) == doctest::Approx(2.0));
}

}
