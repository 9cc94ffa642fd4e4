#include <doctest.h>

#include <cmath>
#include <vector>

#include "abundance/cr_model.hpp"
#include "abundance/sim_study.hpp"
#include "abundance/stats.hpp"
#include "oracles.hpp"
#include "sbc.hpp"

using namespace abundance;
using namespace abundance::cr;

namespace {

CRDataset toy2() {
  CRDataset d = oracle::cr_dataset({{{5, 4}, {3, 2}}, {{6, 5}, {2, 2}}}, {{{0, 2}, {0, 1}}, {{0, 3}, {0, 0}}});
  for (auto& x : d.x) {
    x.conservativeResize(2, 2);
    x(0, 1) = -0.5;
    x(1, 1) = 0.8;
  }
  d.z.conservativeResize(2, 2);
  d.z(0, 1) = -1;
  d.z(1, 1) = 1;
  d.x_names = {"v"};
  d.z_names = {"year"};
  return d;
}

CRState toy_state(const CRDataset& d) {
  CRState s;
  s.N.resize(2, 2);
  s.N << 12, 9, 14, 6;
  s.beta.resize(2, 2);
  s.beta << -0.4, 0.3, 0.1, -0.2;
  s.eps = {{{0.1, -0.2}, {0.05, 0.0}}, {{-0.3, 0.2}, {0.15, -0.1}}};
  s.sigma2 = Eigen::Vector2d(0.4, 0.7);
  s.log_theta.resize(2, 2);
  s.log_theta << 2.4, 2.1, 2.6, 1.8;
  s.A.resize(2, 2);
  s.A << 2.5, 0.1, 2.0, -0.2;
  Eigen::Matrix2d om;
  om << 0.5, 0.1, 0.1, 0.3;
  s.Omega = stats::SymMatrix(om);
  (void)d;
  return s;
}

double log_mvgamma2(double a) { return 0.5 * std::log(M_PI) + std::lgamma(a) + std::lgamma(a - 0.5); }

}  // namespace

TEST_SUITE("cr_model") {

TEST_CASE("cr_loglik examples") {
  {
    std::vector<double> p{0.5};
    std::vector<CaptureCount> c{{2, 0}};
    CHECK(cr_loglik(5, p, c) == doctest::Approx(std::log(10 * 0.25 * 0.125)).epsilon(1e-12));
    CHECK(cr_loglik(5, p, c) == doctest::Approx(-1.163151).epsilon(1e-6));
  }
  {
    std::vector<double> p{1.0 - 1e-15};
    std::vector<CaptureCount> c{{5, 0}};
    CHECK(std::abs(cr_loglik(5, p, c)) < 1e-12);
  }
  {
    std::vector<double> p{0.5, 0.5};
    std::vector<CaptureCount> c{{2, 0}, {2, 1}};
    CHECK(cr_loglik(4, p, c) == doctest::Approx(std::log(4 * 0.0625 * 0.0625)).epsilon(1e-12));
    CHECK(cr_loglik(4, p, c) == doctest::Approx(-4.158883).epsilon(1e-6));
    CHECK_THROWS_AS(cr_loglik(2, p, c), std::domain_error);
  }
  std::vector<double> bad{0.0};
  std::vector<CaptureCount> one{{1, 0}};
  CHECK_THROWS_AS(cr_loglik(3, bad, one), std::domain_error);
  bad[0] = 1.0;
  CHECK_THROWS_AS(cr_loglik(3, bad, one), std::domain_error);
}

TEST_CASE("single occasion equals the binomial pmf") {
  for (int N = 0; N <= 20; ++N)
    for (int pi = 1; pi <= 9; ++pi) {
      const double p = pi / 10.0;
      for (int n = 0; n <= N; ++n) {
        std::vector<double> pv{p};
        std::vector<CaptureCount> c{{n, 0}};
        CHECK(std::abs(cr_loglik(N, pv, c) + cr_log_data_constant(c) - oracle::binomial_logpmf(n, N, p)) <= 1e-12);
        CHECK(cr_log_data_constant(c) == 0.0);
      }
    }
}

TEST_CASE("two-day outcomes match enumeration of individual histories") {
  for (int N = 0; N <= 6; ++N)
    for (double p1 : {0.2, 0.5, 0.8})
      for (double p2 : {0.2, 0.5, 0.8}) {
        const auto dist = oracle::capture_outcome_distribution(N, {p1, p2});
        double total = 0.0;
        for (const auto& [o, prob] : dist) {
          std::vector<CaptureCount> c{{o.n[0], o.m[0]}, {o.n[1], o.m[1]}};
          const double lp = cr_loglik(N, std::vector<double>{p1, p2}, c) + cr_log_data_constant(c);
          CHECK(std::exp(lp) == doctest::Approx(prob).epsilon(1e-10));
          total += std::exp(lp);
        }
        CHECK(std::abs(total - 1.0) < 1e-8);
      }
}

TEST_CASE("dropped constant does not depend on N or p") {
  std::vector<CaptureCount> c{{3, 0}, {2, 1}, {4, 2}};
  const auto dist = oracle::capture_outcome_distribution(9, {0.3, 0.6, 0.4});
  (void)dist;
  double ref = NAN;
  for (int N = 7; N <= 10; ++N)
    for (double p : {0.2, 0.45, 0.7}) {
      const std::vector<double> pv{p, 1 - p, p};
      // Oracle: sequential binomials over the marked and unmarked pools.
      double exact = 0.0;
      long pool = 0;
      for (int k = 0; k < 3; ++k) {
        exact += oracle::binomial_logpmf(c[k].m, pool, pv[k]);
        exact += oracle::binomial_logpmf(c[k].n - c[k].m, N - pool, pv[k]);
        pool += c[k].n - c[k].m;
      }
      const double diff = exact - cr_loglik(N, pv, c);
      if (std::isnan(ref)) ref = diff;
      CHECK(diff == doctest::Approx(ref).epsilon(1e-12));
      CHECK(diff == doctest::Approx(cr_log_data_constant(c)).epsilon(1e-12));
    }
}

TEST_CASE("detection_prob examples") {
  std::vector<double> x{1.0}, b{0.0};
  CHECK(detection_prob(x, b, 0.0) == 0.5);
  std::vector<double> x3{1, 0, 0}, b3{-3.5, -2, 0.5};
  CHECK(detection_prob(x3, b3, 0.0) == doctest::Approx(1 / (1 + std::exp(3.5))).epsilon(1e-12));
  CHECK(detection_prob(x3, b3, 0.0) == doctest::Approx(0.029312).epsilon(1e-5));
  double prev = 0.0;
  for (double e = -5; e <= 5; e += 0.5) {
    const double p = detection_prob(x3, b3, e);
    CHECK(p > prev);
    prev = p;
  }
  CHECK_THROWS(detection_prob(x, b3, 0.0));
}

TEST_CASE("log posterior equals independently computed components") {
  const auto d = toy2();
  const auto s = toy_state(d);
  Priors pri;
  pri.beta_sd = 2.0;
  pri.coef_sd = 3.0;
  pri.ig_shape = 2.0;
  pri.ig_rate = 0.5;
  pri.iw_scale = 1.5;

  double capture = 0, abundance = 0, layer = 0, re = 0, pb = 0, ps = 0, pa = 0;
  for (int t = 0; t < 2; ++t)
    for (int j = 0; j < 2; ++j) {
      long u = 0;
      double c = 0;
      for (int k = 0; k < 2; ++k) {
        const double eta = s.beta(j, 0) + s.beta(j, 1) * d.x[t](k, 1) + s.eps[t][j][k];
        const double p = 1 / (1 + std::exp(-eta));
        const long n = d.catches[t][j][k];
        c += n * std::log(p) + (s.N(t, j) - n) * std::log(1 - p);
        u += n - d.recaptures[t][j][k];
        re += -0.5 * std::log(2 * M_PI * s.sigma2(j)) - 0.5 * s.eps[t][j][k] * s.eps[t][j][k] / s.sigma2(j);
      }
      const long N = s.N(t, j);
      capture += c + std::lgamma(N + 1.0) - std::lgamma(u + 1.0) - std::lgamma(N - u + 1.0);
      abundance += oracle::poisson_logpmf(N, std::exp(s.log_theta(t, j)));
    }
  const Eigen::Matrix2d om = s.Omega.matrix();
  for (int t = 0; t < 2; ++t) {
    const Eigen::Vector2d r = s.log_theta.row(t).transpose() - s.A * d.z.row(t).transpose();
    layer += -std::log(2 * M_PI) - 0.5 * std::log(om.determinant()) - 0.5 * r.dot(om.inverse() * r);
  }
  auto lnorm = [](double x, double sd) { return -0.5 * std::log(2 * M_PI * sd * sd) - 0.5 * x * x / (sd * sd); };
  for (int j = 0; j < 2; ++j) {
    for (int c = 0; c < 2; ++c) {
      pb += lnorm(s.beta(j, c), 2.0);
      pa += lnorm(s.A(j, c), 3.0);
    }
    const double x = s.sigma2(j);
    ps += 2.0 * std::log(0.5) - std::lgamma(2.0) - 3.0 * std::log(x) - 0.5 / x;
  }
  const double nu = 3.0;
  const Eigen::Matrix2d psi = 1.5 * Eigen::Matrix2d::Identity();
  const double po = 0.5 * nu * std::log(psi.determinant()) - nu * std::log(2.0) - log_mvgamma2(nu / 2) -
                    0.5 * (nu + 3) * std::log(om.determinant()) - 0.5 * (psi * om.inverse()).trace();

  const auto terms = cr_log_posterior_terms(s, d, pri);
  CHECK(terms.capture == doctest::Approx(capture).epsilon(1e-12));
  CHECK(terms.abundance == doctest::Approx(abundance).epsilon(1e-12));
  CHECK(terms.year_layer == doctest::Approx(layer).epsilon(1e-12));
  CHECK(terms.random_effects == doctest::Approx(re).epsilon(1e-12));
  CHECK(terms.prior_beta == doctest::Approx(pb).epsilon(1e-12));
  CHECK(terms.prior_A == doctest::Approx(pa).epsilon(1e-12));
  CHECK(terms.prior_sigma2 == doctest::Approx(ps).epsilon(1e-12));
  CHECK(terms.prior_Omega == doctest::Approx(po).epsilon(1e-12));
  CHECK(cr_log_posterior(s, d, pri) ==
        doctest::Approx(capture + abundance + layer + re + pb + pa + ps + po).epsilon(1e-12));
}

TEST_CASE("log posterior decomposes additively") {
  const auto d = toy2();
  const auto s = toy_state(d);
  const Priors pri;
  const auto base = cr_log_posterior_terms(s, d, pri);

  auto shifted = s;
  shifted.beta(0, 0) += 0.7;
  for (int t = 0; t < 2; ++t)
    for (auto& e : shifted.eps[t][0]) e -= 0.7;
  const auto a = cr_log_posterior_terms(shifted, d, pri);
  CHECK(a.capture == doctest::Approx(base.capture).epsilon(1e-12));
  CHECK(a.abundance == base.abundance);
  CHECK(a.year_layer == base.year_layer);
  CHECK(a.prior_A == base.prior_A);
  CHECK(a.prior_beta != base.prior_beta);

  auto moved = s;
  moved.A(1, 1) += 0.3;
  const auto b = cr_log_posterior_terms(moved, d, pri);
  CHECK(b.capture == base.capture);
  CHECK(b.random_effects == base.random_effects);
  CHECK(b.prior_beta == base.prior_beta);
  CHECK(b.prior_sigma2 == base.prior_sigma2);
  CHECK(b.prior_A != base.prior_A);

  auto floor = s;
  floor.N(1, 0) = d.distinct(1, 0) - 1;
  CHECK(cr_log_posterior(floor, d, pri) == -INFINITY);
}

TEST_CASE("mean_detection_phat examples") {
  CRDataset d = oracle::cr_dataset({{{1, 1}}}, {{{0, 0}}});
  for (auto& x : d.x) {
    x.conservativeResize(2, 2);
    x(0, 1) = 0.0;
    x(1, 1) = 1.0;
  }
  d.x_names = {"v"};
  PosteriorChains ch;
  ch.add("beta", {1, 2}, 3);
  ch.add("eps", {2}, 3);
  for (int s = 0; s < 3; ++s) {
    ch.params["beta"].draws(s, 0) = stats::logit(0.3);
    ch.params["beta"].draws(s, 1) = 0.0;
  }
  auto phat = mean_detection_phat(ch, d);
  CHECK(phat[0] == doctest::Approx(0.3).epsilon(1e-12));

  for (int s = 0; s < 3; ++s) {
    ch.params["beta"].draws(s, 0) = stats::logit(0.2);
    ch.params["beta"].draws(s, 1) = stats::logit(0.4) - stats::logit(0.2);
  }
  phat = mean_detection_phat(ch, d);
  CHECK(phat[0] == doctest::Approx(0.3).epsilon(1e-12));

  // Random chain with standardization against a brute-force average.
  const auto d2 = toy2();
  PosteriorChains rc;
  rc.add("beta", {2, 2}, 5);
  rc.add("eps", {d2.n_cells()}, 5);
  stats::RngStream rng(4);
  for (auto& [n, b] : rc.params)
    for (Eigen::Index i = 0; i < b.draws.size(); ++i) b.draws.data()[i] = 0.5 * rng.normal();
  rc.moments = Standardization{{"v"}, {0.15}, {0.65}};
  const auto ph = mean_detection_phat(rc, d2);
  for (int j = 0; j < 2; ++j) {
    double year_sum = 0;
    for (int t = 0; t < 2; ++t) {
      double day_sum = 0;
      for (int k = 0; k < 2; ++k) {
        double acc = 0;
        for (int s = 0; s < 5; ++s) {
          const double xv = (d2.x[t](k, 1) - 0.15) / 0.65;
          const double eta = rc.draws("beta")(s, j * 2) + rc.draws("beta")(s, j * 2 + 1) * xv +
                             rc.draws("eps")(s, t * 4 + j * 2 + k);
          acc += 1 / (1 + std::exp(-eta));
        }
        day_sum += acc / 5;
      }
      year_sum += day_sum / 2;
    }
    CHECK(ph[j] == doctest::Approx(year_sum / 2).epsilon(1e-12));
  }
}

TEST_CASE("fit_cr determinism and support") {
  auto spec = sim::scenario_spec(sim::Scenario::I);
  spec.years = 5;
  stats::RngStream g(3);
  const auto pop = sim::generate_population(spec, g);
  const auto data = sim::generate_cr_data(pop, spec.beta_cr, spec.sigma2, spec, g);
  McmcConfig cfg;
  cfg.iterations = 3000;
  cfg.burn_in = 1000;
  cfg.thin = 4;
  const auto a = fit_cr(data, Priors{}, cfg, stats::RngStream(9, 1));
  const auto b = fit_cr(data, Priors{}, cfg, stats::RngStream(9, 1));
  CHECK(a == b);
  CHECK(a.n_draws() == 500);
  CHECK(a.model == "cr-model");
  REQUIRE(a.moments.has_value());
  const auto& N = a.draws("N");
  for (int t = 0; t < 5; ++t)
    for (int j = 0; j < 2; ++j)
      CHECK(N.col(t * 2 + j).minCoeff() >= static_cast<double>(data.distinct(t, j)));
  for (const auto& [name, rate] : a.acceptance) {
    CHECK(rate > 0.05);
    CHECK(rate <= 1.0);
  }
  cfg.abundance_update = AbundanceUpdate::RandomWalk;
  const auto rw = fit_cr(data, Priors{}, cfg, stats::RngStream(9, 1));
  for (int t = 0; t < 5; ++t)
    CHECK(rw.draws("N").col(t * 2 + 1).minCoeff() >= static_cast<double>(data.distinct(t, 1)));
  CHECK(rw.acceptance.at("N") > 0.05);
}

TEST_CASE("parameter recovery on scenario I data") {
  const auto spec = sim::scenario_spec(sim::Scenario::I);
  stats::RngStream g(2024);
  const auto pop = sim::generate_population(spec, g);
  const auto data = sim::generate_cr_data(pop, spec.beta_cr, spec.sigma2, spec, g);
  const auto ch = fit_cr(data, Priors{}, McmcConfig{}, stats::RngStream(5));
  // Coefficients are reported on the standardized covariate scale.
  const auto& m = *ch.moments;
  const Eigen::VectorXd b = ch.draws("beta").colwise().mean();
  double slope_v = b(1) / m.sd[0], slope_w = b(2) / m.sd[1];
  double intercept = b(0) - slope_v * m.mean[0] - slope_w * m.mean[1];
  INFO("beta1 = (" << intercept << ", " << slope_v << ", " << slope_w << ")");
  CHECK(std::abs(intercept + 3.5) < 0.5);
  CHECK(std::abs(slope_v + 2.0) < 0.5);
  CHECK(std::abs(slope_w - 0.5) < 0.5);
}

TEST_CASE("both abundance updates agree") {
  auto spec = sim::scenario_spec(sim::Scenario::I);
  spec.years = 6;
  stats::RngStream g(17);
  const auto pop = sim::generate_population(spec, g);
  const auto data = sim::generate_cr_data(pop, spec.beta_cr, spec.sigma2, spec, g);
  McmcConfig cfg;
  cfg.iterations = 30000;
  cfg.burn_in = 5000;
  cfg.thin = 5;
  const auto c = fit_cr(data, Priors{}, cfg, stats::RngStream(1));
  cfg.abundance_update = AbundanceUpdate::RandomWalk;
  const auto r = fit_cr(data, Priors{}, cfg, stats::RngStream(2));
  const Eigen::VectorXd lc = c.draws("log_theta").colwise().mean();
  const Eigen::VectorXd lr = r.draws("log_theta").colwise().mean();
  for (Eigen::Index i = 0; i < lc.size(); ++i) CHECK(std::abs(lc(i) - lr(i)) < 0.25);
  const Eigen::VectorXd bc = c.draws("beta").colwise().mean();
  const Eigen::VectorXd br = r.draws("beta").colwise().mean();
  for (Eigen::Index i = 0; i < bc.size(); ++i) CHECK(std::abs(bc(i) - br(i)) < 0.25);
}

TEST_CASE("small SBC run is calibrated") {
  const auto r = oracle::cr_sbc(60, AbundanceUpdate::RandomWalk, 11, 6000, 1000, 50);
  CHECK(r.failed_fits == 0);
  for (const auto& [name, p] : r.pvalues) {
    INFO(name);
    CHECK(p > 0.001);
  }
}

}
