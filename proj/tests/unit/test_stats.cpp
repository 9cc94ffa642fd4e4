#include <doctest.h>

#include <cmath>
#include <vector>

#include "abundance/stats.hpp"
#include "oracles.hpp"

using namespace abundance;
using namespace abundance::stats;

TEST_SUITE("stats") {

TEST_CASE("logit and inv_logit") {
  CHECK(logit(0.5) == doctest::Approx(0.0));
  CHECK(logit(0.8) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(inv_logit(-3.5) == doctest::Approx(1.0 / (1.0 + std::exp(3.5))).epsilon(1e-12));
  CHECK(inv_logit(-3.5) == doctest::Approx(0.029312).epsilon(1e-5));
  CHECK_THROWS_AS(logit(0.0), std::domain_error);
  CHECK_THROWS_AS(logit(1.0), std::domain_error);
  for (double p = 0.001; p < 0.999; p += 0.001) CHECK(std::abs(inv_logit(logit(p)) - p) <= 1e-12);
  CHECK(log_inv_logit(-800.0) == doctest::Approx(-800.0));
  CHECK(log1m_inv_logit(800.0) == doctest::Approx(-800.0));
  CHECK(log_inv_logit(0.3) == doctest::Approx(std::log(inv_logit(0.3))).epsilon(1e-14));
}

TEST_CASE("SymMatrix symmetry check") {
  Eigen::Matrix2d bad;
  bad << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(SymMatrix{bad}, std::invalid_argument);
  Eigen::Matrix2d near;
  near << 1, 0.5, 0.5 + 1e-14, 1;
  SymMatrix s(near);
  CHECK(s(0, 1) == s(1, 0));
}

TEST_CASE("cholesky examples") {
  CHECK(cholesky(SymMatrix::identity(2)).isApprox(Eigen::Matrix2d::Identity()));
  Eigen::Matrix2d m;
  m << 4, 2, 2, 3;
  const Eigen::MatrixXd L = cholesky(SymMatrix(m));
  Eigen::Matrix2d expect;
  expect << 2, 0, 1, std::sqrt(2.0);
  CHECK((L - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((L * L.transpose() - m).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::Matrix2d indef;
  indef << 1, 2, 2, 1;
  CHECK_THROWS_AS(cholesky(SymMatrix(indef)), NotPositiveDefinite);
}

TEST_CASE("cholesky reconstructs random PD matrices") {
  RngStream rng(7);
  for (int dim = 1; dim <= 6; ++dim)
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::MatrixXd a(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = rng.normal();
      Eigen::MatrixXd m = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
      m = 0.5 * (m + m.transpose()).eval();
      const Eigen::MatrixXd L = cholesky(SymMatrix(m));
      const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
      CHECK((L * L.transpose() - m).cwiseAbs().rowwise().sum().maxCoeff() <= 1e-10 * norm);
      CHECK(L.isLowerTriangular());
    }
}

TEST_CASE("spd inverse and log det") {
  Eigen::Matrix2d m;
  m << 4, 2, 2, 3;
  CHECK((spd_inverse(SymMatrix(m)) * m).isApprox(Eigen::Matrix2d::Identity(), 1e-12));
  CHECK(spd_log_det(SymMatrix(m)) == doctest::Approx(std::log(8.0)).epsilon(1e-12));
}

TEST_CASE("RngStream determinism and independence") {
  RngStream a(42, 3), b(42, 3), c(42, 4);
  std::vector<double> xa, xb, xc;
  for (int i = 0; i < 100; ++i) {
    xa.push_back(a.uniform());
    xb.push_back(b.uniform());
    xc.push_back(c.uniform());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  RngStream s1 = RngStream(42, 3).split(1), s2 = RngStream(42, 3).split(1), s3 = RngStream(42, 3).split(2);
  CHECK(s1.normal() == s2.normal());
  CHECK(s1.stream() != s3.stream());
}

TEST_CASE("sample_mvn examples") {
  RngStream rng(11);
  Eigen::Vector2d mean(1.5, -2.0);
  const auto tiny = SymMatrix(1e-12 * Eigen::Matrix2d::Identity());
  CHECK((sample_mvn(mean, tiny, rng) - mean).cwiseAbs().maxCoeff() < 1e-5);

  Eigen::Matrix2d cov;
  cov << 1, 0.1, 0.1, 1;
  const int n = 100000;
  double sxy = 0, sxx = 0, syy = 0, sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd d = sample_mvn(Eigen::Vector2d::Zero(), SymMatrix(cov), rng);
    sx += d(0);
    sy += d(1);
    sxy += d(0) * d(1);
    sxx += d(0) * d(0);
    syy += d(1) * d(1);
  }
  const double cxy = sxy / n - sx / n * sy / n;
  const double r = cxy / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
  CHECK(r >= 0.08);
  CHECK(r <= 0.12);

  RngStream r1(5), r2(5);
  CHECK(sample_mvn(mean, SymMatrix(cov), r1) == sample_mvn(mean, SymMatrix(cov), r2));
  CHECK_THROWS(sample_mvn(Eigen::Vector3d::Zero(), SymMatrix(cov), r1));
}

TEST_CASE("sample_mvn_canonical moments") {
  RngStream rng(12);
  Eigen::Matrix2d prec;
  prec << 2, 0.5, 0.5, 1;
  Eigen::Vector2d lin(1, -1);
  const Eigen::Vector2d mu = prec.inverse() * lin;
  const Eigen::Matrix2d cov = prec.inverse();
  const int n = 100000;
  std::vector<double> x0(n), x1(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd d = sample_mvn_canonical(lin, SymMatrix(prec), rng);
    x0[i] = d(0);
    x1[i] = d(1);
  }
  CHECK(std::abs(mean(x0) - mu(0)) < 5 * std::sqrt(cov(0, 0) / n));
  CHECK(std::abs(mean(x1) - mu(1)) < 5 * std::sqrt(cov(1, 1) / n));
  CHECK(std::abs(variance(x0) - cov(0, 0)) < 5 * cov(0, 0) * std::sqrt(2.0 / n));
}

TEST_CASE("sample_inv_wishart examples") {
  RngStream rng(13);
  const int n = 100000;
  Eigen::Matrix2d sum = Eigen::Matrix2d::Zero();
  bool all_pd = true;
  for (int i = 0; i < n; ++i) {
    const SymMatrix w = sample_inv_wishart(SymMatrix::identity(2), 5.0, rng);
    sum += w.matrix();
    if (i < 2000) {
      try {
        cholesky(w);
      } catch (const NotPositiveDefinite&) {
        all_pd = false;
      }
    }
  }
  CHECK(all_pd);
  const Eigen::Matrix2d m = sum / n;
  CHECK(m(0, 0) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(m(1, 1) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(std::abs(m(0, 1)) < 0.025);
  CHECK_THROWS(sample_inv_wishart(SymMatrix::identity(2), 1.0, rng));
}

TEST_CASE("sample_inv_gamma examples") {
  RngStream rng(14);
  const int n = 100000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = sample_inv_gamma(3.0, 2.0, rng);
  CHECK(mean(xs) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(*std::min_element(xs.begin(), xs.end()) > 0.0);
  RngStream a(3), b(3);
  CHECK(sample_inv_gamma(3.0, 2.0, a) == sample_inv_gamma(3.0, 2.0, b));
  CHECK_THROWS(sample_inv_gamma(0.0, 1.0, a));
  CHECK_THROWS(sample_inv_gamma(1.0, -1.0, a));
  // shape 5, rate 4: mean 1, variance 1/3.
  std::vector<double> ys(n);
  for (auto& y : ys) y = sample_inv_gamma(5.0, 4.0, rng);
  CHECK(std::abs(mean(ys) - 1.0) < 5 * std::sqrt(1.0 / 3.0 / n));
}

TEST_CASE("scalar samplers match analytic moments") {
  RngStream rng(15);
  const int n = 100000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = static_cast<double>(sample_poisson(7.5, rng));
  CHECK(std::abs(mean(xs) - 7.5) < 5 * std::sqrt(7.5 / n));
  CHECK(std::abs(variance(xs) - 7.5) < 0.2);
  for (auto& x : xs) x = static_cast<double>(sample_binomial(20, 0.3, rng));
  CHECK(std::abs(mean(xs) - 6.0) < 5 * std::sqrt(4.2 / n));
  for (auto& x : xs) x = sample_normal(2.0, 3.0, rng);
  CHECK(std::abs(mean(xs) - 2.0) < 5 * 3.0 / std::sqrt(n));
  CHECK(std::abs(variance(xs) - 9.0) < 5 * 9.0 * std::sqrt(2.0 / n));
  CHECK(sample_binomial(10, 0.0, rng) == 0);
  CHECK(sample_binomial(10, 1.0, rng) == 10);
}

TEST_CASE("log densities") {
  CHECK(poisson_logpmf(0, 1.0) == doctest::Approx(-1.0));
  CHECK(poisson_logpmf(3, 2.0) == doctest::Approx(3 * std::log(2.0) - 2.0 - std::log(6.0)).epsilon(1e-12));
  CHECK(poisson_logpmf(3, 2.0) == doctest::Approx(-1.712318).epsilon(1e-6));
  double total = 0.0;
  for (int y = 0; y <= 200; ++y) total += std::exp(poisson_logpmf(y, 5.0));
  CHECK(std::abs(total - 1.0) < 1e-10);
  CHECK_THROWS(poisson_logpmf(1, 0.0));
  CHECK(binomial_logpmf(2, 5, 0.5) == doctest::Approx(oracle::binomial_logpmf(2, 5, 0.5)).epsilon(1e-12));
  CHECK(normal_logpdf(0.0, 0.0, 1.0) == doctest::Approx(-0.5 * std::log(2 * M_PI)).epsilon(1e-12));
  CHECK(log_factorial(5) == doctest::Approx(std::log(120.0)).epsilon(1e-12));
  CHECK(log_choose(4, 3) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(inv_gamma_logpdf(1.0, 3.0, 2.0) ==
        doctest::Approx(3 * std::log(2.0) - std::lgamma(3.0) - 4 * std::log(1.0) - 2.0).epsilon(1e-12));
  // A 1x1 inverse Wishart is an inverse gamma with shape dof/2, rate scale/2.
  const double iw = inv_wishart_logpdf(SymMatrix(Eigen::MatrixXd::Constant(1, 1, 0.7)),
                                       SymMatrix(Eigen::MatrixXd::Constant(1, 1, 2.0)), 4.0);
  CHECK(iw == doctest::Approx(inv_gamma_logpdf(0.7, 2.0, 1.0)).epsilon(1e-12));
  Eigen::Matrix2d cov;
  cov << 2, 0.3, 0.3, 1;
  Eigen::Vector2d x(0.4, -0.2), mu(0.1, 0.1);
  const double quad = (x - mu).dot(cov.inverse() * (x - mu));
  CHECK(mvn_logpdf(x, mu, SymMatrix(cov)) ==
        doctest::Approx(-std::log(2 * M_PI) - 0.5 * std::log(cov.determinant()) - 0.5 * quad).epsilon(1e-12));
}

TEST_CASE("samplers are pure functions of the stream") {
  auto run = [] {
    RngStream rng(99, 1);
    std::vector<double> out;
    out.push_back(sample_inv_gamma(2, 3, rng));
    out.push_back(static_cast<double>(sample_poisson(1e4, rng)));
    out.push_back(sample_inv_wishart(SymMatrix::identity(3), 6, rng)(1, 2));
    out.push_back(sample_mvn(Eigen::Vector3d::Ones(), SymMatrix::identity(3), rng)(2));
    return out;
  };
  CHECK(run() == run());
}

}
