#include "abundance/stats.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace abundance::stats {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

double lgamma_safe(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double log_multigamma(double a, Eigen::Index p) {
  double out = 0.25 * static_cast<double>(p * (p - 1)) * std::log(std::numbers::pi);
  for (Eigen::Index i = 0; i < p; ++i) out += lgamma_safe(a - 0.5 * static_cast<double>(i));
  return out;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed),
      stream_(stream),
      engine_(splitmix64(seed ^ splitmix64(stream ^ 0xA5A5A5A5DEADBEEFULL))) {}

RngStream RngStream::split(std::uint64_t sub) const {
  return RngStream(seed_, splitmix64(stream_ * 0x9E3779B97F4A7C15ULL + sub + 1));
}

double RngStream::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double RngStream::normal() {
  return std::normal_distribution<double>(0.0, 1.0)(engine_);
}

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw std::invalid_argument("SymMatrix: matrix must be square and non-empty");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (!m.allFinite()) throw std::invalid_argument("SymMatrix: non-finite entry");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("SymMatrix: matrix is not symmetric");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index dim) {
  return SymMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("logit: probability must lie in (0, 1), got " + std::to_string(p));
  return std::log(p / (1.0 - p));
}

double inv_logit(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_inv_logit(double x) noexcept {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double log1m_inv_logit(double x) noexcept { return log_inv_logit(-x); }

double log_factorial(std::int64_t n) {
  if (n < 0) throw std::domain_error("log_factorial: negative argument");
  return lgamma_safe(static_cast<double>(n) + 1.0);
}

double log_choose(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) throw std::domain_error("log_choose: k outside [0, n]");
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

Eigen::MatrixXd cholesky(const SymMatrix& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m.matrix());
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("cholesky: matrix is not positive definite");
  Eigen::MatrixXd l = llt.matrixL();
  if (!l.allFinite() || (l.diagonal().array() <= 0.0).any())
    throw NotPositiveDefinite("cholesky: matrix is not positive definite");
  return l;
}

Eigen::MatrixXd spd_inverse(const SymMatrix& m) {
  const Eigen::MatrixXd l = cholesky(m);
  const Eigen::Index n = m.dim();
  Eigen::MatrixXd linv = l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd inv = linv.transpose() * linv;
  return 0.5 * (inv + inv.transpose());
}

double spd_log_det(const SymMatrix& m) {
  return 2.0 * cholesky(m).diagonal().array().log().sum();
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const SymMatrix& cov,
                           RngStream& rng) {
  if (mean.size() != cov.dim())
    throw std::invalid_argument("sample_mvn: mean and covariance dimensions differ");
  const Eigen::MatrixXd l = cholesky(cov);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + l * z;
}

Eigen::VectorXd sample_mvn_canonical(const Eigen::VectorXd& linear,
                                     const SymMatrix& precision,
                                     RngStream& rng) {
  if (linear.size() != precision.dim())
    throw std::invalid_argument("sample_mvn_canonical: dimension mismatch");
  // precision = L L^T; mean = L^{-T} L^{-1} b; draw = mean + L^{-T} z
  const Eigen::MatrixXd l = cholesky(precision);
  const auto lower = l.triangularView<Eigen::Lower>();
  Eigen::VectorXd w = lower.solve(linear);
  Eigen::VectorXd z(linear.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return lower.transpose().solve(w + z);
}

SymMatrix sample_inv_wishart(const SymMatrix& scale, double dof, RngStream& rng) {
  const Eigen::Index p = scale.dim();
  if (!(dof > static_cast<double>(p) - 1.0))
    throw std::invalid_argument("sample_inv_wishart: dof must exceed dim - 1");
  // Bartlett decomposition of W ~ Wishart(scale^{-1}, dof); return W^{-1}.
  const Eigen::MatrixXd l = cholesky(SymMatrix(spd_inverse(scale)));
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    std::chi_squared_distribution<double> chi(dof - static_cast<double>(i));
    a(i, i) = std::sqrt(chi(rng));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Eigen::MatrixXd la = l * a;
  // W = (LA)(LA)^T, so W^{-1} = (LA)^{-T} (LA)^{-1}.
  Eigen::MatrixXd inv_la = la.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::MatrixXd out = inv_la.transpose() * inv_la;
  return SymMatrix(0.5 * (out + out.transpose()));
}

double sample_inv_gamma(double shape, double rate, RngStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("sample_inv_gamma: shape and rate must be positive");
  std::gamma_distribution<double> g(shape, 1.0 / rate);
  double x = g(rng);
  // Guard against an underflowed gamma draw for tiny shapes.
  while (x <= 0.0) x = g(rng);
  return 1.0 / x;
}

double sample_normal(double mean, double sd, RngStream& rng) {
  return mean + sd * rng.normal();
}

std::int64_t sample_poisson(double rate, RngStream& rng) {
  if (!(rate >= 0.0) || !std::isfinite(rate))
    throw std::invalid_argument("sample_poisson: rate must be finite and non-negative");
  if (rate == 0.0) return 0;
  return std::poisson_distribution<std::int64_t>(rate)(rng);
}

std::int64_t sample_binomial(std::int64_t trials, double p, RngStream& rng) {
  if (trials < 0 || !(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("sample_binomial: invalid parameters");
  if (trials == 0 || p == 0.0) return 0;
  if (p == 1.0) return trials;
  return std::binomial_distribution<std::int64_t>(trials, p)(rng);
}

double poisson_logpmf(std::int64_t y, double rate) {
  if (!(rate > 0.0)) throw std::domain_error("poisson_logpmf: rate must be positive");
  if (y < 0) throw std::domain_error("poisson_logpmf: negative count");
  return static_cast<double>(y) * std::log(rate) - rate - log_factorial(y);
}

double binomial_logpmf(std::int64_t k, std::int64_t n, double p) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  if (p == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p == 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  return log_choose(n, k) + static_cast<double>(k) * std::log(p) +
         static_cast<double>(n - k) * std::log1p(-p);
}

double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * kLogTwoPi - std::log(sd) - 0.5 * z * z;
}

double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const SymMatrix& cov) {
  const Eigen::MatrixXd l = cholesky(cov);
  const Eigen::VectorXd r = l.triangularView<Eigen::Lower>().solve(x - mean);
  return -0.5 * static_cast<double>(x.size()) * kLogTwoPi -
         l.diagonal().array().log().sum() - 0.5 * r.squaredNorm();
}

double inv_gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - lgamma_safe(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

double inv_wishart_logpdf(const SymMatrix& x, const SymMatrix& scale, double dof) {
  const Eigen::Index p = x.dim();
  const double pd = static_cast<double>(p);
  const Eigen::MatrixXd xinv = spd_inverse(x);
  return 0.5 * dof * spd_log_det(scale) - 0.5 * dof * pd * std::numbers::ln2 -
         log_multigamma(0.5 * dof, p) - 0.5 * (dof + pd + 1.0) * spd_log_det(x) -
         0.5 * (scale.matrix() * xinv).trace();
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty input");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance: need at least two values");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

}  // namespace abundance::stats
