#pragma once

// Numerical primitives shared by every sampler: link functions, small dense
// linear algebra and random-variate generation.

#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Dense>

#include "abundance/errors.hpp"

namespace abundance::stats {

/// A reproducible random stream identified by (seed, stream id).
///
/// Two streams built from the same pair produce the same sequence; streams
/// with different ids are seeded through a SplitMix64 mix of both values so
/// their engine states are unrelated.
class RngStream {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Child stream with id derived from this stream's id and `sub`.
  RngStream split(std::uint64_t sub) const;

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  double uniform();
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Symmetric matrix. Construction checks symmetry to 1e-12 (relative to the
/// largest entry) and stores the exactly symmetrized average.
class SymMatrix {
 public:
  explicit SymMatrix(const Eigen::MatrixXd& m);
  static SymMatrix identity(Eigen::Index dim);

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

double logit(double p);
double inv_logit(double x) noexcept;
/// log(inv_logit(x)) without underflow for large |x|.
double log_inv_logit(double x) noexcept;
/// log(1 - inv_logit(x)).
double log1m_inv_logit(double x) noexcept;

double log_factorial(std::int64_t n);
double log_choose(std::int64_t n, std::int64_t k);

/// Lower-triangular L with L * L^T = m. Throws NotPositiveDefinite.
Eigen::MatrixXd cholesky(const SymMatrix& m);

/// Inverse of a positive-definite matrix via its Cholesky factor.
Eigen::MatrixXd spd_inverse(const SymMatrix& m);
double spd_log_det(const SymMatrix& m);

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const SymMatrix& cov,
                           RngStream& rng);
/// Draw from N(precision^{-1} * linear, precision^{-1}).
Eigen::VectorXd sample_mvn_canonical(const Eigen::VectorXd& linear,
                                     const SymMatrix& precision,
                                     RngStream& rng);

/// Inverse-Wishart draw with E[W] = scale / (dof - dim - 1).
SymMatrix sample_inv_wishart(const SymMatrix& scale, double dof,
                             RngStream& rng);

/// Shape-rate inverse gamma: density proportional to x^{-shape-1} e^{-rate/x}.
double sample_inv_gamma(double shape, double rate, RngStream& rng);

double sample_normal(double mean, double sd, RngStream& rng);
std::int64_t sample_poisson(double rate, RngStream& rng);
std::int64_t sample_binomial(std::int64_t trials, double p, RngStream& rng);

double poisson_logpmf(std::int64_t y, double rate);
double binomial_logpmf(std::int64_t k, std::int64_t n, double p);
double normal_logpdf(double x, double mean, double sd);
double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const SymMatrix& cov);
double inv_gamma_logpdf(double x, double shape, double rate);
double inv_wishart_logpdf(const SymMatrix& x, const SymMatrix& scale,
                          double dof);

double mean(std::span<const double> xs);
double variance(std::span<const double> xs);

}  // namespace abundance::stats
