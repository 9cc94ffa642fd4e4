#include "abundance/gibbs.hpp"

#include <stdexcept>

namespace abundance::gibbs {

double draw_variance(std::span<const double> residuals, double shape, double rate,
                     stats::RngStream& rng) {
  double ss = 0.0;
  for (double r : residuals) ss += r * r;
  return stats::sample_inv_gamma(shape + 0.5 * static_cast<double>(residuals.size()),
                                 rate + 0.5 * ss, rng);
}

RegressionConditional regression_conditional(const Eigen::MatrixXd& y,
                                             const Eigen::MatrixXd& z,
                                             const Eigen::MatrixXd& omega_inv,
                                             const Eigen::MatrixXd& prior_mean,
                                             double prior_sd) {
  const Eigen::Index J = y.cols();
  const Eigen::Index q = z.cols();
  if (z.rows() != y.rows() || omega_inv.rows() != J || omega_inv.cols() != J ||
      prior_mean.rows() != J || prior_mean.cols() != q)
    throw std::invalid_argument("regression_conditional: dimension mismatch");

  const Eigen::MatrixXd ztz = z.transpose() * z;
  const Eigen::MatrixXd zty = z.transpose() * (y * omega_inv);  // q x J
  const double prior_prec = 1.0 / (prior_sd * prior_sd);

  Eigen::MatrixXd prec = Eigen::MatrixXd::Zero(J * q, J * q);
  Eigen::VectorXd lin(J * q);
  for (Eigen::Index i = 0; i < J; ++i) {
    for (Eigen::Index k = 0; k < J; ++k) prec.block(i * q, k * q, q, q) = omega_inv(i, k) * ztz;
    for (Eigen::Index c = 0; c < q; ++c) lin(i * q + c) = zty(c, i) + prior_prec * prior_mean(i, c);
  }
  prec.diagonal().array() += prior_prec;
  prec = 0.5 * (prec + prec.transpose());

  RegressionConditional out;
  out.precision = prec;
  out.mean = prec.llt().solve(lin);
  return out;
}

Eigen::MatrixXd draw_regression(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
                                const Eigen::MatrixXd& omega_inv,
                                const Eigen::MatrixXd& prior_mean, double prior_sd,
                                stats::RngStream& rng) {
  const auto cond = regression_conditional(y, z, omega_inv, prior_mean, prior_sd);
  const stats::SymMatrix prec(cond.precision);
  const Eigen::VectorXd lin = cond.precision * cond.mean;
  const Eigen::VectorXd draw = stats::sample_mvn_canonical(lin, prec, rng);
  const Eigen::Index J = y.cols();
  const Eigen::Index q = z.cols();
  Eigen::MatrixXd b(J, q);
  for (Eigen::Index i = 0; i < J; ++i)
    for (Eigen::Index c = 0; c < q; ++c) b(i, c) = draw(i * q + c);
  return b;
}

stats::SymMatrix draw_covariance(const Eigen::MatrixXd& residuals,
                                 const stats::SymMatrix& scale, double dof,
                                 stats::RngStream& rng) {
  if (residuals.cols() != scale.dim())
    throw std::invalid_argument("draw_covariance: residual width differs from scale dimension");
  const Eigen::MatrixXd post = scale.matrix() + residuals.transpose() * residuals;
  return stats::sample_inv_wishart(stats::SymMatrix(0.5 * (post + post.transpose())),
                                   dof + static_cast<double>(residuals.rows()), rng);
}

}  // namespace abundance::gibbs
