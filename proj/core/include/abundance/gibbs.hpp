#pragma once

// Conjugate full-conditional draws shared by the capture-recapture and CPUE
// samplers: a variance with an inverse-gamma prior, a coefficient matrix of
// a multivariate regression with independent normal priors, and a
// covariance with an inverse-Wishart prior.

#include <span>

#include <Eigen/Dense>

#include "abundance/stats.hpp"

namespace abundance::gibbs {

/// sigma^2 | residuals ~ IG(shape + n/2, rate + sum(r^2)/2).
double draw_variance(std::span<const double> residuals, double shape, double rate,
                     stats::RngStream& rng);

/// Gaussian full conditional of vec(B) (row-major, J*q) for the model
/// Y_t ~ N(B z_t, Omega) with independent N(prior_mean, prior_sd^2) entries.
struct RegressionConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
};

RegressionConditional regression_conditional(const Eigen::MatrixXd& y,
                                             const Eigen::MatrixXd& z,
                                             const Eigen::MatrixXd& omega_inv,
                                             const Eigen::MatrixXd& prior_mean,
                                             double prior_sd);

/// Draws B (J x q) from its full conditional.
Eigen::MatrixXd draw_regression(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
                                const Eigen::MatrixXd& omega_inv,
                                const Eigen::MatrixXd& prior_mean, double prior_sd,
                                stats::RngStream& rng);

/// Omega | residuals ~ IW(scale + E^T E, dof + T) for T x J residuals E.
stats::SymMatrix draw_covariance(const Eigen::MatrixXd& residuals,
                                 const stats::SymMatrix& scale, double dof,
                                 stats::RngStream& rng);

}  // namespace abundance::gibbs
