#pragma once

// Standard CPUE model: Poisson counts with an effort offset and a joint
// log-normal relative abundance across size classes.

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "abundance/data.hpp"
#include "abundance/mcmc.hpp"
#include "abundance/priors.hpp"
#include "abundance/stats.hpp"

namespace abundance::cpue {

/// poisson_logpmf(y, lambda * effort).
double cpue_loglik(double lambda, double effort, std::int64_t y);

/// Chains: log_lambda (T x J), G (J x q_z), Sigma (J x J).
PosteriorChains fit_cpue_naive(const CPUEDataset& data, const Priors& priors,
                               const McmcConfig& config, stats::RngStream rng);

/// lambda / phat_j per draw. `lambda_draws` is draws x (T * J), row-major in
/// (t, j); phat has one entry per class.
Eigen::MatrixXd rescale_naive(const Eigen::MatrixXd& lambda_draws, std::span<const double> phat);

/// exp(log_lambda) of a naive fit.
Eigen::MatrixXd lambda_draws(const PosteriorChains& chains);

}  // namespace abundance::cpue
