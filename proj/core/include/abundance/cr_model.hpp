#pragma once

// Hierarchical capture-recapture model: closed-population likelihood per
// (year, class), logit-linear daily detection with random effects, Poisson
// abundance around a log-normal year layer.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "abundance/data.hpp"
#include "abundance/mcmc.hpp"
#include "abundance/priors.hpp"
#include "abundance/stats.hpp"

namespace abundance::cr {

struct CaptureCount {
  std::int64_t n = 0;  ///< fish caught on the day
  std::int64_t m = 0;  ///< of which already marked
};

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

struct CRState {
  CountMatrix N;                                    ///< T x J
  Eigen::MatrixXd beta;                             ///< J x q_x
  std::vector<std::vector<std::vector<double>>> eps;  ///< [t][j][k]
  Eigen::VectorXd sigma2;                           ///< J
  Eigen::MatrixXd log_theta;                        ///< T x J
  Eigen::MatrixXd A;                                ///< J x q_z
  stats::SymMatrix Omega = stats::SymMatrix::identity(1);
};

/// Log of binom(N, sum n - sum m) * prod_k p_k^{n_k} (1 - p_k)^{N - n_k}.
/// Throws std::domain_error when N is below the distinct-animal count or a
/// p_k is outside (0, 1).
double cr_loglik(std::int64_t N, std::span<const double> p,
                 std::span<const CaptureCount> counts);

/// The data-only term dropped by cr_loglik:
/// log(U! / prod_k u_k!) + sum_k log binom(M_k, m_k), with u_k = n_k - m_k.
/// cr_loglik + this constant is the exact log-probability of the sequential
/// capture outcome.
double cr_log_data_constant(std::span<const CaptureCount> counts);

/// inv_logit(x . beta + eps).
double detection_prob(std::span<const double> x, std::span<const double> beta, double eps);

/// Additive pieces of the joint log posterior.
struct LogPosteriorTerms {
  double capture = 0.0;        ///< sum of cr_loglik
  double abundance = 0.0;      ///< Poisson(N | theta)
  double year_layer = 0.0;     ///< MVN(log theta_t | A z_t, Omega)
  double random_effects = 0.0; ///< Normal(eps | 0, sigma2_j)
  double prior_beta = 0.0;
  double prior_sigma2 = 0.0;
  double prior_A = 0.0;
  double prior_Omega = 0.0;

  double total() const noexcept {
    return capture + abundance + year_layer + random_effects + prior_beta + prior_sigma2 +
           prior_A + prior_Omega;
  }
};

/// Decomposed log posterior. `capture` is -inf when some N is below its floor.
LogPosteriorTerms cr_log_posterior_terms(const CRState& state, const CRDataset& data,
                                         const Priors& priors);
double cr_log_posterior(const CRState& state, const CRDataset& data, const Priors& priors);

/// Starting point of the sampler (data must already be standardized).
CRState initial_state(const CRDataset& data, const Priors& priors);

/// Flattened position of eps(t, j, k) in the "eps" chain.
std::vector<std::size_t> eps_offsets(const CRDataset& data);

/// Metropolis-within-Gibbs sampler. Detection covariates are standardized
/// with the dataset's own moments, which are stored in the returned chains.
///
/// Parameters recorded: N (T x J), beta (J x q_x), eps (ragged, see
/// eps_offsets), sigma2 (J), log_theta (T x J), A (J x q_z), Omega (J x J).
PosteriorChains fit_cr(const CRDataset& data, const Priors& priors, const McmcConfig& config,
                       stats::RngStream rng);

/// Per-class average over years and days of the posterior-mean detection
/// probability. `data` is given on its original scale; the chains' moments
/// are applied before evaluating x . beta.
std::vector<double> mean_detection_phat(const PosteriorChains& chains, const CRDataset& data);

}  // namespace abundance::cr
