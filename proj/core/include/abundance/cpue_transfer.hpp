#pragma once

// Transfer-learning CPUE model. Detection coefficients are not learned from
// the counts: every iteration takes one stored draw of the capture-recapture
// detection coefficients and conditions the abundance layer on it, so the
// counts never feed back into the detection function.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "abundance/data.hpp"
#include "abundance/mcmc.hpp"
#include "abundance/priors.hpp"
#include "abundance/stats.hpp"

namespace abundance::transfer {

/// Ordered (CR coefficient index -> CPUE covariate column) pairs. Index 0 on
/// both sides is the intercept. CR coefficients not listed are dropped.
struct CoefficientMap {
  std::vector<std::pair<int, int>> pairs;
  bool operator==(const CoefficientMap&) const = default;
};

/// Parses "cr_idx:cpue_col,...". Throws ValidationError.
CoefficientMap parse_coefficient_map(const std::string& text);
std::string format_coefficient_map(const CoefficientMap& map);

/// Intercept plus every CR covariate whose name also appears among the CPUE
/// covariates. A CR covariate with no CPUE counterpart (effort hours, say)
/// is left out.
CoefficientMap default_coefficient_map(const std::vector<std::string>& cr_x_names,
                                       const std::vector<std::string>& cpue_x_names);

struct TransferSpec {
  std::shared_ptr<const PosteriorChains> beta_source;
  CoefficientMap map;
  /// Moments of the CR covariates (one per non-intercept CR coefficient).
  Standardization moments;
};

/// Builds a spec from CR chains. Without an explicit map the default
/// name-matching map is used.
TransferSpec make_transfer_spec(std::shared_ptr<const PosteriorChains> cr_chains,
                                const std::vector<std::string>& cpue_x_names,
                                std::optional<CoefficientMap> map = std::nullopt);

/// Throws ValidationError if the map does not fit the source or the data.
void validate(const TransferSpec& spec, const CPUEDataset& data);

/// inv_logit(x . beta); no random effect.
double detection_from_transfer(std::span<const double> x, std::span<const double> beta);

/// poisson_logpmf(y, lambda_star * effort * p).
double transfer_loglik(double lambda_star, double effort, double p, std::int64_t y);

/// Places the mapped entries of one class's CR coefficients into a vector
/// laid out like the CPUE covariates (unmapped columns are 0).
Eigen::VectorXd mapped_beta(std::span<const double> cr_beta, const CoefficientMap& map,
                            Eigen::Index cpue_qx);

/// Standardizes mapped CPUE columns with the carried CR moments.
CPUEDataset standardized_for_transfer(const CPUEDataset& data, const TransferSpec& spec);

/// Chains: log_lambda_star (T x J), G, Sigma, beta (J x q_cpue, the mapped
/// draw in use) and beta_row (source row index used at each stored draw).
PosteriorChains fit_cpue_transfer(const CPUEDataset& data, const TransferSpec& spec,
                                  const Priors& priors, const McmcConfig& config,
                                  stats::RngStream rng);

/// As above; additionally reports every source row index consumed, one per
/// iteration including burn-in, when `consumed` is non-null.
PosteriorChains fit_cpue_transfer(const CPUEDataset& data, const TransferSpec& spec,
                                  const Priors& priors, const McmcConfig& config,
                                  stats::RngStream rng, std::vector<std::size_t>* consumed);

/// lambda_star draws = abundance draws on the absolute scale.
Eigen::MatrixXd extract_abundance_star(const PosteriorChains& chains);

}  // namespace abundance::transfer
