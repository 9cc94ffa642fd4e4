#pragma once

// Synthetic populations, capture-recapture and CPUE data, and the
// naive-versus-transfer comparison run over replicated scenarios.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "abundance/cr_model.hpp"
#include "abundance/data.hpp"
#include "abundance/mcmc.hpp"
#include "abundance/priors.hpp"
#include "abundance/stats.hpp"

namespace abundance::sim {

enum class Scenario { I, II, III, IV, V, VI, VII };

/// "I".."VII"; throws ValidationError otherwise.
Scenario parse_scenario(const std::string& text);
std::string to_string(Scenario s);

enum class Preset { Paper, Desk };
Preset parse_preset(const std::string& text);
std::string to_string(Preset p);

struct ScenarioSpec {
  Scenario id = Scenario::I;
  Eigen::MatrixXd alpha;                  ///< J x 3
  Eigen::MatrixXd Omega;                  ///< J x J
  Eigen::MatrixXd beta_cr;                ///< J x 3
  std::optional<Eigen::MatrixXd> beta_cpue;  ///< J x 3, CPUE detection when it differs
  std::vector<double> sigma2;             ///< J
  int years = 17;
  std::vector<int> days;                  ///< per year; empty means 4 everywhere
  int replicates = 100;
  std::uint64_t seed = 1;
  McmcConfig mcmc;
  Priors priors;

  int n_classes() const { return static_cast<int>(alpha.rows()); }
  int days_in(int t) const { return days.empty() ? 4 : days[static_cast<std::size_t>(t)]; }
};

/// Defaults for a scenario: 100 replicates and the long chain settings.
ScenarioSpec scenario_spec(Scenario id);

/// Paper: 100 replicates, 50k iterations. Desk: 30 replicates, 10k
/// iterations, 3k burn-in, thin 5.
void apply_preset(ScenarioSpec& spec, Preset preset);

/// Throws ValidationError on inconsistent dimensions or values.
void validate(const ScenarioSpec& spec);

struct Population {
  Eigen::MatrixXd z;          ///< T x 3: intercept, scaled year, u
  Eigen::MatrixXd log_theta;  ///< T x J
  cr::CountMatrix N;          ///< T x J
};

/// z_t = (1, year scaled to [-1, 1], u_t ~ N(0, 1)); log theta_t ~ N(A z_t,
/// Omega); N ~ Pois(theta).
Population generate_population(const ScenarioSpec& spec, stats::RngStream& rng);

/// Scaled year covariate for t = 0..T-1.
double scaled_year(int t, int n_years);

/// Sequential multi-day capture-recapture sampling of `pop` with day
/// covariates x = (1, v, w) drawn iid N(0, 1), detection
/// inv_logit(x . beta_j + eps), eps ~ N(0, sigma2_j).
CRDataset generate_cr_data(const Population& pop, const Eigen::MatrixXd& beta,
                           const std::vector<double>& sigma2, const ScenarioSpec& spec,
                           stats::RngStream& rng);

/// First-day counts with unit effort; covariates carried over.
CPUEDataset derive_cpue(const CRDataset& cr);

/// Fresh first-day counts y ~ Binomial(N, p) with the same day-1 covariates
/// and new random effects, under detection coefficients `beta`.
CPUEDataset regenerate_cpue(const Population& pop, const CRDataset& cr,
                            const Eigen::MatrixXd& beta, const std::vector<double>& sigma2,
                            stats::RngStream& rng);

struct ClassMetrics {
  double naive_mad = 0.0;
  double transfer_mad = 0.0;
  double naive_n_coverage = 0.0;     ///< fraction of years covered
  double transfer_n_coverage = 0.0;
  bool naive_u_covered = false;
  bool transfer_u_covered = false;
  double truth_u = 0.0;
};

struct ReplicateResult {
  int replicate = 0;
  bool failed = false;
  std::string error;
  cr::CountMatrix truth;
  std::vector<ClassMetrics> classes;
  std::map<std::string, double> acceptance;  ///< "cr.beta", "naive.log_lambda", ...
};

/// Deterministic given (spec, replicate). Fit failures are caught and
/// recorded in the result.
ReplicateResult run_replicate(const ScenarioSpec& spec, int replicate);

struct ClassSummary {
  double naive_mad = 0.0;
  double transfer_mad = 0.0;
  double naive_n_coverage = 0.0;
  double transfer_n_coverage = 0.0;
  double naive_u_coverage = 0.0;
  double transfer_u_coverage = 0.0;
};

struct ScenarioSummary {
  Scenario id = Scenario::I;
  std::vector<double> sigma2;
  int completed = 0;
  int failed = 0;
  std::vector<ClassSummary> classes;
};

/// Means over successful replicates. Throws FitError when none succeeded.
ScenarioSummary aggregate(Scenario id, const std::vector<double>& sigma2,
                          const std::vector<ReplicateResult>& results);

/// Runs every replicate on `workers` threads; results are ordered by
/// replicate id. `on_result` (if set) is called under a lock as each one
/// finishes.
std::vector<ReplicateResult> run_replicates(
    const ScenarioSpec& spec, int workers,
    const std::function<void(const ReplicateResult&)>& on_result = {});

ScenarioSummary run_scenario(const ScenarioSpec& spec, int workers = 1);

}  // namespace abundance::sim
