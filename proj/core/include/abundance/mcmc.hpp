#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "abundance/data.hpp"

namespace abundance {

/// How the capture-recapture sampler treats latent abundance N.
enum class AbundanceUpdate {
  /// N summed out of the detection and log-theta updates, then drawn from
  /// its exact shifted-Poisson full conditional every sweep.
  Collapsed,
  /// Integer random-walk Metropolis with a floor at the distinct count;
  /// other blocks condition on the current N.
  RandomWalk,
};

struct McmcConfig {
  long iterations = 50000;
  long burn_in = 10000;
  long thin = 10;
  std::uint64_t seed = 1;
  /// Robbins-Monro proposal-scale adaptation during burn-in.
  bool adapt = true;
  double target_univariate = 0.44;
  double target_block = 0.234;
  /// Inner sweeps per resampled detection draw in the transfer sampler.
  int inner_sweeps = 5;
  AbundanceUpdate abundance_update = AbundanceUpdate::Collapsed;

  /// Throws ValidationError when the settings cannot produce >= 2 draws.
  void validate() const;
  long stored_draws() const noexcept;
  bool operator==(const McmcConfig&) const = default;
};

/// Draws of one named parameter: rows are stored iterations, columns the
/// flattened parameter (row-major over `shape`).
struct ParamBlock {
  std::vector<std::size_t> shape;
  Eigen::MatrixXd draws;

  bool operator==(const ParamBlock& o) const {
    return shape == o.shape && draws.rows() == o.draws.rows() &&
           draws.cols() == o.draws.cols() && draws == o.draws;
  }
};

/// Posterior draws plus everything needed to interpret them later: the
/// sampler settings, the dataset fingerprint and covariate moments.
struct PosteriorChains {
  std::string model;
  McmcConfig config;
  std::string dataset_hash;
  std::vector<long> iterations;
  std::map<std::string, ParamBlock> params;
  std::map<std::string, double> acceptance;
  std::optional<Standardization> moments;
  std::map<std::string, std::vector<double>> numeric_meta;
  std::map<std::string, std::string> text_meta;

  bool has(const std::string& name) const { return params.count(name) > 0; }
  /// Throws ValidationError if missing.
  const ParamBlock& param(const std::string& name) const;
  const Eigen::MatrixXd& draws(const std::string& name) const { return param(name).draws; }
  std::size_t n_draws() const noexcept { return iterations.size(); }

  /// Registers a parameter with room for `n_draws` rows.
  void add(const std::string& name, std::vector<std::size_t> shape, long n_draws);

  bool operator==(const PosteriorChains&) const = default;
};

/// Robbins-Monro adaptation of a log proposal scale toward a target
/// acceptance rate. Frozen once `freeze()` is called.
class AdaptiveScale {
 public:
  AdaptiveScale(double initial_scale = 1.0, double target = 0.44)
      : log_scale_(std::log(initial_scale)), target_(target) {}

  double scale() const noexcept { return std::exp(log_scale_); }
  void update(bool accepted, long iteration);
  void freeze() noexcept { frozen_ = true; }
  bool frozen() const noexcept { return frozen_; }

 private:
  double log_scale_;
  double target_;
  bool frozen_ = false;
};

struct AcceptanceCounter {
  long tried = 0;
  long accepted = 0;
  void record(bool ok) noexcept {
    ++tried;
    if (ok) ++accepted;
  }
  double rate() const noexcept {
    return tried == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(tried);
  }
};

/// Metropolis accept step on a log ratio.
template <typename Rng>
bool metropolis_accept(double log_ratio, Rng& rng) {
  if (log_ratio >= 0.0) return true;
  if (!(log_ratio == log_ratio)) return false;
  return std::log(rng.uniform()) < log_ratio;
}

}  // namespace abundance
