#include "abundance/mcmc.hpp"

#include <algorithm>
#include <cmath>

#include "abundance/errors.hpp"

namespace abundance {

void McmcConfig::validate() const {
  if (iterations <= 0) throw ValidationError("mcmc config: iterations must be positive");
  if (burn_in < 0) throw ValidationError("mcmc config: burn_in must be non-negative");
  if (iterations <= burn_in) throw ValidationError("mcmc config: iterations must exceed burn_in");
  if (thin < 1) throw ValidationError("mcmc config: thin must be >= 1");
  if (stored_draws() < 2) throw ValidationError("mcmc config: fewer than 2 stored draws");
  if (!(target_univariate > 0.0 && target_univariate < 1.0) ||
      !(target_block > 0.0 && target_block < 1.0))
    throw ValidationError("mcmc config: acceptance targets must lie in (0, 1)");
  if (inner_sweeps < 1) throw ValidationError("mcmc config: inner_sweeps must be >= 1");
}

long McmcConfig::stored_draws() const noexcept {
  if (iterations <= burn_in || thin < 1) return 0;
  return (iterations - burn_in) / thin;
}

const ParamBlock& PosteriorChains::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw ValidationError("posterior chains: missing parameter '" + name + "'");
  return it->second;
}

void PosteriorChains::add(const std::string& name, std::vector<std::size_t> shape, long n_draws) {
  std::size_t width = 1;
  for (auto s : shape) width *= s;
  ParamBlock block;
  block.shape = std::move(shape);
  block.draws = Eigen::MatrixXd::Zero(n_draws, static_cast<Eigen::Index>(width));
  params[name] = std::move(block);
}

void AdaptiveScale::update(bool accepted, long iteration) {
  if (frozen_) return;
  const double gain = 1.0 / std::pow(static_cast<double>(iteration) + 1.0, 0.6);
  log_scale_ += gain * ((accepted ? 1.0 : 0.0) - target_);
  log_scale_ = std::clamp(log_scale_, -15.0, 15.0);
}

}  // namespace abundance
