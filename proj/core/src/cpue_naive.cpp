#include "abundance/cpue_naive.hpp"

#include <cmath>
#include <stdexcept>

#include "abundance/errors.hpp"
#include "lognormal_layer.hpp"

namespace abundance::cpue {

double cpue_loglik(double lambda, double effort, std::int64_t y) {
  if (!(lambda > 0.0) || !(effort > 0.0))
    throw std::domain_error("cpue_loglik: lambda and effort must be positive");
  return stats::poisson_logpmf(y, lambda * effort);
}

PosteriorChains fit_cpue_naive(const CPUEDataset& data, const Priors& priors,
                               const McmcConfig& config, stats::RngStream rng) {
  config.validate();
  validate(data);

  LogNormalPoissonLayer layer(data, priors, config);
  layer.bind(&rng);
  const auto T = static_cast<Eigen::Index>(data.n_years());
  const int J = data.n_classes;
  Eigen::MatrixXd exposure(T, J);
  for (Eigen::Index t = 0; t < T; ++t) exposure.row(t).setConstant(layer.total_effort()(t));

  const long stored = config.stored_draws();
  PosteriorChains out;
  out.model = "cpue-naive";
  out.config = config;
  const auto Tu = static_cast<std::size_t>(T), Ju = static_cast<std::size_t>(J);
  out.add("log_lambda", {Tu, Ju}, stored);
  out.add("G", {Ju, static_cast<std::size_t>(data.qz())}, stored);
  out.add("Sigma", {Ju, Ju}, stored);

  long row = 0;
  for (long it = 0; it < config.iterations; ++it) {
    if (it == config.burn_in) layer.freeze();
    const bool counting = it >= config.burn_in;
    layer.sweep(exposure, it, config.adapt && !counting, counting);
    if (counting && (it - config.burn_in + 1) % config.thin == 0 && row < stored) {
      record_layer(out, layer, "log_lambda", row++);
      out.iterations.push_back(it + 1);
    }
  }
  for (auto& [name, block] : out.params)
    if (!block.draws.allFinite()) throw FitError("fit_cpue_naive: non-finite draws for " + name);

  out.acceptance["log_lambda"] = layer.acceptance();
  out.dataset_hash = dataset_hash(data);
  out.numeric_meta["years"] = std::vector<double>(data.years.begin(), data.years.end());
  return out;
}

Eigen::MatrixXd rescale_naive(const Eigen::MatrixXd& lambda, std::span<const double> phat) {
  const auto J = static_cast<Eigen::Index>(phat.size());
  if (J == 0 || lambda.cols() % J != 0)
    throw std::invalid_argument("rescale_naive: draws do not match the number of classes");
  for (double p : phat)
    if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("rescale_naive: phat must lie in (0, 1]");
  Eigen::MatrixXd out = lambda;
  for (Eigen::Index c = 0; c < lambda.cols(); ++c) out.col(c) /= phat[static_cast<std::size_t>(c % J)];
  return out;
}

Eigen::MatrixXd lambda_draws(const PosteriorChains& chains) {
  return chains.draws("log_lambda").array().exp().matrix();
}

}  // namespace abundance::cpue
