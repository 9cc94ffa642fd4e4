#include "abundance/cpue_transfer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "abundance/errors.hpp"
#include "lognormal_layer.hpp"

namespace abundance::transfer {

namespace {

int parse_index(const std::string& s, const std::string& whole) {
  int v = -1;
  const auto* b = s.data();
  const auto* e = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (s.empty() || ec != std::errc() || ptr != e || v < 0)
    throw ValidationError("coefficient map: bad index '" + s + "' in '" + whole + "'");
  return v;
}

Eigen::Index cr_qx(const PosteriorChains& src) {
  const auto& shape = src.param("beta").shape;
  if (shape.size() != 2) throw ValidationError("transfer: source beta chain must be classes x coefficients");
  return static_cast<Eigen::Index>(shape[1]);
}

}  // namespace

CoefficientMap parse_coefficient_map(const std::string& text) {
  CoefficientMap map;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
               item.end());
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ValidationError("coefficient map: expected cr_idx:cpue_col, got '" + item + "'");
    map.pairs.emplace_back(parse_index(item.substr(0, colon), text), parse_index(item.substr(colon + 1), text));
  }
  if (map.pairs.empty()) throw ValidationError("coefficient map: no pairs in '" + text + "'");
  return map;
}

std::string format_coefficient_map(const CoefficientMap& map) {
  std::string out;
  for (const auto& [a, b] : map.pairs) {
    if (!out.empty()) out += ",";
    out += std::to_string(a) + ":" + std::to_string(b);
  }
  return out;
}

CoefficientMap default_coefficient_map(const std::vector<std::string>& cr_x_names,
                                       const std::vector<std::string>& cpue_x_names) {
  CoefficientMap map;
  map.pairs.emplace_back(0, 0);
  for (std::size_t i = 0; i < cr_x_names.size(); ++i) {
    auto it = std::find(cpue_x_names.begin(), cpue_x_names.end(), cr_x_names[i]);
    if (it != cpue_x_names.end())
      map.pairs.emplace_back(static_cast<int>(i + 1), static_cast<int>(it - cpue_x_names.begin()) + 1);
  }
  return map;
}

TransferSpec make_transfer_spec(std::shared_ptr<const PosteriorChains> cr_chains,
                                const std::vector<std::string>& cpue_x_names,
                                std::optional<CoefficientMap> map) {
  if (!cr_chains) throw ValidationError("transfer: no source chains");
  TransferSpec spec;
  if (cr_chains->moments) {
    spec.moments = *cr_chains->moments;
  } else {
    const auto q = static_cast<std::size_t>(cr_qx(*cr_chains));
    spec.moments.mean.assign(q - 1, 0.0);
    spec.moments.sd.assign(q - 1, 1.0);
    spec.moments.names.assign(q - 1, "");
  }
  if (map) {
    spec.map = std::move(*map);
  } else {
    spec.map = default_coefficient_map(spec.moments.names, cpue_x_names);
  }
  spec.beta_source = std::move(cr_chains);
  return spec;
}

void validate(const TransferSpec& spec, const CPUEDataset& data) {
  if (!spec.beta_source) throw ValidationError("transfer: no source chains");
  const auto& src = *spec.beta_source;
  if (src.n_draws() == 0 || src.draws("beta").rows() == 0)
    throw ValidationError("transfer: source chains contain no draws");
  const auto& shape = src.param("beta").shape;
  const Eigen::Index q = cr_qx(src);
  if (static_cast<int>(shape[0]) != data.n_classes)
    throw ValidationError("transfer: source has " + std::to_string(shape[0]) + " size classes, data has " +
                          std::to_string(data.n_classes));
  if (static_cast<Eigen::Index>(spec.moments.size()) != q - 1)
    throw ValidationError("transfer: standardization moments do not match the source coefficients");
  std::set<int> seen_cr, seen_col;
  bool intercept = false;
  for (const auto& [i, c] : spec.map.pairs) {
    if (i < 0 || i >= q)
      throw ValidationError("transfer: CR coefficient index " + std::to_string(i) + " out of range");
    if (c < 0 || c >= data.qx())
      throw ValidationError("transfer: CPUE covariate column " + std::to_string(c) + " out of range");
    if (!seen_cr.insert(i).second || !seen_col.insert(c).second)
      throw ValidationError("transfer: coefficient map indices must be unique");
    if ((i == 0) != (c == 0))
      throw ValidationError("transfer: the intercept must map to the intercept");
    if (i == 0) intercept = true;
  }
  if (!intercept) throw ValidationError("transfer: coefficient map must include the intercept (0:0)");
}

double detection_from_transfer(std::span<const double> x, std::span<const double> beta) {
  if (x.size() != beta.size())
    throw std::invalid_argument("detection_from_transfer: covariate and coefficient lengths differ");
  double eta = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) eta += x[i] * beta[i];
  return stats::inv_logit(eta);
}

double transfer_loglik(double lambda_star, double effort, double p, std::int64_t y) {
  if (!(lambda_star > 0.0) || !(effort > 0.0) || !(p > 0.0))
    throw std::domain_error("transfer_loglik: rate factors must be positive");
  return stats::poisson_logpmf(y, lambda_star * effort * p);
}

Eigen::VectorXd mapped_beta(std::span<const double> cr_beta, const CoefficientMap& map,
                            Eigen::Index cpue_qx) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(cpue_qx);
  for (const auto& [i, c] : map.pairs) {
    if (i < 0 || static_cast<std::size_t>(i) >= cr_beta.size() || c < 0 || c >= cpue_qx)
      throw std::invalid_argument("mapped_beta: map index out of range");
    out(c) = cr_beta[static_cast<std::size_t>(i)];
  }
  return out;
}

CPUEDataset standardized_for_transfer(const CPUEDataset& data, const TransferSpec& spec) {
  CPUEDataset out = data;
  for (const auto& [i, c] : spec.map.pairs) {
    if (i == 0) continue;
    const double mu = spec.moments.mean[static_cast<std::size_t>(i - 1)];
    const double sd = spec.moments.sd[static_cast<std::size_t>(i - 1)];
    for (auto& x : out.x) x.col(c) = (x.col(c).array() - mu) / sd;
  }
  return out;
}

PosteriorChains fit_cpue_transfer(const CPUEDataset& data, const TransferSpec& spec,
                                  const Priors& priors, const McmcConfig& config,
                                  stats::RngStream rng) {
  return fit_cpue_transfer(data, spec, priors, config, std::move(rng), nullptr);
}

PosteriorChains fit_cpue_transfer(const CPUEDataset& data, const TransferSpec& spec,
                                  const Priors& priors, const McmcConfig& config,
                                  stats::RngStream rng, std::vector<std::size_t>* consumed) {
  config.validate();
  validate(data);
  validate(spec, data);
  const CPUEDataset work = standardized_for_transfer(data, spec);

  const auto& src_beta = spec.beta_source->draws("beta");
  const Eigen::Index q_cr = cr_qx(*spec.beta_source);
  const auto n_rows = static_cast<std::size_t>(src_beta.rows());
  const auto T = static_cast<Eigen::Index>(work.n_years());
  const int J = work.n_classes;
  const Eigen::Index qx = work.qx();

  LogNormalPoissonLayer layer(work, priors, config);
  layer.bind(&rng);

  const long stored = config.stored_draws();
  PosteriorChains out;
  out.model = "cpue-transfer";
  out.config = config;
  const auto Tu = static_cast<std::size_t>(T), Ju = static_cast<std::size_t>(J);
  out.add("log_lambda_star", {Tu, Ju}, stored);
  out.add("G", {Ju, static_cast<std::size_t>(work.qz())}, stored);
  out.add("Sigma", {Ju, Ju}, stored);
  out.add("beta", {Ju, static_cast<std::size_t>(qx)}, stored);
  out.add("beta_row", {1}, stored);
  if (consumed) {
    consumed->clear();
    consumed->reserve(static_cast<std::size_t>(config.iterations));
  }

  std::uniform_int_distribution<std::size_t> pick(0, n_rows - 1);
  Eigen::MatrixXd beta(J, qx);
  Eigen::MatrixXd exposure(T, J), prev_exposure(T, J);
  long row = 0;
  const int K = config.inner_sweeps;
  for (long it = 0; it < config.iterations; ++it) {
    if (it == config.burn_in) layer.freeze();
    const bool counting = it >= config.burn_in;

    // (a) one stored CR draw, same source row for every class.
    const std::size_t r = pick(rng);
    if (consumed) consumed->push_back(r);
    for (int j = 0; j < J; ++j) {
      const Eigen::VectorXd cr_row = src_beta.block(static_cast<Eigen::Index>(r), j * q_cr, 1, q_cr).transpose();
      beta.row(j) = mapped_beta({cr_row.data(), static_cast<std::size_t>(q_cr)}, spec.map, qx).transpose();
    }
    for (Eigen::Index t = 0; t < T; ++t)
      for (int j = 0; j < J; ++j) {
        const Eigen::VectorXd eta = work.x[t] * beta.row(j).transpose();
        double e = 0.0;
        for (int k = 0; k < work.days[t]; ++k) e += work.effort[t][k] * stats::inv_logit(eta(k));
        exposure(t, j) = e;
      }
    // Start the conditional updates from the state with the same expected
    // count under the new detection draw.
    if (it > 0) layer.log_lambda().array() += (prev_exposure.array() / exposure.array()).log();
    prev_exposure = exposure;

    // (b)-(c) abundance layer given the detection draw.
    for (int s = 0; s < K; ++s)
      layer.sweep(exposure, it * K + s, config.adapt && !counting, counting);

    if (counting && (it - config.burn_in + 1) % config.thin == 0 && row < stored) {
      record_layer(out, layer, "log_lambda_star", row);
      auto& B = out.params["beta"].draws;
      for (int j = 0; j < J; ++j)
        for (Eigen::Index c = 0; c < qx; ++c) B(row, j * qx + c) = beta(j, c);
      out.params["beta_row"].draws(row, 0) = static_cast<double>(r);
      out.iterations.push_back(it + 1);
      ++row;
    }
  }
  for (auto& [name, block] : out.params)
    if (!block.draws.allFinite()) throw FitError("fit_cpue_transfer: non-finite draws for " + name);

  out.acceptance["log_lambda_star"] = layer.acceptance();
  out.dataset_hash = dataset_hash(data);
  out.moments = spec.moments;
  out.numeric_meta["years"] = std::vector<double>(data.years.begin(), data.years.end());
  out.text_meta["coefficient_map"] = format_coefficient_map(spec.map);
  out.text_meta["source_hash"] = spec.beta_source->dataset_hash;
  return out;
}

Eigen::MatrixXd extract_abundance_star(const PosteriorChains& chains) {
  return chains.draws("log_lambda_star").array().exp().matrix();
}

}  // namespace abundance::transfer
