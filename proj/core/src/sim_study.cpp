#include "abundance/sim_study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <thread>

#include "abundance/cpue_naive.hpp"
#include "abundance/cpue_transfer.hpp"
#include "abundance/errors.hpp"
#include "abundance/trend.hpp"

namespace abundance::sim {

namespace {

constexpr const char* kScenarioNames[] = {"I", "II", "III", "IV", "V", "VI", "VII"};

Eigen::MatrixXd rows3(std::initializer_list<double> a, std::initializer_list<double> b) {
  Eigen::MatrixXd m(2, 3);
  int c = 0;
  for (double v : a) m(0, c++) = v;
  c = 0;
  for (double v : b) m(1, c++) = v;
  return m;
}

double draw_eps(double sigma2, stats::RngStream& rng) {
  return sigma2 > 0.0 ? std::sqrt(sigma2) * rng.normal() : 0.0;
}

std::vector<double> class_draws(const Eigen::MatrixXd& draws, int J, int j, int T) {
  std::vector<double> out(static_cast<std::size_t>(draws.rows()) * static_cast<std::size_t>(T));
  for (Eigen::Index s = 0; s < draws.rows(); ++s)
    for (int t = 0; t < T; ++t) out[static_cast<std::size_t>(s * T + t)] = draws(s, t * J + j);
  return out;
}

struct Estimates {
  double mad = 0.0;
  double n_coverage = 0.0;
  bool u_covered = false;
};

Estimates score(const Eigen::MatrixXd& draws, const cr::CountMatrix& truth, int j) {
  const int T = static_cast<int>(truth.rows());
  const int J = static_cast<int>(truth.cols());
  std::vector<int> years(static_cast<std::size_t>(T));
  std::vector<double> means(years.size()), truths(years.size());
  int covered = 0;
  for (int t = 0; t < T; ++t) {
    years[static_cast<std::size_t>(t)] = t;
    const Eigen::VectorXd col = draws.col(t * J + j);
    means[static_cast<std::size_t>(t)] = col.mean();
    truths[static_cast<std::size_t>(t)] = static_cast<double>(truth(t, j));
    const auto ci = trend::interval({col.data(), static_cast<std::size_t>(col.size())}, 0.95);
    if (ci.contains(truths[static_cast<std::size_t>(t)])) ++covered;
  }
  Estimates e;
  e.mad = trend::mad_from_truth({years, means}, {years, truths});
  e.n_coverage = static_cast<double>(covered) / T;
  const double u_true = trend::mann_kendall_u(truths);
  const auto flat = class_draws(draws, J, j, T);
  const auto u = trend::mk_posterior(flat, static_cast<std::size_t>(T));
  e.u_covered = trend::interval(u, 0.95).contains(u_true);
  return e;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  for (int i = 0; i < 7; ++i)
    if (text == kScenarioNames[i]) return static_cast<Scenario>(i);
  throw ValidationError("unknown scenario '" + text + "' (expected I..VII)");
}

std::string to_string(Scenario s) { return kScenarioNames[static_cast<int>(s)]; }

Preset parse_preset(const std::string& text) {
  if (text == "paper") return Preset::Paper;
  if (text == "desk") return Preset::Desk;
  throw ValidationError("unknown preset '" + text + "' (expected paper or desk)");
}

std::string to_string(Preset p) { return p == Preset::Paper ? "paper" : "desk"; }

ScenarioSpec scenario_spec(Scenario id) {
  ScenarioSpec s;
  s.id = id;
  s.alpha = rows3({8.0, 0.0, -2.0}, {6.5, 0.05, -1.0});
  s.Omega = Eigen::MatrixXd{{1.0, 0.1}, {0.1, 1.0}};
  s.beta_cr = rows3({-3.5, -2.0, 0.5}, {-3.5, 0.0, 0.0});
  switch (id) {
    case Scenario::I: s.sigma2 = {0.1, 0.1}; break;
    case Scenario::II: s.sigma2 = {0.5, 0.5}; break;
    case Scenario::III: s.sigma2 = {1.0, 1.0}; break;
    case Scenario::IV: s.sigma2 = {0.2, 0.8}; break;
    case Scenario::V: s.sigma2 = {0.8, 0.2}; break;
    case Scenario::VI:
      s.sigma2 = {0.1, 0.1};
      s.beta_cpue = rows3({-3.5, -1.0, 0.5}, {-3.5, 0.0, 0.0});
      break;
    case Scenario::VII:
      s.sigma2 = {0.1, 0.1};
      s.beta_cpue = rows3({-3.5, -3.0, 0.5}, {-3.5, 0.0, 0.0});
      break;
  }
  apply_preset(s, Preset::Paper);
  return s;
}

void apply_preset(ScenarioSpec& spec, Preset preset) {
  if (preset == Preset::Paper) {
    spec.replicates = 100;
    spec.mcmc.iterations = 50000;
    spec.mcmc.burn_in = 10000;
    spec.mcmc.thin = 10;
  } else {
    spec.replicates = 30;
    spec.mcmc.iterations = 10000;
    spec.mcmc.burn_in = 3000;
    spec.mcmc.thin = 5;
  }
}

void validate(const ScenarioSpec& spec) {
  const Eigen::Index J = spec.alpha.rows();
  if (J < 1 || spec.alpha.cols() != 3) throw ValidationError("scenario: alpha must be J x 3");
  if (spec.Omega.rows() != J || spec.Omega.cols() != J) throw ValidationError("scenario: Omega must be J x J");
  if (spec.beta_cr.rows() != J || spec.beta_cr.cols() != 3)
    throw ValidationError("scenario: beta_cr must be J x 3");
  if (spec.beta_cpue && (spec.beta_cpue->rows() != J || spec.beta_cpue->cols() != 3))
    throw ValidationError("scenario: beta_cpue must be J x 3");
  if (static_cast<Eigen::Index>(spec.sigma2.size()) != J)
    throw ValidationError("scenario: one sigma2 per class required");
  for (double s : spec.sigma2)
    if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("scenario: sigma2 must be finite and >= 0");
  if (spec.years < 2) throw ValidationError("scenario: at least two years required");
  if (!spec.days.empty()) {
    if (static_cast<int>(spec.days.size()) != spec.years)
      throw ValidationError("scenario: days must list one entry per year");
    for (int d : spec.days)
      if (d < 1) throw ValidationError("scenario: every year needs at least one sampling day");
  }
  if (spec.replicates < 1) throw ValidationError("scenario: replicates must be >= 1");
  stats::cholesky(stats::SymMatrix(spec.Omega));
  spec.mcmc.validate();
}

double scaled_year(int t, int n_years) {
  if (n_years < 2) return 0.0;
  const double half = (n_years - 1) / 2.0;
  return (t - half) / half;
}

Population generate_population(const ScenarioSpec& spec, stats::RngStream& rng) {
  validate(spec);
  const int T = spec.years;
  const int J = spec.n_classes();
  Population pop;
  pop.z.resize(T, 3);
  for (int t = 0; t < T; ++t) {
    pop.z(t, 0) = 1.0;
    pop.z(t, 1) = scaled_year(t, T);
    pop.z(t, 2) = rng.normal();
  }
  const stats::SymMatrix omega(spec.Omega);
  pop.log_theta.resize(T, J);
  pop.N.resize(T, J);
  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd mu = spec.alpha * pop.z.row(t).transpose();
    const Eigen::VectorXd lt = stats::sample_mvn(mu, omega, rng);
    pop.log_theta.row(t) = lt.transpose();
    for (int j = 0; j < J; ++j) pop.N(t, j) = stats::sample_poisson(std::exp(lt(j)), rng);
  }
  return pop;
}

CRDataset generate_cr_data(const Population& pop, const Eigen::MatrixXd& beta,
                           const std::vector<double>& sigma2, const ScenarioSpec& spec,
                           stats::RngStream& rng) {
  const int T = static_cast<int>(pop.N.rows());
  const int J = static_cast<int>(pop.N.cols());
  if (beta.rows() != J || static_cast<int>(sigma2.size()) != J)
    throw ValidationError("generate_cr_data: detection settings do not match the population");
  CRDataset d;
  d.n_classes = J;
  d.z = pop.z;
  d.x_names = {"v", "w"};
  d.z_names = {"year", "u"};
  for (int t = 0; t < T; ++t) {
    const int days = spec.days_in(t);
    d.years.push_back(t + 1);
    d.days.push_back(days);
    Eigen::MatrixXd x(days, beta.cols());
    for (int k = 0; k < days; ++k) {
      x(k, 0) = 1.0;
      for (Eigen::Index c = 1; c < beta.cols(); ++c) x(k, c) = rng.normal();
    }
    std::vector<std::vector<std::int64_t>> n(J), m(J);
    for (int j = 0; j < J; ++j) {
      const std::int64_t N = pop.N(t, j);
      std::int64_t marked = 0;
      for (int k = 0; k < days; ++k) {
        const double eta = x.row(k).dot(beta.row(j)) + draw_eps(sigma2[j], rng);
        const double p = stats::inv_logit(eta);
        const std::int64_t recap = stats::sample_binomial(marked, p, rng);
        const std::int64_t fresh = stats::sample_binomial(N - marked, p, rng);
        n[j].push_back(recap + fresh);
        m[j].push_back(recap);
        marked += fresh;
      }
    }
    d.catches.push_back(std::move(n));
    d.recaptures.push_back(std::move(m));
    d.x.push_back(std::move(x));
  }
  return d;
}

CPUEDataset derive_cpue(const CRDataset& cr) {
  if (cr.n_years() == 0) throw ValidationError("derive_cpue: no years");
  CPUEDataset out;
  out.years = cr.years;
  out.n_classes = cr.n_classes;
  out.z = cr.z;
  out.x_names = cr.x_names;
  out.z_names = cr.z_names;
  for (std::size_t t = 0; t < cr.n_years(); ++t) {
    if (cr.days[t] < 1) throw ValidationError("derive_cpue: year " + std::to_string(cr.years[t]) + " has no days");
    out.days.push_back(1);
    out.effort.push_back({1.0});
    out.x.push_back(cr.x[t].topRows(1));
    std::vector<std::vector<std::int64_t>> y;
    for (int j = 0; j < cr.n_classes; ++j) y.push_back({cr.catches[t][j][0]});
    out.counts.push_back(std::move(y));
  }
  return out;
}

CPUEDataset regenerate_cpue(const Population& pop, const CRDataset& cr, const Eigen::MatrixXd& beta,
                            const std::vector<double>& sigma2, stats::RngStream& rng) {
  CPUEDataset out = derive_cpue(cr);
  const int J = cr.n_classes;
  if (beta.rows() != J || beta.cols() != cr.qx() || static_cast<int>(sigma2.size()) != J)
    throw ValidationError("regenerate_cpue: detection settings do not match the data");
  for (std::size_t t = 0; t < out.n_years(); ++t)
    for (int j = 0; j < J; ++j) {
      const double eta = out.x[t].row(0).dot(beta.row(j)) + draw_eps(sigma2[j], rng);
      out.counts[t][j][0] =
          stats::sample_binomial(pop.N(static_cast<Eigen::Index>(t), j), stats::inv_logit(eta), rng);
    }
  return out;
}

ReplicateResult run_replicate(const ScenarioSpec& spec, int replicate) {
  validate(spec);
  ReplicateResult res;
  res.replicate = replicate;
  const stats::RngStream base(spec.seed, static_cast<std::uint64_t>(replicate));
  auto r_pop = base.split(1);
  auto r_cr = base.split(2);
  auto r_cpue = base.split(3);

  const Population pop = generate_population(spec, r_pop);
  res.truth = pop.N;
  const CRDataset cr_data = generate_cr_data(pop, spec.beta_cr, spec.sigma2, spec, r_cr);
  const CPUEDataset cpue_data = spec.beta_cpue
                                    ? regenerate_cpue(pop, cr_data, *spec.beta_cpue, spec.sigma2, r_cpue)
                                    : derive_cpue(cr_data);
  try {
    auto cr_chains = std::make_shared<const PosteriorChains>(
        cr::fit_cr(cr_data, spec.priors, spec.mcmc, base.split(4)));
    const auto& phat = cr_chains->numeric_meta.at("phat");
    const PosteriorChains naive = cpue::fit_cpue_naive(cpue_data, spec.priors, spec.mcmc, base.split(5));
    const Eigen::MatrixXd n_naive = cpue::rescale_naive(cpue::lambda_draws(naive), phat);
    const auto tspec = transfer::make_transfer_spec(cr_chains, cpue_data.x_names);
    const PosteriorChains star =
        transfer::fit_cpue_transfer(cpue_data, tspec, spec.priors, spec.mcmc, base.split(6));
    const Eigen::MatrixXd n_star = transfer::extract_abundance_star(star);

    for (const auto& [k, v] : cr_chains->acceptance) res.acceptance["cr." + k] = v;
    for (const auto& [k, v] : naive.acceptance) res.acceptance["naive." + k] = v;
    for (const auto& [k, v] : star.acceptance) res.acceptance["transfer." + k] = v;
    for (const auto& [k, v] : res.acceptance)
      if (v < 0.01) throw FitError("pathological acceptance rate " + std::to_string(v) + " for " + k);

    for (int j = 0; j < spec.n_classes(); ++j) {
      const Estimates a = score(n_naive, pop.N, j);
      const Estimates b = score(n_star, pop.N, j);
      ClassMetrics cm;
      cm.naive_mad = a.mad;
      cm.transfer_mad = b.mad;
      cm.naive_n_coverage = a.n_coverage;
      cm.transfer_n_coverage = b.n_coverage;
      cm.naive_u_covered = a.u_covered;
      cm.transfer_u_covered = b.u_covered;
      std::vector<double> truth(static_cast<std::size_t>(pop.N.rows()));
      for (Eigen::Index t = 0; t < pop.N.rows(); ++t) truth[static_cast<std::size_t>(t)] = static_cast<double>(pop.N(t, j));
      cm.truth_u = trend::mann_kendall_u(truth);
      if (!std::isfinite(cm.naive_mad) || !std::isfinite(cm.transfer_mad))
        throw FitError("non-finite MAD");
      res.classes.push_back(cm);
    }
  } catch (const std::exception& e) {
    res.failed = true;
    res.error = e.what();
    res.classes.clear();
  }
  return res;
}

ScenarioSummary aggregate(Scenario id, const std::vector<double>& sigma2,
                          const std::vector<ReplicateResult>& results) {
  ScenarioSummary s;
  s.id = id;
  s.sigma2 = sigma2;
  for (const auto& r : results) {
    if (r.failed) {
      ++s.failed;
      continue;
    }
    if (s.classes.empty()) s.classes.resize(r.classes.size());
    if (r.classes.size() != s.classes.size()) throw ValidationError("aggregate: class counts differ");
    ++s.completed;
    for (std::size_t j = 0; j < r.classes.size(); ++j) {
      const auto& c = r.classes[j];
      auto& o = s.classes[j];
      o.naive_mad += c.naive_mad;
      o.transfer_mad += c.transfer_mad;
      o.naive_n_coverage += c.naive_n_coverage;
      o.transfer_n_coverage += c.transfer_n_coverage;
      o.naive_u_coverage += c.naive_u_covered ? 1.0 : 0.0;
      o.transfer_u_coverage += c.transfer_u_covered ? 1.0 : 0.0;
    }
  }
  if (s.completed == 0) throw FitError("scenario " + to_string(id) + ": every replicate failed");
  const double n = s.completed;
  for (auto& o : s.classes) {
    o.naive_mad /= n;
    o.transfer_mad /= n;
    o.naive_n_coverage /= n;
    o.transfer_n_coverage /= n;
    o.naive_u_coverage /= n;
    o.transfer_u_coverage /= n;
  }
  return s;
}

std::vector<ReplicateResult> run_replicates(const ScenarioSpec& spec, int workers,
                                            const std::function<void(const ReplicateResult&)>& on_result) {
  validate(spec);
  const int R = spec.replicates;
  std::vector<ReplicateResult> results(static_cast<std::size_t>(R));
  std::atomic<int> next{0};
  std::mutex mu;
  std::exception_ptr first_error;
  auto work = [&] {
    for (int i = next++; i < R; i = next++) {
      try {
        auto r = run_replicate(spec, i);
        std::lock_guard lock(mu);
        results[static_cast<std::size_t>(i)] = std::move(r);
        if (on_result) on_result(results[static_cast<std::size_t>(i)]);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int n = std::clamp(workers, 1, R);
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

ScenarioSummary run_scenario(const ScenarioSpec& spec, int workers) {
  return aggregate(spec.id, spec.sigma2, run_replicates(spec, workers));
}

}  // namespace abundance::sim
