#include "abundance/cr_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "abundance/errors.hpp"
#include "abundance/gibbs.hpp"
#include "block_proposal.hpp"

namespace abundance::cr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lgamma1(double x) { return stats::log_factorial(static_cast<std::int64_t>(x)); }

Eigen::VectorXd vec_or_zeros(const std::vector<double>& v, Eigen::Index n, const char* what) {
  if (v.empty()) return Eigen::VectorXd::Zero(n);
  if (static_cast<Eigen::Index>(v.size()) != n)
    throw ValidationError(std::string("prior mean for ") + what + " has the wrong length");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), n);
}

Eigen::MatrixXd least_squares_rows(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z) {
  // Rows of the returned J x q matrix solve min ||y_j - z a_j||.
  Eigen::MatrixXd ztz = z.transpose() * z;
  ztz.diagonal().array() += 1e-8;
  return ztz.ldlt().solve(z.transpose() * y).transpose();
}

// One step of the CR sampler; holds the current state plus caches of the
// linear predictors and sum_k log(1 - p_tjk).
class CrSampler {
 public:
  CrSampler(const CRDataset& data, const Priors& priors, const McmcConfig& cfg,
            stats::RngStream rng)
      : d_(data), pri_(priors), cfg_(cfg), rng_(std::move(rng)) {
    T_ = d_.n_years();
    J_ = d_.n_classes;
    qx_ = d_.qx();
    qz_ = d_.qz();
    collapsed_ = cfg_.abundance_update == AbundanceUpdate::Collapsed;
    beta_mean_ = vec_or_zeros(pri_.beta_mean, qx_, "beta");
    coef_mean_ = vec_or_zeros(pri_.coef_mean, qz_, "A");
    coef_mean_mat_ = coef_mean_.transpose().replicate(J_, 1);
    iw_scale_ = Eigen::MatrixXd::Identity(J_, J_) * pri_.iw_scale;
    iw_dof_ = pri_.wishart_dof(J_);

    s_ = initial_state(d_, pri_);
    omega_inv_ = stats::spd_inverse(s_.Omega);

    floor_.assign(T_, std::vector<std::int64_t>(J_, 0));
    eta_.assign(T_, std::vector<std::vector<double>>(J_));
    logq_sum_.assign(T_, std::vector<double>(J_, 0.0));
    for (std::size_t t = 0; t < T_; ++t)
      for (int j = 0; j < J_; ++j) {
        floor_[t][j] = d_.distinct(t, j);
        eta_[t][j].assign(d_.days[t], 0.0);
      }
    refresh_eta();
    xtx_ = Eigen::MatrixXd::Zero(qx_, qx_);
    for (const auto& x : d_.x) xtx_ += x.transpose() * x;

    n_scale_.assign(T_ * J_, AdaptiveScale(1.0, cfg_.target_univariate));
    for (std::size_t t = 0; t < T_; ++t)
      for (int j = 0; j < J_; ++j)
        n_scale_[t * J_ + j] = AdaptiveScale(
            std::max(1.0, std::sqrt(static_cast<double>(s_.N(t, j)))), cfg_.target_univariate);
    theta_scale_.assign(T_ * J_, AdaptiveScale(0.1, cfg_.target_univariate));
    eps_scale_.assign(d_.n_cells(), AdaptiveScale(0.5, cfg_.target_univariate));
    beta_prop_.assign(J_, BlockProposal(qx_, cfg_.target_block));
  }

  PosteriorChains run() {
    const double lp0 = cr_log_posterior(s_, d_, pri_);
    if (!std::isfinite(lp0)) throw FitError("fit_cr: initial log posterior is not finite");

    const long stored = cfg_.stored_draws();
    PosteriorChains out;
    out.model = "cr-model";
    out.config = cfg_;
    const auto T = static_cast<std::size_t>(T_), J = static_cast<std::size_t>(J_);
    out.add("N", {T, J}, stored);
    out.add("beta", {J, static_cast<std::size_t>(qx_)}, stored);
    out.add("eps", {d_.n_cells()}, stored);
    out.add("sigma2", {J}, stored);
    out.add("log_theta", {T, J}, stored);
    out.add("A", {J, static_cast<std::size_t>(qz_)}, stored);
    out.add("Omega", {J, J}, stored);
    out.iterations.reserve(stored);

    long row = 0;
    for (long it = 0; it < cfg_.iterations; ++it) {
      if (it == cfg_.burn_in) freeze();
      const bool adapting = cfg_.adapt && it < cfg_.burn_in;
      const bool counting = it >= cfg_.burn_in;
      update_N(it, adapting, counting);
      update_beta(it, adapting, counting);
      update_beta_centred();
      update_eps(it, adapting, counting);
      update_sigma2();
      update_log_theta(it, adapting, counting);
      update_A();
      update_Omega();
      if (counting && (it - cfg_.burn_in + 1) % cfg_.thin == 0 && row < stored) {
        record(out, row++);
        out.iterations.push_back(it + 1);
      }
    }
    for (auto& [name, block] : out.params)
      if (!block.draws.allFinite()) throw FitError("fit_cr: non-finite draws for " + name);

    out.acceptance["N"] = collapsed_ ? 1.0 : acc_N_.rate();
    out.acceptance["beta"] = acc_beta_.rate();
    out.acceptance["eps"] = acc_eps_.rate();
    out.acceptance["log_theta"] = acc_theta_.rate();
    return out;
  }

 private:
  double p_of(std::size_t t, int j, int k) const {
    return stats::inv_logit(eta_[t][j][k] + s_.eps[t][j][k]);
  }

  void refresh_eta() {
    for (std::size_t t = 0; t < T_; ++t)
      for (int j = 0; j < J_; ++j) {
        double lq = 0.0;
        for (int k = 0; k < d_.days[t]; ++k) {
          eta_[t][j][k] = d_.x[t].row(k).dot(s_.beta.row(j));
          lq += stats::log1m_inv_logit(eta_[t][j][k] + s_.eps[t][j][k]);
        }
        logq_sum_[t][j] = lq;
      }
  }

  // Log density in (theta, p) of one (t, j) cell; N either conditioned on or
  // summed out. Terms constant in (theta, p) are dropped.
  double cell_detection_term(std::size_t t, int j, double log_theta, double logq_sum,
                             double sum_n_logit) const {
    const double u = static_cast<double>(floor_[t][j]);
    if (collapsed_) {
      const double one_minus_q = -std::expm1(logq_sum);
      return sum_n_logit + u * (log_theta + logq_sum) - std::exp(log_theta) * one_minus_q;
    }
    return sum_n_logit + static_cast<double>(s_.N(t, j)) * logq_sum;
  }

  // sum_k n_k log(p_k / (1 - p_k)) == sum_k n_k * logit(p_k)
  double sum_n_logit(std::size_t t, int j, const std::vector<double>& eta) const {
    double s = 0.0;
    for (int k = 0; k < d_.days[t]; ++k)
      s += static_cast<double>(d_.catches[t][j][k]) * (eta[k] + s_.eps[t][j][k]);
    return s;
  }

  void update_N(long it, bool adapting, bool counting) {
    for (std::size_t t = 0; t < T_; ++t)
      for (int j = 0; j < J_; ++j) {
        const std::int64_t u = floor_[t][j];
        const double rate = std::exp(s_.log_theta(t, j) + logq_sum_[t][j]);
        if (collapsed_) {
          s_.N(t, j) = u + stats::sample_poisson(rate, rng_);
          continue;
        }
        auto& sc = n_scale_[t * J_ + j];
        const auto w = std::max<std::int64_t>(1, std::llround(sc.scale()));
        std::uniform_int_distribution<std::int64_t> step(1, w);
        std::int64_t delta = step(rng_);
        if (rng_.uniform() < 0.5) delta = -delta;
        const std::int64_t cur = s_.N(t, j);
        const std::int64_t prop = cur + delta;
        bool ok = false;
        if (prop >= u) {
          // lgamma(N+1) from the binomial coefficient cancels the Poisson 1/N!.
          const double lr = lgamma1(static_cast<double>(cur - u)) -
                            lgamma1(static_cast<double>(prop - u)) +
                            static_cast<double>(delta) * (s_.log_theta(t, j) + logq_sum_[t][j]);
          ok = metropolis_accept(lr, rng_);
        }
        if (ok) s_.N(t, j) = prop;
        if (adapting) sc.update(ok, it);
        if (counting) acc_N_.record(ok);
      }
  }

  void update_beta(long it, bool adapting, bool counting) {
    const double prior_var = pri_.beta_sd * pri_.beta_sd;
    for (int j = 0; j < J_; ++j) {
      const Eigen::VectorXd cur = s_.beta.row(j).transpose();
      const Eigen::VectorXd prop = beta_prop_[j].propose(cur, rng_);

      double lr = -0.5 * ((prop - beta_mean_).squaredNorm() - (cur - beta_mean_).squaredNorm()) / prior_var;
      std::vector<std::vector<double>> new_eta(T_);
      std::vector<double> new_logq(T_);
      for (std::size_t t = 0; t < T_; ++t) {
        new_eta[t].resize(d_.days[t]);
        double lq = 0.0;
        for (int k = 0; k < d_.days[t]; ++k) {
          new_eta[t][k] = d_.x[t].row(k).dot(prop);
          lq += stats::log1m_inv_logit(new_eta[t][k] + s_.eps[t][j][k]);
        }
        new_logq[t] = lq;
        lr += cell_detection_term(t, j, s_.log_theta(t, j), lq, sum_n_logit(t, j, new_eta[t])) -
              cell_detection_term(t, j, s_.log_theta(t, j), logq_sum_[t][j],
                                  sum_n_logit(t, j, eta_[t][j]));
      }
      const bool ok = metropolis_accept(lr, rng_);
      if (ok) {
        s_.beta.row(j) = prop.transpose();
        for (std::size_t t = 0; t < T_; ++t) {
          eta_[t][j] = std::move(new_eta[t]);
          logq_sum_[t][j] = new_logq[t];
        }
      }
      if (adapting) beta_prop_[j].adapt(s_.beta.row(j).transpose(), ok, it, cfg_.burn_in);
      if (counting) acc_beta_.record(ok);
    }
  }

  // Gibbs draw of beta_j holding every x . beta_j + eps fixed: the detection
  // likelihood is untouched and beta_j | (x . beta + eps), sigma2_j is a
  // Gaussian regression. Complements the move above when the data pin the
  // per-cell detection down and beta can only shift together with eps.
  void update_beta_centred() {
    const double prior_prec = 1.0 / (pri_.beta_sd * pri_.beta_sd);
    for (int j = 0; j < J_; ++j) {
      const double inv_var = 1.0 / s_.sigma2(j);
      Eigen::VectorXd h = beta_mean_ * prior_prec;
      for (std::size_t t = 0; t < T_; ++t)
        for (int k = 0; k < d_.days[t]; ++k)
          h += d_.x[t].row(k).transpose() * ((eta_[t][j][k] + s_.eps[t][j][k]) * inv_var);
      Eigen::MatrixXd prec = xtx_ * inv_var;
      prec.diagonal().array() += prior_prec;
      const Eigen::VectorXd b = stats::sample_mvn_canonical(h, stats::SymMatrix(prec), rng_);
      for (std::size_t t = 0; t < T_; ++t)
        for (int k = 0; k < d_.days[t]; ++k) {
          const double total = eta_[t][j][k] + s_.eps[t][j][k];
          eta_[t][j][k] = d_.x[t].row(k).dot(b);
          s_.eps[t][j][k] = total - eta_[t][j][k];
        }
      s_.beta.row(j) = b.transpose();
    }
  }

  void update_eps(long it, bool adapting, bool counting) {
    std::size_t idx = 0;
    for (std::size_t t = 0; t < T_; ++t)
      for (int j = 0; j < J_; ++j) {
        const double inv_var = 1.0 / s_.sigma2(j);
        for (int k = 0; k < d_.days[t]; ++k, ++idx) {
          auto& sc = eps_scale_[idx];
          const double cur = s_.eps[t][j][k];
          const double prop = cur + sc.scale() * rng_.normal();
          const double eta = eta_[t][j][k];
          const double lq_cur = stats::log1m_inv_logit(eta + cur);
          const double lq_prop = stats::log1m_inv_logit(eta + prop);
          const double new_logq = logq_sum_[t][j] - lq_cur + lq_prop;
          const double n = static_cast<double>(d_.catches[t][j][k]);
          const double lt = s_.log_theta(t, j);
          double lr = -0.5 * (prop * prop - cur * cur) * inv_var + n * (prop - cur);
          if (collapsed_) {
            const double u = static_cast<double>(floor_[t][j]);
            lr += u * (new_logq - logq_sum_[t][j]) -
                  std::exp(lt) * (std::expm1(logq_sum_[t][j]) - std::expm1(new_logq));
          } else {
            lr += static_cast<double>(s_.N(t, j)) * (lq_prop - lq_cur);
          }
          const bool ok = metropolis_accept(lr, rng_);
          if (ok) {
            s_.eps[t][j][k] = prop;
            logq_sum_[t][j] = new_logq;
          }
          if (adapting) sc.update(ok, it);
          if (counting) acc_eps_.record(ok);
        }
      }
  }

  void update_sigma2() {
    for (int j = 0; j < J_; ++j) {
      std::vector<double> r;
      for (std::size_t t = 0; t < T_; ++t)
        r.insert(r.end(), s_.eps[t][j].begin(), s_.eps[t][j].end());
      s_.sigma2(j) = gibbs::draw_variance(r, pri_.ig_shape, pri_.ig_rate, rng_);
    }
  }

  void update_log_theta(long it, bool adapting, bool counting) {
    for (std::size_t t = 0; t < T_; ++t) {
      Eigen::VectorXd r = s_.log_theta.row(t).transpose() - s_.A * d_.z.row(t).transpose();
      for (int j = 0; j < J_; ++j) {
        auto& sc = theta_scale_[t * J_ + j];
        const double cur = s_.log_theta(t, j);
        const double delta = sc.scale() * rng_.normal();
        const double prop = cur + delta;
        const double w = omega_inv_.row(j).dot(r);
        double lr = -(delta * w + 0.5 * delta * delta * omega_inv_(j, j));
        if (collapsed_) {
          const double u = static_cast<double>(floor_[t][j]);
          const double one_minus_q = -std::expm1(logq_sum_[t][j]);
          lr += u * delta - (std::exp(prop) - std::exp(cur)) * one_minus_q;
        } else {
          lr += static_cast<double>(s_.N(t, j)) * delta - (std::exp(prop) - std::exp(cur));
        }
        const bool ok = metropolis_accept(lr, rng_);
        if (ok) {
          s_.log_theta(t, j) = prop;
          r(j) += delta;
        }
        if (adapting) sc.update(ok, it);
        if (counting) acc_theta_.record(ok);
      }
    }
  }

  void update_A() {
    s_.A = gibbs::draw_regression(s_.log_theta, d_.z, omega_inv_, coef_mean_mat_, pri_.coef_sd, rng_);
  }

  void update_Omega() {
    const Eigen::MatrixXd resid = s_.log_theta - d_.z * s_.A.transpose();
    s_.Omega = gibbs::draw_covariance(resid, stats::SymMatrix(iw_scale_), iw_dof_, rng_);
    omega_inv_ = stats::spd_inverse(s_.Omega);
  }

  void freeze() {
    for (auto& s : n_scale_) s.freeze();
    for (auto& s : theta_scale_) s.freeze();
    for (auto& s : eps_scale_) s.freeze();
    for (auto& b : beta_prop_) b.freeze();
  }

  void record(PosteriorChains& out, long row) const {
    auto& N = out.params["N"].draws;
    auto& lt = out.params["log_theta"].draws;
    for (std::size_t t = 0; t < T_; ++t)
      for (int j = 0; j < J_; ++j) {
        N(row, static_cast<Eigen::Index>(t * J_ + j)) = static_cast<double>(s_.N(t, j));
        lt(row, static_cast<Eigen::Index>(t * J_ + j)) = s_.log_theta(t, j);
      }
    auto& beta = out.params["beta"].draws;
    for (int j = 0; j < J_; ++j)
      for (Eigen::Index c = 0; c < qx_; ++c) beta(row, j * qx_ + c) = s_.beta(j, c);
    auto& eps = out.params["eps"].draws;
    Eigen::Index idx = 0;
    for (std::size_t t = 0; t < T_; ++t)
      for (int j = 0; j < J_; ++j)
        for (int k = 0; k < d_.days[t]; ++k) eps(row, idx++) = s_.eps[t][j][k];
    out.params["sigma2"].draws.row(row) = s_.sigma2.transpose();
    auto& A = out.params["A"].draws;
    for (int j = 0; j < J_; ++j)
      for (Eigen::Index c = 0; c < qz_; ++c) A(row, j * qz_ + c) = s_.A(j, c);
    auto& Om = out.params["Omega"].draws;
    for (int a = 0; a < J_; ++a)
      for (int b = 0; b < J_; ++b) Om(row, a * J_ + b) = s_.Omega(a, b);
  }

  const CRDataset& d_;
  const Priors& pri_;
  McmcConfig cfg_;
  stats::RngStream rng_;
  std::size_t T_ = 0;
  int J_ = 0;
  Eigen::Index qx_ = 0, qz_ = 0;
  bool collapsed_ = true;
  Eigen::VectorXd beta_mean_, coef_mean_;
  Eigen::MatrixXd coef_mean_mat_, iw_scale_, omega_inv_, xtx_;
  double iw_dof_ = 0.0;

  CRState s_;
  std::vector<std::vector<std::int64_t>> floor_;
  std::vector<std::vector<std::vector<double>>> eta_;
  std::vector<std::vector<double>> logq_sum_;

  std::vector<AdaptiveScale> n_scale_, theta_scale_, eps_scale_;
  std::vector<BlockProposal> beta_prop_;
  AcceptanceCounter acc_N_, acc_beta_, acc_eps_, acc_theta_;
};

}  // namespace

double cr_loglik(std::int64_t N, std::span<const double> p, std::span<const CaptureCount> counts) {
  if (p.size() != counts.size()) throw std::invalid_argument("cr_loglik: p and counts differ in length");
  std::int64_t u = 0;
  for (const auto& c : counts) {
    if (c.n < 0 || c.m < 0 || c.m > c.n) throw std::domain_error("cr_loglik: invalid (n, m) pair");
    u += c.n - c.m;
  }
  if (N < u) throw std::domain_error("cr_loglik: N is below the number of distinct animals caught");
  double out = stats::log_choose(N, u);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!(p[k] > 0.0 && p[k] < 1.0)) throw std::domain_error("cr_loglik: detection probability outside (0, 1)");
    if (counts[k].n > N) throw std::domain_error("cr_loglik: daily catch exceeds N");
    out += static_cast<double>(counts[k].n) * std::log(p[k]) +
           static_cast<double>(N - counts[k].n) * std::log1p(-p[k]);
  }
  return out;
}

double cr_log_data_constant(std::span<const CaptureCount> counts) {
  std::int64_t total = 0, pool = 0;
  double out = 0.0;
  for (const auto& c : counts) {
    const std::int64_t u = c.n - c.m;
    if (u < 0 || c.m > pool) throw std::domain_error("cr_log_data_constant: infeasible counts");
    out += stats::log_choose(pool, c.m) - stats::log_factorial(u);
    total += u;
    pool += u;
  }
  return out + stats::log_factorial(total);
}

double detection_prob(std::span<const double> x, std::span<const double> beta, double eps) {
  if (x.size() != beta.size()) throw std::invalid_argument("detection_prob: covariate and coefficient lengths differ");
  double eta = eps;
  for (std::size_t i = 0; i < x.size(); ++i) eta += x[i] * beta[i];
  return stats::inv_logit(eta);
}

LogPosteriorTerms cr_log_posterior_terms(const CRState& s, const CRDataset& d, const Priors& pri) {
  const std::size_t T = d.n_years();
  const int J = d.n_classes;
  if (s.N.rows() != static_cast<Eigen::Index>(T) || s.N.cols() != J || s.beta.rows() != J ||
      s.beta.cols() != d.qx() || s.sigma2.size() != J || s.log_theta.rows() != static_cast<Eigen::Index>(T) ||
      s.log_theta.cols() != J || s.A.rows() != J || s.A.cols() != d.qz() || s.Omega.dim() != J ||
      s.eps.size() != T)
    throw std::invalid_argument("cr_log_posterior: state dimensions do not match the dataset");
  if ((s.sigma2.array() <= 0.0).any()) throw std::invalid_argument("cr_log_posterior: sigma2 must be positive");

  LogPosteriorTerms out;
  for (std::size_t t = 0; t < T; ++t)
    for (int j = 0; j < J; ++j) {
      std::vector<double> p(d.days[t]);
      std::vector<CaptureCount> c(d.days[t]);
      for (int k = 0; k < d.days[t]; ++k) {
        const Eigen::VectorXd xr = d.x[t].row(k).transpose();
        const Eigen::VectorXd br = s.beta.row(j).transpose();
        p[k] = detection_prob({xr.data(), static_cast<std::size_t>(xr.size())},
                              {br.data(), static_cast<std::size_t>(br.size())}, s.eps[t][j][k]);
        c[k] = {d.catches[t][j][k], d.recaptures[t][j][k]};
        out.random_effects += stats::normal_logpdf(s.eps[t][j][k], 0.0, std::sqrt(s.sigma2(j)));
      }
      if (s.N(t, j) < d.distinct(t, j)) {
        out.capture = kNegInf;
      } else if (std::isfinite(out.capture)) {
        out.capture += cr_loglik(s.N(t, j), p, c);
      }
      out.abundance += stats::poisson_logpmf(s.N(t, j), std::exp(s.log_theta(t, j)));
    }
  for (std::size_t t = 0; t < T; ++t)
    out.year_layer += stats::mvn_logpdf(s.log_theta.row(t).transpose(),
                                        s.A * d.z.row(t).transpose(), s.Omega);

  const Eigen::VectorXd bmean = vec_or_zeros(pri.beta_mean, d.qx(), "beta");
  const Eigen::VectorXd amean = vec_or_zeros(pri.coef_mean, d.qz(), "A");
  for (int j = 0; j < J; ++j) {
    for (Eigen::Index c = 0; c < d.qx(); ++c)
      out.prior_beta += stats::normal_logpdf(s.beta(j, c), bmean(c), pri.beta_sd);
    for (Eigen::Index c = 0; c < d.qz(); ++c)
      out.prior_A += stats::normal_logpdf(s.A(j, c), amean(c), pri.coef_sd);
    out.prior_sigma2 += stats::inv_gamma_logpdf(s.sigma2(j), pri.ig_shape, pri.ig_rate);
  }
  out.prior_Omega = stats::inv_wishart_logpdf(
      s.Omega, stats::SymMatrix(Eigen::MatrixXd::Identity(J, J) * pri.iw_scale), pri.wishart_dof(J));
  return out;
}

double cr_log_posterior(const CRState& state, const CRDataset& data, const Priors& priors) {
  const auto terms = cr_log_posterior_terms(state, data, priors);
  if (!std::isfinite(terms.capture)) return kNegInf;
  return terms.total();
}

CRState initial_state(const CRDataset& d, const Priors&) {
  const std::size_t T = d.n_years();
  const int J = d.n_classes;
  CRState s;
  s.N.resize(static_cast<Eigen::Index>(T), J);
  s.log_theta.resize(static_cast<Eigen::Index>(T), J);
  for (std::size_t t = 0; t < T; ++t)
    for (int j = 0; j < J; ++j) {
      s.N(t, j) = 2 * d.distinct(t, j) + 1;
      s.log_theta(t, j) = std::log(static_cast<double>(s.N(t, j)));
    }
  s.beta = Eigen::MatrixXd::Zero(J, d.qx());
  for (int j = 0; j < J; ++j) {
    double caught = 0.0, exposure = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      for (int k = 0; k < d.days[t]; ++k) caught += static_cast<double>(d.catches[t][j][k]);
      exposure += static_cast<double>(d.days[t]) * static_cast<double>(s.N(t, j));
    }
    const double p0 = std::clamp(caught / exposure, 1e-6, 1.0 - 1e-6);
    s.beta(j, 0) = std::clamp(stats::logit(p0), -5.0, -1.0);
  }
  s.eps.resize(T);
  for (std::size_t t = 0; t < T; ++t)
    s.eps[t].assign(J, std::vector<double>(d.days[t], 0.0));
  s.sigma2 = Eigen::VectorXd::Ones(J);
  s.A = least_squares_rows(s.log_theta, d.z);
  s.Omega = stats::SymMatrix::identity(J);
  return s;
}

std::vector<std::size_t> eps_offsets(const CRDataset& d) {
  std::vector<std::size_t> off;
  off.reserve(d.n_years() * static_cast<std::size_t>(d.n_classes));
  std::size_t pos = 0;
  for (std::size_t t = 0; t < d.n_years(); ++t)
    for (int j = 0; j < d.n_classes; ++j) {
      off.push_back(pos);
      pos += static_cast<std::size_t>(d.days[t]);
    }
  return off;
}

PosteriorChains fit_cr(const CRDataset& data, const Priors& priors, const McmcConfig& config,
                       stats::RngStream rng) {
  config.validate();
  validate(data);
  CRDataset work = data;
  Standardization moments = compute_moments(work.x, work.x_names);
  apply_moments(work.x, moments);

  CrSampler sampler(work, priors, config, std::move(rng));
  PosteriorChains out = sampler.run();
  out.dataset_hash = dataset_hash(data);
  out.moments = std::move(moments);
  out.numeric_meta["years"] = std::vector<double>(data.years.begin(), data.years.end());
  out.numeric_meta["days"] = std::vector<double>(data.days.begin(), data.days.end());
  out.numeric_meta["phat"] = mean_detection_phat(out, data);
  std::string xn, zn;
  for (const auto& n : data.x_names) xn += (xn.empty() ? "" : ",") + n;
  for (const auto& n : data.z_names) zn += (zn.empty() ? "" : ",") + n;
  out.text_meta["x_names"] = xn;
  out.text_meta["z_names"] = zn;
  return out;
}

std::vector<double> mean_detection_phat(const PosteriorChains& chains, const CRDataset& data) {
  const auto& beta = chains.draws("beta");
  const auto& eps = chains.draws("eps");
  const int J = data.n_classes;
  const Eigen::Index qx = data.qx();
  if (beta.cols() != J * qx) throw ValidationError("mean_detection_phat: beta chain does not match dataset");
  if (static_cast<std::size_t>(eps.cols()) != data.n_cells())
    throw ValidationError("mean_detection_phat: eps chain does not match dataset");
  std::vector<Eigen::MatrixXd> x = data.x;
  if (chains.moments) apply_moments(x, *chains.moments);

  const auto off = eps_offsets(data);
  const Eigen::Index S = beta.rows();
  std::vector<double> phat(J, 0.0);
  for (int j = 0; j < J; ++j) {
    const Eigen::MatrixXd bj = beta.middleCols(j * qx, qx);  // S x qx
    double year_sum = 0.0;
    for (std::size_t t = 0; t < data.n_years(); ++t) {
      const Eigen::MatrixXd eta = bj * x[t].transpose();  // S x d_t
      double day_sum = 0.0;
      for (int k = 0; k < data.days[t]; ++k) {
        const Eigen::Index col = static_cast<Eigen::Index>(off[t * J + j] + k);
        double e = 0.0;
        for (Eigen::Index s = 0; s < S; ++s) e += stats::inv_logit(eta(s, k) + eps(s, col));
        day_sum += e / static_cast<double>(S);
      }
      year_sum += day_sum / data.days[t];
    }
    phat[j] = year_sum / static_cast<double>(data.n_years());
  }
  return phat;
}

}  // namespace abundance::cr
