#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "abundance/data.hpp"
#include "abundance/errors.hpp"
#include "abundance/gibbs.hpp"
#include "abundance/mcmc.hpp"
#include "abundance/priors.hpp"
#include "abundance/stats.hpp"

namespace abundance {

// Shared state and updates of the CPUE models:
//   sum_k y_tjk ~ Pois(lambda_tj * R_tj),  log lambda_t ~ N(G z_t, Sigma),
// where R_tj is the cell's exposure (sum of effort, or of effort times
// detection for the transfer model).
class LogNormalPoissonLayer {
 public:
  LogNormalPoissonLayer(const CPUEDataset& data, const Priors& priors, const McmcConfig& cfg)
      : z_(data.z), pri_(priors), cfg_(cfg) {
    T_ = static_cast<Eigen::Index>(data.n_years());
    J_ = data.n_classes;
    y_ = Eigen::MatrixXd::Zero(T_, J_);
    effort_ = Eigen::VectorXd::Zero(T_);
    for (Eigen::Index t = 0; t < T_; ++t) {
      for (int k = 0; k < data.days[t]; ++k) effort_(t) += data.effort[t][k];
      for (int j = 0; j < J_; ++j)
        for (int k = 0; k < data.days[t]; ++k) y_(t, j) += static_cast<double>(data.counts[t][j][k]);
    }
    const Eigen::Index q = z_.cols();
    if (!pri_.coef_mean.empty() && static_cast<Eigen::Index>(pri_.coef_mean.size()) != q)
      throw ValidationError("prior mean for G has the wrong length");
    Eigen::VectorXd cm = pri_.coef_mean.empty()
                             ? Eigen::VectorXd::Zero(q)
                             : Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(pri_.coef_mean.data(), q));
    coef_mean_ = cm.transpose().replicate(J_, 1);
    iw_scale_ = Eigen::MatrixXd::Identity(J_, J_) * pri_.iw_scale;
    iw_dof_ = pri_.wishart_dof(J_);

    log_lambda_.resize(T_, J_);
    for (Eigen::Index t = 0; t < T_; ++t)
      for (int j = 0; j < J_; ++j) log_lambda_(t, j) = std::log((y_(t, j) + 0.5) / effort_(t));
    Eigen::MatrixXd ztz = z_.transpose() * z_;
    ztz.diagonal().array() += 1e-8;
    G_ = ztz.ldlt().solve(z_.transpose() * log_lambda_).transpose();
    sigma_inv_ = Eigen::MatrixXd::Identity(J_, J_);
    Sigma_ = Eigen::MatrixXd::Identity(J_, J_);
    scales_.assign(static_cast<std::size_t>(T_ * J_), AdaptiveScale(0.2, cfg_.target_univariate));
  }

  const Eigen::VectorXd& total_effort() const { return effort_; }
  Eigen::MatrixXd& log_lambda() { return log_lambda_; }
  const Eigen::MatrixXd& log_lambda() const { return log_lambda_; }
  const Eigen::MatrixXd& G() const { return G_; }
  const Eigen::MatrixXd& Sigma() const { return Sigma_; }

  void sweep(const Eigen::MatrixXd& exposure, long adapt_step, bool adapting, bool counting) {
    for (Eigen::Index t = 0; t < T_; ++t) {
      Eigen::VectorXd r = log_lambda_.row(t).transpose() - G_ * z_.row(t).transpose();
      for (int j = 0; j < J_; ++j) {
        auto& sc = scales_[static_cast<std::size_t>(t * J_ + j)];
        const double cur = log_lambda_(t, j);
        const double delta = sc.scale() * rng().normal();
        const double prop = cur + delta;
        const double w = sigma_inv_.row(j).dot(r);
        const double lr = y_(t, j) * delta - (std::exp(prop) - std::exp(cur)) * exposure(t, j) -
                          (delta * w + 0.5 * delta * delta * sigma_inv_(j, j));
        const bool ok = metropolis_accept(lr, rng());
        if (ok) {
          log_lambda_(t, j) = prop;
          r(j) += delta;
        }
        if (adapting) sc.update(ok, adapt_step);
        if (counting) acc_.record(ok);
      }
    }
    G_ = gibbs::draw_regression(log_lambda_, z_, sigma_inv_, coef_mean_, pri_.coef_sd, rng());
    const Eigen::MatrixXd resid = log_lambda_ - z_ * G_.transpose();
    const auto sig = gibbs::draw_covariance(resid, stats::SymMatrix(iw_scale_), iw_dof_, rng());
    Sigma_ = sig.matrix();
    sigma_inv_ = stats::spd_inverse(sig);
  }

  void freeze() {
    for (auto& s : scales_) s.freeze();
  }

  double acceptance() const { return acc_.rate(); }

  void bind(stats::RngStream* rng) { rng_ = rng; }

 private:
  stats::RngStream& rng() { return *rng_; }

  Eigen::MatrixXd z_;
  const Priors& pri_;
  McmcConfig cfg_;
  Eigen::Index T_ = 0;
  int J_ = 0;
  Eigen::MatrixXd y_;
  Eigen::VectorXd effort_;
  Eigen::MatrixXd coef_mean_, iw_scale_;
  double iw_dof_ = 0.0;
  Eigen::MatrixXd log_lambda_, G_, Sigma_, sigma_inv_;
  std::vector<AdaptiveScale> scales_;
  AcceptanceCounter acc_;
  stats::RngStream* rng_ = nullptr;
};

inline void record_layer(PosteriorChains& out, const LogNormalPoissonLayer& layer,
                         const std::string& lambda_name, long row) {
  const auto& ll = layer.log_lambda();
  auto& L = out.params[lambda_name].draws;
  for (Eigen::Index t = 0; t < ll.rows(); ++t)
    for (Eigen::Index j = 0; j < ll.cols(); ++j) L(row, t * ll.cols() + j) = ll(t, j);
  auto& G = out.params["G"].draws;
  const auto& g = layer.G();
  for (Eigen::Index j = 0; j < g.rows(); ++j)
    for (Eigen::Index c = 0; c < g.cols(); ++c) G(row, j * g.cols() + c) = g(j, c);
  auto& S = out.params["Sigma"].draws;
  const auto& s = layer.Sigma();
  for (Eigen::Index a = 0; a < s.rows(); ++a)
    for (Eigen::Index b = 0; b < s.cols(); ++b) S(row, a * s.cols() + b) = s(a, b);
}

}  // namespace abundance
