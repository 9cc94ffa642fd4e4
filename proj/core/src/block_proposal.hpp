#pragma once

#include <Eigen/Dense>

#include "abundance/mcmc.hpp"
#include "abundance/stats.hpp"

namespace abundance {

// Gaussian random-walk proposal for a coefficient block. During burn-in the
// overall scale follows Robbins-Monro and, from the second half of burn-in
// on, the shape follows the running covariance of the chain (Haario-style).
class BlockProposal {
 public:
  BlockProposal(Eigen::Index dim, double target)
      : chol_(Eigen::MatrixXd::Identity(dim, dim) * 0.1),
        scale_(1.0, target),
        target_(target),
        mean_(Eigen::VectorXd::Zero(dim)),
        m2_(Eigen::MatrixXd::Zero(dim, dim)) {}

  Eigen::VectorXd propose(const Eigen::VectorXd& current, stats::RngStream& rng) const {
    Eigen::VectorXd z(current.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return current + scale_.scale() * (chol_ * z);
  }

  void adapt(const Eigen::VectorXd& state, bool accepted, long it, long burn_in) {
    if (frozen_) return;
    scale_.update(accepted, it);
    if (it < burn_in / 4) return;
    ++n_;
    const Eigen::VectorXd delta = state - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (state - mean_).transpose();
    const long start = burn_in / 2;
    if (it >= start && n_ > 50 && (it - start) % 100 == 0) {
      const auto d = static_cast<double>(state.size());
      Eigen::MatrixXd cov = m2_ / static_cast<double>(n_ - 1) * (2.38 * 2.38 / d);
      cov.diagonal().array() += 1e-8;
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() == Eigen::Success) {
        chol_ = llt.matrixL();
        if (!shaped_) {
          scale_ = AdaptiveScale(1.0, target_);
          shaped_ = true;
        }
      }
    }
  }

  void freeze() {
    frozen_ = true;
    scale_.freeze();
  }

 private:
  Eigen::MatrixXd chol_;
  AdaptiveScale scale_;
  double target_ = 0.234;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
  long n_ = 0;
  bool shaped_ = false;
  bool frozen_ = false;
};

}  // namespace abundance
