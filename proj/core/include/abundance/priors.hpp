#pragma once

#include <vector>

namespace abundance {

/// Prior settings shared by the three samplers.
///
/// Regression coefficients get independent normals (mean vectors default to
/// zero when empty), the detection random-effect variances get a shape-rate
/// inverse gamma, and the between-class covariance matrices an inverse
/// Wishart with scale iw_scale * I_J and iw_dof degrees of freedom
/// (iw_dof <= 0 means J + 1).
struct Priors {
  double beta_sd = 10.0;
  std::vector<double> beta_mean;
  double coef_sd = 10.0;
  std::vector<double> coef_mean;
  double ig_shape = 0.1;
  double ig_rate = 0.1;
  double iw_scale = 1.0;
  double iw_dof = 0.0;

  double wishart_dof(int n_classes) const noexcept {
    return iw_dof > 0.0 ? iw_dof : static_cast<double>(n_classes) + 1.0;
  }
  bool operator==(const Priors&) const = default;
};

}  // namespace abundance
