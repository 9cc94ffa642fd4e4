#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace abundance {

/// Per-column centring and scaling applied to detection covariates. Entry i
/// refers to covariate column i + 1; column 0 is the intercept.
struct Standardization {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> sd;

  std::size_t size() const noexcept { return mean.size(); }
  bool operator==(const Standardization&) const = default;
};

/// Capture-recapture counts, indexed [year][class][day].
///
/// `x[t]` is a d_t x q_x matrix whose first column is the intercept; `z` is
/// T x q_z with an intercept first column. `x_names`/`z_names` label the
/// non-intercept columns.
struct CRDataset {
  std::vector<int> years;
  int n_classes = 0;
  std::vector<int> days;
  std::vector<std::vector<std::vector<std::int64_t>>> catches;
  std::vector<std::vector<std::vector<std::int64_t>>> recaptures;
  std::vector<Eigen::MatrixXd> x;
  Eigen::MatrixXd z;
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;

  std::size_t n_years() const noexcept { return years.size(); }
  Eigen::Index qx() const noexcept { return x.empty() ? 0 : x.front().cols(); }
  Eigen::Index qz() const noexcept { return z.cols(); }

  /// Distinct animals caught in (t, j): sum over days of n - m.
  std::int64_t distinct(std::size_t t, int j) const;
  /// Marked pool available on day k: sum over earlier days of n - m.
  std::int64_t marked_pool(std::size_t t, int j, int k) const;
  /// Total number of (t, j, k) cells.
  std::size_t n_cells() const;
};

/// CPUE counts, indexed [year][class][day]; effort is shared by classes.
struct CPUEDataset {
  std::vector<int> years;
  int n_classes = 0;
  std::vector<int> days;
  std::vector<std::vector<std::vector<std::int64_t>>> counts;
  std::vector<std::vector<double>> effort;
  std::vector<Eigen::MatrixXd> x;
  Eigen::MatrixXd z;
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;

  std::size_t n_years() const noexcept { return years.size(); }
  Eigen::Index qx() const noexcept { return x.empty() ? 0 : x.front().cols(); }
  Eigen::Index qz() const noexcept { return z.cols(); }
};

/// Throws ValidationError naming the offending (year, class, day).
void validate(const CRDataset& data);
void validate(const CPUEDataset& data);

/// Moments of the non-intercept columns of the stacked x matrices. Constant
/// columns get sd = 1.
Standardization compute_moments(const std::vector<Eigen::MatrixXd>& x,
                                const std::vector<std::string>& names);

/// Applies `m` to columns 1..q of every x matrix.
void apply_moments(std::vector<Eigen::MatrixXd>& x, const Standardization& m);

/// FNV-1a over a canonical text rendering of the dataset.
std::string dataset_hash(const CRDataset& data);
std::string dataset_hash(const CPUEDataset& data);

}  // namespace abundance
