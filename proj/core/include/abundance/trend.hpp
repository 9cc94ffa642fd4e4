#pragma once

#include <span>
#include <vector>

namespace abundance::trend {

/// Yearly abundance values; years strictly increasing, one value per year.
struct AbundanceSeries {
  std::vector<int> years;
  std::vector<double> values;

  AbundanceSeries() = default;
  AbundanceSeries(std::vector<int> y, std::vector<double> v);
  std::size_t size() const noexcept { return values.size(); }
};

struct CredibleInterval {
  double level = 0.95;
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

/// Mann-Kendall trend statistic U = S / sqrt(V) with the tie-corrected
/// variance and no continuity correction. Returns 0 when V is 0.
double mann_kendall_u(std::span<const double> values);
double mann_kendall_u(const AbundanceSeries& series);

/// Mann-Kendall S (sum of pairwise signs).
long long mann_kendall_s(std::span<const double> values);

/// One U per posterior draw. `draws` is iterations x years, row-major.
std::vector<double> mk_posterior(std::span<const double> draws, std::size_t n_years);
std::vector<double> mk_posterior(const std::vector<AbundanceSeries>& draws);

/// Median over years of |posterior_mean_t - truth_t|.
double mad_from_truth(const AbundanceSeries& posterior_means, const AbundanceSeries& truth);

/// Linearly interpolated empirical quantile (order statistics, h = (n-1) q).
double quantile(std::span<const double> draws, double q);
double quantile_sorted(std::span<const double> sorted, double q);

/// Equal-tailed credible interval at `level`.
CredibleInterval interval(std::span<const double> draws, double level);

/// Fraction of truths falling inside their interval.
double empirical_coverage(std::span<const CredibleInterval> intervals,
                          std::span<const double> truths);

}  // namespace abundance::trend
