#pragma once

// Static SVG figures: abundance trajectories per size class and posterior
// densities of the Mann-Kendall statistic. Naive estimates are drawn in grey,
// transfer estimates in red, truth (when known) as blue crosses.

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace abundance::plot {

struct Series {
  /// draws x (T * J), row-major in (t, j), or empty when absent.
  Eigen::MatrixXd naive;
  Eigen::MatrixXd transfer;
  std::vector<int> years;
  int n_classes = 0;
  /// T x J, optional.
  std::optional<Eigen::MatrixXd> truth;
};

/// One panel per size class: posterior median and 95% band per year.
void write_trajectory_svg(std::ostream& out, const Series& s);

/// One panel per size class: histogram of per-draw U, with a vertical line at
/// U(truth) when the truth is known.
void write_mann_kendall_svg(std::ostream& out, const Series& s);

}  // namespace abundance::plot
