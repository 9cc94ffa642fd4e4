#include "abundance/trend.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace abundance::trend {

AbundanceSeries::AbundanceSeries(std::vector<int> y, std::vector<double> v)
    : years(std::move(y)), values(std::move(v)) {
  if (years.size() != values.size())
    throw std::invalid_argument("AbundanceSeries: years and values differ in length");
  for (std::size_t i = 1; i < years.size(); ++i)
    if (years[i] <= years[i - 1])
      throw std::invalid_argument("AbundanceSeries: years must be strictly increasing");
}

long long mann_kendall_s(std::span<const double> values) {
  long long s = 0;
  const std::size_t n = values.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (values[j] > values[i]) ++s;
      else if (values[j] < values[i]) --s;
    }
  return s;
}

double mann_kendall_u(std::span<const double> values) {
  const auto n = static_cast<long long>(values.size());
  if (n < 3) throw std::invalid_argument("mann_kendall_u: series needs at least 3 values");
  const long long s = mann_kendall_s(values);

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  long long ties = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const auto t = static_cast<long long>(j - i);
    ties += t * (t - 1) * (2 * t + 5);
    i = j;
  }
  const long long v18 = n * (n - 1) * (2 * n + 5) - ties;
  if (v18 <= 0) return 0.0;
  return static_cast<double>(s) / std::sqrt(static_cast<double>(v18) / 18.0);
}

double mann_kendall_u(const AbundanceSeries& series) { return mann_kendall_u(series.values); }

std::vector<double> mk_posterior(std::span<const double> draws, std::size_t n_years) {
  if (n_years == 0 || draws.empty() || draws.size() % n_years != 0)
    throw std::invalid_argument("mk_posterior: draws must be a non-empty iterations x years block");
  const std::size_t n_draws = draws.size() / n_years;
  std::vector<double> out(n_draws);
  for (std::size_t d = 0; d < n_draws; ++d)
    out[d] = mann_kendall_u(draws.subspan(d * n_years, n_years));
  return out;
}

std::vector<double> mk_posterior(const std::vector<AbundanceSeries>& draws) {
  if (draws.empty()) throw std::invalid_argument("mk_posterior: no draws");
  const std::size_t len = draws.front().size();
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& d : draws) {
    if (d.size() != len) throw std::invalid_argument("mk_posterior: draws differ in length");
    out.push_back(mann_kendall_u(d));
  }
  return out;
}

double mad_from_truth(const AbundanceSeries& posterior_means, const AbundanceSeries& truth) {
  if (posterior_means.years != truth.years)
    throw std::invalid_argument("mad_from_truth: series are not aligned on the same years");
  if (truth.size() == 0) throw std::invalid_argument("mad_from_truth: empty series");
  std::vector<double> dev(truth.size());
  for (std::size_t i = 0; i < dev.size(); ++i)
    dev[i] = std::abs(posterior_means.values[i] - truth.values[i]);
  std::sort(dev.begin(), dev.end());
  const std::size_t n = dev.size();
  return n % 2 == 1 ? dev[n / 2] : 0.5 * (dev[n / 2 - 1] + dev[n / 2]);
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> draws, double q) {
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, q);
}

CredibleInterval interval(std::span<const double> draws, double level) {
  if (draws.size() < 2) throw std::invalid_argument("interval: need at least two draws");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("interval: level outside (0, 1)");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double tail = 0.5 * (1.0 - level);
  return {level, quantile_sorted(sorted, tail), quantile_sorted(sorted, 1.0 - tail)};
}

double empirical_coverage(std::span<const CredibleInterval> intervals,
                          std::span<const double> truths) {
  if (intervals.size() != truths.size())
    throw std::invalid_argument("empirical_coverage: length mismatch");
  if (truths.empty()) throw std::invalid_argument("empirical_coverage: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truths.size(); ++i)
    if (intervals[i].contains(truths[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(truths.size());
}

}  // namespace abundance::trend
