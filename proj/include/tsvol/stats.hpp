// Summary statistics for Monte Carlo outputs.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "tsvol/numerics.hpp"

namespace tsvol {

inline double sample_mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("sample_mean: empty input");
  return compensated_total(xs) / static_cast<double>(xs.size());
}

// Unbiased (n-1) standard deviation; 0 for a single observation.
inline double sample_sd(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("sample_sd: empty input");
  if (xs.size() == 1) return 0.0;
  const double m = sample_mean(xs);
  CompensatedSum s;
  for (double x : xs) s.add((x - m) * (x - m));
  return std::sqrt(s.value() / static_cast<double>(xs.size() - 1));
}

inline double sample_median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("sample_median: empty input");
  const std::size_t n = xs.size();
  auto mid = xs.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(xs.begin(), mid);
  return 0.5 * (lo + hi);
}

// Median over paths of |estimate - truth|.
inline double mad_about(std::span<const double> estimates, double truth) {
  std::vector<double> dev(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i)
    dev[i] = std::abs(estimates[i] - truth);
  return sample_median(std::move(dev));
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Per-path CLT normalization sqrt(n) (est - truth) / sqrt(2 truth^2).
inline std::vector<double> normalized_errors(std::span<const double> estimates,
                                             double truth,
                                             std::size_t n_steps) {
  if (!(truth > 0.0))
    throw std::invalid_argument("normalized_errors: truth must be > 0");
  const double scale =
      std::sqrt(static_cast<double>(n_steps)) / (std::numbers::sqrt2 * truth);
  std::vector<double> out(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i)
    out[i] = scale * (estimates[i] - truth);
  return out;
}

// Sup distance between the empirical CDF and the standard normal CDF.
inline double ks_statistic(std::span<const double> sample) {
  if (sample.empty()) throw std::invalid_argument("ks_statistic: empty input");
  std::vector<double> xs(sample.begin(), sample.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = normal_cdf(xs[i]);
    ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - f));
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
  }
  return ks;
}

}  // namespace tsvol
