// Shared helpers for the test suites: CDF tables from tabulated densities,
// one- and two-sample Kolmogorov-Smirnov distances, and a normal quantile.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "tsvol/oracle.hpp"
#include "tsvol/stats.hpp"

namespace tsvol::testing {

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

struct CdfTable {
  std::vector<double> x;
  std::vector<double> F;

  double eval(double v) const {
    if (v <= x.front()) return 0.0;
    if (v >= x.back()) return 1.0;
    const auto it = std::upper_bound(x.begin(), x.end(), v);
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    const double w = (v - x[i - 1]) / (x[i] - x[i - 1]);
    return F[i - 1] + w * (F[i] - F[i - 1]);
  }
};

inline CdfTable cdf_from_density(const DensityTable& t) {
  CdfTable c;
  c.x.resize(t.f.size());
  c.F.resize(t.f.size());
  CompensatedSum s;
  c.x[0] = t.x(0);
  c.F[0] = 0.0;
  for (std::size_t i = 1; i < t.f.size(); ++i) {
    s.add(0.5 * (t.f[i - 1] + t.f[i]) * t.dx);
    c.x[i] = t.x(i);
    c.F[i] = s.value();
  }
  const double total = c.F.back();
  for (double& f : c.F) f /= total;
  return c;
}

// Sup distance between the ECDF of draws and a reference CDF.
inline double ks_vs_cdf(std::vector<double> draws, const CdfTable& cdf) {
  if (draws.empty()) throw std::invalid_argument("ks_vs_cdf: empty sample");
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = cdf.eval(draws[i]);
    ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - f));
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
  }
  return ks;
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double ks = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    ks = std::max(ks, std::abs(static_cast<double>(i) / na -
                               static_cast<double>(j) / nb));
  }
  return ks;
}

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: p in (0,1)");
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace tsvol::testing
