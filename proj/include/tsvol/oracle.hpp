// Numerical oracle for truncated moments of Gaussian-plus-stable laws.
//
// The law of sigma*W_h + S_h + drift*h is recovered by FFT inversion of its
// characteristic function
//   phi(u) = exp(h*(c1|u|^y + i c2|u|^y sgn u + i drift u - sigma^2 u^2 / 2)),
// truncated moments are integrated from the density table, and the results
// are compared against the second-order asymptotic expansions.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsvol/fft.hpp"
#include "tsvol/numerics.hpp"

namespace tsvol {

struct CharExponentSpec {
  double c1 = 0.0;     // <= 0; 0 disables the stable part
  double c2 = 0.0;     // skew coefficient of the stable part
  double sigma = 0.0;  // Gaussian volatility, >= 0
  double y = 1.5;      // stable index, in (0,2) when c1 < 0
  double drift = 0.0;

  void validate() const {
    if (!(c1 <= 0.0))
      throw std::invalid_argument("CharExponentSpec: c1 must be <= 0");
    if (!(sigma >= 0.0))
      throw std::invalid_argument("CharExponentSpec: sigma must be >= 0");
    if (c1 < 0.0 && !(y > 0.0 && y <= 2.0))
      throw std::invalid_argument("CharExponentSpec: y must be in (0,2]");
    if (c1 == 0.0 && c2 != 0.0)
      throw std::invalid_argument("CharExponentSpec: c2 requires c1 < 0");
    if (c1 == 0.0 && sigma == 0.0)
      throw std::invalid_argument("CharExponentSpec: degenerate law");
  }

  // Total jump intensity scale recovered from c1 = cbar cos(pi y/2) Gamma(-y).
  // y = 2 is the Gaussian limit of the stable part: no power-law tails.
  double cbar() const {
    if (c1 == 0.0 || y == 2.0) return 0.0;
    return c1 / (std::cos(0.5 * std::numbers::pi * y) * std::tgamma(-y));
  }

  // Width of the central bulk of the law at step h.
  double core_scale(double h) const {
    double core = sigma * std::sqrt(h);
    if (c1 < 0.0) core += std::pow(-c1 * h, 1.0 / y);
    return core;
  }

  std::complex<double> cf(double u, double h) const {
    const double au = std::abs(u);
    double re = -0.5 * sigma * sigma * u * u;
    double im = drift * u;
    if (c1 < 0.0) {
      const double p = std::pow(au, y);
      re += c1 * p;
      im += c2 * p * (u < 0.0 ? -1.0 : (u > 0.0 ? 1.0 : 0.0));
    }
    return std::exp(std::complex<double>(h * re, h * im));
  }
};

class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DensityTable {
  double x0 = 0.0;  // leftmost grid point
  double dx = 0.0;
  std::vector<double> f;

  double x(std::size_t j) const { return x0 + dx * static_cast<double>(j); }
  double half_width() const {
    return 0.5 * dx * static_cast<double>(f.size());
  }
  double mass() const { return dx * compensated_total(f); }
};

// Density of sigma*W_h + S_h + drift*h on the uniform grid
// x_j = (j - N/2) dx, dx = 2 half_width / N.  With u_k = (k - N/2) du,
// du dx = 2 pi / N, the inversion integral becomes a single forward FFT:
//   f_j = (du / 2 pi) (-1)^j Re FFT[(-1)^k phi(u_k)]_j.
inline DensityTable density_fft(const CharExponentSpec& spec, double h,
                                double grid_half_width,
                                std::size_t grid_points) {
  spec.validate();
  if (!(h > 0.0)) throw std::invalid_argument("density_fft: h must be > 0");
  if (!is_power_of_two(grid_points) || grid_points < 4096 ||
      grid_points % 4 != 0)
    throw std::invalid_argument(
        "density_fft: grid_points must be a power of two >= 4096");
  const double core = spec.core_scale(h);
  if (!(grid_half_width >= 12.0 * core))
    throw ResolutionError(
        "density_fft: half width " + std::to_string(grid_half_width) +
        " below 12 core scales (core = " + std::to_string(core) + ")");

  const std::size_t n = grid_points;
  const double dx = 2.0 * grid_half_width / static_cast<double>(n);
  const double du = 2.0 * std::numbers::pi / (dx * static_cast<double>(n));

  std::vector<std::complex<double>> a(n);
  const double half = 0.5 * static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = (static_cast<double>(k) - half) * du;
    a[k] = spec.cf(u, h);
    if (k % 2 == 1) a[k] = -a[k];
  }
  fft_inplace(a, /*inverse=*/false);

  DensityTable t;
  t.x0 = -grid_half_width;
  t.dx = dx;
  t.f.resize(n);
  const double norm = du / (2.0 * std::numbers::pi);
  for (std::size_t j = 0; j < n; ++j) {
    double v = norm * a[j].real();
    if (j % 2 == 1) v = -v;
    t.f[j] = v;
  }
  return t;
}

namespace detail {

// Integral of x^{2k} times the cubic interpolant of f over [lo, hi], a
// subinterval of grid cell [x_i, x_{i+1}], by 5-point Gauss-Legendre
// (exact for the cubic times x^{2k} up to k = 3).
inline double cell_moment(const DensityTable& t, std::size_t i, double lo,
                          double hi, int k) {
  static constexpr double kNode[5] = {
      -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
      0.9061798459386640};
  static constexpr double kWeight[5] = {
      0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
      0.4786286704993665, 0.2369268850561891};
  const std::size_t n = t.f.size();
  const std::size_t i0 = (i == 0) ? 0 : i - 1;
  const std::size_t base = std::min(i0, n - 4);
  const double xb = t.x(base);
  double fx[4];
  for (int m = 0; m < 4; ++m) fx[m] = t.f[base + m];
  auto interp = [&](double x) {
    // cubic Lagrange on the 4 points around the cell
    const double s = (x - xb) / t.dx;
    const double l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    const double l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    const double l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    const double l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    return fx[0] * l0 + fx[1] * l1 + fx[2] * l2 + fx[3] * l3;
  };
  const double mid = 0.5 * (lo + hi);
  const double rad = 0.5 * (hi - lo);
  double s = 0.0;
  for (int m = 0; m < 5; ++m) {
    const double x = mid + rad * kNode[m];
    s += kWeight[m] * std::pow(x, 2 * k) * interp(x);
  }
  return rad * s;
}

}  // namespace detail

// Integral of x^{2k} density(x) over [-eps, eps] on the tabulated density,
// cells clipped exactly at the truncation boundary.
inline double truncated_moment_on_table(const DensityTable& t, int k,
                                        double eps) {
  if (!(eps > 0.0))
    throw std::invalid_argument("truncated_moment_on_table: eps must be > 0");
  const double lo_lim = -eps;
  const double hi_lim = eps;
  if (lo_lim < t.x(1) || hi_lim > t.x(t.f.size() - 2))
    throw ResolutionError(
        "truncated_moment_on_table: truncation boundary outside the grid");
  CompensatedSum s;
  const auto first =
      static_cast<std::size_t>(std::floor((lo_lim - t.x0) / t.dx));
  for (std::size_t i = first; i < t.f.size() - 1; ++i) {
    const double a = std::max(t.x(i), lo_lim);
    const double b = std::min(t.x(i + 1), hi_lim);
    if (b <= a) {
      if (t.x(i) >= hi_lim) break;
      continue;
    }
    s.add(detail::cell_moment(t, i, a, b, k));
  }
  return s.value();
}

struct MomentCertificate {
  double value = 0.0;          // finest-grid result
  double value_coarse = 0.0;   // same with half the grid points
  double rel_change = 0.0;     // |value - value_coarse| / |value|
  double half_width = 0.0;
  std::size_t grid_points = 0;
  bool refined = true;         // false when the point budget was exhausted
};

namespace detail {

constexpr std::size_t kMaxFftPoints = std::size_t{1} << 23;

inline std::size_t next_pow2(double x) {
  std::size_t n = 4096;
  while (static_cast<double>(n) < x && n < kMaxFftPoints) n <<= 1;
  return n;
}

// Grid chooser.  Half width covers the bulk, the truncation boundary, and
// (for stable parts) is pushed out until the wrap-around of the power-law
// tails contributes less than ~1e-9 of the reference moment size.
inline void choose_grid(const CharExponentSpec& spec, int k, double eps,
                        double h, double& half_width, std::size_t& points) {
  const double core = spec.core_scale(h);
  const double cbar = spec.cbar();
  double df = 1.0;
  for (int i = 2; i <= k; ++i) df *= static_cast<double>(2 * i - 1);
  double ref = df * std::pow(spec.sigma * spec.sigma * h, k);
  if (cbar > 0.0)
    ref += cbar / (2.0 * k - spec.y) * h * std::pow(eps, 2.0 * k - spec.y);

  double r = std::max(14.0 * core, eps + 8.0 * core);
  if (cbar > 0.0) {
    // wrapped tail contribution ~ alias_coef * (2R)^{-1-y} on the window
    const double alias_coef = 2.0 * cbar * h * (2.0 / (2.0 * k + 1.0)) *
                              std::pow(eps, 2.0 * k + 1.0);
    const double tol = 1e-9 * ref;
    if (alias_coef > tol) {
      const double r_alias =
          0.5 * std::pow(alias_coef / tol, 1.0 / (1.0 + spec.y));
      r = std::max(r, r_alias);
    }
  }
  half_width = r;
  points = next_pow2(2.0 * r / (core / 512.0));
  const double dx = 2.0 * r / static_cast<double>(points);
  if (dx > core / 48.0)
    throw ResolutionError(
        "choose_grid: cannot meet both alias and sampling targets (dx = " +
        std::to_string(dx) + ", core = " + std::to_string(core) + ")");
}

}  // namespace detail

// Truncated 2k-th moment with a grid-convergence certificate: the value is
// recomputed with doubled grid points when the budget allows and the
// relative change is reported.
inline MomentCertificate truncated_moment_certified(
    const CharExponentSpec& spec, int k, double eps, double h) {
  spec.validate();
  if (k < 1) throw std::invalid_argument("truncated moment: k must be >= 1");
  if (!(eps > 0.0 && h > 0.0))
    throw std::invalid_argument("truncated moment: eps, h must be > 0");
  double r = 0.0;
  std::size_t n = 0;
  detail::choose_grid(spec, k, eps, h, r, n);
  const double coarse =
      truncated_moment_on_table(density_fft(spec, h, r, n), k, eps);
  MomentCertificate c;
  c.half_width = r;
  if (n * 2 <= detail::kMaxFftPoints) {
    c.grid_points = n * 2;
    c.value = truncated_moment_on_table(density_fft(spec, h, r, n * 2), k, eps);
    c.value_coarse = coarse;
  } else {
    c.grid_points = n;
    c.value = coarse;
    c.value_coarse = coarse;
    c.refined = false;
  }
  c.rel_change = std::abs(c.value - c.value_coarse) /
                 std::max(std::abs(c.value), 1e-300);
  return c;
}

inline double truncated_moment_numeric(const CharExponentSpec& spec, int k,
                                       double eps, double h) {
  return truncated_moment_certified(spec, k, eps, h).value;
}

// Second-order expansion of the truncated moment.  For k = 1,
//   sigma^2 h + [cbar/(2-y) eps^{2-y}
//                - cbar (y+1)(y+2)/(2y) sigma^2 h eps^{-y}] h;
// for k >= 2, (2k-1)!! sigma^{2k} h^k + cbar/(2k-y) h eps^{2k-y}.
inline double expansion_predicted(const CharExponentSpec& spec, int k,
                                  double eps, double h) {
  spec.validate();
  if (k < 1)
    throw std::invalid_argument("expansion_predicted: k must be >= 1");
  const double cbar = spec.cbar();
  if (cbar > 0.0 && !(spec.y > 1.0 && spec.y < 2.0))
    throw std::invalid_argument("expansion_predicted: y must be in (1,2)");
  const double s2h = spec.sigma * spec.sigma * h;
  const double y = spec.y;
  if (k == 1) {
    double a_tilde = 0.0;
    if (cbar > 0.0)
      a_tilde = cbar / (2.0 - y) * std::pow(eps, 2.0 - y) -
                cbar * (y + 1.0) * (y + 2.0) / (2.0 * y) * s2h *
                    std::pow(eps, -y);
    return s2h + a_tilde * h;
  }
  double df = 1.0;
  for (int i = 2; i <= k; ++i) df *= static_cast<double>(2 * i - 1);
  double jump = 0.0;
  if (cbar > 0.0)
    jump = cbar / (2.0 * k - y) * h * std::pow(eps, 2.0 * k - y);
  return df * std::pow(s2h, k) + jump;
}

// Dominant remainder order of the expansion under the eps = h^omega rule.
inline double theoretical_residual_order(int k, double y, double omega) {
  if (k == 1)
    return std::min(3.0 - (y + 2.0) * omega, 2.0 - (2.0 * y - 2.0) * omega);
  return std::min(2.0 + (2.0 * k - y - 2.0) * omega,
                  1.0 + (2.0 * k - 0.5 * y) * omega);
}

struct ExpansionReport {
  int k = 1;
  std::vector<double> h_values;
  std::string eps_rule;
  std::vector<double> numeric;
  std::vector<double> predicted;
  std::vector<double> residual;  // numeric - predicted
  double fitted_order = 0.0;
  double theoretical_order = 0.0;
  bool exponential_regime = false;  // jump-free: remainder below float noise
  double grid_rel_change = 0.0;     // convergence certificate at largest h
};

// Residual order along a decreasing h sequence with eps = h^omega.  The
// predicted values can be scaled (predicted_scale != 1 serves as a negative
// control that should push the fitted order out of band).
inline ExpansionReport residual_order_check(const CharExponentSpec& spec,
                                            int k,
                                            std::span<const double> h_sequence,
                                            double omega,
                                            double predicted_scale = 1.0) {
  spec.validate();
  if (h_sequence.size() < 4)
    throw std::invalid_argument("residual_order_check: need >= 4 h values");
  for (std::size_t i = 1; i < h_sequence.size(); ++i)
    if (!(h_sequence[i] < h_sequence[i - 1]))
      throw std::invalid_argument(
          "residual_order_check: h sequence must be strictly decreasing");

  ExpansionReport rep;
  rep.k = k;
  rep.h_values.assign(h_sequence.begin(), h_sequence.end());
  rep.eps_rule = "eps = h^" + std::to_string(omega);
  rep.exponential_regime = (spec.c1 == 0.0);
  rep.theoretical_order = rep.exponential_regime
                              ? std::numeric_limits<double>::infinity()
                              : theoretical_residual_order(k, spec.y, omega);

  for (std::size_t i = 0; i < h_sequence.size(); ++i) {
    const double h = h_sequence[i];
    const double eps = std::pow(h, omega);
    const MomentCertificate c = truncated_moment_certified(spec, k, eps, h);
    if (i == 0) rep.grid_rel_change = c.rel_change;
    rep.numeric.push_back(c.value);
    rep.predicted.push_back(predicted_scale *
                            expansion_predicted(spec, k, eps, h));
    rep.residual.push_back(rep.numeric.back() - rep.predicted.back());
  }

  if (rep.exponential_regime) {
    rep.fitted_order = std::numeric_limits<double>::infinity();
    return rep;
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < rep.h_values.size(); ++i) {
    const double ar = std::abs(rep.residual[i]);
    if (ar > 0.0) {
      lx.push_back(std::log(rep.h_values[i]));
      ly.push_back(std::log(ar));
    }
  }
  if (lx.size() < 2)
    throw ResolutionError("residual_order_check: residuals vanished");
  rep.fitted_order = ls_slope(lx, ly);
  return rep;
}

}  // namespace tsvol
