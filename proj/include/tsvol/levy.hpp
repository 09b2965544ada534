// Tempered-stable (CGMY-type) jump simulation.
//
// The jump measure has density
//   (C+ 1{x>0} + C- 1{x<0}) q(x) |x|^{-1-Y},
//   q(x) = exp(-M x) for x > 0,  q(x) = exp(G x) for x < 0.
// Increments are simulated as compound-Poisson jumps above a cutoff tau,
// compensated on (tau, 1], plus a centered Gaussian that substitutes the
// aggregate of jumps below tau with matched variance.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tsvol/numerics.hpp"
#include "tsvol/rng.hpp"
#include "tsvol/stable.hpp"

namespace tsvol {

struct LevyJumpSpec {
  double c_plus = 0.0;   // intensity of positive jumps, > 0
  double c_minus = 0.0;  // intensity of negative jumps, > 0
  double g_temper = 0.0; // exponential tempering rate of negative jumps, >= 0
  double m_temper = 0.0; // exponential tempering rate of positive jumps, >= 0
  double y_index = 1.5;  // activity index in (0, 2)

  void validate() const {
    if (!(c_plus > 0.0) || !(c_minus > 0.0))
      throw std::invalid_argument("LevyJumpSpec: intensities must be > 0");
    if (!(g_temper >= 0.0) || !(m_temper >= 0.0))
      throw std::invalid_argument("LevyJumpSpec: tempering rates must be >= 0");
    if (!(y_index > 0.0 && y_index < 2.0))
      throw std::invalid_argument("LevyJumpSpec: y_index must be in (0,2)");
  }

  double cbar() const { return c_plus + c_minus; }
};

struct GridSpec {
  double horizon_t = 1.0;
  std::size_t n_steps = 1;

  double h() const { return horizon_t / static_cast<double>(n_steps); }

  void validate() const {
    if (n_steps < 1) throw std::invalid_argument("GridSpec: n_steps >= 1");
    if (!(horizon_t > 0.0))
      throw std::invalid_argument("GridSpec: horizon must be > 0");
  }
};

// Parameters of the strictly stable process matching the small jumps of the
// spec (the tempered density with q replaced by 1).
inline StableParams stable_params_for(const LevyJumpSpec& spec) {
  spec.validate();
  const double y = spec.y_index;
  const double scale_pow_y = spec.cbar() * std::tgamma(-y) *
                             std::abs(std::cos(0.5 * std::numbers::pi * y));
  StableParams p;
  p.alpha = y;
  p.beta = (spec.c_plus - spec.c_minus) / spec.cbar();
  p.scale = std::pow(scale_pow_y, 1.0 / y);
  p.location = 0.0;
  return p;
}

// Integral of x^2 against the jump measure over |x| <= tau.  The
// singularity x^{1-Y} is removed by the substitution u = x^{2-Y}, after
// which the integrand is smooth.
inline double small_jump_variance(const LevyJumpSpec& spec, double tau) {
  spec.validate();
  if (!(tau > 0.0))
    throw std::invalid_argument("small_jump_variance: tau must be > 0");
  const double y = spec.y_index;
  const double p = 2.0 - y;
  auto one_side = [&](double c, double theta) {
    auto f = [&](double u) {
      return std::exp(-theta * std::pow(u, 1.0 / p));
    };
    return c / p * adaptive_simpson_rel(f, 0.0, std::pow(tau, p), 1e-10);
  };
  return one_side(spec.c_plus, spec.m_temper) +
         one_side(spec.c_minus, spec.g_temper);
}

// Signed first moment of the jump measure over tau < |x| <= 1 (the
// compensator of the mid-size jumps).  Zero when tau >= 1.
inline double jump_compensator_drift(const LevyJumpSpec& spec, double tau) {
  spec.validate();
  if (!(tau > 0.0))
    throw std::invalid_argument("jump_compensator_drift: tau must be > 0");
  if (tau >= 1.0) return 0.0;
  const double y = spec.y_index;
  // integral of x^{-Y} e^{-theta x} on [tau, 1], log substitution x = e^t
  auto one_side = [&](double c, double theta) {
    auto f = [&](double t) {
      const double x = std::exp(t);
      return std::exp((1.0 - y) * t - theta * x);
    };
    return c * adaptive_simpson_rel(f, std::log(tau), 0.0, 1e-10);
  };
  return one_side(spec.c_plus, spec.m_temper) -
         one_side(spec.c_minus, spec.g_temper);
}

// Samples increments J_h.  Tables are immutable after construction and can
// be shared across threads; each call draws only from the supplied stream.
class CgmySampler {
 public:
  CgmySampler(const LevyJumpSpec& spec, double tau)
      : spec_(spec), tau_(tau) {
    spec.validate();
    if (!(tau > 0.0))
      throw std::invalid_argument("CgmySampler: tau must be > 0");
    pos_ = build_side(spec.c_plus, spec.m_temper);
    neg_ = build_side(spec.c_minus, spec.g_temper);
    small_sigma2_ = small_jump_variance(spec, tau);
    drift_ = jump_compensator_drift(spec, tau);
  }

  double tau() const { return tau_; }
  double small_jump_sigma2() const { return small_sigma2_; }
  double compensator_drift() const { return drift_; }
  double big_jump_intensity() const { return pos_.lambda + neg_.lambda; }

  double sample(double h, RandomStream& rng) const {
    if (!(h > 0.0)) throw std::invalid_argument("CgmySampler: h must be > 0");
    double x = 0.0;
    const long np = rng.poisson(pos_.lambda * h);
    for (long i = 0; i < np; ++i) x += draw_size(pos_, rng.uniform());
    const long nm = rng.poisson(neg_.lambda * h);
    for (long i = 0; i < nm; ++i) x -= draw_size(neg_, rng.uniform());
    x -= drift_ * h;
    x += std::sqrt(small_sigma2_ * h) * rng.normal();
    return x;
  }

 private:
  static constexpr std::size_t kTablePoints = 4096;

  struct SideTable {
    double lambda = 0.0;          // total intensity above tau
    std::vector<double> log_x;    // log jump sizes, increasing
    std::vector<double> cum;      // cumulative intensity on [tau, x]
  };

  // Cumulative restricted intensity on a log-spaced grid; the upper end is
  // chosen so the omitted tail mass is negligible relative to the total.
  SideTable build_side(double c, double theta) const {
    const double y = spec_.y_index;
    double x_max = tau_ * std::pow(10.0, 14.0 / y);  // power-law tail cut
    if (theta > 0.0)
      x_max = std::min(x_max, std::max(4.0 * tau_, 60.0 / theta));
    SideTable t;
    t.log_x.resize(kTablePoints);
    t.cum.resize(kTablePoints);
    const double t0 = std::log(tau_);
    const double t1 = std::log(x_max);
    const double dt = (t1 - t0) / static_cast<double>(kTablePoints - 1);
    auto intensity = [&](double logx) {
      const double x = std::exp(logx);
      return c * std::exp(-y * logx - theta * x);
    };
    CompensatedSum cum;
    t.log_x[0] = t0;
    t.cum[0] = 0.0;
    double f_prev = intensity(t0);
    for (std::size_t i = 1; i < kTablePoints; ++i) {
      const double ta = t0 + static_cast<double>(i - 1) * dt;
      const double tb = t0 + static_cast<double>(i) * dt;
      const double fm = intensity(0.5 * (ta + tb));
      const double fb = intensity(tb);
      cum.add(dt / 6.0 * (f_prev + 4.0 * fm + fb));  // Simpson per cell
      f_prev = fb;
      t.log_x[i] = tb;
      t.cum[i] = cum.value();
    }
    t.lambda = t.cum.back();
    return t;
  }

  // Inverse CDF on the table: binary search plus linear interpolation of
  // the cumulative in log-size.
  double draw_size(const SideTable& t, double u) const {
    const double target = u * t.lambda;
    auto it = std::lower_bound(t.cum.begin(), t.cum.end(), target);
    if (it == t.cum.begin()) return std::exp(t.log_x.front());
    if (it == t.cum.end()) return std::exp(t.log_x.back());
    const std::size_t i = static_cast<std::size_t>(it - t.cum.begin());
    const double c0 = t.cum[i - 1], c1 = t.cum[i];
    const double w = (target - c0) / (c1 - c0);
    return std::exp(t.log_x[i - 1] + w * (t.log_x[i] - t.log_x[i - 1]));
  }

  LevyJumpSpec spec_;
  double tau_;
  SideTable pos_;
  SideTable neg_;
  double small_sigma2_ = 0.0;
  double drift_ = 0.0;
};

inline double sample_cgmy_increment(const LevyJumpSpec& spec, double h,
                                    double tau, RandomStream& rng) {
  return CgmySampler(spec, tau).sample(h, rng);
}

inline std::vector<double> sample_levy_path(const LevyJumpSpec& spec,
                                            const GridSpec& grid, double tau,
                                            RandomStream& rng) {
  if (grid.n_steps == 0) return {};
  grid.validate();
  const CgmySampler sampler(spec, tau);
  std::vector<double> inc(grid.n_steps);
  const double h = grid.h();
  for (auto& x : inc) x = sampler.sample(h, rng);
  return inc;
}

}  // namespace tsvol
