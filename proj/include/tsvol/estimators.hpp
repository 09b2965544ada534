// Integrated-volatility estimators: truncated realized quadratic variation
// (TRQV), bipower calibration of the threshold base, the algebraic
// second-difference debiasing step, sign-corrected one- and two-step
// estimators with a shrink-and-retry rule, and the pooled daily-block
// variant.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "tsvol/numerics.hpp"

namespace tsvol {

struct EstimatorConfig {
  double omega = 5.0 / 12.0;      // threshold exponent, eps = c0 h^omega
  bool c0_from_bipower = true;    // else use c0_fixed
  double c0_fixed = 1.0;
  double zeta1 = 1.2;             // > 1
  double zeta2 = 1.2;             // > 1
  double p1 = 0.65;               // in (0, 1]
  double p2 = 0.75;               // in (0, 1]
  double retry_shrink = 2.0 / 3.0;
  int max_retries = 3;
  double denom_guard = 1e-12;     // relative tolerance on second differences

  void validate() const {
    if (!(omega > 0.0)) throw std::invalid_argument("omega must be > 0");
    if (!(zeta1 > 1.0) || !(zeta2 > 1.0))
      throw std::invalid_argument("zeta1, zeta2 must be > 1");
    if (!(p1 > 0.0 && p1 <= 1.0) || !(p2 > 0.0 && p2 <= 1.0))
      throw std::invalid_argument("p1, p2 must be in (0,1]");
    if (!(retry_shrink > 0.0 && retry_shrink < 1.0))
      throw std::invalid_argument("retry_shrink must be in (0,1)");
    if (max_retries < 0) throw std::invalid_argument("max_retries >= 0");
    if (!c0_from_bipower && !(c0_fixed > 0.0))
      throw std::invalid_argument("fixed c0 must be > 0");
  }
};

// Documented validity window for the threshold exponent: for index y the
// theory needs (1/(4-y) or 1/(2+y/2), whichever is larger) < omega < 4/(8+y).
inline bool omega_in_theory_window(double omega, double y) {
  const double lo = std::max(1.0 / (4.0 - y), 1.0 / (2.0 + 0.5 * y));
  const double hi = 4.0 / (8.0 + y);
  return lo < omega && omega < hi;
}

enum class EstimateFlag : unsigned {
  kNone = 0,
  kNegativeClamped = 1u << 0,  // an eta sign clamp fired
  kDenomGuarded = 1u << 1,     // a second-difference denominator was guarded
  kRetryExhausted = 1u << 2,   // retries ran out, eta dropped to 0
};

inline unsigned operator|(EstimateFlag a, EstimateFlag b) {
  return static_cast<unsigned>(a) | static_cast<unsigned>(b);
}

struct EstimateResult {
  double value = 0.0;
  double eps_used = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  int retries = 0;
  unsigned flags = 0;

  bool has(EstimateFlag f) const { return flags & static_cast<unsigned>(f); }
};

inline double trqv(std::span<const double> increments, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("trqv: eps must be > 0");
  CompensatedSum s;
  for (double d : increments)
    if (std::abs(d) <= eps) s.add(d * d);
  return s.value();
}

inline double bipower_sigma2(std::span<const double> increments) {
  if (increments.size() < 2)
    throw std::invalid_argument("bipower_sigma2: need at least 2 increments");
  CompensatedSum s;
  for (std::size_t i = 1; i < increments.size(); ++i)
    s.add(std::abs(increments[i - 1]) * std::abs(increments[i]));
  return 0.5 * std::numbers::pi * s.value();
}

inline double threshold(double c0, double h, double omega) {
  return c0 * std::pow(h, omega);
}

struct DebiasStepResult {
  double value = 0.0;
  double eta = 0.0;
  bool guarded = false;
};

// One exact debiasing step: for f(x) = a + b x^alpha evaluated at
// (eps, zeta*eps, zeta^2*eps), returns a.  A degenerate second difference
// (jump-free data) triggers the guard instead of dividing by ~0.
inline DebiasStepResult debias_step(double f_eps, double f_zeps,
                                    double f_z2eps, double guard) {
  const double diff = f_zeps - f_eps;
  const double denom = f_z2eps - 2.0 * f_zeps + f_eps;
  const double scale = std::max({std::abs(f_eps), std::abs(f_zeps),
                                 std::abs(f_z2eps), 1e-30});
  if (std::abs(denom) < guard * scale) return {f_eps, 0.0, true};
  return {f_eps - diff * diff / denom, diff / denom, false};
}

namespace detail {

struct EtaResult {
  double eta = 0.0;
  bool guarded = false;
  bool clamped = false;
};

// eta ratio of a threshold-indexed statistic f at (p*eps, p*zeta*eps,
// p*zeta^2*eps), clamped to be >= 0 (positive_sign) or <= 0.
template <class F>
EtaResult eta_ratio(const F& f, double eps, double zeta, double p,
                    double guard, bool positive_sign) {
  const double a = f(p * eps);
  const double b = f(p * zeta * eps);
  const double c = f(p * zeta * zeta * eps);
  const DebiasStepResult step = debias_step(a, b, c, guard);
  EtaResult r;
  r.guarded = step.guarded;
  r.eta = step.eta;
  if (positive_sign ? (r.eta < 0.0) : (r.eta > 0.0)) {
    r.eta = 0.0;
    r.clamped = true;
  }
  return r;
}

}  // namespace detail

// One-step estimator at threshold eps, with eta1 recomputed at p1-scaled
// thresholds of eps_eta (the retry rule shrinks only eps_eta).
inline double one_step_value(std::span<const double> inc, double eps,
                             double eps_eta, const EstimatorConfig& cfg,
                             detail::EtaResult* eta_out = nullptr) {
  auto f = [&](double e) { return trqv(inc, e); };
  const detail::EtaResult eta = detail::eta_ratio(
      f, eps_eta, cfg.zeta1, cfg.p1, cfg.denom_guard, /*positive_sign=*/true);
  if (eta_out) *eta_out = eta;
  return f(eps) - eta.eta * (f(cfg.zeta1 * eps) - f(eps));
}

inline double resolve_c0(std::span<const double> inc, double h,
                         const EstimatorConfig& cfg) {
  if (!cfg.c0_from_bipower) return cfg.c0_fixed;
  const double horizon = h * static_cast<double>(inc.size());
  return std::sqrt(bipower_sigma2(inc) / horizon);
}

inline EstimateResult estimate_pb(std::span<const double> inc,
                                  const EstimatorConfig& cfg, double h) {
  cfg.validate();
  const double eps = threshold(resolve_c0(inc, h, cfg), h, cfg.omega);
  EstimateResult r;
  r.eps_used = eps;
  double eps_eta = eps;
  for (int attempt = 0;; ++attempt) {
    detail::EtaResult eta;
    r.value = one_step_value(inc, eps, eps_eta, cfg, &eta);
    r.eta1 = eta.eta;
    r.retries = attempt;
    if (eta.guarded) r.flags |= static_cast<unsigned>(EstimateFlag::kDenomGuarded);
    if (eta.clamped)
      r.flags |= static_cast<unsigned>(EstimateFlag::kNegativeClamped);
    if (r.value >= 0.0) return r;
    if (attempt >= cfg.max_retries) {
      r.value = trqv(inc, eps);
      r.eta1 = 0.0;
      r.flags |= static_cast<unsigned>(EstimateFlag::kRetryExhausted);
      return r;
    }
    eps_eta *= cfg.retry_shrink;
  }
}

inline EstimateResult estimate_nb(std::span<const double> inc,
                                  const EstimatorConfig& cfg, double h) {
  cfg.validate();
  // the base is the sign-corrected one-step estimate, so it is nonnegative;
  // with eta2 <= 0 and a nonnegative inner difference the two-step value
  // inherits that bound
  EstimateResult r = estimate_pb(inc, cfg, h);
  const double eps = r.eps_used;
  auto pb = [&](double e) { return one_step_value(inc, e, e, cfg); };

  const double base = r.value;
  const double inner = std::max(pb(cfg.zeta2 * eps) - base, 0.0);
  double eps_eta = eps;
  for (int attempt = 0;; ++attempt) {
    const detail::EtaResult eta = detail::eta_ratio(
        pb, eps_eta, cfg.zeta2, cfg.p2, cfg.denom_guard,
        /*positive_sign=*/false);
    r.eta2 = eta.eta;
    r.retries = attempt;
    if (eta.guarded) r.flags |= static_cast<unsigned>(EstimateFlag::kDenomGuarded);
    if (eta.clamped)
      r.flags |= static_cast<unsigned>(EstimateFlag::kNegativeClamped);
    r.value = base - eta.eta * inner;
    if (r.value >= 0.0) return r;
    if (attempt >= cfg.max_retries) {
      r.value = base;
      r.eta2 = 0.0;
      r.flags |= static_cast<unsigned>(EstimateFlag::kRetryExhausted);
      return r;
    }
    eps_eta *= cfg.retry_shrink;
  }
}

// Pooled daily-block two-step estimator: per-block bias differences use the
// block's own data and threshold, while the transfer factors eta1 and eta2
// pool numerators and denominators over the whole horizon at each relative
// threshold scale.  With a single block this reduces to estimate_nb.
inline std::vector<EstimateResult> estimate_daily_pooled(
    std::span<const std::vector<double>> blocks, const EstimatorConfig& cfg,
    double h) {
  cfg.validate();
  if (blocks.empty())
    throw std::invalid_argument("estimate_daily_pooled: no blocks");

  const std::size_t nb = blocks.size();
  std::vector<double> eps(nb);
  for (std::size_t b = 0; b < nb; ++b)
    eps[b] = threshold(resolve_c0(blocks[b], h, cfg), h, cfg.omega);

  // Pooled eta1 at relative scale s: ratio of horizon-summed first to
  // second differences of the per-block TRQV at (p1 s eps_b, ...).
  auto pooled_eta1 = [&](double s) {
    CompensatedSum num, den;
    double scale = 1e-30;
    for (std::size_t b = 0; b < nb; ++b) {
      const double e = cfg.p1 * s * eps[b];
      const double f0 = trqv(blocks[b], e);
      const double f1 = trqv(blocks[b], cfg.zeta1 * e);
      const double f2 = trqv(blocks[b], cfg.zeta1 * cfg.zeta1 * e);
      num.add(f1 - f0);
      den.add(f2 - 2.0 * f1 + f0);
      scale = std::max({scale, std::abs(f0), std::abs(f1), std::abs(f2)});
    }
    if (std::abs(den.value()) < cfg.denom_guard * scale)
      return detail::EtaResult{0.0, true, false};
    detail::EtaResult r{num.value() / den.value(), false, false};
    if (r.eta < 0.0) {
      r.eta = 0.0;
      r.clamped = true;
    }
    return r;
  };

  // One-step value for block b at relative scale s, given a pooled eta1.
  auto pb_at = [&](std::size_t b, double s, double eta1) {
    const double e = s * eps[b];
    const double f0 = trqv(blocks[b], e);
    const double f1 = trqv(blocks[b], cfg.zeta1 * e);
    return f0 - eta1 * (f1 - f0);
  };

  auto pooled_eta2 = [&](double s_base) {
    CompensatedSum num, den;
    const double s = cfg.p2 * s_base;
    const double eta_a = pooled_eta1(s).eta;
    const double eta_b = pooled_eta1(s * cfg.zeta2).eta;
    const double eta_c = pooled_eta1(s * cfg.zeta2 * cfg.zeta2).eta;
    double scale = 1e-30;
    for (std::size_t b = 0; b < nb; ++b) {
      const double f0 = pb_at(b, s, eta_a);
      const double f1 = pb_at(b, s * cfg.zeta2, eta_b);
      const double f2 = pb_at(b, s * cfg.zeta2 * cfg.zeta2, eta_c);
      num.add(f1 - f0);
      den.add(f2 - 2.0 * f1 + f0);
      scale = std::max({scale, std::abs(f0), std::abs(f1), std::abs(f2)});
    }
    if (std::abs(den.value()) < cfg.denom_guard * scale)
      return detail::EtaResult{0.0, true, false};
    detail::EtaResult r{num.value() / den.value(), false, false};
    if (r.eta > 0.0) {
      r.eta = 0.0;
      r.clamped = true;
    }
    return r;
  };

  // base stage mirrors the one-step retry: shrink the pooled eta1 scale
  // until every block base is nonnegative, falling back to plain TRQV
  double eta1 = 0.0;
  unsigned flags1 = 0;
  std::vector<double> base(nb);
  {
    double s1 = 1.0;
    for (int attempt = 0;; ++attempt) {
      const detail::EtaResult e1 = pooled_eta1(s1);
      if (e1.guarded)
        flags1 |= static_cast<unsigned>(EstimateFlag::kDenomGuarded);
      if (e1.clamped)
        flags1 |= static_cast<unsigned>(EstimateFlag::kNegativeClamped);
      eta1 = e1.eta;
      bool any_negative = false;
      for (std::size_t b = 0; b < nb; ++b) {
        base[b] = pb_at(b, 1.0, eta1);
        if (base[b] < 0.0) any_negative = true;
      }
      if (!any_negative) break;
      if (attempt >= cfg.max_retries) {
        eta1 = 0.0;
        flags1 |= static_cast<unsigned>(EstimateFlag::kRetryExhausted);
        for (std::size_t b = 0; b < nb; ++b) base[b] = trqv(blocks[b], eps[b]);
        break;
      }
      s1 *= cfg.retry_shrink;
    }
  }

  const double eta1_z = pooled_eta1(cfg.zeta2).eta;
  std::vector<double> inner(nb);
  for (std::size_t b = 0; b < nb; ++b)
    inner[b] = std::max(pb_at(b, cfg.zeta2, eta1_z) - base[b], 0.0);

  std::vector<EstimateResult> out(nb);
  double s_eta = 1.0;
  int retries = 0;
  unsigned flags2 = 0;
  for (;; ++retries) {
    const detail::EtaResult e2 = pooled_eta2(s_eta);
    if (e2.guarded)
      flags2 |= static_cast<unsigned>(EstimateFlag::kDenomGuarded);
    if (e2.clamped)
      flags2 |= static_cast<unsigned>(EstimateFlag::kNegativeClamped);
    bool any_negative = false;
    for (std::size_t b = 0; b < nb; ++b) {
      EstimateResult& r = out[b];
      r = EstimateResult{};
      r.eps_used = eps[b];
      r.eta1 = eta1;
      r.eta2 = e2.eta;
      r.retries = retries;
      r.flags = flags1 | flags2;
      r.value = base[b] - e2.eta * inner[b];
      if (r.value < 0.0) any_negative = true;
    }
    if (!any_negative || retries >= cfg.max_retries) {
      if (any_negative)
        for (std::size_t b = 0; b < nb; ++b) {
          out[b].value = base[b];
          out[b].eta2 = 0.0;
          out[b].flags |= static_cast<unsigned>(EstimateFlag::kRetryExhausted);
        }
      return out;
    }
    s_eta *= cfg.retry_shrink;
  }
}

// Diagnostic evaluation of the leading bias of the TRQV:
//   A(eps, h) = cbar/(2-y) * chi_pow_y * eps^{2-y}
//             - cbar * (y+1)(y+2)/(2y) * sigma2_weighted * h * eps^{-y},
// where chi_pow_y = int |chi|^y ds and sigma2_weighted = int |chi|^y
// sigma^2 ds over the horizon.
inline double bias_term_A(double cbar, double chi_pow_y,
                          double sigma2_weighted, double y, double eps,
                          double h) {
  if (!(y > 1.0 && y < 2.0))
    throw std::invalid_argument("bias_term_A: y must be in (1,2)");
  if (!(eps > 0.0)) throw std::invalid_argument("bias_term_A: eps must be > 0");
  return cbar / (2.0 - y) * chi_pow_y * std::pow(eps, 2.0 - y) -
         cbar * (y + 1.0) * (y + 2.0) / (2.0 * y) * sigma2_weighted * h *
             std::pow(eps, -y);
}

}  // namespace tsvol
