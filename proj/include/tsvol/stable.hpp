// Alpha-stable increments via the Chambers-Mallows-Stuck transform.
//
// Parametrization: characteristic function of a standard draw X is
//   E exp(iuX) = exp(-|u|^alpha (1 - i beta sgn(u) tan(pi alpha / 2)))
// (Samorodnitsky-Taqqu "1" form), so that for alpha != 1 the process with
// scale c satisfies S_h ~ c h^{1/alpha} X + location * h.
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tsvol/rng.hpp"

namespace tsvol {

struct StableParams {
  double alpha = 2.0;     // index in (0, 2]
  double beta = 0.0;      // skewness in [-1, 1]
  double scale = 1.0;     // > 0
  double location = 0.0;  // drift per unit time

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 2.0))
      throw std::invalid_argument("StableParams: alpha must be in (0,2]");
    if (!(beta >= -1.0 && beta <= 1.0))
      throw std::invalid_argument("StableParams: |beta| must be <= 1");
    if (!(scale > 0.0))
      throw std::invalid_argument("StableParams: scale must be > 0");
  }
};

// One standard stable draw (scale 1, location 0).
inline double sample_standard_stable(double alpha, double beta,
                                     RandomStream& rng) {
  const double u = std::numbers::pi * (rng.uniform() - 0.5);
  const double w = rng.exponential();
  if (alpha == 1.0) {
    const double half_pi = 0.5 * std::numbers::pi;
    return (1.0 / half_pi) *
           ((half_pi + beta * u) * std::tan(u) -
            beta * std::log(half_pi * w * std::cos(u) / (half_pi + beta * u)));
  }
  const double t = beta * std::tan(0.5 * std::numbers::pi * alpha);
  const double b = std::atan(t) / alpha;
  const double s = std::pow(1.0 + t * t, 0.5 / alpha);
  return s * std::sin(alpha * (u + b)) /
         std::pow(std::cos(u), 1.0 / alpha) *
         std::pow(std::cos(u - alpha * (u + b)) / w, (1.0 - alpha) / alpha);
}

inline double sample_stable_increment(const StableParams& params, double h,
                                      RandomStream& rng) {
  params.validate();
  if (!(h > 0.0))
    throw std::invalid_argument("sample_stable_increment: h must be > 0");
  const double x = sample_standard_stable(params.alpha, params.beta, rng);
  return params.scale * std::pow(h, 1.0 / params.alpha) * x +
         params.location * h;
}

}  // namespace tsvol
