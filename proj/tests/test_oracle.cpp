#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "test_util.hpp"
#include "tsvol/oracle.hpp"

using namespace tsvol;
namespace tt = tsvol::testing;

namespace {

CharExponentSpec stable_spec(double cbar_target, double y, double sigma) {
  CharExponentSpec s;
  s.y = y;
  s.sigma = sigma;
  s.c1 = cbar_target * std::cos(0.5 * std::numbers::pi * y) * std::tgamma(-y);
  return s;
}

double gaussian_truncated_m2(double sigma, double h, double eps) {
  const double a = eps / (sigma * std::sqrt(h));
  return sigma * sigma * h *
         ((1.0 - 2.0 * (1.0 - normal_cdf(a))) - 2.0 * a * normal_pdf(a));
}

}  // namespace

TEST_CASE("pure Gaussian density matches the closed form") {
  CharExponentSpec s;
  s.sigma = 0.3;
  s.drift = 0.1;
  const double h = 0.5;
  const double sd = s.sigma * std::sqrt(h);
  const DensityTable t = density_fft(s, h, 16.0 * sd, 1 << 14);
  double worst = 0.0;
  for (std::size_t j = 0; j < t.f.size(); ++j) {
    const double x = t.x(j) - s.drift * h;
    const double ref = std::exp(-0.5 * x * x / (sd * sd)) /
                       (sd * std::sqrt(2.0 * std::numbers::pi));
    worst = std::max(worst, std::abs(t.f[j] - ref));
  }
  CHECK(worst < 1e-10);
  CHECK(std::abs(t.mass() - 1.0) < 1e-8);
  for (double f : t.f) CHECK(f > -1e-10);
}

TEST_CASE("y = 2 stable part is the Gaussian limit") {
  CharExponentSpec s;
  s.c1 = -0.04;  // -scale^2 with scale 0.2
  s.y = 2.0;
  const double h = 0.7;
  const double var = 2.0 * 0.04 * h;
  const DensityTable t = density_fft(s, h, 16.0 * std::sqrt(var), 1 << 14);
  double worst = 0.0;
  for (std::size_t j = 0; j < t.f.size(); ++j) {
    const double ref = std::exp(-0.5 * t.x(j) * t.x(j) / var) /
                       std::sqrt(2.0 * std::numbers::pi * var);
    worst = std::max(worst, std::abs(t.f[j] - ref));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("symmetric stable density at the origin") {
  const CharExponentSpec s = stable_spec(1.0, 1.5, 0.0);
  const double h = 0.3;
  const DensityTable t = density_fft(s, h, 400.0, 1 << 16);
  const double ref = std::tgamma(1.0 + 1.0 / s.y) /
                     (std::numbers::pi * std::pow(-s.c1 * h, 1.0 / s.y));
  CHECK(tt::rel_err(t.f[t.f.size() / 2], ref) < 1e-6);
  CHECK(std::abs(t.mass() - 1.0) < 1e-8);
}

TEST_CASE("density symmetry under sign flip of skew and drift") {
  CharExponentSpec a = stable_spec(0.8, 1.3, 0.1);
  a.c2 = 0.4;
  a.drift = 0.2;
  CharExponentSpec b = a;
  b.c2 = -a.c2;
  b.drift = -a.drift;
  const double h = 0.2;
  const DensityTable ta = density_fft(a, h, 300.0, 1 << 15);
  const DensityTable tb = density_fft(b, h, 300.0, 1 << 15);
  double worst = 0.0;
  for (std::size_t j = 1; j < ta.f.size(); ++j)
    worst = std::max(worst,
                     std::abs(ta.f[j] - tb.f[ta.f.size() - j]));
  CHECK(worst < 1e-10);
}

TEST_CASE("grid preconditions are enforced") {
  CharExponentSpec s;
  s.sigma = 0.2;
  CHECK_THROWS_AS(density_fft(s, 1.0, 10.0, 1000), std::invalid_argument);
  CHECK_THROWS_AS(density_fft(s, 1.0, 0.1, 1 << 12), ResolutionError);
  s.c1 = 0.5;
  CHECK_THROWS_AS(density_fft(s, 1.0, 10.0, 1 << 12), std::invalid_argument);
}

TEST_CASE("Gaussian truncated second moment closed form") {
  CharExponentSpec s;
  s.sigma = 0.3;
  const double h = 1e-4;
  for (double a : {0.8, 1.5, 2.6, 4.0}) {
    const double eps = a * s.sigma * std::sqrt(h);
    CHECK(tt::rel_err(truncated_moment_numeric(s, 1, eps, h),
                      gaussian_truncated_m2(s.sigma, h, eps)) < 1e-10);
  }
}

TEST_CASE("Gaussian fourth moment recovered as eps grows") {
  CharExponentSpec s;
  s.sigma = 0.25;
  const double h = 1e-3;
  const double eps = 20.0 * s.sigma * std::sqrt(h);
  const double m4 = 3.0 * std::pow(s.sigma * s.sigma * h, 2.0);
  CHECK(tt::rel_err(truncated_moment_numeric(s, 2, eps, h), m4) < 1e-9);
}

TEST_CASE("moment is monotone in eps and certified grid-stable") {
  const CharExponentSpec s = stable_spec(1.0, 1.5, 0.3);
  const double h = 1e-4;
  double prev = 0.0;
  for (double eps : {0.005, 0.01, 0.02, 0.05}) {
    const MomentCertificate c = truncated_moment_certified(s, 1, eps, h);
    CHECK(c.value > prev);
    prev = c.value;
    if (c.refined) CHECK(c.rel_change < 1e-8);
  }
}

TEST_CASE("expansion values") {
  CharExponentSpec g;
  g.sigma = 0.2;
  const double h = 1e-5;
  CHECK(expansion_predicted(g, 1, 0.01, h) ==
        doctest::Approx(0.04 * h).epsilon(1e-14));
  CHECK(expansion_predicted(g, 2, 0.01, h) ==
        doctest::Approx(3.0 * std::pow(0.04 * h, 2.0)).epsilon(1e-14));

  const CharExponentSpec s = stable_spec(0.056, 1.25, 0.2);
  CHECK(tt::rel_err(s.cbar(), 0.056) < 1e-12);
  const double eps = std::pow(h, 5.0 / 12.0);
  // long double reference of sigma^2 h + A~(eps,h) h
  const long double cb = 0.056L, y = 1.25L, hl = 1e-5L;
  const long double el = std::pow((long double)h, 5.0L / 12.0L);
  const long double ref =
      0.04L * hl + (cb / (2.0L - y) * std::pow(el, 2.0L - y) -
                    cb * (y + 1.0L) * (y + 2.0L) / (2.0L * y) * 0.04L * hl *
                        std::pow(el, -y)) *
                       hl;
  CHECK(tt::rel_err(expansion_predicted(s, 1, eps, h),
                    static_cast<double>(ref)) < 1e-13);

  // k = 2 leading jump coefficient
  const CharExponentSpec s2 = stable_spec(1.0, 1.5, 0.0);
  const double jump = expansion_predicted(s2, 2, eps, h);
  CHECK(tt::rel_err(jump, 1.0 / (4.0 - 1.5) * h * std::pow(eps, 4.0 - 1.5)) <
        1e-13);
}

TEST_CASE("jump-free residual check reports the exponential regime") {
  CharExponentSpec g;
  g.sigma = 0.3;
  const std::vector<double> hs{1e-3, 5e-4, 2.5e-4, 1.25e-4};
  const ExpansionReport rep = residual_order_check(g, 1, hs, 5.0 / 12.0);
  CHECK(rep.exponential_regime);
  CHECK(std::isinf(rep.fitted_order));
}

TEST_CASE("k = 2 residual decays faster than the retained jump term") {
  const CharExponentSpec s = stable_spec(1.0, 1.5, 0.3);
  const double omega = 5.0 / 12.0;
  std::vector<double> hs;
  for (int p = 14; p <= 18; ++p) hs.push_back(std::ldexp(1.0, -p));
  const ExpansionReport rep = residual_order_check(s, 2, hs, omega);
  const double retained = 1.0 + (4.0 - s.y) * omega;
  // next-order term beats the retained one by 1 - 2*omega = 1/6 here
  CHECK(rep.fitted_order > retained + 0.1);
  CHECK(std::abs(rep.fitted_order - rep.theoretical_order) < 0.15);
}

TEST_CASE("residual order input validation") {
  const CharExponentSpec s = stable_spec(1.0, 1.5, 0.3);
  const std::vector<double> short_hs{1e-3, 1e-4};
  CHECK_THROWS_AS(residual_order_check(s, 1, short_hs, 0.4),
                  std::invalid_argument);
  const std::vector<double> increasing{1e-4, 1e-3, 1e-2, 1e-1};
  CHECK_THROWS_AS(residual_order_check(s, 1, increasing, 0.4),
                  std::invalid_argument);
}
