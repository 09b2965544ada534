#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "test_util.hpp"
#include "tsvol/stable.hpp"

using namespace tsvol;
namespace tt = tsvol::testing;

TEST_CASE("alpha = 2 reduces to a Gaussian with variance 2 scale^2") {
  StableParams p;
  p.alpha = 2.0;
  p.beta = 0.0;
  p.scale = 0.7;
  RandomStream rng(11, 0);
  const std::size_t n = 100000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = sample_stable_increment(p, 1.0, rng);
  const double sd = sample_sd(xs);
  CHECK(std::abs(sd * sd - 2.0 * p.scale * p.scale) <
        0.03 * 2.0 * p.scale * p.scale);
}

TEST_CASE("symmetric draws have median near zero") {
  StableParams p;
  p.alpha = 1.5;
  p.beta = 0.0;
  p.scale = 1.0;
  RandomStream rng(12, 0);
  const std::size_t n = 100000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = sample_stable_increment(p, 1.0, rng);
  CHECK(std::abs(sample_median(xs)) < 0.02);
}

TEST_CASE("skewed stable law matches its Fourier-inverted CDF") {
  // alpha = 1.25, beta = 0.3, scale 1: the characteristic exponent is
  // -|u|^a (1 - i b sgn(u) tan(pi a / 2)), i.e. c1 = -1,
  // c2 = b tan(pi a / 2).
  const double alpha = 1.25, beta = 0.3;
  CharExponentSpec spec;
  spec.c1 = -1.0;
  spec.c2 = beta * std::tan(0.5 * std::numbers::pi * alpha);
  spec.sigma = 0.0;
  spec.y = alpha;
  const DensityTable table = density_fft(spec, 1.0, 800.0, std::size_t{1} << 17);
  const tt::CdfTable cdf = tt::cdf_from_density(table);

  StableParams p;
  p.alpha = alpha;
  p.beta = beta;
  p.scale = 1.0;
  RandomStream rng(13, 0);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = sample_stable_increment(p, 1.0, rng);
  CHECK(tt::ks_vs_cdf(xs, cdf) < 0.01);
}

TEST_CASE("time scaling: S_h equals h^{1/alpha}-scaled standard draws") {
  StableParams p;
  p.alpha = 1.5;
  p.beta = -0.4;
  p.scale = 2.0;
  p.location = 3.0;
  RandomStream a(14, 0), b(14, 0);
  const double h = 0.25;
  for (int i = 0; i < 1000; ++i) {
    const double direct = sample_stable_increment(p, h, a);
    const double manual = p.scale * std::pow(h, 1.0 / p.alpha) *
                              sample_standard_stable(p.alpha, p.beta, b) +
                          p.location * h;
    CHECK(direct == doctest::Approx(manual).epsilon(1e-15));
  }
}

TEST_CASE("parameter validation") {
  StableParams p;
  p.alpha = 2.5;
  RandomStream rng(1, 1);
  CHECK_THROWS_AS(sample_stable_increment(p, 1.0, rng), std::invalid_argument);
  p.alpha = 1.5;
  p.beta = 2.0;
  CHECK_THROWS_AS(sample_stable_increment(p, 1.0, rng), std::invalid_argument);
  p.beta = 0.0;
  p.scale = -1.0;
  CHECK_THROWS_AS(sample_stable_increment(p, 1.0, rng), std::invalid_argument);
  p.scale = 1.0;
  CHECK_THROWS_AS(sample_stable_increment(p, 0.0, rng), std::invalid_argument);
}
