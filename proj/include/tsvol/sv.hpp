// Observed-process simulation: X = X^c + chi * J with constant or Heston
// diffusion, recording the true integrated variance per evaluation block.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tsvol/levy.hpp"
#include "tsvol/rng.hpp"

namespace tsvol {

struct HestonParams {
  double kappa = 5.0;  // mean reversion rate
  double xi = 0.5;     // vol of vol
  double theta = 0.16; // long-run variance
  double rho = -0.5;   // correlation between price and variance Brownians
  double v0 = 0.16;    // initial variance

  void validate() const {
    if (!(kappa > 0.0 && theta > 0.0 && v0 > 0.0))
      throw std::invalid_argument("HestonParams: kappa, theta, v0 must be > 0");
    if (!(xi >= 0.0))
      throw std::invalid_argument("HestonParams: xi must be >= 0");
    if (!(rho >= -1.0 && rho <= 1.0))
      throw std::invalid_argument("HestonParams: |rho| must be <= 1");
  }
};

struct DiffusionSpec {
  enum class Kind { kConstant, kHeston };
  Kind kind = Kind::kConstant;
  double sigma = 0.2;     // used when kind == kConstant
  HestonParams heston{};  // used when kind == kHeston

  void validate() const {
    if (kind == Kind::kConstant) {
      if (!(sigma > 0.0))
        throw std::invalid_argument("DiffusionSpec: sigma must be > 0");
    } else {
      heston.validate();
    }
  }
};

struct ModelSpec {
  DiffusionSpec diffusion{};
  std::optional<LevyJumpSpec> jumps{};  // empty = jump-free
  double chi = 1.0;                     // constant jump scale
  double drift_b = 0.0;                 // constant drift

  void validate() const {
    diffusion.validate();
    if (jumps) jumps->validate();
    if (!std::isfinite(chi))
      throw std::invalid_argument("ModelSpec: chi must be finite");
  }
};

struct PathSample {
  std::vector<double> increments;  // length n_steps
  std::vector<double> block_iv;    // true integrated variance per block
  std::size_t blocks = 0;
  std::uint64_t seed = 0;  // stream id the path was drawn from
};

inline double true_iv(const PathSample& path, std::size_t block) {
  if (block >= path.blocks)
    throw std::out_of_range("true_iv: block index out of range");
  return path.block_iv[block];
}

// Simulates increments of X on the observation grid.  The continuous part
// runs on an internal grid of substeps per observation; Heston variance uses
// full-truncation Euler (V+ in both drift and diffusion) and block IV is the
// trapezoid of V+ on the internal grid.  Jumps are added per observation
// step, independent of (W, B).
inline PathSample simulate_path(const ModelSpec& model, const GridSpec& grid,
                                std::size_t blocks, std::size_t substeps,
                                double tau, RandomStream& rng) {
  model.validate();
  grid.validate();
  if (blocks == 0 || grid.n_steps % blocks != 0)
    throw std::invalid_argument("simulate_path: blocks must divide n_steps");
  if (substeps < 1)
    throw std::invalid_argument("simulate_path: substeps must be >= 1");

  const double h = grid.h();
  const std::size_t steps_per_block = grid.n_steps / blocks;

  PathSample out;
  out.increments.resize(grid.n_steps);
  out.block_iv.assign(blocks, 0.0);
  out.blocks = blocks;
  out.seed = rng.stream_id();

  std::optional<CgmySampler> jump_sampler;
  if (model.jumps) jump_sampler.emplace(*model.jumps, tau);

  const bool heston = model.diffusion.kind == DiffusionSpec::Kind::kHeston;
  const HestonParams& hp = model.diffusion.heston;
  const double sig = model.diffusion.sigma;
  const double hs = h / static_cast<double>(substeps);
  const double rho = hp.rho;
  const double rho_perp = std::sqrt(std::max(0.0, 1.0 - rho * rho));

  double v = heston ? hp.v0 : sig * sig;  // Euler state (may dip negative)
  for (std::size_t i = 0; i < grid.n_steps; ++i) {
    const std::size_t b = i / steps_per_block;
    double dxc = 0.0;
    if (heston) {
      CompensatedSum iv;
      for (std::size_t s = 0; s < substeps; ++s) {
        const double vp = std::max(v, 0.0);
        const double dw = std::sqrt(hs) * rng.normal();
        const double dz = std::sqrt(hs) * rng.normal();
        const double db = rho * dw + rho_perp * dz;
        dxc += std::sqrt(vp) * dw;
        const double v_next = v + hp.kappa * (hp.theta - vp) * hs +
                              hp.xi * std::sqrt(vp) * db;
        iv.add(0.5 * (vp + std::max(v_next, 0.0)) * hs);
        v = v_next;
      }
      out.block_iv[b] += iv.value();
    } else {
      dxc = sig * std::sqrt(h) * rng.normal();
      out.block_iv[b] += sig * sig * h;
    }
    double dj = 0.0;
    if (jump_sampler) dj = jump_sampler->sample(h, rng);
    out.increments[i] = dxc + model.chi * dj + model.drift_b * h;
  }
  return out;
}

}  // namespace tsvol
