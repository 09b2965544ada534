// Reproducible parallel Monte Carlo runner.  Paths get counter-derived
// streams keyed by (master_seed, path index), so results are bit-identical
// for any worker count; aggregation is an ordered reduce over path index.
#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tsvol/estimators.hpp"
#include "tsvol/stats.hpp"
#include "tsvol/sv.hpp"

namespace tsvol {

enum class EstimatorKind { kTrqv, kOneStep, kTwoStep };

inline const char* estimator_kind_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::kTrqv: return "trqv";
    case EstimatorKind::kOneStep: return "one_step";
    case EstimatorKind::kTwoStep: return "two_step";
  }
  return "?";
}

struct NamedEstimator {
  std::string name;
  EstimatorKind kind = EstimatorKind::kTwoStep;
  EstimatorConfig cfg{};
};

struct ExperimentConfig {
  ModelSpec model{};
  GridSpec grid{};
  std::size_t blocks = 1;
  std::size_t substeps = 10;
  double tau = 0.0;  // <= 0 selects the default cutoff rule
  std::size_t paths = 1;
  std::vector<NamedEstimator> estimators;
  std::uint64_t master_seed = 1;
  std::uint64_t path_offset = 0;  // stream id of the first path
  std::size_t workers = 1;

  void validate() const {
    model.validate();
    grid.validate();
    if (paths < 1) throw std::invalid_argument("ExperimentConfig: paths >= 1");
    if (estimators.empty())
      throw std::invalid_argument("ExperimentConfig: no estimators");
    for (std::size_t i = 0; i < estimators.size(); ++i) {
      estimators[i].cfg.validate();
      for (std::size_t j = i + 1; j < estimators.size(); ++j)
        if (estimators[i].name == estimators[j].name)
          throw std::invalid_argument(
              "ExperimentConfig: duplicate estimator name " +
              estimators[i].name);
    }
  }
};

// Small-jump cutoff default: min(h^{5/12}/10, h^{1/Y}), i.e. a tenth of the
// typical truncation threshold, but never above the scale where the Gaussian
// substitution error matters.
inline double resolve_tau(const ExperimentConfig& cfg) {
  if (cfg.tau > 0.0) return cfg.tau;
  const double h = cfg.grid.h();
  double tau = std::pow(h, 5.0 / 12.0) / 10.0;
  if (cfg.model.jumps)
    tau = std::min(tau, std::pow(h, 1.0 / cfg.model.jumps->y_index));
  return tau;
}

inline EstimateResult apply_estimator(const NamedEstimator& est,
                                      std::span<const double> inc, double h) {
  switch (est.kind) {
    case EstimatorKind::kTrqv: {
      EstimateResult r;
      r.eps_used = threshold(resolve_c0(inc, h, est.cfg), h, est.cfg.omega);
      r.value = trqv(inc, r.eps_used);
      return r;
    }
    case EstimatorKind::kOneStep:
      return estimate_pb(inc, est.cfg, h);
    case EstimatorKind::kTwoStep:
      return estimate_nb(inc, est.cfg, h);
  }
  throw std::logic_error("apply_estimator: bad kind");
}

struct EstimatorSummary {
  std::string name;
  double sample_mean = 0.0;
  double sample_sd = 0.0;
  double rel_err_mean = 0.0;
  double rel_err_sd = 0.0;
  double mse = 0.0;
  double mad = 0.0;
};

struct McSummary {
  std::vector<EstimatorSummary> rows;
  std::size_t paths = 0;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
  // path-level detail, ordered by path index
  std::vector<double> truths;
  std::vector<std::vector<double>> estimates;          // [estimator][path]
  std::vector<std::vector<EstimateResult>> results;    // [estimator][path]
};

namespace detail {

template <class PerPath>
void parallel_paths(std::size_t paths, std::size_t workers,
                    const PerPath& body) {
  const std::size_t nw = std::max<std::size_t>(workers, 1);
  if (nw == 1) {
    for (std::size_t p = 0; p < paths; ++p) body(p);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::string> errors(nw);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < nw; ++w) {
    pool.emplace_back([&, w] {
      for (;;) {
        const std::size_t p = next.fetch_add(1);
        if (p >= paths || failed.load()) return;
        try {
          body(p);
        } catch (const std::exception& e) {
          errors[w] = "path " + std::to_string(p) + ": " + e.what();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load())
    for (const auto& e : errors)
      if (!e.empty()) throw std::runtime_error(e);
}

}  // namespace detail

inline McSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const double h = cfg.grid.h();
  const double tau = resolve_tau(cfg);
  const std::size_t ne = cfg.estimators.size();

  McSummary out;
  out.paths = cfg.paths;
  out.seed = cfg.master_seed;
  out.truths.resize(cfg.paths);
  out.estimates.assign(ne, std::vector<double>(cfg.paths));
  out.results.assign(ne, std::vector<EstimateResult>(cfg.paths));

  detail::parallel_paths(cfg.paths, cfg.workers, [&](std::size_t p) {
    RandomStream rng(cfg.master_seed, cfg.path_offset + p);
    const PathSample path =
        simulate_path(cfg.model, cfg.grid, cfg.blocks, cfg.substeps, tau, rng);
    out.truths[p] = compensated_total(path.block_iv);
    for (std::size_t e = 0; e < ne; ++e) {
      const EstimateResult r =
          apply_estimator(cfg.estimators[e], path.increments, h);
      out.results[e][p] = r;
      out.estimates[e][p] = r.value;
    }
  });

  for (std::size_t e = 0; e < ne; ++e) {
    const auto& est = out.estimates[e];
    std::vector<double> rel(cfg.paths), err2(cfg.paths), dev(cfg.paths);
    for (std::size_t p = 0; p < cfg.paths; ++p) {
      const double d = est[p] - out.truths[p];
      rel[p] = d / out.truths[p];
      err2[p] = d * d;
      dev[p] = std::abs(d);
    }
    EstimatorSummary s;
    s.name = cfg.estimators[e].name;
    s.sample_mean = sample_mean(est);
    s.sample_sd = sample_sd(est);
    s.rel_err_mean = sample_mean(rel);
    s.rel_err_sd = sample_sd(rel);
    s.mse = sample_mean(err2);
    s.mad = sample_median(dev);
    out.rows.push_back(std::move(s));
  }
  out.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return out;
}

// Pooled daily-block experiment: per path, the horizon is split into the
// configured blocks and the pooled two-step estimator is applied.
struct DailySummary {
  std::size_t paths = 0;
  std::size_t days = 0;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
  std::vector<std::vector<double>> truths;     // [path][day]
  std::vector<std::vector<double>> estimates;  // [path][day]
  std::vector<std::vector<unsigned>> flags;    // [path][day]
  std::vector<double> day_mad;                 // per-day MAD across paths
  std::vector<double> day_mse;
  double mean_mad = 0.0;
  double mean_mse = 0.0;
};

inline DailySummary run_daily_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.estimators.size() != 1 ||
      cfg.estimators[0].kind != EstimatorKind::kTwoStep)
    throw std::invalid_argument(
        "run_daily_experiment: exactly one two-step estimator expected");
  if (cfg.grid.n_steps % cfg.blocks != 0)
    throw std::invalid_argument(
        "run_daily_experiment: blocks must divide n_steps");
  const auto t_start = std::chrono::steady_clock::now();
  const double h = cfg.grid.h();
  const double tau = resolve_tau(cfg);
  const std::size_t days = cfg.blocks;
  const std::size_t steps_per_day = cfg.grid.n_steps / days;
  const EstimatorConfig& ecfg = cfg.estimators[0].cfg;

  DailySummary out;
  out.paths = cfg.paths;
  out.days = days;
  out.seed = cfg.master_seed;
  out.truths.assign(cfg.paths, {});
  out.estimates.assign(cfg.paths, {});
  out.flags.assign(cfg.paths, {});

  detail::parallel_paths(cfg.paths, cfg.workers, [&](std::size_t p) {
    RandomStream rng(cfg.master_seed, cfg.path_offset + p);
    const PathSample path =
        simulate_path(cfg.model, cfg.grid, cfg.blocks, cfg.substeps, tau, rng);
    std::vector<std::vector<double>> blocks(days);
    for (std::size_t d = 0; d < days; ++d)
      blocks[d].assign(
          path.increments.begin() + static_cast<std::ptrdiff_t>(d * steps_per_day),
          path.increments.begin() +
              static_cast<std::ptrdiff_t>((d + 1) * steps_per_day));
    const std::vector<EstimateResult> res =
        estimate_daily_pooled(blocks, ecfg, h);
    out.truths[p] = path.block_iv;
    out.estimates[p].resize(days);
    out.flags[p].resize(days);
    for (std::size_t d = 0; d < days; ++d) {
      out.estimates[p][d] = res[d].value;
      out.flags[p][d] = res[d].flags;
    }
  });

  out.day_mad.resize(days);
  out.day_mse.resize(days);
  for (std::size_t d = 0; d < days; ++d) {
    std::vector<double> dev(cfg.paths), err2(cfg.paths);
    for (std::size_t p = 0; p < cfg.paths; ++p) {
      const double diff = out.estimates[p][d] - out.truths[p][d];
      dev[p] = std::abs(diff);
      err2[p] = diff * diff;
    }
    out.day_mad[d] = sample_median(dev);
    out.day_mse[d] = sample_mean(err2);
  }
  out.mean_mad = sample_mean(out.day_mad);
  out.mean_mse = sample_mean(out.day_mse);
  out.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return out;
}

// CSV emission.  %.17g round-trips doubles; '.' decimal, no locale.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string summary_csv(const McSummary& s) {
  std::string out =
      "estimator,sample_mean,sample_sd,rel_err_mean,rel_err_sd,mse,mad\n";
  for (const auto& r : s.rows) {
    out += r.name;
    for (double v : {r.sample_mean, r.sample_sd, r.rel_err_mean, r.rel_err_sd,
                     r.mse, r.mad})
      out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

inline std::string paths_csv(const McSummary& s,
                             std::span<const NamedEstimator> ests) {
  std::string out = "path,estimator,value,truth\n";
  for (std::size_t p = 0; p < s.paths; ++p)
    for (std::size_t e = 0; e < ests.size(); ++e)
      out += std::to_string(p) + "," + ests[e].name + "," +
             format_double(s.estimates[e][p]) + "," +
             format_double(s.truths[p]) + "\n";
  return out;
}

}  // namespace tsvol
