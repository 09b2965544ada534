// Command-line front end: config-driven Monte Carlo tables, CLT diagnostics,
// expansion order checks, pooled daily estimation, and raw path dumps.
// Every command writes a JSON manifest echoing the fully resolved
// configuration, so a run can be replayed from the manifest alone.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsvol/config.hpp"
#include "tsvol/mc.hpp"
#include "tsvol/oracle.hpp"
#include "tsvol/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;
constexpr int kExitBand = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  long long paths = 0;  // 0 = no override
  long long threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "config file (or manifest JSON)");
  cmd->add_option("--out", a.out_dir, "output directory (must exist)");
  cmd->add_option("--seed", a.seed, "master seed override")
      ->each([&](const std::string&) { a.seed_set = true; });
  cmd->add_option("--paths", a.paths, "path count override");
  cmd->add_option("--threads", a.threads, "worker thread count");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tsvol::ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Accepts either the sectioned key/value format or a previously written
// manifest JSON (replay path).
tsvol::Config load_config(const CommonArgs& a) {
  tsvol::Config cfg;
  if (!a.config_path.empty()) {
    const std::string text = read_file(a.config_path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
      const json manifest = json::parse(text);
      if (!manifest.contains("resolved_config"))
        throw tsvol::ConfigError("manifest has no resolved_config block");
      for (const auto& [k, v] : manifest["resolved_config"].items())
        cfg.set(k, v.get<std::string>());
    } else {
      cfg = tsvol::Config::parse(text);
    }
  }
  if (a.seed_set) cfg.set("run.seed", std::to_string(a.seed));
  if (a.paths > 0) cfg.set("run.paths", std::to_string(a.paths));
  if (a.threads > 0) cfg.set("run.threads", std::to_string(a.threads));
  return cfg;
}

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string git_describe() {
  std::string out = "unknown";
  if (FILE* p = popen("git describe --always --dirty 2>/dev/null", "r")) {
    char buf[128];
    if (std::fgets(buf, sizeof buf, p)) {
      out = buf;
      while (!out.empty() && (out.back() == '\n' || out.back() == '\r'))
        out.pop_back();
    }
    pclose(p);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const CommonArgs& a, const tsvol::Config& cfg,
                    std::uint64_t seed, const std::string& started) {
  json m;
  m["command"] = command;
  m["config_path"] = a.config_path;
  m["git_describe"] = git_describe();
  m["seed"] = seed;
  m["started"] = started;
  m["finished"] = timestamp_now();
  json rc = json::object();
  for (const auto& [k, v] : cfg.resolved()) rc[k] = v;
  for (const auto& [k, v] : cfg.raw())
    if (!rc.contains(k)) rc[k] = v;
  m["resolved_config"] = rc;
  write_text(out_dir / (command + "_manifest.json"), m.dump(2) + "\n");
}

fs::path require_out_dir(const CommonArgs& a) {
  const fs::path dir(a.out_dir);
  if (!fs::is_directory(dir))
    throw tsvol::ConfigError("output directory does not exist: " +
                             dir.string());
  return dir;
}

// ---- config -> domain objects -------------------------------------------

tsvol::ModelSpec model_from(const tsvol::Config& c) {
  tsvol::ModelSpec m;
  const std::string kind = c.get_string("model.diffusion", "constant");
  if (kind == "constant") {
    m.diffusion.kind = tsvol::DiffusionSpec::Kind::kConstant;
    m.diffusion.sigma = c.get_double("model.sigma", 0.2);
  } else if (kind == "heston") {
    m.diffusion.kind = tsvol::DiffusionSpec::Kind::kHeston;
    auto& hp = m.diffusion.heston;
    hp.kappa = c.get_double("model.kappa", 5.0);
    hp.xi = c.get_double("model.xi", 0.5);
    hp.theta = c.get_double("model.theta", 0.16);
    hp.rho = c.get_double("model.rho", -0.5);
    hp.v0 = c.get_double("model.v0", hp.theta);
  } else {
    throw tsvol::ConfigError("model.diffusion must be constant or heston");
  }
  if (c.get_bool("model.jumps", true)) {
    tsvol::LevyJumpSpec j;
    j.c_plus = c.get_double("jumps.c_plus", 0.028);
    j.c_minus = c.get_double("jumps.c_minus", 0.028);
    j.g_temper = c.get_double("jumps.g_temper", 2.318);
    j.m_temper = c.get_double("jumps.m_temper", 4.025);
    j.y_index = c.get_double("jumps.y_index", 1.25);
    m.jumps = j;
  }
  m.chi = c.get_double("model.chi", 1.0);
  m.drift_b = c.get_double("model.drift", 0.0);
  return m;
}

tsvol::EstimatorConfig estimator_cfg_from(const tsvol::Config& c,
                                          const std::string& prefix) {
  tsvol::EstimatorConfig e;
  e.omega = c.get_double(prefix + ".omega", 5.0 / 12.0);
  const std::string mode = c.get_string(prefix + ".c0_mode", "bipower");
  if (mode == "bipower") {
    e.c0_from_bipower = true;
  } else if (mode == "fixed") {
    e.c0_from_bipower = false;
    e.c0_fixed = c.get_double(prefix + ".c0", 1.0);
  } else {
    throw tsvol::ConfigError(prefix + ".c0_mode must be bipower or fixed");
  }
  e.zeta1 = c.get_double(prefix + ".zeta1", 1.2);
  e.zeta2 = c.get_double(prefix + ".zeta2", 1.2);
  e.p1 = c.get_double(prefix + ".p1", 0.65);
  e.p2 = c.get_double(prefix + ".p2", 0.75);
  e.retry_shrink = c.get_double(prefix + ".retry_shrink", 2.0 / 3.0);
  e.max_retries = static_cast<int>(c.get_int(prefix + ".max_retries", 3));
  e.denom_guard = c.get_double(prefix + ".denom_guard", 1e-12);
  return e;
}

tsvol::EstimatorKind kind_from(const std::string& s) {
  if (s == "trqv") return tsvol::EstimatorKind::kTrqv;
  if (s == "one_step") return tsvol::EstimatorKind::kOneStep;
  if (s == "two_step") return tsvol::EstimatorKind::kTwoStep;
  throw tsvol::ConfigError("estimator kind must be trqv, one_step, two_step");
}

std::vector<tsvol::NamedEstimator> estimators_from(const tsvol::Config& c) {
  std::vector<tsvol::NamedEstimator> out;
  for (const std::string& name : c.subsections("estimator")) {
    tsvol::NamedEstimator e;
    e.name = name;
    e.kind = kind_from(c.get_string("estimator." + name + ".kind", name));
    e.cfg = estimator_cfg_from(c, "estimator." + name);
    out.push_back(std::move(e));
  }
  if (out.empty()) {
    for (const char* name : {"trqv", "one_step", "two_step"}) {
      tsvol::NamedEstimator e;
      e.name = name;
      e.kind = kind_from(name);
      e.cfg = estimator_cfg_from(c, std::string("estimator.") + name);
      out.push_back(std::move(e));
    }
  }
  // name order, so a manifest replay reproduces the original row order
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

tsvol::ExperimentConfig experiment_from(const tsvol::Config& c) {
  tsvol::ExperimentConfig x;
  x.model = model_from(c);
  x.grid.horizon_t = c.get_double("grid.horizon", 1.0);
  x.grid.n_steps = static_cast<std::size_t>(c.get_int("grid.n_steps", 98280));
  x.blocks = static_cast<std::size_t>(c.get_int("run.blocks", 1));
  x.substeps = static_cast<std::size_t>(c.get_int("run.substeps", 10));
  x.tau = c.get_double("run.tau", 0.0);
  x.paths = static_cast<std::size_t>(c.get_int("run.paths", 200));
  x.master_seed = static_cast<std::uint64_t>(c.get_int("run.seed", 1));
  x.workers = static_cast<std::size_t>(c.get_int("run.threads", 1));
  x.estimators = estimators_from(c);
  return x;
}

// ---- commands -------------------------------------------------------------

int cmd_mc_table(const CommonArgs& a) {
  const std::string started = timestamp_now();
  const tsvol::Config cfg = load_config(a);
  const fs::path out_dir = require_out_dir(a);
  tsvol::ExperimentConfig base = experiment_from(cfg);

  double base_y = base.model.jumps ? base.model.jumps->y_index : 0.0;
  std::vector<double> ys = cfg.get_double_array("cells.y", {base_y});
  std::vector<double> sigmas =
      cfg.get_double_array("cells.sigma", {base.model.diffusion.sigma});

  std::string csv =
      "y,sigma,estimator,sample_mean,sample_sd,rel_err_mean,rel_err_sd,mse,"
      "mad\n";
  json cells = json::array();
  bool partial = false;
  for (double y : ys) {
    for (double s : sigmas) {
      tsvol::ExperimentConfig x = base;
      if (x.model.jumps) x.model.jumps->y_index = y;
      x.model.diffusion.sigma = s;
      try {
        const tsvol::McSummary sum = tsvol::run_experiment(x);
        for (const auto& r : sum.rows) {
          csv += tsvol::format_double(y) + "," + tsvol::format_double(s) +
                 "," + r.name;
          for (double v : {r.sample_mean, r.sample_sd, r.rel_err_mean,
                           r.rel_err_sd, r.mse, r.mad})
            csv += "," + tsvol::format_double(v);
          csv += "\n";
          json row;
          row["y"] = y;
          row["sigma"] = s;
          row["estimator"] = r.name;
          row["sample_mean"] = r.sample_mean;
          row["sample_sd"] = r.sample_sd;
          row["rel_err_mean"] = r.rel_err_mean;
          row["rel_err_sd"] = r.rel_err_sd;
          row["mse"] = r.mse;
          row["mad"] = r.mad;
          cells.push_back(row);
        }
      } catch (const std::exception& e) {
        csv += tsvol::format_double(y) + "," + tsvol::format_double(s) +
               ",ERROR,,,,,,\n";
        json row;
        row["y"] = y;
        row["sigma"] = s;
        row["error"] = e.what();
        cells.push_back(row);
        partial = true;
        std::cerr << "cell y=" << y << " sigma=" << s << " failed: "
                  << e.what() << "\n";
      }
    }
  }
  write_text(out_dir / "mc_table.csv", csv);
  write_text(out_dir / "mc_table.json", json{{"rows", cells}}.dump(2) + "\n");
  write_manifest(out_dir, "mc-table", a, cfg, base.master_seed, started);
  return partial ? kExitPartial : kExitOk;
}

int cmd_clt_hist(const CommonArgs& a) {
  const std::string started = timestamp_now();
  const tsvol::Config cfg = load_config(a);
  const fs::path out_dir = require_out_dir(a);
  tsvol::ExperimentConfig x = experiment_from(cfg);

  const std::string which = cfg.get_string("clt.estimator", "two_step");
  std::vector<tsvol::NamedEstimator> sel;
  for (const auto& e : x.estimators)
    if (e.name == which) sel.push_back(e);
  if (sel.empty())
    throw tsvol::ConfigError("clt.estimator names no configured estimator: " +
                             which);
  x.estimators = sel;

  const tsvol::McSummary sum = tsvol::run_experiment(x);
  const double truth = tsvol::sample_mean(sum.truths);
  const std::vector<double> z =
      tsvol::normalized_errors(sum.estimates[0], truth, x.grid.n_steps);
  const double ks = tsvol::ks_statistic(z);

  std::string csv = "path,estimate,truth,normalized_error\n";
  for (std::size_t p = 0; p < z.size(); ++p)
    csv += std::to_string(p) + "," + tsvol::format_double(sum.estimates[0][p]) +
           "," + tsvol::format_double(sum.truths[p]) + "," +
           tsvol::format_double(z[p]) + "\n";
  write_text(out_dir / "clt_errors.csv", csv);

  const long long bins = cfg.get_int("clt.bins", 40);
  const double lo = -4.0, hi = 4.0;
  std::vector<long long> counts(static_cast<std::size_t>(bins), 0);
  for (double v : z) {
    if (v < lo || v >= hi) continue;
    ++counts[static_cast<std::size_t>((v - lo) / (hi - lo) *
                                      static_cast<double>(bins))];
  }
  std::string hist = "bin_left,bin_right,count\n";
  for (long long b = 0; b < bins; ++b) {
    const double l = lo + (hi - lo) * static_cast<double>(b) /
                              static_cast<double>(bins);
    const double r = lo + (hi - lo) * static_cast<double>(b + 1) /
                              static_cast<double>(bins);
    hist += tsvol::format_double(l) + "," + tsvol::format_double(r) + "," +
            std::to_string(counts[static_cast<std::size_t>(b)]) + "\n";
  }
  write_text(out_dir / "clt_hist.csv", hist);

  json summary;
  summary["estimator"] = which;
  summary["paths"] = x.paths;
  summary["ks_statistic"] = ks;
  summary["truth"] = truth;
  write_text(out_dir / "clt_summary.json", summary.dump(2) + "\n");
  write_manifest(out_dir, "clt-hist", a, cfg, x.master_seed, started);
  std::cout << "ks_statistic " << tsvol::format_double(ks) << "\n";
  return kExitOk;
}

int run_oracle_case(const tsvol::Config& cfg, const std::string& prefix,
                    const std::string& name, double distort,
                    const fs::path& out_dir, json& cases) {
  tsvol::CharExponentSpec spec;
  const double y = cfg.get_double(prefix + ".y", 1.5);
  const double c_plus = cfg.get_double(prefix + ".c_plus", 0.5);
  const double c_minus = cfg.get_double(prefix + ".c_minus", 0.5);
  spec.y = y;
  spec.sigma = cfg.get_double(prefix + ".sigma", 0.3);
  const double cbar = c_plus + c_minus;
  if (cbar > 0.0) {
    spec.c1 = cbar * std::cos(0.5 * std::numbers::pi * y) * std::tgamma(-y);
    spec.c2 = (c_minus - c_plus) * std::sin(0.5 * std::numbers::pi * y) *
              std::tgamma(-y);
  }
  const double omega = cfg.get_double(prefix + ".omega", 5.0 / 12.0);
  const int k = static_cast<int>(cfg.get_int(prefix + ".k", 1));
  const long long p_hi = cfg.get_int(prefix + ".h_pow_min", 14);
  const long long p_lo = cfg.get_int(prefix + ".h_pow_max", 22);
  const double band = cfg.get_double(prefix + ".order_band", 0.25);
  if (p_lo <= p_hi)
    throw tsvol::ConfigError(prefix + ": need h_pow_max > h_pow_min");

  std::vector<double> hs;
  for (long long p = p_hi; p <= p_lo; ++p)
    hs.push_back(std::ldexp(1.0, static_cast<int>(-p)));

  const tsvol::ExpansionReport rep =
      tsvol::residual_order_check(spec, k, hs, omega, distort);

  std::string csv = "h,eps,numeric,predicted,residual\n";
  for (std::size_t i = 0; i < rep.h_values.size(); ++i)
    csv += tsvol::format_double(rep.h_values[i]) + "," +
           tsvol::format_double(std::pow(rep.h_values[i], omega)) + "," +
           tsvol::format_double(rep.numeric[i]) + "," +
           tsvol::format_double(rep.predicted[i]) + "," +
           tsvol::format_double(rep.residual[i]) + "\n";
  write_text(out_dir / ("oracle_" + name + ".csv"), csv);

  const bool in_band =
      rep.exponential_regime ||
      std::abs(rep.fitted_order - rep.theoretical_order) <= band;
  json jc;
  jc["case"] = name;
  jc["k"] = k;
  jc["y"] = y;
  jc["sigma"] = spec.sigma;
  jc["omega"] = omega;
  jc["eps_rule"] = rep.eps_rule;
  jc["fitted_order"] = rep.exponential_regime ? json() : json(rep.fitted_order);
  jc["theoretical_order"] =
      rep.exponential_regime ? json() : json(rep.theoretical_order);
  jc["exponential_regime"] = rep.exponential_regime;
  jc["grid_rel_change"] = rep.grid_rel_change;
  jc["order_band"] = band;
  jc["pass"] = in_band;
  cases.push_back(jc);
  std::cout << "oracle case " << name << ": "
            << (rep.exponential_regime
                    ? std::string("exponential regime")
                    : "fitted order " + tsvol::format_double(rep.fitted_order) +
                          " (target " +
                          tsvol::format_double(rep.theoretical_order) + ")")
            << (in_band ? " PASS" : " FAIL") << "\n";
  return in_band ? kExitOk : kExitBand;
}

int cmd_oracle_check(const CommonArgs& a, double distort) {
  const std::string started = timestamp_now();
  const tsvol::Config cfg = load_config(a);
  const fs::path out_dir = require_out_dir(a);

  std::vector<std::string> names = cfg.subsections("oracle");
  json cases = json::array();
  int status = kExitOk;
  if (names.empty()) {
    status = run_oracle_case(cfg, "oracle", "default", distort, out_dir, cases);
  } else {
    for (const std::string& n : names) {
      const int s =
          run_oracle_case(cfg, "oracle." + n, n, distort, out_dir, cases);
      if (s != kExitOk) status = s;
    }
  }
  write_text(out_dir / "oracle_report.json",
             json{{"cases", cases}}.dump(2) + "\n");
  write_manifest(out_dir, "oracle-check", a, cfg, 0, started);
  return status;
}

int cmd_daily_iv(const CommonArgs& a) {
  const std::string started = timestamp_now();
  const tsvol::Config cfg = load_config(a);
  const fs::path out_dir = require_out_dir(a);
  tsvol::ExperimentConfig x = experiment_from(cfg);
  x.blocks = static_cast<std::size_t>(
      cfg.get_int("run.blocks", static_cast<long long>(x.blocks)));

  tsvol::NamedEstimator two;
  two.name = "two_step";
  two.kind = tsvol::EstimatorKind::kTwoStep;
  two.cfg = estimator_cfg_from(cfg, "estimator.two_step");
  x.estimators = {two};

  const tsvol::DailySummary sum = tsvol::run_daily_experiment(x);

  std::vector<double> day_list =
      cfg.get_double_array("daily.days", std::vector<double>{});
  std::vector<std::size_t> days;
  if (day_list.empty()) {
    for (std::size_t d = 0; d < sum.days; ++d) days.push_back(d);
  } else {
    for (double d : day_list) {
      const auto idx = static_cast<std::size_t>(d) - 1;  // 1-based in config
      if (idx >= sum.days)
        throw tsvol::ConfigError("daily.days entry out of range");
      days.push_back(idx);
    }
  }

  std::string csv = "path,day,truth,estimate,flags\n";
  for (std::size_t p = 0; p < sum.paths; ++p)
    for (std::size_t d : days)
      csv += std::to_string(p) + "," + std::to_string(d + 1) + "," +
             tsvol::format_double(sum.truths[p][d]) + "," +
             tsvol::format_double(sum.estimates[p][d]) + "," +
             std::to_string(sum.flags[p][d]) + "\n";
  write_text(out_dir / "daily_iv.csv", csv);

  std::string dcsv = "day,mad,mse\n";
  for (std::size_t d : days)
    dcsv += std::to_string(d + 1) + "," +
            tsvol::format_double(sum.day_mad[d]) + "," +
            tsvol::format_double(sum.day_mse[d]) + "\n";
  write_text(out_dir / "daily_summary.csv", dcsv);

  double sel_mad = 0.0, sel_mse = 0.0;
  for (std::size_t d : days) {
    sel_mad += sum.day_mad[d];
    sel_mse += sum.day_mse[d];
  }
  sel_mad /= static_cast<double>(days.size());
  sel_mse /= static_cast<double>(days.size());
  json summary;
  summary["paths"] = sum.paths;
  summary["days"] = days.size();
  summary["mean_mad"] = sel_mad;
  summary["mean_mse"] = sel_mse;
  write_text(out_dir / "daily_iv.json", summary.dump(2) + "\n");
  write_manifest(out_dir, "daily-iv", a, cfg, x.master_seed, started);
  std::cout << "mean_mad " << tsvol::format_double(sel_mad) << "\n";
  return kExitOk;
}

int cmd_simulate(const CommonArgs& a) {
  const std::string started = timestamp_now();
  const tsvol::Config cfg = load_config(a);
  const fs::path out_dir = require_out_dir(a);
  tsvol::ExperimentConfig x = experiment_from(cfg);
  const double tau = tsvol::resolve_tau(x);

  std::string inc_csv = "path,step,increment\n";
  std::string blk_csv = "path,block,true_iv\n";
  for (std::size_t p = 0; p < x.paths; ++p) {
    tsvol::RandomStream rng(x.master_seed, p);
    const tsvol::PathSample path =
        tsvol::simulate_path(x.model, x.grid, x.blocks, x.substeps, tau, rng);
    for (std::size_t i = 0; i < path.increments.size(); ++i)
      inc_csv += std::to_string(p) + "," + std::to_string(i) + "," +
                 tsvol::format_double(path.increments[i]) + "\n";
    for (std::size_t b = 0; b < path.blocks; ++b)
      blk_csv += std::to_string(p) + "," + std::to_string(b) + "," +
                 tsvol::format_double(path.block_iv[b]) + "\n";
  }
  write_text(out_dir / "paths.csv", inc_csv);
  write_text(out_dir / "blocks.csv", blk_csv);
  write_manifest(out_dir, "simulate", a, cfg, x.master_seed, started);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"integrated volatility estimation toolkit"};
  app.require_subcommand(1);

  CommonArgs mc_args, clt_args, oracle_args, daily_args, sim_args;
  double distort = 1.0;

  CLI::App* mc = app.add_subcommand("mc-table", "Monte Carlo summary tables");
  add_common(mc, mc_args);
  CLI::App* clt =
      app.add_subcommand("clt-hist", "normalized error distribution");
  add_common(clt, clt_args);
  CLI::App* oracle =
      app.add_subcommand("oracle-check", "expansion residual order check");
  add_common(oracle, oracle_args);
  oracle
      ->add_option("--distort-predicted", distort,
                   "scale factor on predicted values (negative control)")
      ->group("");  // hidden
  CLI::App* daily =
      app.add_subcommand("daily-iv", "pooled daily integrated volatility");
  add_common(daily, daily_args);
  CLI::App* sim = app.add_subcommand("simulate", "raw path dump");
  add_common(sim, sim_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (mc->parsed()) return cmd_mc_table(mc_args);
    if (clt->parsed()) return cmd_clt_hist(clt_args);
    if (oracle->parsed()) return cmd_oracle_check(oracle_args, distort);
    if (daily->parsed()) return cmd_daily_iv(daily_args);
    if (sim->parsed()) return cmd_simulate(sim_args);
  } catch (const tsvol::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitConfig;
}
