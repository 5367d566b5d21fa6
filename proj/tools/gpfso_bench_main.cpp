// Benchmark CLI: configure and run replicated optimization experiments,
// fit convergence-rate slopes on existing trace CSVs, and sweep tunables.
//
// Exit codes: 0 success, 1 configuration error, 2 every replication failed.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gpfso/bench.hpp"

namespace {

// Remaining tokens of the form --key=value override config-file entries.
void apply_overrides(const std::vector<std::string>& extras, gpfso::KeyValues& kv) {
  for (const std::string& tok : extras) {
    if (tok.rfind("--", 0) != 0)
      throw gpfso::ConfigError("unexpected argument '" + tok + "' (overrides are --key=value)");
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw gpfso::ConfigError("override '" + tok + "' is missing '=value'");
    kv.set(tok.substr(2, eq - 2), tok.substr(eq + 1));
  }
}

int do_run(const std::string& config_path, const std::string& out,
           const std::vector<std::string>& extras, bool sweep) {
  gpfso::KeyValues kv = config_path.empty() ? gpfso::KeyValues{}
                                            : gpfso::KeyValues::parse_file(config_path);
  apply_overrides(extras, kv);
  if (!out.empty()) kv.set("out", out);
  const gpfso::ExperimentConfig cfg = gpfso::ExperimentConfig::from_keyvalues(kv);

  if (sweep) {
    const int failures = gpfso::run_sweep(cfg, kv);
    return failures > 0 ? 2 : 0;
  }
  const gpfso::ExperimentSummary s = gpfso::run_experiment(cfg);
  std::printf("replications_ok = %d\n", s.n_ok);
  std::printf("replications_failed = %d\n", s.n_failed);
  if (s.slope_bar_l2) std::printf("slope_bar_l2_beta2 = %.6g\n", s.slope_bar_l2->beta2);
  if (s.slope_tilde_l2) std::printf("slope_tilde_l2_beta2 = %.6g\n", s.slope_tilde_l2->beta2);
  std::printf("success_rate_bar = %.6g\n", s.success_bar);
  std::printf("success_rate_tilde = %.6g\n", s.success_tilde);
  std::printf("wall_clock_sec = %.3f\n", s.wall_clock_sec);
  return s.n_ok == 0 ? 2 : 0;
}

// Pulls the 't' column and one named error column out of any of the
// harness's CSVs (per-run trace or aggregate).
void read_csv_columns(const std::string& path, const std::string& column, std::vector<double>& ts,
                      std::vector<double>& err) {
  std::ifstream in(path);
  if (!in) throw gpfso::GpfsoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw gpfso::GpfsoError("empty CSV " + path);
  std::vector<std::string> names;
  {
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) names.push_back(cell);
  }
  int t_idx = -1, e_idx = -1;
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == "t") t_idx = static_cast<int>(i);
    if (names[i] == column) e_idx = static_cast<int>(i);
  }
  if (t_idx < 0) throw gpfso::ConfigError("CSV has no 't' column");
  if (e_idx < 0) throw gpfso::ConfigError("CSV has no '" + column + "' column");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int idx = 0;
    double tv = 0.0, ev = 0.0;
    while (std::getline(ss, cell, ',')) {
      if (idx == t_idx) tv = std::stod(cell);
      if (idx == e_idx) ev = std::stod(cell);
      ++idx;
    }
    ts.push_back(tv);
    err.push_back(ev);
  }
}

int do_slope(const std::string& csv, const std::string& column, double t_lo, double t_hi) {
  std::vector<double> ts, err;
  read_csv_columns(csv, column, ts, err);
  if (t_lo <= 0.0) t_lo = ts.empty() ? 1.0 : ts.back() / 100.0;
  if (t_hi <= 0.0) t_hi = ts.empty() ? 1.0 : ts.back();
  const gpfso::SlopeFit fit = gpfso::fit_slope(ts, err, t_lo, t_hi);
  std::printf("beta1 = %.10g\n", fit.beta1);
  std::printf("beta2 = %.10g\n", fit.beta2);
  std::printf("rse = %.10g\n", fit.rse);
  std::printf("points = %lld\n", static_cast<long long>(fit.n_points));
  std::printf("skipped = %lld\n", static_cast<long long>(fit.n_skipped));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"particle-filter stochastic optimization benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* run_cmd = app.add_subcommand("run", "run one experiment from a config file");
  run_cmd->add_option("--config", config_path, "key = value config file");
  run_cmd->add_option("--out", out_dir, "output directory (overrides 'out')");
  run_cmd->allow_extras();

  auto* sweep_cmd = app.add_subcommand("sweep", "cartesian sweep over sweep.* lists");
  sweep_cmd->add_option("--config", config_path, "key = value config file");
  sweep_cmd->add_option("--out", out_dir, "output directory (overrides 'out')");
  sweep_cmd->allow_extras();

  std::string csv, column = "err_bar_l2";
  double t_lo = 0.0, t_hi = 0.0;
  auto* slope_cmd = app.add_subcommand("slope", "fit a rate slope on an existing trace CSV");
  slope_cmd->add_option("--csv", csv, "trace CSV path")->required();
  slope_cmd->add_option("--column", column, "error column (default err_bar_l2)");
  slope_cmd->add_option("--t-lo", t_lo, "window lower bound (default T/100)");
  slope_cmd->add_option("--t-hi", t_hi, "window upper bound (default T)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return do_run(config_path, out_dir, run_cmd->remaining(), false);
    if (sweep_cmd->parsed()) return do_run(config_path, out_dir, sweep_cmd->remaining(), true);
    return do_slope(csv, column, t_lo, t_hi);
  } catch (const gpfso::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
