#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpfso/core.hpp"
#include "gpfso/optimizer.hpp"

namespace gpfso {

// Flat key = value configuration text. Section headers "[name]" prefix the
// keys that follow with "name."; '#' starts a comment.
struct KeyValues {
  std::map<std::string, std::string> values;

  static KeyValues parse_file(const std::filesystem::path& path);
  static KeyValues parse_text(const std::string& text);

  bool has(const std::string& key) const { return values.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values[key] = value; }

  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  uint64_t get_uint(const std::string& key, uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
};

enum class ErrorNorm { Euclidean, Max };

struct ExperimentConfig {
  std::string model = "gaussian_mean";
  std::string algorithm = "gpfso";  // gpfso | adagrad
  int model_dim = 5;                // cqr / multimodal dimension
  double tau = 0.5;                 // cqr quantile order
  int sagm_k = 2;
  int sagm_dx = 4;

  GpfsoConfig gpfso;
  int64_t horizon = 1000;  // T
  int replications = 1;
  uint64_t base_seed = 1;

  int64_t record_every = 0;
  double record_factor = 1.02;

  std::string out_dir;
  ErrorNorm norm = ErrorNorm::Euclidean;
  double slope_t_lo = 0.0;  // 0 = T/100
  double slope_t_hi = 0.0;  // 0 = T
  double success_threshold = 0.2;

  ExecMode exec = ExecMode::OpenMP;
  int threads = 0;

  std::optional<double> prior_offset;  // model-dependent defaults
  std::optional<double> prior_sd;

  double adagrad_step = 0.1;
  double adagrad_eps = 1e-8;

  std::string data_file;  // when set, bootstrap-resample this dataset

  static ExperimentConfig from_keyvalues(const KeyValues& kv);
  void validate() const;
};

// OLS fit of log(error) = beta1 - beta2 log(t) over t in [t_lo, t_hi]. Rows
// with non-positive or non-finite error are skipped and counted.
struct SlopeFit {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double rse = 0.0;  // residual standard error
  int64_t n_points = 0;
  int64_t n_skipped = 0;
};

SlopeFit fit_slope(std::span<const double> t, std::span<const double> err, double t_lo,
                   double t_hi);

// Fraction of final errors strictly below the threshold.
double success_rate(std::span<const double> final_errors, double threshold);

struct ExperimentSummary {
  int n_ok = 0;
  int n_failed = 0;
  std::vector<std::string> rep_status;  // "ok" or the error message

  std::vector<double> t_grid;
  std::vector<double> mean_err_tilde_l2, mean_err_bar_l2;
  std::vector<double> mean_err_tilde_max, mean_err_bar_max;

  std::optional<SlopeFit> slope_tilde_l2, slope_bar_l2, slope_tilde_max, slope_bar_max;
  double slope_window_lo = 0.0, slope_window_hi = 0.0;

  double success_bar = kNaN;
  double success_tilde = kNaN;
  std::vector<double> final_err_bar, final_err_tilde;  // chosen norm, ok reps

  double wall_clock_sec = 0.0;
};

// Runs R seeded replications (seed = base_seed + index), writes per-run
// trace CSVs plus an aggregate CSV and a key-value summary into out_dir
// (when set), and returns the summary. Individual replication failures are
// recorded, not fatal.
ExperimentSummary run_experiment(const ExperimentConfig& cfg);

void write_trace_csv(const Trace& trace, const std::filesystem::path& path);
Trace read_trace_csv(const std::filesystem::path& path);

// Cartesian sweep over the comma-separated lists in sweep.alpha,
// sweep.c_sigma and sweep.nu (each optional); one experiment per combination
// in its own subdirectory. Returns the number of combinations in which every
// replication failed.
int run_sweep(const ExperimentConfig& base, const KeyValues& raw);

}  // namespace gpfso
