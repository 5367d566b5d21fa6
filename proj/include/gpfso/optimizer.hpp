#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gpfso/core.hpp"
#include "gpfso/kernels.hpp"
#include "gpfso/resampling.hpp"
#include "gpfso/rng.hpp"
#include "gpfso/schedule.hpp"

namespace gpfso {

class ObservationStream {
 public:
  virtual ~ObservationStream() = default;
  // Advances to the next observation; false when exhausted. The returned
  // record stays valid until the next call.
  virtual bool next(Observation& out) = 0;
};

enum class ExecMode { Serial, OpenMP };

struct ExecPolicy {
  ExecMode mode = ExecMode::OpenMP;
  int threads = 0;  // 0 = runtime default
};

struct RecordOptions {
  int64_t every = 0;        // record every k-th step when > 0 ...
  double geometric = 1.02;  // ... else on a geometric grid; final step always
};

// The particle engine. One instance owns one run's mutable state; steps are
// sequential, per-particle work inside a step runs serially or under OpenMP
// with identical results (per-particle substreams are keyed by step and
// particle index, and cross-particle reductions stay serial).
class Optimizer {
 public:
  Optimizer(const Model& model, PriorSampler prior, GpfsoConfig cfg, ExecPolicy exec = {});

  // Step 1: draw N particles from the prior and weight them by y1.
  void init(const Observation& y1);
  // Steps t >= 2: ESS check / resample, propagate, reweigh, re-estimate.
  void step(const Observation& y);

  int64_t step_index() const { return t_; }
  std::span<const double> theta_tilde() const { return theta_tilde_; }
  std::span<const double> theta_bar() const { return theta_bar_; }
  double current_ess() const { return ess_; }
  bool last_resampled() const { return resampled_; }
  // Whether the last step proposed from the heavy-tailed kernel family.
  bool last_heavy_tailed() const { return heavy_; }
  const ParticleSystem& particles() const { return ps_; }
  ParticleSystem& particles() { return ps_; }
  Schedule& schedule() { return sched_; }
  const GpfsoConfig& config() const { return cfg_; }

 private:
  void advance_all_serial(const Observation& y, int64_t t, double h);
  void advance_all_openmp(const Observation& y, int64_t t, double h);
  // Per-particle kernel: propose particle i from origin_buf_, then fold the
  // observation into its log-weight (false if the model produced NaN).
  void propose_one(int64_t i, int64_t t, double h);
  bool reweigh_one(int64_t i, const Observation& y);
  void update_estimates();

  const Model& model_;
  PriorSampler prior_;
  GpfsoConfig cfg_;
  ExecPolicy exec_;
  RngStream root_;
  Schedule sched_;
  KernelState kstate_;
  ParticleSystem ps_;
  std::vector<double> origin_buf_;
  std::vector<double> theta_tilde_, theta_bar_;
  int64_t t_ = 0;
  double ess_ = 0.0;
  bool resampled_ = false;
  bool heavy_ = false;
};

// Algorithm driver: init on the first observation, step on the rest, trace
// rows at the recording stride plus the final step.
Trace run(const Model& model, PriorSampler prior, ObservationStream& stream,
          const GpfsoConfig& cfg, const RecordOptions& rec = {}, ExecPolicy exec = {});

// Adagrad baseline: per-coordinate gradient ascent on the log-density with
// step step_size / sqrt(accumulated g^2 + epsilon).
struct AdagradConfig {
  double step_size = 0.1;
  double epsilon = 1e-8;
};

Trace adagrad_run(const GradientModel& model, std::vector<double> theta0,
                  ObservationStream& stream, const AdagradConfig& acfg = {},
                  const RecordOptions& rec = {});

}  // namespace gpfso
