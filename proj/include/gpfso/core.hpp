#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "gpfso/errors.hpp"
#include "gpfso/rng.hpp"

namespace gpfso {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// One observation record. The engine never interprets it; models do. For
// regression-type data x points into caller-owned storage (valid until the
// stream advances), plain observations use z alone.
struct Observation {
  double z = 0.0;
  const double* x = nullptr;
  int x_dim = 0;
};

// Model contract: a log-density evaluator over parameter space. log_density
// may return -inf (zero density) but never +inf; densities need not be
// normalized, so any loss expressible as exp(-loss) fits.
class Model {
 public:
  virtual ~Model() = default;
  virtual double log_density(std::span<const double> theta, const Observation& y) const = 0;
  virtual bool in_support(std::span<const double> /*theta*/) const { return true; }
  virtual int dim() const = 0;
  // Target parameter when known; used only for error tracking, never by the
  // optimizer.
  virtual const std::vector<double>* true_param() const { return nullptr; }
};

// Model that additionally exposes the gradient of its log-density (only
// needed by the Adagrad baseline).
class GradientModel : public Model {
 public:
  virtual void grad_log_density(std::span<const double> theta, const Observation& y,
                                std::span<double> grad_out) const = 0;
};

using PriorSampler = std::function<void(RngStream&, std::span<double>)>;

// N weighted parameter points. weights are the normalized form of the
// running log_weights; renormalize() keeps them in sync.
struct ParticleSystem {
  ParticleSystem(int64_t n_particles, int dim_);

  int64_t n = 0;
  int dim = 0;
  std::vector<double> particles;    // n x dim, row-major
  std::vector<double> weights;      // normalized, sums to 1
  std::vector<double> log_weights;  // running unnormalized log w^n

  std::span<double> particle(int64_t i) { return {particles.data() + i * dim, static_cast<size_t>(dim)}; }
  std::span<const double> particle(int64_t i) const {
    return {particles.data() + i * dim, static_cast<size_t>(dim)};
  }

  // Rebuilds weights from log_weights; returns the log normalizer.
  double renormalize(int64_t step_for_diagnostics = 0);
};

// Stable log-space normalization: w[i] = exp(lw[i] - max) / sum. Returns the
// log normalizer log(sum exp lw). Throws AllWeightsZero when every entry is
// -inf.
double normalize_weights(std::span<const double> log_weights, std::span<double> weights_out,
                         int64_t step_for_diagnostics = 0);

void weighted_mean(const ParticleSystem& ps, std::span<double> out);

double norm_l2_diff(std::span<const double> a, std::span<const double> b);
double norm_max_diff(std::span<const double> a, std::span<const double> b);

enum class KernelStrategy { Gpfso, GpfsoMix, KsPfso, Jitter };
enum class MixVariant { Gauss, Dirac, Student };
enum class ResamplingScheme { Ssp, Multinomial, Systematic };

struct ScheduleConfig {
  double A = 1.0;
  double B = 1.0;
  int64_t t0 = 5;
  double rho = 0.1;
  // Test override: supply the breakpoint set directly instead of the
  // recurrence (empty list = no heavy-tailed steps at all).
  bool use_explicit = false;
  std::vector<int64_t> explicit_breakpoints;
};

// All tunables of one optimizer run.
struct GpfsoConfig {
  int64_t n_particles = 1000;
  double c_ess = 0.7;
  double nu = 50.0;      // Student-t degrees of freedom at breakpoints
  double alpha = 0.5;    // learning rate exponent, h_t = t^-alpha
  double c_sigma = 1.0;  // proposal scale, Sigma = c_sigma * I_d
  // Optional per-coordinate variance diag(sigma_diag) replacing c_sigma*I.
  std::vector<double> sigma_diag;
  ScheduleConfig schedule;
  KernelStrategy kernel = KernelStrategy::Gpfso;
  double mix_weight = 0.0;  // GpfsoMix: probability of the first component
  MixVariant mix_variant = MixVariant::Gauss;
  double mix_nu_prime = 1.0;  // GpfsoMix Student variant, must be in (0, nu)
  double ks_iota = 0.68;
  ResamplingScheme resampling = ResamplingScheme::Ssp;
  int64_t burn_in = 0;  // averaging restart time (0 = average from step 1)
  uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

struct TraceRow {
  int64_t t = 0;
  std::vector<double> theta_tilde;
  std::vector<double> theta_bar;
  double ess = 0.0;
  bool resampled = false;
  // Errors against the model's true parameter, NaN when unknown. Both norms
  // recorded; downstream reporting picks.
  double err_tilde_l2 = kNaN;
  double err_bar_l2 = kNaN;
  double err_tilde_max = kNaN;
  double err_bar_max = kNaN;
};

struct Trace {
  int dim = 0;
  std::vector<TraceRow> rows;
};

}  // namespace gpfso
