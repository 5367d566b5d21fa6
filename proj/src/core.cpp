#include "gpfso/core.hpp"

#include <algorithm>
#include <cmath>

namespace gpfso {

ParticleSystem::ParticleSystem(int64_t n_particles, int dim_)
    : n(n_particles),
      dim(dim_),
      particles(static_cast<size_t>(n_particles) * dim_, 0.0),
      weights(n_particles, 1.0 / static_cast<double>(n_particles)),
      log_weights(n_particles, 0.0) {
  if (n_particles <= 0) throw ConfigError("ParticleSystem: need at least one particle");
  if (dim_ <= 0) throw ConfigError("ParticleSystem: dim must be positive");
}

double ParticleSystem::renormalize(int64_t step_for_diagnostics) {
  return normalize_weights(log_weights, weights, step_for_diagnostics);
}

double normalize_weights(std::span<const double> log_weights, std::span<double> weights_out,
                         int64_t step_for_diagnostics) {
  double max_lw = kNegInf;
  for (double lw : log_weights) max_lw = std::max(max_lw, lw);
  if (!std::isfinite(max_lw)) throw AllWeightsZero(step_for_diagnostics);

  double sum = 0.0;
  for (size_t i = 0; i < log_weights.size(); ++i) {
    const double w = std::exp(log_weights[i] - max_lw);
    weights_out[i] = w;
    sum += w;
  }
  const double inv = 1.0 / sum;
  for (size_t i = 0; i < log_weights.size(); ++i) weights_out[i] *= inv;
  return max_lw + std::log(sum);
}

void weighted_mean(const ParticleSystem& ps, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (int64_t i = 0; i < ps.n; ++i) {
    const double w = ps.weights[i];
    const double* p = ps.particles.data() + i * ps.dim;
    for (int j = 0; j < ps.dim; ++j) out[j] += w * p[j];
  }
}

double norm_l2_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double norm_max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void GpfsoConfig::validate() const {
  if (n_particles < 1) throw ConfigError("n_particles must be >= 1");
  if (!(c_ess > 0.0 && c_ess <= 1.0)) throw ConfigError("c_ess must be in (0, 1]");
  if (!(nu > 0.0)) throw ConfigError("nu must be > 0");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (!(c_sigma > 0.0)) throw ConfigError("c_sigma must be > 0");
  for (double s : sigma_diag)
    if (!(s >= 0.0)) throw ConfigError("sigma_diag entries must be >= 0");
  if (kernel == KernelStrategy::GpfsoMix) {
    if (!(mix_weight >= 0.0 && mix_weight < 1.0)) throw ConfigError("mix_weight must be in [0, 1)");
    if (mix_variant == MixVariant::Student && !(mix_nu_prime > 0.0 && mix_nu_prime < nu))
      throw ConfigError("mix_nu_prime must be in (0, nu)");
  }
  if (kernel == KernelStrategy::KsPfso && !(ks_iota > 0.0 && ks_iota < 1.0))
    throw ConfigError("ks_iota must be in (0, 1)");
  if (burn_in < 0) throw ConfigError("burn_in must be >= 0");
  if (!schedule.use_explicit) {
    if (schedule.A < 0.0) throw ConfigError("schedule A must be >= 0");
    if (schedule.B < 1.0) throw ConfigError("schedule B must be >= 1");
    if (schedule.t0 < 1) throw ConfigError("schedule t0 must be >= 1");
    if (!(schedule.rho > 0.0 && schedule.rho < std::min(alpha, 1.0)))
      throw ConfigError("schedule rho must be in (0, min(alpha, 1))");
  }
}

}  // namespace gpfso
