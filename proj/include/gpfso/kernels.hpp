#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gpfso/core.hpp"
#include "gpfso/rng.hpp"
#include "gpfso/schedule.hpp"

namespace gpfso {

// Proposal kernel state shared by a run. For the shrinkage kernel it also
// carries the cloud mean and the Cholesky factor of the cloud covariance,
// refreshed from the weighted particle system between steps.
class KernelState {
 public:
  KernelState(const GpfsoConfig& cfg, int dim);

  KernelStrategy strategy() const { return strategy_; }
  int dim() const { return dim_; }
  double nu() const { return nu_; }
  double jitter_prob() const { return jitter_prob_; }
  // Per-coordinate standard deviation of the unscaled noise (sqrt of the
  // proposal covariance diagonal).
  std::span<const double> sigma_sd() const { return sigma_sd_; }

  std::span<const double> ks_mean() const { return ks_mean_; }
  // Lower-triangular factor L with L L^T = V + 1e-10 I, row-major d x d.
  std::span<const double> ks_chol() const { return ks_chol_; }
  double ks_iota() const { return ks_iota_; }
  bool ks_ready() const { return ks_ready_; }

  // Recomputes the weighted mean and covariance of the cloud and factors the
  // covariance. Weights must be normalized. Throws CovarianceNotPsd if the
  // factorization fails even after diagonal regularization.
  void refresh_ks_state(const ParticleSystem& ps);

  double mix_weight() const { return mix_weight_; }
  MixVariant mix_variant() const { return mix_variant_; }
  double mix_nu_prime() const { return mix_nu_prime_; }

 private:
  KernelStrategy strategy_;
  int dim_;
  double nu_;
  double mix_weight_;
  MixVariant mix_variant_;
  double mix_nu_prime_;
  double ks_iota_;
  double jitter_prob_;
  std::vector<double> sigma_sd_;
  std::vector<double> ks_mean_;
  std::vector<double> ks_chol_;
  bool ks_ready_ = false;
};

// theta = origin + h * eps with eps ~ t_{d,nu}(0, Sigma) when heavy_tailed,
// eps ~ N_d(0, Sigma) otherwise. For the mixture strategy the heavy-tailed
// component is replaced, with probability mix_weight, by the variant's first
// component (Gaussian / Dirac at 0 / Student-t(nu')); the selector consumes
// mix_rng so that mix_weight = 0 is draw-for-draw identical to the plain
// strategy on the proposal stream.
void propose_gpfso(std::span<const double> origin, std::span<double> out, double h,
                   bool heavy_tailed, const KernelState& ks, RngStream& rng,
                   RngStream* mix_rng);

// Convenience overload: derives h = h_{t-1} and the kernel family from the
// schedule position, as the main loop does at step t >= 2.
void propose(std::span<const double> origin, std::span<double> out, int64_t t, Schedule& sched,
             const KernelState& ks, RngStream& rng, RngStream* mix_rng = nullptr);

// Shrinkage proposal: N_d(sqrt(1-iota^2) origin + (1-sqrt(1-iota^2)) mean,
// iota^2 V); preserves the cloud's mean and covariance.
void propose_ks(std::span<const double> origin, std::span<double> out, const KernelState& ks,
                RngStream& rng);

// Time-homogeneous baseline: keep origin with probability 1 - N^{-1/2},
// else add a unit Gaussian jitter.
void propose_jitter(std::span<const double> origin, std::span<double> out,
                    const KernelState& ks, RngStream& rng);

}  // namespace gpfso
