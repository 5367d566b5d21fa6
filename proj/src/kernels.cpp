#include "gpfso/kernels.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace gpfso {

KernelState::KernelState(const GpfsoConfig& cfg, int dim)
    : strategy_(cfg.kernel),
      dim_(dim),
      nu_(cfg.nu),
      mix_weight_(cfg.mix_weight),
      mix_variant_(cfg.mix_variant),
      mix_nu_prime_(cfg.mix_nu_prime),
      ks_iota_(cfg.ks_iota),
      jitter_prob_(1.0 / std::sqrt(static_cast<double>(cfg.n_particles))),
      sigma_sd_(dim, std::sqrt(cfg.c_sigma)) {
  if (!cfg.sigma_diag.empty()) {
    if (static_cast<int>(cfg.sigma_diag.size()) != dim)
      throw ConfigError("sigma_diag size does not match model dimension");
    for (int j = 0; j < dim; ++j) sigma_sd_[j] = std::sqrt(cfg.sigma_diag[j]);
  }
}

void KernelState::refresh_ks_state(const ParticleSystem& ps) {
  const int d = ps.dim;
  ks_mean_.assign(d, 0.0);
  weighted_mean(ps, ks_mean_);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  std::vector<double> centered(d);
  for (int64_t i = 0; i < ps.n; ++i) {
    const double w = ps.weights[i];
    if (w == 0.0) continue;
    const double* p = ps.particles.data() + i * d;
    for (int j = 0; j < d; ++j) centered[j] = p[j] - ks_mean_[j];
    for (int r = 0; r < d; ++r)
      for (int c = 0; c <= r; ++c) cov(r, c) += w * centered[r] * centered[c];
  }
  for (int r = 0; r < d; ++r)
    for (int c = r + 1; c < d; ++c) cov(r, c) = cov(c, r);
  if (!cov.allFinite())
    throw CovarianceNotPsd("cloud covariance has non-finite entries");
  cov.diagonal().array() += 1e-10;

  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw CovarianceNotPsd("cloud covariance is not positive semidefinite");
  const Eigen::MatrixXd L = llt.matrixL();
  ks_chol_.assign(static_cast<size_t>(d) * d, 0.0);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c <= r; ++c) ks_chol_[r * d + c] = L(r, c);
  ks_ready_ = true;
}

namespace {

inline void add_scaled_gaussian(std::span<const double> origin, std::span<double> out,
                                double scale, std::span<const double> sigma_sd,
                                RngStream& rng) {
  for (size_t j = 0; j < origin.size(); ++j)
    out[j] = origin[j] + scale * sigma_sd[j] * rng.normal();
}

inline void add_scaled_student(std::span<const double> origin, std::span<double> out,
                               double scale, double nu, std::span<const double> sigma_sd,
                               RngStream& rng) {
  // multivariate t: one chi-square mixing variable shared across coordinates
  const double mix = std::sqrt(nu / rng.chi_square(nu));
  for (size_t j = 0; j < origin.size(); ++j)
    out[j] = origin[j] + scale * mix * sigma_sd[j] * rng.normal();
}

}  // namespace

void propose_gpfso(std::span<const double> origin, std::span<double> out, double h,
                   bool heavy_tailed, const KernelState& ks, RngStream& rng,
                   RngStream* mix_rng) {
  if (h == 0.0) {  // Dirac kernel: first update keeps the prior draw
    std::copy(origin.begin(), origin.end(), out.begin());
    return;
  }
  if (!heavy_tailed) {
    add_scaled_gaussian(origin, out, h, ks.sigma_sd(), rng);
    return;
  }
  if (ks.strategy() == KernelStrategy::GpfsoMix && mix_rng != nullptr &&
      mix_rng->uniform() < ks.mix_weight()) {
    switch (ks.mix_variant()) {
      case MixVariant::Gauss:
        add_scaled_gaussian(origin, out, h, ks.sigma_sd(), rng);
        return;
      case MixVariant::Dirac:
        std::copy(origin.begin(), origin.end(), out.begin());
        return;
      case MixVariant::Student:
        add_scaled_student(origin, out, h, ks.mix_nu_prime(), ks.sigma_sd(), rng);
        return;
    }
  }
  add_scaled_student(origin, out, h, ks.nu(), ks.sigma_sd(), rng);
}

void propose(std::span<const double> origin, std::span<double> out, int64_t t, Schedule& sched,
             const KernelState& ks, RngStream& rng, RngStream* mix_rng) {
  const double h = sched.learning_rate(t - 1);
  const bool heavy = sched.is_breakpoint(t - 1);
  propose_gpfso(origin, out, h, heavy, ks, rng, mix_rng);
}

void propose_ks(std::span<const double> origin, std::span<double> out, const KernelState& ks,
                RngStream& rng) {
  const int d = ks.dim();
  const double iota = ks.ks_iota();
  const double shrink = std::sqrt(1.0 - iota * iota);
  const auto mean = ks.ks_mean();
  const auto chol = ks.ks_chol();

  for (int j = 0; j < d; ++j) out[j] = shrink * origin[j] + (1.0 - shrink) * mean[j];

  // out += iota * L z
  std::array<double, 64> zbuf;
  std::vector<double> zdyn;
  double* z = zbuf.data();
  if (d > 64) {
    zdyn.resize(d);
    z = zdyn.data();
  }
  for (int j = 0; j < d; ++j) z[j] = rng.normal();
  for (int r = 0; r < d; ++r) {
    double acc = 0.0;
    for (int c = 0; c <= r; ++c) acc += chol[r * d + c] * z[c];
    out[r] += iota * acc;
  }
}

void propose_jitter(std::span<const double> origin, std::span<double> out,
                    const KernelState& ks, RngStream& rng) {
  if (rng.uniform() >= ks.jitter_prob()) {
    std::copy(origin.begin(), origin.end(), out.begin());
    return;
  }
  for (size_t j = 0; j < origin.size(); ++j) out[j] = origin[j] + rng.normal();
}

}  // namespace gpfso
