#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gpfso/models.hpp"
#include "gpfso/optimizer.hpp"

using namespace gpfso;

namespace {

// 1-d objective with a global basin at 0 and a strictly worse local basin at
// 8: the response location is s(theta) = min(theta^2, 1/2 + (theta - 8)^2),
// observed through unit Gaussian noise.
class BimodalToyModel final : public Model {
 public:
  double log_density(std::span<const double> theta, const Observation& y) const override {
    const double a = theta[0] * theta[0];
    const double b = 0.5 + (theta[0] - 8.0) * (theta[0] - 8.0);
    const double s = std::min(a, b);
    const double r = y.z - s;
    return -0.5 * r * r;
  }
  int dim() const override { return 1; }
};

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

TEST_CASE("heavy tails relocate a cloud stuck in the wrong mode (majority of seeds)") {
  // nu = 1/alpha: the regime in which breakpoint jumps keep a non-vanishing
  // chance of reaching the global basin
  BimodalToyModel model;
  const int n_seeds = 20;
  int relocated = 0;
  std::vector<double> finals(n_seeds);
#pragma omp parallel for schedule(dynamic) reduction(+ : relocated)
  for (int s = 0; s < n_seeds; ++s) {
    GpfsoConfig cfg;
    cfg.n_particles = 500;
    cfg.nu = 2.0;
    cfg.alpha = 0.5;
    cfg.c_sigma = 16.0;
    cfg.seed = 1000 + static_cast<uint64_t>(s);
    const PriorSampler wrong_mode = [](RngStream& rng, std::span<double> out) {
      out[0] = 8.0 + 0.5 * rng.normal();
    };
    Optimizer opt(model, wrong_mode, cfg, {ExecMode::Serial, 1});
    RngStream noise = RngStream(cfg.seed).substream(stream_channel::kSimStream, 0, 0);
    opt.init({noise.normal(), nullptr, 0});
    for (int64_t t = 2; t <= 100000; ++t) opt.step({noise.normal(), nullptr, 0});
    finals[s] = opt.theta_tilde()[0];
    relocated += std::abs(opt.theta_tilde()[0]) < 1.0;
  }
  INFO("relocated " << relocated << "/" << n_seeds);
  CHECK(relocated >= 11);
}

TEST_CASE("shrinkage proposals localize where heavy-tailed exploration succeeds") {
  // directional comparison on the 20-d multimodal benchmark at reduced scale
  const int n_seeds = 7;
  const int64_t horizon = 30000;
  std::vector<double> ks_final(n_seeds), gpfso_final(n_seeds);

#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < n_seeds; ++s) {
    const uint64_t seed = 500 + static_cast<uint64_t>(s);
    MultimodalRegressionModel model(20);
    const PriorSampler uniform_prior = [](RngStream& rng, std::span<double> out) {
      for (auto& v : out) v = -21.0 + 40.0 * rng.uniform();
    };
    for (int alg = 0; alg < 2; ++alg) {
      GpfsoConfig cfg;
      cfg.n_particles = 1000;
      cfg.seed = seed;
      if (alg == 0) {
        cfg.kernel = KernelStrategy::KsPfso;
        cfg.ks_iota = 0.68;
      } else {
        cfg.kernel = KernelStrategy::Gpfso;
        cfg.c_sigma = 10.0;
        cfg.nu = 50.0;
        cfg.alpha = 0.5;
      }
      MultimodalStream stream(20, RngStream(seed).substream(stream_channel::kSimStream, 0, 0),
                              horizon);
      const Trace trace =
          run(model, uniform_prior, stream, cfg, {.geometric = 2.0}, {ExecMode::Serial, 1});
      (alg == 0 ? ks_final : gpfso_final)[s] = trace.rows.back().err_tilde_max;
    }
  }
  INFO("ks median " << median(ks_final) << ", gpfso median " << median(gpfso_final));
  CHECK(median(ks_final) > median(gpfso_final));
}
