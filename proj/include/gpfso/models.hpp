#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gpfso/core.hpp"
#include "gpfso/optimizer.hpp"
#include "gpfso/rng.hpp"

namespace gpfso {

// ---------------------------------------------------------------------------
// Gaussian location model with unit observation variance (the tractable
// benchmark: its filtered law has a closed form).

class GaussianMeanModel final : public Model {
 public:
  explicit GaussianMeanModel(double true_theta = 0.0) : truth_{true_theta} {}
  double log_density(std::span<const double> theta, const Observation& y) const override;
  int dim() const override { return 1; }
  const std::vector<double>* true_param() const override { return &truth_; }

 private:
  std::vector<double> truth_;
};

// Sample-path recursion for the all-Gaussian-kernel variant on the model
// above with prior N(theta0, sigma0^2):
//   sigma_t^2 = g(sigma_{t-1}^2 + h_{t-1}^2),  g(x) = x / (1 + x),
//   theta_t   = theta_{t-1} + sigma_t^2 (y_t - theta_{t-1}),
// with h_0 = 0 (the first update keeps the prior kernel-free) and
// h_t = t^-alpha. Also tracks the running average of theta_t.
struct GaussianMeanOracle {
  GaussianMeanOracle(double theta0, double sigma0_sq, double alpha_)
      : theta(theta0), sigma_sq(sigma0_sq), alpha(alpha_) {}

  void step(double y);

  double theta;
  double sigma_sq;
  double theta_bar = 0.0;
  double alpha;
  int64_t t = 0;
};

// Exact second-moment law of the same recursion under Y_t iid N(theta*, 1):
// propagates Var(theta_t), Cov(theta_t, bar_t) and Var(bar_t) in closed form,
// giving the exact mean absolute errors E|theta_t - theta*| and
// E|bar_t - theta*| with no sampling at all.
struct GaussianOracleMoments {
  GaussianOracleMoments(double sigma0_sq, double alpha_) : sigma_sq(sigma0_sq), alpha(alpha_) {}

  void step();

  double mean_abs_tilde_err() const;
  double mean_abs_bar_err() const;

  double sigma_sq;
  double var_tilde = 0.0;
  double cov_tilde_bar = 0.0;
  double var_bar = 0.0;
  double alpha;
  int64_t t = 0;
};

// ---------------------------------------------------------------------------
// Censored quantile regression: asymmetric-Laplace likelihood with location
// max(x'theta, 0). check_loss is the tilted absolute loss rho_tau.

double check_loss(double u, double tau);

class CqrModel final : public GradientModel {
 public:
  CqrModel(int dim, double tau, std::vector<double> true_theta = {});

  double log_density(std::span<const double> theta, const Observation& y) const override;
  void grad_log_density(std::span<const double> theta, const Observation& y,
                        std::span<double> grad_out) const override;
  int dim() const override { return dim_; }
  const std::vector<double>* true_param() const override {
    return truth_.empty() ? nullptr : &truth_;
  }
  double tau() const { return tau_; }

 private:
  int dim_;
  double tau_;
  double log_const_;  // log(tau (1 - tau))
  std::vector<double> truth_;
};

// ---------------------------------------------------------------------------
// Multimodal regression toy: Laplace likelihood around
// mu(theta, x) = sum_i exp(-x_i theta_i^2) + x_i theta_{d-i+1}, with the
// parameter space an open max-norm ball of radius 20 around the target.

double multimodal_mu(std::span<const double> theta, std::span<const double> x);

class MultimodalRegressionModel final : public Model {
 public:
  explicit MultimodalRegressionModel(int dim = 20, double laplace_scale = 0.5,
                                     double support_radius = 20.0);

  double log_density(std::span<const double> theta, const Observation& y) const override;
  bool in_support(std::span<const double> theta) const override;
  int dim() const override { return dim_; }
  const std::vector<double>* true_param() const override { return &truth_; }

 private:
  int dim_;
  double scale_;
  double radius_;
  std::vector<double> truth_;  // (-1, ..., -1)
};

// ---------------------------------------------------------------------------
// Smooth adaptive Gaussian mixture regression: K components whose weights,
// means and log-sds are all linear in x; d = dx (3K - 1) parameters laid out
// as theta = (beta_w, beta_mu, beta_sigma). Support is {theta_1 >= 0}.

class SagmModel final : public Model {
 public:
  static constexpr int kMaxComponents = 16;

  SagmModel(int n_components, int x_dim, std::vector<double> true_theta = {});

  double log_density(std::span<const double> theta, const Observation& y) const override;
  bool in_support(std::span<const double> theta) const override;
  int dim() const override { return dim_; }
  const std::vector<double>* true_param() const override {
    return truth_.empty() ? nullptr : &truth_;
  }

  int n_components() const { return k_; }
  int x_dim() const { return dx_; }
  // Mixture weights at x for the beta_w block of theta.
  void weights_at(std::span<const double> theta, std::span<const double> x,
                  std::span<double> w_out) const;

  // The generator parameters used by the benchmark (K = 2, dx = 4).
  static std::vector<double> default_true_param();

 private:
  int k_, dx_, dim_;
  std::vector<double> truth_;
};

// ---------------------------------------------------------------------------
// Datasets and observation streams.

struct Dataset {
  int x_dim = 0;
  std::vector<double> z;
  std::vector<double> x;  // rows of length x_dim, row-major
  int64_t size() const { return static_cast<int64_t>(z.size()); }
  Observation row(int64_t i) const {
    return {z[i], x_dim > 0 ? x.data() + i * x_dim : nullptr, x_dim};
  }
};

// Header "z,x1,..,xd", one record per line, 17 significant digits.
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

struct SimulatedData {
  Dataset data;
  std::vector<double> true_param;
};

// Materialized simulators (the streaming classes below generate the same
// laws on the fly for long horizons).
SimulatedData simulate_cqr(int64_t n, int dim, RngStream& rng);
SimulatedData simulate_multimodal(int64_t n, int dim, RngStream& rng);
SimulatedData simulate_sagm(int64_t n, RngStream& rng);

class DatasetStream final : public ObservationStream {
 public:
  explicit DatasetStream(const Dataset& data) : data_(data) {}
  bool next(Observation& out) override;

 private:
  const Dataset& data_;
  int64_t pos_ = 0;
};

// Uniform draws with replacement from a fixed dataset: the empirical
// bootstrap stream reducing maximum-likelihood estimation to expected
// log-likelihood maximization.
class BootstrapStream final : public ObservationStream {
 public:
  BootstrapStream(const Dataset& data, RngStream rng, int64_t n_draws);
  bool next(Observation& out) override;

 private:
  const Dataset& data_;
  RngStream rng_;
  int64_t remaining_;
};

class GaussianMeanStream final : public ObservationStream {
 public:
  GaussianMeanStream(double true_theta, RngStream rng, int64_t n)
      : theta_(true_theta), rng_(rng), remaining_(n) {}
  bool next(Observation& out) override;

 private:
  double theta_;
  RngStream rng_;
  int64_t remaining_;
};

// Censored Gaussian responses over correlated covariates: x = (1, v) with
// v ~ N(0, Sigma_X) and Sigma_X^{-1} Wishart-distributed; z = max(zt, 0),
// zt | x ~ N(x'theta*, 4); theta* = (3, N(0, I)). theta* and Sigma_X are
// regenerated from the stream's rng.
class CqrStream final : public ObservationStream {
 public:
  CqrStream(int dim, RngStream rng, int64_t n);
  bool next(Observation& out) override;
  const std::vector<double>& true_param() const { return truth_; }
  double censored_fraction() const;

 private:
  int dim_;
  RngStream rng_;
  int64_t remaining_;
  std::vector<double> truth_;
  std::vector<double> sigma_chol_;  // (dim-1) x (dim-1) lower factor of Sigma_X
  std::vector<double> xbuf_, zbuf_;
  int64_t emitted_ = 0;
  int64_t censored_ = 0;
};

// z | x ~ N(mu(theta*, x), 4), x ~ Unif[-1, 1]^d, theta* = (-1, .., -1).
class MultimodalStream final : public ObservationStream {
 public:
  MultimodalStream(int dim, RngStream rng, int64_t n);
  bool next(Observation& out) override;
  const std::vector<double>& true_param() const { return truth_; }

 private:
  int dim_;
  RngStream rng_;
  int64_t remaining_;
  std::vector<double> truth_;
  std::vector<double> xbuf_;
};

// x = (1, N(0, I)); component drawn from the mixture weights at x, then
// z ~ N(x'beta_mu_k, exp(-x'beta_sigma_k)^2).
class SagmStream final : public ObservationStream {
 public:
  SagmStream(RngStream rng, int64_t n);
  bool next(Observation& out) override;
  const std::vector<double>& true_param() const { return truth_; }

 private:
  SagmModel model_;
  RngStream rng_;
  int64_t remaining_;
  std::vector<double> truth_;
  std::vector<double> xbuf_;
  std::vector<double> wbuf_;
};

}  // namespace gpfso
