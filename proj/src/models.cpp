#include "gpfso/models.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gpfso {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

inline double dot(std::span<const double> a, const double* b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

// --------------------------------------------------------------------------
// Gaussian location model and its closed-form recursions

double GaussianMeanModel::log_density(std::span<const double> theta, const Observation& y) const {
  const double r = y.z - theta[0];
  return -0.5 * kLogTwoPi - 0.5 * r * r;
}

void GaussianMeanOracle::step(double y) {
  ++t;
  const double h2 = t == 1 ? 0.0 : std::pow(static_cast<double>(t - 1), -2.0 * alpha);
  const double x = sigma_sq + h2;
  sigma_sq = x / (1.0 + x);
  theta += sigma_sq * (y - theta);
  const double td = static_cast<double>(t);
  theta_bar = t == 1 ? theta : ((td - 1.0) * theta_bar + theta) / td;
}

void GaussianOracleMoments::step() {
  ++t;
  const double h2 = t == 1 ? 0.0 : std::pow(static_cast<double>(t - 1), -2.0 * alpha);
  const double x = sigma_sq + h2;
  sigma_sq = x / (1.0 + x);
  const double a = 1.0 - sigma_sq;
  const double s = sigma_sq;
  var_tilde = a * a * var_tilde + s * s;
  const double td = static_cast<double>(t);
  const double cov_prev = cov_tilde_bar;
  cov_tilde_bar = (td - 1.0) / td * a * cov_prev + var_tilde / td;
  var_bar = ((td - 1.0) / td) * ((td - 1.0) / td) * var_bar +
            2.0 * (td - 1.0) / (td * td) * a * cov_prev + var_tilde / (td * td);
}

double GaussianOracleMoments::mean_abs_tilde_err() const {
  return std::sqrt(2.0 * var_tilde / M_PI);
}

double GaussianOracleMoments::mean_abs_bar_err() const {
  return std::sqrt(2.0 * var_bar / M_PI);
}

// --------------------------------------------------------------------------
// Censored quantile regression

double check_loss(double u, double tau) {
  return 0.5 * (std::abs(u) + (2.0 * tau - 1.0) * u);
}

CqrModel::CqrModel(int dim, double tau, std::vector<double> true_theta)
    : dim_(dim), tau_(tau), log_const_(std::log(tau * (1.0 - tau))), truth_(std::move(true_theta)) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("CqrModel: tau must be in (0, 1)");
  if (!truth_.empty() && static_cast<int>(truth_.size()) != dim)
    throw ConfigError("CqrModel: true_theta dimension mismatch");
}

double CqrModel::log_density(std::span<const double> theta, const Observation& y) const {
  const double loc = std::max(dot(theta, y.x), 0.0);
  return log_const_ - check_loss(y.z - loc, tau_);
}

void CqrModel::grad_log_density(std::span<const double> theta, const Observation& y,
                                std::span<double> grad_out) const {
  const double lin = dot(theta, y.x);
  if (lin <= 0.0) {  // censored region: location pinned at zero
    std::fill(grad_out.begin(), grad_out.end(), 0.0);
    return;
  }
  const double u = y.z - lin;
  // subgradient of -rho_tau at the kink takes the tau - 1/2 convention
  const double sgn = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
  const double slope = 0.5 * (sgn + 2.0 * tau_ - 1.0);
  for (int j = 0; j < dim_; ++j) grad_out[j] = slope * y.x[j];
}

// --------------------------------------------------------------------------
// Multimodal regression toy

double multimodal_mu(std::span<const double> theta, std::span<const double> x) {
  const size_t d = theta.size();
  double s = 0.0;
  for (size_t i = 0; i < d; ++i)
    s += std::exp(-x[i] * theta[i] * theta[i]) + x[i] * theta[d - 1 - i];
  return s;
}

MultimodalRegressionModel::MultimodalRegressionModel(int dim, double laplace_scale,
                                                     double support_radius)
    : dim_(dim), scale_(laplace_scale), radius_(support_radius), truth_(dim, -1.0) {}

double MultimodalRegressionModel::log_density(std::span<const double> theta,
                                              const Observation& y) const {
  const double mu = multimodal_mu(theta, {y.x, static_cast<size_t>(y.x_dim)});
  return -std::log(2.0 * scale_) - std::abs(y.z - mu) / scale_;
}

bool MultimodalRegressionModel::in_support(std::span<const double> theta) const {
  for (int j = 0; j < dim_; ++j)
    if (!(std::abs(theta[j] - truth_[j]) < radius_)) return false;
  return true;
}

// --------------------------------------------------------------------------
// Smooth adaptive Gaussian mixture

SagmModel::SagmModel(int n_components, int x_dim, std::vector<double> true_theta)
    : k_(n_components), dx_(x_dim), dim_(x_dim * (3 * n_components - 1)) {
  if (k_ < 2) throw ConfigError("SagmModel: need at least two components");
  if (k_ > kMaxComponents) throw ConfigError("SagmModel: too many components");
  if (!true_theta.empty() && static_cast<int>(true_theta.size()) != dim_)
    throw ConfigError("SagmModel: true_theta dimension mismatch");
  truth_ = std::move(true_theta);
}

void SagmModel::weights_at(std::span<const double> theta, std::span<const double> x,
                           std::span<double> w_out) const {
  // u_k = -x'beta_w_(k) for k < K, u_K = 0; w_k = exp(u_k) / sum exp(u)
  double umax = 0.0;
  for (int k = 0; k < k_ - 1; ++k) {
    const double u = -dot(x, theta.data() + k * dx_);
    w_out[k] = u;
    umax = std::max(umax, u);
  }
  w_out[k_ - 1] = 0.0;
  double denom = 0.0;
  for (int k = 0; k < k_; ++k) {
    w_out[k] = std::exp(w_out[k] - umax);
    denom += w_out[k];
  }
  for (int k = 0; k < k_; ++k) w_out[k] /= denom;
}

double SagmModel::log_density(std::span<const double> theta, const Observation& y) const {
  const std::span<const double> x{y.x, static_cast<size_t>(y.x_dim)};
  const double* beta_w = theta.data();
  const double* beta_mu = theta.data() + dx_ * (k_ - 1);
  const double* beta_sigma = beta_mu + dx_ * k_;

  // log mixture weights, normalized in log space
  double logw[kMaxComponents];
  double umax = 0.0;
  for (int k = 0; k < k_ - 1; ++k) {
    logw[k] = -dot(x, beta_w + k * dx_);
    umax = std::max(umax, logw[k]);
  }
  logw[k_ - 1] = 0.0;
  double denom = 0.0;
  for (int k = 0; k < k_; ++k) denom += std::exp(logw[k] - umax);
  const double log_denom = umax + std::log(denom);

  // log-sum-exp over the component log densities
  double a[kMaxComponents];
  double amax = kNegInf;
  for (int k = 0; k < k_; ++k) {
    const double m = dot(x, beta_mu + k * dx_);
    const double neg_log_sd = dot(x, beta_sigma + k * dx_);  // log(1/sd)
    const double r = y.z - m;
    const double inv_sd2 = std::exp(2.0 * neg_log_sd);
    a[k] = (logw[k] - log_denom) - 0.5 * kLogTwoPi + neg_log_sd - 0.5 * r * r * inv_sd2;
    amax = std::max(amax, a[k]);
  }
  if (!std::isfinite(amax)) return kNegInf;
  double acc = 0.0;
  for (int k = 0; k < k_; ++k) acc += std::exp(a[k] - amax);
  return amax + std::log(acc);
}

bool SagmModel::in_support(std::span<const double> theta) const { return theta[0] >= 0.0; }

std::vector<double> SagmModel::default_true_param() {
  return {
      1.0, 0.1, 0.1, -0.1,   // beta_w (K - 1 = 1 block)
      1.0, 1.0, 1.0, -1.0,   // beta_mu, component 1
      -1.0, 1.0, 1.0, 1.0,   // beta_mu, component 2
      0.0, 1.0, 1.0, 1.0,    // beta_sigma, component 1
      0.5, -1.0, -1.0, 1.0,  // beta_sigma, component 2
  };
}

// --------------------------------------------------------------------------
// Dataset IO

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw GpfsoError("cannot open " + path.string() + " for writing");
  out << "z";
  for (int j = 1; j <= data.x_dim; ++j) out << ",x" << j;
  out << "\n";
  char buf[32];
  for (int64_t i = 0; i < data.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", data.z[i]);
    out << buf;
    for (int j = 0; j < data.x_dim; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.x[i * data.x_dim + j]);
      out << ',' << buf;
    }
    out << "\n";
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GpfsoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw GpfsoError("empty dataset file " + path.string());
  const int n_cols = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;

  Dataset data;
  data.x_dim = n_cols - 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    data.z.push_back(std::stod(cell));
    for (int j = 0; j < data.x_dim; ++j) {
      std::getline(ss, cell, ',');
      data.x.push_back(std::stod(cell));
    }
  }
  return data;
}

// --------------------------------------------------------------------------
// Streams

bool DatasetStream::next(Observation& out) {
  if (pos_ >= data_.size()) return false;
  out = data_.row(pos_++);
  return true;
}

BootstrapStream::BootstrapStream(const Dataset& data, RngStream rng, int64_t n_draws)
    : data_(data), rng_(rng), remaining_(n_draws) {
  if (data.size() == 0) throw GpfsoError("BootstrapStream: empty dataset");
}

bool BootstrapStream::next(Observation& out) {
  if (remaining_ <= 0) return false;
  --remaining_;
  const auto idx =
      std::min<int64_t>(static_cast<int64_t>(rng_.uniform() * static_cast<double>(data_.size())),
                        data_.size() - 1);
  out = data_.row(idx);
  return true;
}

bool GaussianMeanStream::next(Observation& out) {
  if (remaining_ <= 0) return false;
  --remaining_;
  out = {theta_ + rng_.normal(), nullptr, 0};
  return true;
}

CqrStream::CqrStream(int dim, RngStream rng, int64_t n)
    : dim_(dim), rng_(rng), remaining_(n), xbuf_(dim), zbuf_(dim) {
  if (dim < 2) throw ConfigError("CqrStream: dim must be >= 2");
  truth_.resize(dim);
  truth_[0] = 3.0;
  for (int j = 1; j < dim; ++j) truth_[j] = rng_.normal();

  // Sigma_X^{-1} ~ Wishart_{d-1}(I, d-1 dof) via the Bartlett factor, then
  // Sigma_X's Cholesky factor for covariate sampling.
  const int m = dim - 1;
  Eigen::MatrixXd bart = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    bart(i, i) = std::sqrt(rng_.chi_square(static_cast<double>(m - i)));
    for (int j = 0; j < i; ++j) bart(i, j) = rng_.normal();
  }
  const Eigen::MatrixXd wishart = bart * bart.transpose();
  const Eigen::MatrixXd sigma_x = wishart.inverse();
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma_x);
  if (llt.info() != Eigen::Success)
    throw CovarianceNotPsd("CqrStream: covariate covariance not PSD");
  const Eigen::MatrixXd L = llt.matrixL();
  sigma_chol_.assign(static_cast<size_t>(m) * m, 0.0);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c <= r; ++c) sigma_chol_[r * m + c] = L(r, c);
}

bool CqrStream::next(Observation& out) {
  if (remaining_ <= 0) return false;
  --remaining_;
  const int m = dim_ - 1;
  for (int j = 0; j < m; ++j) zbuf_[j] = rng_.normal();
  xbuf_[0] = 1.0;
  for (int r = 0; r < m; ++r) {
    double acc = 0.0;
    for (int c = 0; c <= r; ++c) acc += sigma_chol_[r * m + c] * zbuf_[c];
    xbuf_[1 + r] = acc;
  }
  double lin = 0.0;
  for (int j = 0; j < dim_; ++j) lin += xbuf_[j] * truth_[j];
  const double z_latent = lin + 2.0 * rng_.normal();
  const double z = std::max(z_latent, 0.0);
  ++emitted_;
  if (z_latent <= 0.0) ++censored_;
  out = {z, xbuf_.data(), dim_};
  return true;
}

double CqrStream::censored_fraction() const {
  return emitted_ == 0 ? 0.0 : static_cast<double>(censored_) / static_cast<double>(emitted_);
}

MultimodalStream::MultimodalStream(int dim, RngStream rng, int64_t n)
    : dim_(dim), rng_(rng), remaining_(n), truth_(dim, -1.0), xbuf_(dim) {}

bool MultimodalStream::next(Observation& out) {
  if (remaining_ <= 0) return false;
  --remaining_;
  for (int j = 0; j < dim_; ++j) xbuf_[j] = 2.0 * rng_.uniform() - 1.0;
  const double mu = multimodal_mu(truth_, xbuf_);
  out = {mu + 2.0 * rng_.normal(), xbuf_.data(), dim_};
  return true;
}

SagmStream::SagmStream(RngStream rng, int64_t n)
    : model_(2, 4, SagmModel::default_true_param()),
      rng_(rng),
      remaining_(n),
      truth_(SagmModel::default_true_param()),
      xbuf_(4),
      wbuf_(2) {}

bool SagmStream::next(Observation& out) {
  if (remaining_ <= 0) return false;
  --remaining_;
  const int dx = model_.x_dim();
  const int k = model_.n_components();
  xbuf_[0] = 1.0;
  for (int j = 1; j < dx; ++j) xbuf_[j] = rng_.normal();
  model_.weights_at(truth_, xbuf_, wbuf_);
  const double u = rng_.uniform();
  int pick = k - 1;
  double cum = 0.0;
  for (int c = 0; c < k; ++c) {
    cum += wbuf_[c];
    if (u < cum) {
      pick = c;
      break;
    }
  }
  const double* beta_mu = truth_.data() + dx * (k - 1);
  const double* beta_sigma = beta_mu + dx * k;
  double m = 0.0, neg_log_sd = 0.0;
  for (int j = 0; j < dx; ++j) {
    m += xbuf_[j] * beta_mu[pick * dx + j];
    neg_log_sd += xbuf_[j] * beta_sigma[pick * dx + j];
  }
  out = {m + std::exp(-neg_log_sd) * rng_.normal(), xbuf_.data(), dx};
  return true;
}

// --------------------------------------------------------------------------
// Materialized simulators

namespace {

SimulatedData materialize(ObservationStream& stream, const std::vector<double>& truth,
                          int x_dim) {
  SimulatedData sim;
  sim.true_param = truth;
  sim.data.x_dim = x_dim;
  Observation y;
  while (stream.next(y)) {
    sim.data.z.push_back(y.z);
    for (int j = 0; j < x_dim; ++j) sim.data.x.push_back(y.x[j]);
  }
  return sim;
}

}  // namespace

SimulatedData simulate_cqr(int64_t n, int dim, RngStream& rng) {
  CqrStream stream(dim, rng.substream(stream_channel::kSimStream, 0, 0), n);
  return materialize(stream, stream.true_param(), dim);
}

SimulatedData simulate_multimodal(int64_t n, int dim, RngStream& rng) {
  MultimodalStream stream(dim, rng.substream(stream_channel::kSimStream, 0, 0), n);
  return materialize(stream, stream.true_param(), dim);
}

SimulatedData simulate_sagm(int64_t n, RngStream& rng) {
  SagmStream stream(rng.substream(stream_channel::kSimStream, 0, 0), n);
  return materialize(stream, stream.true_param(), 4);
}

}  // namespace gpfso
