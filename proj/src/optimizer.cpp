#include "gpfso/optimizer.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace gpfso {

Optimizer::Optimizer(const Model& model, PriorSampler prior, GpfsoConfig cfg, ExecPolicy exec)
    : model_(model),
      prior_(std::move(prior)),
      cfg_(std::move(cfg)),
      exec_(exec),
      root_(cfg_.seed),
      sched_(cfg_.schedule, cfg_.alpha),
      kstate_(cfg_, model.dim()),
      ps_(cfg_.n_particles, model.dim()),
      origin_buf_(ps_.particles.size()),
      theta_tilde_(model.dim(), 0.0),
      theta_bar_(model.dim(), 0.0) {
  cfg_.validate();
}

void Optimizer::init(const Observation& y1) {
  if (t_ != 0) throw GpfsoError("Optimizer::init called twice");
  t_ = 1;
  const int64_t n = ps_.n;
  const bool par = exec_.mode == ExecMode::OpenMP;
  const int nthreads = exec_.threads > 0 ? exec_.threads : omp_get_max_threads();
  int saw_nan = 0;
#pragma omp parallel for schedule(static) num_threads(nthreads) if (par) reduction(| : saw_nan)
  for (int64_t i = 0; i < n; ++i) {
    RngStream rng = root_.substream(stream_channel::kPrior, 1, static_cast<uint64_t>(i));
    auto theta = ps_.particle(i);
    prior_(rng, theta);
    double lf = model_.in_support(theta) ? model_.log_density(theta, y1) : kNegInf;
    if (std::isnan(lf)) {
      saw_nan = 1;
      lf = kNegInf;
    }
    ps_.log_weights[i] = lf;
  }
  if (saw_nan) throw GpfsoError("model log-density returned NaN at step 1");
  ps_.renormalize(1);
  update_estimates();
}

void Optimizer::propose_one(int64_t i, int64_t t, double h) {
  RngStream prop = root_.substream(stream_channel::kProposal, static_cast<uint64_t>(t),
                                   static_cast<uint64_t>(i));
  const std::span<const double> origin{origin_buf_.data() + i * ps_.dim,
                                       static_cast<size_t>(ps_.dim)};
  auto out = ps_.particle(i);
  switch (cfg_.kernel) {
    case KernelStrategy::Gpfso:
      propose_gpfso(origin, out, h, heavy_, kstate_, prop, nullptr);
      break;
    case KernelStrategy::GpfsoMix: {
      RngStream mix = root_.substream(stream_channel::kMixSelect, static_cast<uint64_t>(t),
                                      static_cast<uint64_t>(i));
      propose_gpfso(origin, out, h, heavy_, kstate_, prop, &mix);
      break;
    }
    case KernelStrategy::KsPfso:
      propose_ks(origin, out, kstate_, prop);
      break;
    case KernelStrategy::Jitter:
      propose_jitter(origin, out, kstate_, prop);
      break;
  }
}

bool Optimizer::reweigh_one(int64_t i, const Observation& y) {
  const auto theta = ps_.particle(i);
  const double lf = model_.in_support(theta) ? model_.log_density(theta, y) : kNegInf;
  if (std::isnan(lf)) return false;
  ps_.log_weights[i] += lf;
  return true;
}

void Optimizer::advance_all_serial(const Observation& y, int64_t t, double h) {
  // reference implementation: propose everything, then reweigh everything
  for (int64_t i = 0; i < ps_.n; ++i) propose_one(i, t, h);
  bool ok = true;
  for (int64_t i = 0; i < ps_.n; ++i) ok = reweigh_one(i, y) && ok;
  if (!ok) throw GpfsoError("model log-density returned NaN at step " + std::to_string(t));
}

void Optimizer::advance_all_openmp(const Observation& y, int64_t t, double h) {
  // fused single pass; bitwise-identical to the serial path because the
  // per-particle work is independent and the reductions stay outside
  const int64_t n = ps_.n;
  const int nthreads = exec_.threads > 0 ? exec_.threads : omp_get_max_threads();
  int ok = 1;
#pragma omp parallel for schedule(static) num_threads(nthreads) reduction(& : ok)
  for (int64_t i = 0; i < n; ++i) {
    propose_one(i, t, h);
    ok = reweigh_one(i, y) ? ok : 0;
  }
  if (!ok) throw GpfsoError("model log-density returned NaN at step " + std::to_string(t));
}

void Optimizer::step(const Observation& y) {
  if (t_ < 1) throw GpfsoError("Optimizer::step before init");
  const int64_t t = ++t_;

  // Shrinkage moments come from the weighted cloud of the previous step,
  // before any resampling replaces it.
  if (cfg_.kernel == KernelStrategy::KsPfso) kstate_.refresh_ks_state(ps_);

  RngStream res_rng = root_.substream(stream_channel::kResample, static_cast<uint64_t>(t), 0);
  resampled_ = maybe_resample(ps_, cfg_.c_ess, cfg_.resampling, res_rng);

  const double h = sched_.learning_rate(t - 1);
  heavy_ = (cfg_.kernel == KernelStrategy::Gpfso || cfg_.kernel == KernelStrategy::GpfsoMix) &&
           sched_.is_breakpoint(t - 1);

  origin_buf_.swap(ps_.particles);
  if (exec_.mode == ExecMode::OpenMP)
    advance_all_openmp(y, t, h);
  else
    advance_all_serial(y, t, h);

  ps_.renormalize(t);
  update_estimates();
}

void Optimizer::update_estimates() {
  weighted_mean(ps_, theta_tilde_);
  const int64_t k = t_ - cfg_.burn_in;
  if (k <= 1) {
    theta_bar_ = theta_tilde_;
  } else {
    const double kd = static_cast<double>(k);
    for (int j = 0; j < ps_.dim; ++j)
      theta_bar_[j] = ((kd - 1.0) * theta_bar_[j] + theta_tilde_[j]) / kd;
  }
  ess_ = ess(ps_.weights);
}

namespace {

void record_row(Trace& trace, const Optimizer& opt, const std::vector<double>* truth) {
  TraceRow row;
  row.t = opt.step_index();
  row.theta_tilde.assign(opt.theta_tilde().begin(), opt.theta_tilde().end());
  row.theta_bar.assign(opt.theta_bar().begin(), opt.theta_bar().end());
  row.ess = opt.current_ess();
  row.resampled = opt.last_resampled();
  if (truth != nullptr) {
    row.err_tilde_l2 = norm_l2_diff(row.theta_tilde, *truth);
    row.err_bar_l2 = norm_l2_diff(row.theta_bar, *truth);
    row.err_tilde_max = norm_max_diff(row.theta_tilde, *truth);
    row.err_bar_max = norm_max_diff(row.theta_bar, *truth);
  }
  trace.rows.push_back(std::move(row));
}

int64_t next_record_step(int64_t t, const RecordOptions& rec) {
  if (rec.every > 0) return t + rec.every;
  const double g = rec.geometric > 1.0 ? rec.geometric : 1.02;
  return std::max(t + 1, static_cast<int64_t>(std::ceil(static_cast<double>(t) * g)));
}

}  // namespace

Trace run(const Model& model, PriorSampler prior, ObservationStream& stream,
          const GpfsoConfig& cfg, const RecordOptions& rec, ExecPolicy exec) {
  Observation y;
  if (!stream.next(y)) throw GpfsoError("observation stream produced no data");

  Optimizer opt(model, std::move(prior), cfg, exec);
  opt.init(y);

  Trace trace;
  trace.dim = model.dim();
  const std::vector<double>* truth = model.true_param();

  record_row(trace, opt, truth);
  int64_t next_record = next_record_step(1, rec);
  while (stream.next(y)) {
    opt.step(y);
    if (opt.step_index() == next_record) {
      record_row(trace, opt, truth);
      next_record = next_record_step(next_record, rec);
    }
  }
  if (trace.rows.back().t != opt.step_index()) record_row(trace, opt, truth);
  return trace;
}

Trace adagrad_run(const GradientModel& model, std::vector<double> theta0,
                  ObservationStream& stream, const AdagradConfig& acfg,
                  const RecordOptions& rec) {
  const int d = model.dim();
  if (static_cast<int>(theta0.size()) != d)
    throw ConfigError("adagrad_run: theta0 dimension mismatch");

  std::vector<double> theta = std::move(theta0);
  std::vector<double> bar(theta);
  std::vector<double> acc(d, 0.0), grad(d, 0.0);
  const std::vector<double>* truth = model.true_param();

  Trace trace;
  trace.dim = d;
  auto record = [&](int64_t t) {
    TraceRow row;
    row.t = t;
    row.theta_tilde = theta;
    row.theta_bar = bar;
    row.ess = kNaN;
    row.resampled = false;
    if (truth != nullptr) {
      row.err_tilde_l2 = norm_l2_diff(theta, *truth);
      row.err_bar_l2 = norm_l2_diff(bar, *truth);
      row.err_tilde_max = norm_max_diff(theta, *truth);
      row.err_bar_max = norm_max_diff(bar, *truth);
    }
    trace.rows.push_back(std::move(row));
  };

  Observation y;
  int64_t t = 0;
  int64_t next_record = 1;
  while (stream.next(y)) {
    ++t;
    model.grad_log_density(theta, y, grad);
    for (int j = 0; j < d; ++j)
      if (!std::isfinite(grad[j])) throw NonFiniteGradient(t);
    for (int j = 0; j < d; ++j) {
      acc[j] += grad[j] * grad[j];
      theta[j] += acfg.step_size * grad[j] / std::sqrt(acc[j] + acfg.epsilon);
    }
    const double td = static_cast<double>(t);
    for (int j = 0; j < d; ++j) bar[j] = ((td - 1.0) * bar[j] + theta[j]) / td;
    if (t == next_record) {
      record(t);
      next_record = next_record_step(t, rec);
    }
  }
  if (t == 0) throw GpfsoError("observation stream produced no data");
  if (trace.rows.empty() || trace.rows.back().t != t) record(t);
  return trace;
}

}  // namespace gpfso
