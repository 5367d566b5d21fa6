#include "gpfso/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace gpfso {

Schedule::Schedule(ScheduleConfig cfg, double alpha) : cfg_(std::move(cfg)), alpha_(alpha) {
  if (cfg_.use_explicit) {
    bps_ = cfg_.explicit_breakpoints;
    std::sort(bps_.begin(), bps_.end());
  } else {
    bps_.push_back(cfg_.t0);
  }
}

double Schedule::learning_rate(int64_t t) const {
  return std::pow(static_cast<double>(t), -alpha_);
}

int64_t Schedule::next_breakpoint(int64_t prev) const {
  const double p = static_cast<double>(prev);
  const double gap = std::max(cfg_.A * std::pow(p, cfg_.rho) * std::log(p), cfg_.B);
  return prev + static_cast<int64_t>(std::ceil(gap));
}

void Schedule::extend_to(int64_t horizon) {
  if (cfg_.use_explicit) return;
  while (bps_.back() < horizon) bps_.push_back(next_breakpoint(bps_.back()));
}

bool Schedule::is_breakpoint(int64_t t) {
  if (t < 1) return false;
  extend_to(t);
  return std::binary_search(bps_.begin(), bps_.end(), t);
}

}  // namespace gpfso
