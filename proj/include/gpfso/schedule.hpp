#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gpfso/core.hpp"

namespace gpfso {

// Breakpoint sequence (t_p) and learning rate h_t. Breakpoints follow
//   t_p = t_{p-1} + ceil(max(A * t_{p-1}^rho * ln(t_{p-1}), B))
// so gaps grow without bound while the per-step breakpoint density vanishes.
// The list is memoized and extended on demand; streaming runs never need to
// know the horizon in advance.
class Schedule {
 public:
  Schedule(ScheduleConfig cfg, double alpha);

  double alpha() const { return alpha_; }

  // h_t = t^-alpha for t >= 1.
  double learning_rate(int64_t t) const;

  // Next breakpoint after prev (formula mode; prev >= 1).
  int64_t next_breakpoint(int64_t prev) const;

  // Membership of t in the breakpoint set; extends the memo as needed.
  bool is_breakpoint(int64_t t);

  // Pre-extends the memo so later is_breakpoint calls up to horizon are
  // read-only (safe to share across threads after this).
  void extend_to(int64_t horizon);

  std::span<const int64_t> breakpoints() const { return bps_; }

 private:
  ScheduleConfig cfg_;
  double alpha_;
  std::vector<int64_t> bps_;
};

}  // namespace gpfso
