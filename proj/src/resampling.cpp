#include "gpfso/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace gpfso {

double ess(std::span<const double> weights) {
  double s = 0.0;
  for (double w : weights) s += w * w;
  return 1.0 / s;
}

void ssp_resample(std::span<const double> weights, RngStream& rng, std::span<int64_t> counts) {
  const int64_t n = static_cast<int64_t>(weights.size());
  std::vector<double> frac(n);
  for (int64_t k = 0; k < n; ++k) {
    const double xi = static_cast<double>(n) * weights[k];
    const double fl = std::floor(xi);
    counts[k] = static_cast<int64_t>(fl);
    frac[k] = xi - fl;
  }
  if (n == 1) {
    counts[0] = 1;
    return;
  }

  int64_t i = 0, j = 1;
  while (j < n) {
    const double da = std::min(frac[j], 1.0 - frac[i]);  // move A: mass j -> i
    const double db = std::min(frac[i], 1.0 - frac[j]);  // move B: mass i -> j
    const double s = da + db;
    if (s <= 0.0) {  // both already integral
      i = j;
      ++j;
      continue;
    }
    // P(A) = db / (da + db) makes each residual a martingale (unbiasedness).
    if (rng.uniform() < db / s) {
      if (da == 1.0 - frac[i]) {  // i reaches its ceiling
        frac[j] -= da;
        ++counts[i];
        i = j;
        ++j;
      } else {  // j drops to its floor
        frac[i] += da;
        frac[j] = 0.0;
        ++j;
      }
    } else {
      if (db == 1.0 - frac[j]) {  // j reaches its ceiling
        frac[i] -= db;
        ++counts[j];
        ++j;
      } else {  // i drops to its floor
        frac[j] += db;
        frac[i] = 0.0;
        i = j;
        ++j;
      }
    }
  }
  // In exact arithmetic the residuals sum to an integer, so the last open
  // slot ends at 0 or 1; round-off can leave it slightly off.
  if (frac[i] > 0.5) ++counts[i];
  const int64_t total = std::accumulate(counts.begin(), counts.end(), int64_t{0});
  if (total != n) counts[i] += n - total;
}

void multinomial_resample(std::span<const double> weights, RngStream& rng,
                          std::span<int64_t> counts) {
  const int64_t n = static_cast<int64_t>(weights.size());
  std::vector<double> cum(n);
  double acc = 0.0;
  for (int64_t k = 0; k < n; ++k) {
    acc += weights[k];
    cum[k] = acc;
  }
  cum[n - 1] = 1.0;
  std::fill(counts.begin(), counts.end(), int64_t{0});
  for (int64_t draw = 0; draw < n; ++draw) {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    ++counts[std::min<int64_t>(it - cum.begin(), n - 1)];
  }
}

void systematic_resample(std::span<const double> weights, RngStream& rng,
                         std::span<int64_t> counts) {
  const int64_t n = static_cast<int64_t>(weights.size());
  const double u = rng.uniform();
  double cum = 0.0;
  int64_t next = 0;  // index of the next grid point u + next
  for (int64_t k = 0; k < n; ++k) {
    cum += static_cast<double>(n) * weights[k];
    int64_t c = 0;
    while (next < n && u + static_cast<double>(next) < cum) {
      ++c;
      ++next;
    }
    counts[k] = c;
  }
  counts[n - 1] += n - next;  // round-off guard on the last interval
}

void resample_counts(ResamplingScheme scheme, std::span<const double> weights, RngStream& rng,
                     std::span<int64_t> counts) {
  switch (scheme) {
    case ResamplingScheme::Ssp: ssp_resample(weights, rng, counts); return;
    case ResamplingScheme::Multinomial: multinomial_resample(weights, rng, counts); return;
    case ResamplingScheme::Systematic: systematic_resample(weights, rng, counts); return;
  }
}

void counts_to_assignment(std::span<const int64_t> counts, std::span<int64_t> assignment) {
  int64_t pos = 0;
  for (int64_t k = 0; k < static_cast<int64_t>(counts.size()); ++k)
    for (int64_t c = 0; c < counts[k]; ++c) assignment[pos++] = k;
}

bool maybe_resample(ParticleSystem& ps, double c_ess, ResamplingScheme scheme, RngStream& rng) {
  const double e = ess(ps.weights);
  if (e > c_ess * static_cast<double>(ps.n)) {
    // keep the system; re-center kept log-weights for numerical headroom
    double max_lw = kNegInf;
    for (double lw : ps.log_weights) max_lw = std::max(max_lw, lw);
    if (std::isfinite(max_lw) && max_lw != 0.0)
      for (double& lw : ps.log_weights) lw -= max_lw;
    return false;
  }

  std::vector<int64_t> counts(ps.n);
  resample_counts(scheme, ps.weights, rng, counts);

  std::vector<double> out(ps.particles.size());
  int64_t pos = 0;
  for (int64_t k = 0; k < ps.n; ++k) {
    const double* src = ps.particles.data() + k * ps.dim;
    for (int64_t c = 0; c < counts[k]; ++c) {
      std::copy(src, src + ps.dim, out.data() + pos * ps.dim);
      ++pos;
    }
  }
  ps.particles.swap(out);
  std::fill(ps.log_weights.begin(), ps.log_weights.end(), 0.0);
  std::fill(ps.weights.begin(), ps.weights.end(), 1.0 / static_cast<double>(ps.n));
  return true;
}

}  // namespace gpfso
