#pragma once

#include <cstdint>
#include <span>

#include "gpfso/core.hpp"
#include "gpfso/rng.hpp"

namespace gpfso {

// Effective sample size 1 / sum(W^2) of normalized weights; in [1, N].
double ess(std::span<const double> weights);

// SSP resampling (Srinivasan sampling process). Counts are produced by
// pairwise residual merging: all but two entries stay integral, and mass
// moves between the open pair as a martingale until one of them hits an
// integer bound. Guarantees sum(counts) = N, counts[n] in {floor(N W^n),
// ceil(N W^n)} and E[counts[n]] = N W^n.
void ssp_resample(std::span<const double> weights, RngStream& rng, std::span<int64_t> counts);

// counts ~ Multinomial(N, W); unbiased comparison baseline.
void multinomial_resample(std::span<const double> weights, RngStream& rng,
                          std::span<int64_t> counts);

// Single-offset grid on the cumulative weights; counts deviate from N W^n
// by less than one, like SSP.
void systematic_resample(std::span<const double> weights, RngStream& rng,
                         std::span<int64_t> counts);

void resample_counts(ResamplingScheme scheme, std::span<const double> weights, RngStream& rng,
                     std::span<int64_t> counts);

// Expands counts into an ancestor assignment preserving multiset semantics:
// index n appears exactly counts[n] times, in index order.
void counts_to_assignment(std::span<const int64_t> counts, std::span<int64_t> assignment);

// ESS-triggered branch: when ess(W) <= N * c_ess the particles are redrawn
// by the configured scheme and the running log-weights reset to zero;
// otherwise particles are kept and log-weights re-centered by their max
// (a no-op after normalization). Returns whether a resample happened.
// Weights must be normalized on entry.
bool maybe_resample(ParticleSystem& ps, double c_ess, ResamplingScheme scheme, RngStream& rng);

}  // namespace gpfso
