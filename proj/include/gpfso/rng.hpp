#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace gpfso {

// One 10-round Philox4x32 block: 128-bit counter + 64-bit key -> 4x32 bits.
namespace detail {

inline void philox_mul_hilo(uint32_t a, uint32_t b, uint32_t& lo, uint32_t& hi) {
  const uint64_t p = static_cast<uint64_t>(a) * b;
  lo = static_cast<uint32_t>(p);
  hi = static_cast<uint32_t>(p >> 32);
}

inline void philox_round(std::array<uint32_t, 4>& c, const std::array<uint32_t, 2>& k) {
  uint32_t lo0, hi0, lo1, hi1;
  philox_mul_hilo(0xD2511F53u, c[0], lo0, hi0);
  philox_mul_hilo(0xCD9E8D57u, c[2], lo1, hi1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace detail

inline std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 4>& counter,
                                          const std::array<uint32_t, 2>& key) {
  std::array<uint32_t, 4> c = counter;
  std::array<uint32_t, 2> k = key;
  detail::philox_round(c, k);
  for (int round = 1; round < 10; ++round) {
    k[0] += 0x9E3779B9u;
    k[1] += 0xBB67AE85u;
    detail::philox_round(c, k);
  }
  return c;
}

// Identifiers for the independent randomness channels of a run. Substreams
// are keyed by (channel, step, particle) so per-particle draws do not depend
// on thread scheduling or on how many draws other particles consumed.
namespace stream_channel {
inline constexpr uint8_t kPrior = 1;
inline constexpr uint8_t kProposal = 2;
inline constexpr uint8_t kMixSelect = 3;
inline constexpr uint8_t kResample = 4;
inline constexpr uint8_t kSimInit = 5;
inline constexpr uint8_t kSimStream = 6;
}  // namespace stream_channel

// Counter-based random stream. The generator state is (seed, substream id,
// block index); identical seed and call sequence give identical draws on any
// machine, and forking a substream never perturbs the parent.
class RngStream {
 public:
  explicit RngStream(uint64_t seed, uint64_t substream_id = 0)
      : seed_(seed), sid_(substream_id) {}

  // Derives the substream for (channel, step, index). step must fit 32 bits
  // and index 24 bits; both are checked.
  RngStream substream(uint8_t channel, uint64_t step, uint64_t index) const;
  RngStream substream(uint64_t sid) const { return RngStream(seed_, sid); }

  uint64_t seed() const { return seed_; }

  uint32_t next_u32() {
    if (buf_pos_ == 4) refill();
    return buf_[buf_pos_++];
  }

  uint64_t next_u64() {
    const uint64_t lo = next_u32();
    const uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  double uniform() {  // [0, 1), 53-bit resolution
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform_pos() {  // (0, 1): midpoint of the 53-bit lattice cell
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {  // standard normal, Box-Muller with cached partner
    if (has_spare_) {
      has_spare_ = false;
      return spare_normal_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double phi = 6.283185307179586476925286766559 * uniform();
    spare_normal_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  double exponential() { return -std::log(uniform_pos()); }  // unit rate

  // Marsaglia-Tsang; exact for any shape > 0, unit scale.
  double gamma(double shape);
  double chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

 private:
  void refill() {
    const std::array<uint32_t, 4> ctr = {
        static_cast<uint32_t>(block_), static_cast<uint32_t>(block_ >> 32),
        static_cast<uint32_t>(sid_), static_cast<uint32_t>(sid_ >> 32)};
    const std::array<uint32_t, 2> key = {static_cast<uint32_t>(seed_),
                                         static_cast<uint32_t>(seed_ >> 32)};
    buf_ = philox4x32(ctr, key);
    buf_pos_ = 0;
    ++block_;
  }

  uint64_t seed_;
  uint64_t sid_;
  uint64_t block_ = 0;
  std::array<uint32_t, 4> buf_{};
  int buf_pos_ = 4;  // exhausted
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gpfso
