#include "gpfso/rng.hpp"

#include <stdexcept>

namespace gpfso {

RngStream RngStream::substream(uint8_t channel, uint64_t step, uint64_t index) const {
  if (step >> 32 != 0) throw std::overflow_error("RngStream: step id exceeds 32 bits");
  if (index >> 24 != 0) throw std::overflow_error("RngStream: substream index exceeds 24 bits");
  const uint64_t sid = (static_cast<uint64_t>(channel) << 56) | (step << 24) | index;
  return RngStream(seed_, sid);
}

double RngStream::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("RngStream::gamma: shape must be > 0");
  if (shape < 1.0) {
    const double boost = std::pow(uniform_pos(), 1.0 / shape);
    return gamma(shape + 1.0) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace gpfso
