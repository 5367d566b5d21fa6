#include <doctest.h>

#include <cmath>
#include <vector>

#include "gpfso/rng.hpp"
#include "test_util.hpp"

using gpfso::RngStream;

TEST_CASE("philox4x32-10 known-answer vectors") {
  // reference vectors from the Random123 distribution
  auto out = gpfso::philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);

  out = gpfso::philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          {0xffffffffu, 0xffffffffu});
  CHECK(out[0] == 0x408f276du);
  CHECK(out[1] == 0x41c83b0eu);
  CHECK(out[2] == 0xa20bc7c6u);
  CHECK(out[3] == 0x6d5451fdu);

  out = gpfso::philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          {0xa4093822u, 0x299f31d0u});
  CHECK(out[0] == 0xd16cfe09u);
  CHECK(out[1] == 0x94fdccebu);
  CHECK(out[2] == 0x5001e420u);
  CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("identical seed and call sequence give identical draws") {
  RngStream a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    CHECK(a.gamma(2.5) == b.gamma(2.5));
  }
  RngStream c(43);
  bool any_diff = false;
  RngStream a2(42);
  for (int i = 0; i < 10; ++i) any_diff = any_diff || (a2.uniform() != c.uniform());
  CHECK(any_diff);
}

TEST_CASE("substreams are deterministic and independent of consumption order") {
  RngStream root(7);
  RngStream s1 = root.substream(gpfso::stream_channel::kProposal, 12, 3);
  // consuming the root or other substreams does not disturb s1
  for (int i = 0; i < 17; ++i) root.uniform();
  RngStream s1_again = RngStream(7).substream(gpfso::stream_channel::kProposal, 12, 3);
  for (int i = 0; i < 100; ++i) CHECK(s1.uniform() == s1_again.uniform());

  RngStream s2 = root.substream(gpfso::stream_channel::kProposal, 12, 4);
  int n_equal = 0;
  RngStream s1b = RngStream(7).substream(gpfso::stream_channel::kProposal, 12, 3);
  for (int i = 0; i < 100; ++i) n_equal += s1b.uniform() == s2.uniform();
  CHECK(n_equal == 0);
}

TEST_CASE("uniform moments") {
  RngStream rng(1);
  const int n = 100000;
  std::vector<double> xs(n);
  for (double& x : xs) {
    x = rng.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
  }
  CHECK(std::abs(testutil::mean(xs) - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(testutil::variance(xs) - 1.0 / 12.0) < 4.0 * (1.0 / 12.0) * std::sqrt(2.0 / n));
}

TEST_CASE("normal moments and central mass") {
  RngStream rng(2);
  const int n = 100000;
  std::vector<double> xs(n);
  int central = 0;
  for (double& x : xs) {
    x = rng.normal();
    central += std::abs(x) < 1.959963984540054;
  }
  CHECK(std::abs(testutil::mean(xs)) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(testutil::variance(xs) - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(testutil::binomial_z(central / static_cast<double>(n), 0.95, n)) < 4.0);
}

TEST_CASE("gamma moments for shapes above and below one") {
  RngStream rng(3);
  const int n = 200000;
  for (double shape : {0.75, 1.0, 2.5}) {
    std::vector<double> xs(n);
    for (double& x : xs) x = rng.gamma(shape);
    // mean = shape, var = shape
    CHECK(std::abs(testutil::mean(xs) - shape) < 4.0 * std::sqrt(shape / n));
    CHECK(std::abs(testutil::variance(xs) - shape) < 0.05 * shape);
  }
  CHECK_THROWS(rng.gamma(0.0));
}

TEST_CASE("chi-square mean matches dof") {
  RngStream rng(4);
  const int n = 100000;
  for (double dof : {1.5, 3.0, 50.0}) {
    std::vector<double> xs(n);
    for (double& x : xs) x = rng.chi_square(dof);
    CHECK(std::abs(testutil::mean(xs) - dof) < 4.0 * std::sqrt(2.0 * dof / n));
  }
}
