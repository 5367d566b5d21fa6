#include <doctest.h>

#include <cmath>
#include <vector>

#include "gpfso/core.hpp"
#include "gpfso/rng.hpp"
#include "test_util.hpp"

using namespace gpfso;

TEST_CASE("normalize_weights basic cases") {
  std::vector<double> w(3);

  const double ln1 = normalize_weights(std::vector<double>{0.0, 0.0, 0.0}, w);
  for (double x : w) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(ln1 == doctest::Approx(std::log(3.0)).epsilon(1e-14));

  std::vector<double> w2(2);
  normalize_weights(std::vector<double>{0.0, kNegInf}, w2);
  CHECK(w2[0] == 1.0);
  CHECK(w2[1] == 0.0);

  normalize_weights(std::vector<double>{std::log(2.0), 0.0, 0.0}, w);
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(w[2] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("normalize_weights rejects total degeneracy") {
  std::vector<double> w(2);
  CHECK_THROWS_AS(normalize_weights(std::vector<double>{kNegInf, kNegInf}, w, 17),
                  AllWeightsZero);
  try {
    normalize_weights(std::vector<double>{kNegInf, kNegInf}, w, 17);
  } catch (const AllWeightsZero& e) {
    CHECK(e.step == 17);
  }
}

TEST_CASE("normalize_weights shift invariance") {
  RngStream rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 1 + static_cast<int>(rng.uniform() * 20);
    std::vector<double> lw(n), wa(n), wb(n), shifted(n);
    for (double& x : lw) x = 40.0 * (rng.uniform() - 0.5);
    const double c = 200.0 * (rng.uniform() - 0.5);
    for (int i = 0; i < n; ++i) shifted[i] = lw[i] + c;
    normalize_weights(lw, wa);
    normalize_weights(shifted, wb);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(wa[i] == doctest::Approx(wb[i]).epsilon(1e-12));
      sum += wa[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("weights are zero exactly for dead particles") {
  std::vector<double> w(4);
  normalize_weights(std::vector<double>{1.0, kNegInf, -3.0, kNegInf}, w);
  CHECK(w[1] == 0.0);
  CHECK(w[3] == 0.0);
  CHECK(w[0] > 0.0);
  CHECK(w[2] > 0.0);
}

TEST_CASE("weighted_mean examples") {
  ParticleSystem ps(2, 2);
  ps.particles = {0.0, 0.0, 2.0, 2.0};
  ps.weights = {0.5, 0.5};
  std::vector<double> out(2);
  weighted_mean(ps, out);
  CHECK(out[0] == doctest::Approx(1.0));
  CHECK(out[1] == doctest::Approx(1.0));

  ParticleSystem single(1, 3);
  single.particles = {1.0, -2.0, 5.0};
  single.weights = {1.0};
  std::vector<double> out3(3);
  weighted_mean(single, out3);
  CHECK(out3[0] == 1.0);
  CHECK(out3[1] == -2.0);
  CHECK(out3[2] == 5.0);

  ParticleSystem pair(2, 1);
  pair.particles = {0.0, 4.0};
  pair.weights = {0.75, 0.25};
  std::vector<double> out1(1);
  weighted_mean(pair, out1);
  CHECK(out1[0] == doctest::Approx(1.0));
}

TEST_CASE("weighted_mean affine equivariance") {
  RngStream rng(13);
  const int d = 3;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform() * 10);
    ParticleSystem ps(n, d);
    std::vector<double> lw(n);
    for (auto& v : ps.particles) v = rng.normal();
    for (auto& v : lw) v = rng.normal();
    normalize_weights(lw, ps.weights);

    std::vector<double> a(d * d), b(d);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();

    ParticleSystem mapped(n, d);
    mapped.weights = ps.weights;
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < d; ++r) {
        double acc = b[r];
        for (int c = 0; c < d; ++c) acc += a[r * d + c] * ps.particles[i * d + c];
        mapped.particles[i * d + r] = acc;
      }

    std::vector<double> m(d), mm(d);
    weighted_mean(ps, m);
    weighted_mean(mapped, mm);
    for (int r = 0; r < d; ++r) {
      double expect = b[r];
      for (int c = 0; c < d; ++c) expect += a[r * d + c] * m[c];
      CHECK(mm[r] == doctest::Approx(expect).epsilon(1e-10));
    }
  }
}

TEST_CASE("norms") {
  std::vector<double> a{1.0, 2.0}, b{4.0, 6.0};
  CHECK(norm_l2_diff(a, b) == doctest::Approx(5.0));
  CHECK(norm_max_diff(a, b) == doctest::Approx(4.0));
}

TEST_CASE("config validation") {
  GpfsoConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  GpfsoConfig bad = cfg;
  bad.c_ess = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.c_ess = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.nu = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.schedule.rho = 0.6;  // >= min(alpha, 1) with alpha = 0.5
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.kernel = KernelStrategy::GpfsoMix;
  bad.mix_variant = MixVariant::Student;
  bad.mix_nu_prime = bad.nu + 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.kernel = KernelStrategy::KsPfso;
  bad.ks_iota = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
