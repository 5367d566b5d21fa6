#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "gpfso/models.hpp"
#include "gpfso/rng.hpp"
#include "test_util.hpp"

using namespace gpfso;

TEST_CASE("gaussian mean model log-density") {
  GaussianMeanModel model;
  std::vector<double> theta{1.0};
  CHECK(model.log_density(theta, {1.0, nullptr, 0}) ==
        doctest::Approx(-0.9189385332046727));  // -log(2 pi)/2
  CHECK(model.log_density(theta, {3.0, nullptr, 0}) ==
        doctest::Approx(-0.9189385332046727 - 2.0));
}

TEST_CASE("oracle recursion hand values") {
  GaussianMeanOracle oracle(0.0, 25.0, 0.5);
  oracle.step(1.0);
  CHECK(oracle.sigma_sq == doctest::Approx(25.0 / 26.0).epsilon(1e-14));
  CHECK(oracle.theta == doctest::Approx(25.0 / 26.0).epsilon(1e-14));
  CHECK(oracle.theta_bar == oracle.theta);

  // zero innovation keeps the estimate fixed
  GaussianMeanOracle frozen(2.0, 4.0, 0.5);
  for (int t = 0; t < 20; ++t) frozen.step(frozen.theta);
  CHECK(frozen.theta == doctest::Approx(2.0));
  CHECK(frozen.sigma_sq < 1.0);  // g(x) < 1 always
}

TEST_CASE("moment law matches a sample-path ensemble") {
  const double alpha = 0.5;
  const int T = 100, R = 4000;
  GaussianOracleMoments law(25.0, alpha);
  for (int t = 0; t < T; ++t) law.step();

  RngStream rng(21);
  std::vector<double> abs_tilde(R), abs_bar(R);
  for (int r = 0; r < R; ++r) {
    GaussianMeanOracle path(0.0, 25.0, alpha);
    for (int t = 0; t < T; ++t) path.step(rng.normal());
    abs_tilde[r] = std::abs(path.theta);
    abs_bar[r] = std::abs(path.theta_bar);
  }
  const double se_t = std::sqrt(testutil::variance(abs_tilde) / R);
  const double se_b = std::sqrt(testutil::variance(abs_bar) / R);
  CHECK(std::abs(testutil::mean(abs_tilde) - law.mean_abs_tilde_err()) < 4.0 * se_t);
  CHECK(std::abs(testutil::mean(abs_bar) - law.mean_abs_bar_err()) < 4.0 * se_b);
}

TEST_CASE("check loss and cqr density examples") {
  CHECK(check_loss(3.0, 0.5) == doctest::Approx(1.5));   // |u| / 2 at tau = 1/2
  CHECK(check_loss(-3.0, 0.5) == doctest::Approx(1.5));
  CHECK(check_loss(1.0, 0.99) == doctest::Approx(0.99));
  CHECK(check_loss(0.0, 0.37) == 0.0);

  CqrModel model(2, 0.5);
  std::vector<double> theta{1.0, 2.0};
  std::vector<double> x{1.0, 0.5};
  // z at the location: log(tau (1 - tau)) = log 0.25
  CHECK(model.log_density(theta, {2.0, x.data(), 2}) == doctest::Approx(std::log(0.25)));
}

TEST_CASE("cqr gradient matches finite differences away from kinks") {
  RngStream rng(22);
  for (double tau : {0.5, 0.9}) {
    CqrModel model(4, tau);
    for (int rep = 0; rep < 30; ++rep) {
      std::vector<double> theta(4), x(4);
      for (auto& v : theta) v = rng.normal() + 1.0;
      for (auto& v : x) v = rng.normal();
      x[0] = 1.0;
      double lin = 0.0;
      for (int j = 0; j < 4; ++j) lin += theta[j] * x[j];
      if (std::abs(lin) < 0.1) continue;  // keep away from the censoring kink
      const double z = lin + (rng.uniform() < 0.5 ? -1.3 : 1.7);
      Observation y{z, x.data(), 4};

      std::vector<double> grad(4);
      model.grad_log_density(theta, y, grad);
      const double eps = 1e-6;
      for (int j = 0; j < 4; ++j) {
        std::vector<double> tp = theta, tm = theta;
        tp[j] += eps;
        tm[j] -= eps;
        const double fd = (model.log_density(tp, y) - model.log_density(tm, y)) / (2.0 * eps);
        if (std::abs(fd) > 1e-12)
          CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-5));
        else
          CHECK(std::abs(grad[j]) < 1e-8);
      }
    }
  }
}

TEST_CASE("multimodal location function") {
  std::vector<double> zeros(7, 0.0), x(7, 0.4);
  CHECK(multimodal_mu(zeros, x) == doctest::Approx(7.0));
  std::vector<double> theta(7, 1.3), xz(7, 0.0);
  CHECK(multimodal_mu(theta, xz) == doctest::Approx(7.0));

  std::vector<double> t2{1.0, -1.0}, x2{1.0, 1.0};
  CHECK(multimodal_mu(t2, x2) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("multimodal support ball") {
  MultimodalRegressionModel model(3);
  CHECK(model.in_support(std::vector<double>{-1.0, -1.0, -1.0}));
  CHECK(model.in_support(std::vector<double>{17.9, -1.0, -1.0}));
  CHECK_FALSE(model.in_support(std::vector<double>{19.1, -1.0, -1.0}));
  CHECK_FALSE(model.in_support(std::vector<double>{0.0, 0.0, -21.1}));
}

TEST_CASE("sagm weights and density") {
  SagmModel model(2, 1);
  // beta_w = 0: both weights 1/2
  std::vector<double> theta{0.0, 1.0, -1.0, 0.0, 0.0};
  std::vector<double> x{1.0};
  std::vector<double> w(2);
  model.weights_at(theta, x, w);
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(0.5));

  // means +-1, unit sds, z = 0: density phi(1)
  CHECK(model.log_density(theta, {0.0, x.data(), 1}) ==
        doctest::Approx(-1.4189385332046727).epsilon(1e-12));

  // identical components collapse to a single gaussian for any weights
  std::vector<double> same{1.7, 0.3, 0.3, -0.2, -0.2};
  const double lf = model.log_density(same, {0.9, x.data(), 1});
  const double sd = std::exp(0.2);
  const double expect = -0.5 * std::log(2.0 * M_PI) - std::log(sd) -
                        0.5 * (0.9 - 0.3) * (0.9 - 0.3) / (sd * sd);
  CHECK(lf == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sagm log-sum-exp path survives extreme scale coefficients") {
  SagmModel model(2, 1);
  std::vector<double> x{1.0};
  for (double b : {50.0, -50.0}) {
    std::vector<double> theta{0.0, 1.0, -1.0, b, -b};
    const double lf = model.log_density(theta, {0.3, x.data(), 1});
    CHECK(std::isfinite(lf));
  }
}

TEST_CASE("sagm support half-space") {
  SagmModel model(2, 4);
  std::vector<double> theta(20, 0.5);
  CHECK(model.in_support(theta));
  theta[0] = -0.001;
  CHECK_FALSE(model.in_support(theta));
}

TEST_CASE("densities integrate to one over the response") {
  RngStream rng(23);

  SUBCASE("cqr (asymmetric laplace)") {
    for (double tau : {0.3, 0.5, 0.99}) {
      CqrModel model(3, tau);
      for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> theta(3), x(3);
        for (auto& v : theta) v = rng.normal();
        for (auto& v : x) v = rng.normal();
        double lin = 0.0;
        for (int j = 0; j < 3; ++j) lin += theta[j] * x[j];
        const double total = testutil::integrate_line(
            [&](double z) { return std::exp(model.log_density(theta, {z, x.data(), 3})); },
            std::max(lin, 0.0));
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
      }
    }
  }

  SUBCASE("multimodal (laplace)") {
    MultimodalRegressionModel model(4);
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<double> theta(4), x(4);
      for (auto& v : theta) v = -1.0 + rng.normal();
      for (auto& v : x) v = 2.0 * rng.uniform() - 1.0;
      const double total = testutil::integrate_line(
          [&](double z) { return std::exp(model.log_density(theta, {z, x.data(), 4})); },
          multimodal_mu(theta, x));
      CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  SUBCASE("sagm (gaussian mixture)") {
    SagmModel model(2, 4);
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<double> theta(20), x(4);
      for (auto& v : theta) v = 0.5 * rng.normal();
      theta[0] = std::abs(theta[0]);
      x[0] = 1.0;
      for (int j = 1; j < 4; ++j) x[j] = rng.normal();
      const double total = testutil::integrate_line([&](double z) {
        return std::exp(model.log_density(theta, {z, x.data(), 4}));
      });
      CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("simulators expose the published generator parameters") {
  RngStream rng(24);
  SimulatedData mm = simulate_multimodal(10, 20, rng);
  CHECK(mm.true_param == std::vector<double>(20, -1.0));
  CHECK(mm.data.size() == 10);
  CHECK(mm.data.x_dim == 20);
  for (double v : mm.data.x) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }

  SimulatedData sagm = simulate_sagm(10, rng);
  CHECK(sagm.true_param[0] == 1.0);
  CHECK(sagm.true_param[1] == doctest::Approx(0.1));
  CHECK(sagm.true_param[3] == doctest::Approx(-0.1));
  CHECK(sagm.data.x_dim == 4);
  for (int64_t i = 0; i < sagm.data.size(); ++i) CHECK(sagm.data.x[i * 4] == 1.0);
}

TEST_CASE("cqr stream censors a plausible fraction") {
  for (uint64_t seed : {31u, 32u, 33u}) {
    CqrStream stream(5, RngStream(seed), 100000);
    Observation y;
    while (stream.next(y)) {
      CHECK(y.z >= 0.0);
      CHECK(y.x[0] == 1.0);
    }
    CHECK(stream.censored_fraction() > 0.05);
    CHECK(stream.censored_fraction() < 0.25);
    CHECK(stream.true_param()[0] == 3.0);
  }
}

TEST_CASE("bootstrap stream") {
  Dataset data;
  data.x_dim = 0;
  data.z = {42.0};
  BootstrapStream single(data, RngStream(1), 100);
  Observation y;
  int n = 0;
  while (single.next(y)) {
    CHECK(y.z == 42.0);
    ++n;
  }
  CHECK(n == 100);

  Dataset ten;
  ten.x_dim = 0;
  for (int i = 0; i < 10; ++i) ten.z.push_back(static_cast<double>(i));
  const int m = 100000;
  std::vector<int> freq(10, 0);
  BootstrapStream stream(ten, RngStream(2), m);
  while (stream.next(y)) ++freq[static_cast<int>(y.z)];
  for (int i = 0; i < 10; ++i) {
    const double f = static_cast<double>(freq[i]) / m;
    CHECK(std::abs(testutil::binomial_z(f, 0.1, m)) < 4.0);
  }

  // deterministic under a fixed seed
  BootstrapStream a(ten, RngStream(3), 50), b(ten, RngStream(3), 50);
  Observation ya, yb;
  while (a.next(ya)) {
    REQUIRE(b.next(yb));
    CHECK(ya.z == yb.z);
  }
}

TEST_CASE("dataset round-trips through delimited text exactly") {
  RngStream rng(25);
  Dataset data;
  data.x_dim = 3;
  for (int i = 0; i < 20; ++i) {
    data.z.push_back(rng.normal() * 1e-7);
    for (int j = 0; j < 3; ++j) data.x.push_back(rng.normal() * std::pow(10.0, j * 5));
  }
  const auto path = std::filesystem::temp_directory_path() / "gpfso_dataset_test.csv";
  save_dataset(data, path);
  const Dataset back = load_dataset(path);
  CHECK(back.x_dim == data.x_dim);
  REQUIRE(back.size() == data.size());
  for (size_t i = 0; i < data.z.size(); ++i) CHECK(back.z[i] == data.z[i]);
  for (size_t i = 0; i < data.x.size(); ++i) CHECK(back.x[i] == data.x[i]);
  std::filesystem::remove(path);
}
