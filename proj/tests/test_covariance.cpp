#include <cmath>
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "fkl/covariance.hpp"
#include "fkl/rng.hpp"

using namespace fkl;

TEST_CASE("matern spectrum values") {
  DiagonalCovariance c = matern_covariance(2.0, 3.0, 2.0, 5, 1);
  CHECK(c.at(0, 0) == doctest::Approx(2.0 / 81.0).epsilon(1e-14));
  // frozen: 2 (4 pi^2 + 9)^-2
  CHECK(c.at(1, 0) == doctest::Approx(0.0008510069849025667).epsilon(1e-12));
  CHECK(c.at(2, 0) < c.at(1, 0));
}

TEST_CASE("identity covariance is flat") {
  DiagonalCovariance c = identity_covariance(4, 2);
  for (int k = 0; k < 4; ++k)
    for (int d = 0; d < 2; ++d) CHECK(c.at(k, d) == 1.0);
}

TEST_CASE("sampling matches the spectrum") {
  DiagonalCovariance cov = matern_covariance(1.0, 3.0, 1.0, 4, 1);
  GaussianMeasure mu = centered_measure(cov);
  Rng rng(21, 0);
  const int n = 20000;
  std::vector<double> s0(n), re1(n), im1(n);
  for (int i = 0; i < n; ++i) {
    SpectralCoeffs x = sample(mu, rng);
    s0[i] = x.re(0, 0);
    re1[i] = x.re(1, 0);
    im1[i] = x.im(1, 0);
  }
  auto var = [&](const std::vector<double>& v) {
    double m = 0, ss = 0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) ss += (x - m) * (x - m);
    return ss / (v.size() - 1);
  };
  // DC carries the full mode variance, complex modes split it across Re/Im
  CHECK(var(s0) == doctest::Approx(cov.at(0, 0)).epsilon(0.06));
  CHECK(var(re1) == doctest::Approx(cov.at(1, 0) / 2).epsilon(0.06));
  CHECK(var(im1) == doctest::Approx(cov.at(1, 0) / 2).epsilon(0.06));
}

TEST_CASE("sample honors a nonzero mean") {
  DiagonalCovariance cov = matern_covariance(1.0, 3.0, 2.0, 3, 1);
  SpectralCoeffs m = SpectralCoeffs::zeros(3, 1);
  m.im(1, 0) = -0.1;
  GaussianMeasure mu{m, cov};
  Rng rng(22, 0);
  double acc = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) acc += sample(mu, rng).im(1, 0);
  CHECK(acc / n == doctest::Approx(-0.1).epsilon(0.05));
}

TEST_CASE("cm_norm_sq hand value") {
  DiagonalCovariance cov = custom_covariance({4.0, 0.5}, 1);
  SpectralCoeffs x = SpectralCoeffs::zeros(2, 1);
  x.re(0, 0) = 2.0;
  x.re(1, 0) = 1.0;
  x.im(1, 0) = 3.0;
  // 4/4 + 2 (1 + 9) / 0.5 = 41
  CHECK(cm_norm_sq(x, cov, 2) == doctest::Approx(41.0).epsilon(1e-14));
}

TEST_CASE("flat weights and truncation") {
  DiagonalCovariance cov = custom_covariance({1.0, 0.5, 0.25}, 1);
  std::vector<double> w = flat_cm_weights(cov, 3);
  REQUIRE(w.size() == 5);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 4.0);
  CHECK(w[2] == 8.0);
  CHECK(w[3] == 4.0);
  CHECK(w[4] == 8.0);

  std::vector<double> w2 = flat_cm_weights(cov, 2);
  CHECK(w2[0] == 1.0);
  CHECK(w2[1] == 4.0);
  CHECK(w2[2] == 0.0);
  CHECK(w2[3] == 4.0);
  CHECK(w2[4] == 0.0);
}

TEST_CASE("roughened empirical covariance recovers k^2-scaled spectra") {
  DiagonalCovariance truth = matern_covariance(1.0, 3.0, 1.0, 6, 1);
  GaussianMeasure mu = centered_measure(truth);
  Rng rng(30, 0);
  std::vector<SpectralCoeffs> pool;
  for (int i = 0; i < 20000; ++i) pool.push_back(sample(mu, rng));
  DiagonalCovariance r = roughened_empirical_covariance(pool);
  // per-coordinate variance is lambda/2 for complex modes, scaled by k^2
  CHECK(r.at(0, 0) == doctest::Approx(truth.at(0, 0)).epsilon(0.08));
  for (int k = 1; k < 6; ++k)
    CHECK(r.at(k, 0) ==
          doctest::Approx(k * k * truth.at(k, 0) / 2.0).epsilon(0.08));

  CHECK_THROWS(roughened_empirical_covariance({pool[0]}));
}

TEST_CASE("roughened floor kicks in for constant pools") {
  std::vector<SpectralCoeffs> pool(5, SpectralCoeffs::zeros(3, 1));
  DiagonalCovariance r = roughened_empirical_covariance(pool);
  for (int k = 0; k < 3; ++k) CHECK(r.at(k, 0) >= 1e-8 * std::max(1, k * k) * 0.999);
}

TEST_CASE("trace diagnostic flags summable spectra") {
  TraceDiagnostic good = trace_diagnostic(matern_covariance(1.0, 3.0, 1.0, 64, 1));
  CHECK(good.trace_class_flag);
  CHECK(good.tail_decay_exponent == doctest::Approx(2.0).epsilon(0.1));

  TraceDiagnostic flat = trace_diagnostic(identity_covariance(64, 1));
  CHECK_FALSE(flat.trace_class_flag);
  CHECK(std::fabs(flat.tail_decay_exponent) < 0.05);
}

TEST_CASE("covariance csv dump") {
  DiagonalCovariance c = matern_covariance(1.0, 3.0, 1.0, 3, 1);
  const char* path = "cov_test_tmp.csv";
  write_covariance_csv(path, c);
  FILE* f = std::fopen(path, "r");
  REQUIRE(f);
  char line[128];
  REQUIRE(std::fgets(line, sizeof line, f));
  CHECK(std::string(line).rfind("k,d,lambda", 0) == 0);
  int rows = 0;
  while (std::fgets(line, sizeof line, f)) ++rows;
  std::fclose(f);
  std::remove(path);
  CHECK(rows == 3);
}
