#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "fkl/field.hpp"
#include "fkl/oracle.hpp"
#include "fkl/rng.hpp"

using namespace fkl;

namespace {

std::vector<SpectralCoeffs> draw_pool(const GaussianMeasure& mu, int n, uint64_t seed) {
  Rng rng(seed, 0);
  std::vector<SpectralCoeffs> pool;
  pool.reserve(n);
  for (int i = 0; i < n; ++i) pool.push_back(sample(mu, rng));
  return pool;
}

double cm_dist(const SpectralCoeffs& a, const SpectralCoeffs& b, const DiagonalCovariance& cov) {
  return std::sqrt(cm_norm_sq(sub(a, b), cov, cov.n_modes));
}

}  // namespace

TEST_CASE("difference of two analytic fields equals the closed-form mismatch") {
  const int K = 6, D = 2;
  DiagonalCovariance data = matern_covariance(1.2, 2.0, 1.5, K, D);
  DiagonalCovariance noise = matern_covariance(0.8, 3.0, 1.0, K, D);
  SpectralCoeffs mean = SpectralCoeffs::zeros(K, D);
  mean.re(0, 0) = 0.4;
  mean.im(1, 0) = -0.25;
  mean.re(2, 1) = 0.15;
  mean.im(4, 1) = 0.05;

  AnalyticGaussianField fa(mean, data, noise);
  AnalyticGaussianField fb(SpectralCoeffs::zeros(K, D), data, noise);

  Rng rng(9, 0);
  GaussianMeasure draw{SpectralCoeffs::zeros(K, D), data};
  for (double t : {0.0, 0.17, 0.5, 0.83, 0.999}) {
    SpectralCoeffs x = sample(draw, rng);
    SpectralCoeffs diff = sub(fa.eval(x, t), fb.eval(x, t));
    SpectralCoeffs ref = gaussian_velocity_mismatch(mean, data, noise, t);
    CHECK(l2_norm_sq(sub(diff, ref)) <= 1e-24 * (1.0 + l2_norm_sq(ref)));
  }
}

TEST_CASE("analytic field pins the terminal boundary") {
  const int K = 4, D = 1;
  DiagonalCovariance data = matern_covariance(1.0, 1.0, 1.0, K, D);
  DiagonalCovariance noise = identity_covariance(K, D);

  AnalyticGaussianField centered(SpectralCoeffs::zeros(K, D), data, noise);
  CHECK(centered.exact_boundary);
  Rng rng(4, 0);
  SpectralCoeffs x = sample(GaussianMeasure{SpectralCoeffs::zeros(K, D), data}, rng);
  SpectralCoeffs vx = centered.eval(x, 1.0);
  for (size_t f = 0; f < x.a.size(); ++f) CHECK(vx.a[f] == x.a[f]);

  SpectralCoeffs mean = SpectralCoeffs::zeros(K, D);
  mean.im(1, 0) = -0.1;
  AnalyticGaussianField shifted(mean, data, noise);
  SpectralCoeffs vs = shifted.eval(x, 1.0);
  for (size_t f = 0; f < x.a.size(); ++f)
    CHECK(vs.a[f] == doctest::Approx(x.a[f]).epsilon(1e-12));

  CHECK_THROWS_AS(centered.eval(x, -0.01), std::invalid_argument);
  CHECK_THROWS_AS(centered.eval(x, 1.01), std::invalid_argument);
}

TEST_CASE("single-atom softmax field is the straight pull toward the atom") {
  const int K = 3, D = 1;
  DiagonalCovariance noise = identity_covariance(K, D);
  SpectralCoeffs p = SpectralCoeffs::zeros(K, D);
  p.re(0, 0) = 0.7;
  p.im(2, 0) = -1.3;
  EmpiricalSoftmaxField field({p}, noise);
  CHECK(field.pool_size() == 1);

  SpectralCoeffs x = SpectralCoeffs::zeros(K, D);
  x.re(1, 0) = 2.0;
  x.im(1, 0) = -0.5;
  for (double t : {0.0, 0.3, 0.77, 0.9995}) {
    SpectralCoeffs v = field.eval(x, t);
    for (size_t f = 0; f < x.a.size(); ++f)
      CHECK(v.a[f] == doctest::Approx((p.a[f] - x.a[f]) / (1.0 - t)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(field.eval(x, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(field.eval(x, -0.2), std::invalid_argument);
}

TEST_CASE("softmax weights form a distribution and start uniform") {
  const int K = 2, D = 1;
  DiagonalCovariance noise = custom_covariance({2.0, 0.3}, D);
  GaussianMeasure mu{SpectralCoeffs::zeros(K, D), custom_covariance({1.0, 0.5}, D)};
  auto pool = draw_pool(mu, 17, 5);
  EmpiricalSoftmaxField field(pool, noise);

  Rng rng(6, 0);
  SpectralCoeffs x = sample(mu, rng);

  auto w0 = field.weights(x, 0.0);
  for (double w : w0) CHECK(w == doctest::Approx(1.0 / 17).epsilon(1e-12));

  auto w = field.weights(x, 0.62);
  double s = 0.0;
  for (double wi : w) {
    CHECK(wi >= 0.0);
    CHECK(wi <= 1.0);
    s += wi;
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));

  // permuting the pool permutes the weights
  std::vector<SpectralCoeffs> rev(pool.rbegin(), pool.rend());
  EmpiricalSoftmaxField field_r(rev, noise);
  auto wr = field_r.weights(x, 0.62);
  for (int i = 0; i < 17; ++i) CHECK(wr[i] == doctest::Approx(w[17 - 1 - i]).epsilon(1e-12));
}

TEST_CASE("collapsed evaluation pulls toward the nearest pool atom") {
  const int K = 2, D = 1;
  DiagonalCovariance noise = custom_covariance({2.0, 0.3}, D);
  GaussianMeasure mu{SpectralCoeffs::zeros(K, D), custom_covariance({1.0, 0.5}, D)};
  auto pool = draw_pool(mu, 5, 3);
  EmpiricalSoftmaxField field(pool, noise, 1e-3);

  Rng rng(8, 0);
  SpectralCoeffs x = sample(mu, rng);
  const double t = 0.9993;

  std::vector<double> w = flat_cm_weights(noise, K);
  int best = -1;
  double bd = HUGE_VAL;
  for (int i = 0; i < 5; ++i) {
    double d2 = 0.0;
    for (size_t f = 0; f < x.a.size(); ++f) {
      double d = x.a[f] - t * pool[i].a[f];
      d2 += d * d * w[f];
    }
    if (d2 < bd) {
      bd = d2;
      best = i;
    }
  }
  SpectralCoeffs v = field.eval(x, t);
  for (size_t f = 0; f < x.a.size(); ++f)
    CHECK(v.a[f] == doctest::Approx((pool[best].a[f] - x.a[f]) / (1.0 - t)).epsilon(1e-13));
}

TEST_CASE("softmax field approaches the analytic posterior on a large pool") {
  const int K = 2, D = 1;
  DiagonalCovariance data = custom_covariance({1.0, 0.5}, D);
  DiagonalCovariance noise = custom_covariance({2.0, 0.3}, D);
  GaussianMeasure mu{SpectralCoeffs::zeros(K, D), data};
  auto pool = draw_pool(mu, 3000, 42);
  EmpiricalSoftmaxField soft(pool, noise);
  AnalyticGaussianField exact(SpectralCoeffs::zeros(K, D), data, noise);

  Rng rng(7, 0);
  for (double t : {0.3, 0.6}) {
    for (int rep = 0; rep < 3; ++rep) {
      SpectralCoeffs x = sample(mu, rng);
      SpectralCoeffs vs = soft.eval(x, t);
      SpectralCoeffs va = exact.eval(x, t);
      CHECK(cm_dist(vs, va, noise) < 0.15 * (std::sqrt(cm_norm_sq(va, noise, K)) + 1.0));
    }
  }
}

TEST_CASE("batch evaluation matches row-by-row evaluation") {
  const int K = 3, D = 2;
  DiagonalCovariance noise = matern_covariance(1.0, 2.0, 1.0, K, D);
  GaussianMeasure mu{SpectralCoeffs::zeros(K, D), matern_covariance(1.5, 1.0, 1.2, K, D)};
  auto pool = draw_pool(mu, 40, 11);
  EmpiricalSoftmaxField field(pool, noise);

  Rng rng(12, 0);
  const int B = 4;
  const size_t F = size_t(2 * K - 1) * D;
  std::vector<double> X(B * F), T{0.1, 0.45, 0.8, 0.9995}, V(B * F);
  std::vector<SpectralCoeffs> xs;
  for (int b = 0; b < B; ++b) {
    xs.push_back(sample(mu, rng));
    for (size_t f = 0; f < F; ++f) X[b * F + f] = xs.back().a[f];
  }
  field.eval_batch(X.data(), T.data(), B, V.data());
  for (int b = 0; b < B; ++b) {
    SpectralCoeffs v1 = field.eval(xs[b], T[b]);
    for (size_t f = 0; f < F; ++f) CHECK(V[b * F + f] == v1.a[f]);
  }
}

TEST_CASE("fingerprints are stable and sensitive") {
  const int K = 2, D = 1;
  DiagonalCovariance data = custom_covariance({1.0, 0.5}, D);
  DiagonalCovariance noise = custom_covariance({2.0, 0.3}, D);
  SpectralCoeffs mean = SpectralCoeffs::zeros(K, D);
  mean.im(1, 0) = -0.1;

  AnalyticGaussianField a1(mean, data, noise);
  AnalyticGaussianField a2(mean, data, noise);
  CHECK(a1.fingerprint() == a2.fingerprint());
  SpectralCoeffs mean2 = mean;
  mean2.im(1, 0) = -0.11;
  AnalyticGaussianField a3(mean2, data, noise);
  CHECK(a1.fingerprint() != a3.fingerprint());

  GaussianMeasure mu{mean, data};
  auto pool = draw_pool(mu, 8, 21);
  EmpiricalSoftmaxField s1(pool, noise);
  EmpiricalSoftmaxField s2(pool, noise);
  CHECK(s1.fingerprint() == s2.fingerprint());
  EmpiricalSoftmaxField s3(pool, noise, 1e-4);
  CHECK(s1.fingerprint() != s3.fingerprint());
  auto pool2 = draw_pool(mu, 8, 22);
  EmpiricalSoftmaxField s4(pool2, noise);
  CHECK(s1.fingerprint() != s4.fingerprint());
  CHECK(s1.fingerprint() != a1.fingerprint());
}

TEST_CASE("invalid pools are rejected") {
  DiagonalCovariance noise = identity_covariance(3, 1);
  CHECK_THROWS_AS(EmpiricalSoftmaxField({}, noise), std::invalid_argument);
  std::vector<SpectralCoeffs> wrong{SpectralCoeffs::zeros(2, 1)};
  CHECK_THROWS_AS(EmpiricalSoftmaxField(wrong, noise), std::invalid_argument);
}
