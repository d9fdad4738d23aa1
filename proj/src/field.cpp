#include "fkl/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace fkl {

uint64_t hash_doubles(uint64_t h, const double* p, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    uint64_t b;
    std::memcpy(&b, &p[i], 8);
    h = mix64(h ^ b);
  }
  return h;
}

SpectralCoeffs VelocityField::eval(const SpectralCoeffs& x, double t) const {
  if (x.n_modes != n_modes || x.out_dim != out_dim)
    throw std::invalid_argument("VelocityField::eval: shape mismatch");
  SpectralCoeffs v = SpectralCoeffs::zeros(n_modes, out_dim);
  eval_batch(x.a.data(), &t, 1, v.a.data());
  return v;
}

static std::vector<double> flatten_lam(const DiagonalCovariance& c) {
  const int K = c.n_modes, P = 2 * K - 1;
  std::vector<double> f(size_t(P) * c.out_dim);
  for (int d = 0; d < c.out_dim; ++d) {
    double* b = f.data() + size_t(d) * P;
    b[0] = c.at(0, d);
    for (int k = 1; k < K; ++k) b[k] = b[K + k - 1] = c.at(k, d);
  }
  return f;
}

AnalyticGaussianField::AnalyticGaussianField(SpectralCoeffs mean,
                                             const DiagonalCovariance& data_cov,
                                             const DiagonalCovariance& noise_cov) {
  if (mean.n_modes != data_cov.n_modes || mean.out_dim != data_cov.out_dim ||
      mean.n_modes != noise_cov.n_modes || mean.out_dim != noise_cov.out_dim)
    throw std::invalid_argument("AnalyticGaussianField: shape mismatch");
  n_modes = mean.n_modes;
  out_dim = mean.out_dim;
  exact_boundary = true;
  mean_ = mean.a;
  data_lam_ = flatten_lam(data_cov);
  noise_lam_ = flatten_lam(noise_cov);
}

void AnalyticGaussianField::eval_batch(const double* X, const double* t, int B,
                                       double* V) const {
  const size_t F = mean_.size();
  for (int b = 0; b < B; ++b) {
    const double tb = t[b];
    if (tb < 0.0 || tb > 1.0)
      throw std::invalid_argument("AnalyticGaussianField: t outside [0,1]");
    const double* x = X + size_t(b) * F;
    double* v = V + size_t(b) * F;
    for (size_t f = 0; f < F; ++f) {
      const double c = data_lam_[f], kap = noise_lam_[f];
      const double a =
          (tb * c - (1.0 - tb) * kap) / ((1.0 - tb) * (1.0 - tb) * kap + tb * tb * c);
      v[f] = mean_[f] + a * (x[f] - tb * mean_[f]);
    }
  }
}

uint64_t AnalyticGaussianField::fingerprint() const {
  uint64_t h = 0x616e616c79746963ull;
  h = hash_doubles(h, mean_.data(), mean_.size());
  h = hash_doubles(h, data_lam_.data(), data_lam_.size());
  h = hash_doubles(h, noise_lam_.data(), noise_lam_.size());
  return h;
}

EmpiricalSoftmaxField::EmpiricalSoftmaxField(const std::vector<SpectralCoeffs>& pool,
                                             const DiagonalCovariance& noise_cov,
                                             double t_collapse)
    : t_collapse_(t_collapse) {
  if (pool.empty()) throw std::invalid_argument("EmpiricalSoftmaxField: empty pool");
  n_modes = noise_cov.n_modes;
  out_dim = noise_cov.out_dim;
  for (const auto& p : pool)
    if (p.n_modes != n_modes || p.out_dim != out_dim)
      throw std::invalid_argument("EmpiricalSoftmaxField: pool shape mismatch");
  n_pool_ = int(pool.size());
  w_ = flat_cm_weights(noise_cov, noise_cov.n_modes);
  const size_t F = w_.size();
  pool_.resize(size_t(n_pool_) * F);
  pw_.resize(size_t(n_pool_) * F);
  pn_.resize(n_pool_);
  for (int i = 0; i < n_pool_; ++i) {
    double nsq = 0.0;
    for (size_t f = 0; f < F; ++f) {
      double p = pool[i].a[f];
      pool_[i * F + f] = p;
      pw_[i * F + f] = p * w_[f];
      nsq += p * p * w_[f];
    }
    pn_[i] = nsq;
  }
}

// Fixed-order four-lane dot product. Using this instead of a library gemm keeps
// results independent of batch size and buffer addresses, so batch evaluation
// is bitwise equal to row-by-row evaluation.
static double wdot(const double* a, const double* b, size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  size_t f = 0;
  for (; f + 4 <= n; f += 4) {
    s0 += a[f] * b[f];
    s1 += a[f + 1] * b[f + 1];
    s2 += a[f + 2] * b[f + 2];
    s3 += a[f + 3] * b[f + 3];
  }
  for (; f < n; ++f) s0 += a[f] * b[f];
  return (s0 + s1) + (s2 + s3);
}

void EmpiricalSoftmaxField::eval_batch(const double* X, const double* t, int B,
                                       double* V) const {
  const size_t F = w_.size();
  const int n = n_pool_;
  std::vector<double> g(static_cast<size_t>(n)), wm(static_cast<size_t>(n));
  for (int b = 0; b < B; ++b) {
    const double tb = t[b];
    if (tb < 0.0 || tb >= 1.0)
      throw std::invalid_argument("EmpiricalSoftmaxField: t must be in [0,1)");
    const double* x = X + size_t(b) * F;
    double* v = V + size_t(b) * F;
    const double s = tb * tb;

    // ||x - t p||^2_w = const(x) + t^2 pn - 2 t <x, p>_w; the x term cancels
    // in the softmax and is constant under argmin, so only g is needed
    for (int i = 0; i < n; ++i) g[i] = wdot(x, pw_.data() + size_t(i) * F, F);

    if (tb >= 1.0 - t_collapse_) {
      int best = 0;
      double bd = s * pn_[0] - 2.0 * tb * g[0];
      for (int i = 1; i < n; ++i) {
        double d2 = s * pn_[i] - 2.0 * tb * g[i];
        if (d2 < bd) {
          bd = d2;
          best = i;
        }
      }
      std::fill(wm.begin(), wm.end(), 0.0);
      wm[best] = 1.0;
    } else {
      const double inv = -1.0 / (2.0 * (1.0 - tb) * (1.0 - tb));
      double mx = -HUGE_VAL;
      for (int i = 0; i < n; ++i) {
        double l = (s * pn_[i] - 2.0 * tb * g[i]) * inv;
        wm[i] = l;
        if (l > mx) mx = l;
      }
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        double e = std::exp(wm[i] - mx);
        wm[i] = e;
        sum += e;
      }
      for (int i = 0; i < n; ++i) wm[i] /= sum;
    }

    // v = (E[X1 | X_t = x] - x) / (1 - t)
    std::fill(v, v + F, 0.0);
    for (int i = 0; i < n; ++i) {
      const double wi = wm[i];
      if (wi == 0.0) continue;
      const double* p = pool_.data() + size_t(i) * F;
      for (size_t f = 0; f < F; ++f) v[f] += wi * p[f];
    }
    for (size_t f = 0; f < F; ++f) v[f] = (v[f] - x[f]) / (1.0 - tb);
  }
}

std::vector<double> EmpiricalSoftmaxField::weights(const SpectralCoeffs& x, double t) const {
  const size_t F = w_.size();
  if (x.a.size() != F) throw std::invalid_argument("weights: shape mismatch");
  std::vector<double> out(n_pool_);
  double mx = -HUGE_VAL;
  for (int i = 0; i < n_pool_; ++i) {
    double d2 = 0.0;
    for (size_t f = 0; f < F; ++f) {
      double d = x.a[f] - t * pool_[i * F + f];
      d2 += d * d * w_[f];
    }
    double l = -d2 / (2.0 * (1.0 - t) * (1.0 - t));
    out[i] = l;
    if (l > mx) mx = l;
  }
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

uint64_t EmpiricalSoftmaxField::fingerprint() const {
  uint64_t h = 0x736f66746d6178ull;
  h = hash_doubles(h, pool_.data(), pool_.size());
  h = hash_doubles(h, w_.data(), w_.size());
  uint64_t tc;
  std::memcpy(&tc, &t_collapse_, 8);
  return mix64(h ^ tc);
}

}  // namespace fkl
