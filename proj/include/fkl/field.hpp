#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fkl/covariance.hpp"
#include "fkl/spectral.hpp"

namespace fkl {

// chained mix64 over raw bit patterns, used for field fingerprints
uint64_t hash_doubles(uint64_t h, const double* p, size_t n);

// Velocity field v(x, t) on spectral coefficients. Implementations are frozen
// after construction and safe to evaluate concurrently.
struct VelocityField {
  int n_modes = 0;
  int out_dim = 0;
  bool exact_boundary = false;  // eval(x, 1) == x

  virtual ~VelocityField() = default;

  // X and V hold B rows of (2K-1)*D flat coordinates (SpectralCoeffs layout)
  virtual void eval_batch(const double* X, const double* t, int B, double* V) const = 0;

  // stable hash of the defining state, echoed into estimate manifests
  virtual uint64_t fingerprint() const = 0;

  SpectralCoeffs eval(const SpectralCoeffs& x, double t) const;
};

// Conditional-expectation field of a Gaussian measure N(m, C_data) flowed from
// noise N(0, C_noise), evaluated mode by mode:
//   v_k(x, t) = m_k + a_k(t) (x_k - t m_k),
//   a_k(t) = (t c_k - (1-t) kappa_k) / ((1-t)^2 kappa_k + t^2 c_k).
// At t = 1 the gain is 1 and v(x, 1) = x.
class AnalyticGaussianField : public VelocityField {
 public:
  AnalyticGaussianField(SpectralCoeffs mean, const DiagonalCovariance& data_cov,
                        const DiagonalCovariance& noise_cov);

  void eval_batch(const double* X, const double* t, int B, double* V) const override;
  uint64_t fingerprint() const override;

 private:
  std::vector<double> mean_;       // flat
  std::vector<double> data_lam_;   // flat, per coordinate
  std::vector<double> noise_lam_;  // flat, per coordinate
};

// Exact velocity field of the empirical measure over a finite pool:
//   v(x, t) = (E[X1 | X_t = x] - x) / (1 - t)
// with pool weights softmax( -||x - t p_i||^2_w / (2 (1-t)^2) ), w_k = parseval
// weight / kappa_k over all stored modes. For t >= 1 - t_collapse the weights
// have collapsed numerically and the nearest pool atom is used directly.
class EmpiricalSoftmaxField : public VelocityField {
 public:
  EmpiricalSoftmaxField(const std::vector<SpectralCoeffs>& pool,
                        const DiagonalCovariance& noise_cov, double t_collapse = 1e-3);

  void eval_batch(const double* X, const double* t, int B, double* V) const override;
  uint64_t fingerprint() const override;

  int pool_size() const { return n_pool_; }

  // softmax weights over the pool at (x, t); exposed for the weight-sum and
  // permutation property tests
  std::vector<double> weights(const SpectralCoeffs& x, double t) const;

 private:
  int n_pool_ = 0;
  double t_collapse_;
  std::vector<double> pool_;  // n_pool x F, row-major
  std::vector<double> pw_;    // pool * w, row-major
  std::vector<double> pn_;    // ||p_i||^2_w
  std::vector<double> w_;     // per-coordinate kernel weights
};

}  // namespace fkl
