#pragma once

#include <string>
#include <vector>

#include "fkl/rng.hpp"
#include "fkl/spectral.hpp"

namespace fkl {

enum class CovKind { MaternOperator, RoughenedEmpirical, Identity, Custom };

// Eigenvalues of a covariance operator diagonal in the Fourier basis,
// dim-major like SpectralCoeffs: lam[d*n_modes + k].
struct DiagonalCovariance {
  int n_modes = 0;
  int out_dim = 0;
  std::vector<double> lam;
  CovKind kind = CovKind::Custom;
  // MaternOperator parameters, kept for manifests
  double sigma2 = 0.0, tau = 0.0, alpha = 0.0;
  double floor_eps = 0.0;
  bool ill_conditioned = false;  // some lambda < 1e-15 * max(lambda)

  double at(int k, int d) const { return lam[size_t(d) * n_modes + k]; }
  double& at(int k, int d) { return lam[size_t(d) * n_modes + k]; }
};

// lambda_k = sigma2 * (4 pi^2 k^2 + tau^2)^(-alpha), same for every dimension
DiagonalCovariance matern_covariance(double sigma2, double tau, double alpha, int n_modes,
                                     int out_dim);

DiagonalCovariance identity_covariance(int n_modes, int out_dim);

// per-mode eigenvalues shared across output dimensions
DiagonalCovariance custom_covariance(const std::vector<double>& lam_per_mode, int out_dim);

// Per-mode sample variance of the coefficients with real and imaginary parts
// pooled: v_{k,d} = (sum (Re-mean)^2 + sum (Im-mean)^2) / (2n-2) for k>=1,
// plain variance for k=0. Then lambda = max(|k|,1)^exponent * max(v, floor_eps):
// exponent 2 reads "scale the coefficient by the wavenumber" as a std-dev scale.
DiagonalCovariance roughened_empirical_covariance(const std::vector<SpectralCoeffs>& samples,
                                                  double floor_eps = 1e-8,
                                                  double exponent = 2.0);

struct GaussianMeasure {
  SpectralCoeffs mean;
  DiagonalCovariance cov;
};

GaussianMeasure centered_measure(const DiagonalCovariance& cov);

// k=0 gets real N(0, lambda_0); k>=1 gets Re, Im each N(0, lambda_k/2); mean added
SpectralCoeffs sample(const GaussianMeasure& measure, Rng& rng);

// sum_d ( |f_0|^2/lambda_0 + 2 sum_{k=1}^{n_sum-1} |f_k|^2/lambda_k )
double cm_norm_sq(const SpectralCoeffs& f, const DiagonalCovariance& noise_cov, int n_sum_modes);

// Flat per-coordinate weights w_k/lambda_k matching the SpectralCoeffs layout,
// i.e. per dim [1/l_0, 2/l_1 .. 2/l_{K-1}, 2/l_1 .. 2/l_{K-1}]. Coordinates of
// modes >= n_sum_modes are zeroed; pass n_modes to keep all.
std::vector<double> flat_cm_weights(const DiagonalCovariance& cov, int n_sum_modes);

struct TraceDiagnostic {
  double trace_truncated = 0.0;
  double tail_decay_exponent = 0.0;
  bool trace_class_flag = false;
};

// decay exponent p from least squares on log lambda_k vs log k over the top
// half of stored modes; trace-class flag is p > 1
TraceDiagnostic trace_diagnostic(const DiagonalCovariance& cov);

// CSV interchange, columns k,d,lambda
void write_covariance_csv(const std::string& path, const DiagonalCovariance& cov);
DiagonalCovariance read_covariance_csv(const std::string& path);

}  // namespace fkl
