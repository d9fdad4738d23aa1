#pragma once

#include "fkl/covariance.hpp"
#include "fkl/spectral.hpp"

namespace fkl {

// KL(N(m_A, R) || N(m_B, R)) = 1/2 ||m_A - m_B||^2_{H_R}, summed over all stored modes
double gaussian_mean_shift_kl(const SpectralCoeffs& mean_diff,
                              const DiagonalCovariance& data_cov);

// per-mode gain of the conditional-expectation field:
// a_k(t) = (t c_k - (1-t) kappa_k) / ((1-t)^2 kappa_k + t^2 c_k)
double gaussian_field_gain(double t, double data_lam, double noise_lam);

// deterministic field mismatch between N(m, R) and N(0, R):
// vdiff_k(t) = (1-t) kappa_k / ((1-t)^2 kappa_k + t^2 c_k) * m_k
SpectralCoeffs gaussian_velocity_mismatch(const SpectralCoeffs& mean,
                                          const DiagonalCovariance& data_cov,
                                          const DiagonalCovariance& noise_cov, double t);

// One measure of the linear pair dY = c Y dt + g dW, Y_0 ~ N(m0, var0 I_D).
struct LinearSdeSpec {
  double drift_coeff = 0.0;  // c
  double diffusion = 1.0;    // g > 0
  int dim = 1;               // D
  double init_mean = 0.0;    // m0 per dimension
  double init_var = 0.0;     // var0 per dimension
};

// KL(A || B) = (cA-cB)^2/(2 g^2) * [ (M0+S0)(e^{2cA}-1)/(2cA)
//                                    + g^2 D/(2cA) ((e^{2cA}-1)/(2cA) - 1) ],
// M0 = D m0^2, S0 = D var0. Requires cA != 0; the quadrature handles cA = 0.
double linear_sde_kl_closed_form(const LinearSdeSpec& a, double c_b);

// composite Simpson over E_A||Y_t||^2 = e^{2cA t}(M0+S0) + g^2 D (e^{2cA t}-1)/(2cA),
// with the analytic cA -> 0 limit (M0+S0) + g^2 D t; n_nodes odd, >= 3
double linear_sde_kl_quadrature(const LinearSdeSpec& a, double c_b, int n_nodes);

}  // namespace fkl
