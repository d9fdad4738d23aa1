#include "fkl/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace fkl {

double gaussian_mean_shift_kl(const SpectralCoeffs& mean_diff,
                              const DiagonalCovariance& data_cov) {
  return 0.5 * cm_norm_sq(mean_diff, data_cov, data_cov.n_modes);
}

double gaussian_field_gain(double t, double data_lam, double noise_lam) {
  return (t * data_lam - (1.0 - t) * noise_lam) /
         ((1.0 - t) * (1.0 - t) * noise_lam + t * t * data_lam);
}

SpectralCoeffs gaussian_velocity_mismatch(const SpectralCoeffs& mean,
                                          const DiagonalCovariance& data_cov,
                                          const DiagonalCovariance& noise_cov, double t) {
  if (mean.n_modes != data_cov.n_modes || mean.out_dim != data_cov.out_dim ||
      mean.n_modes != noise_cov.n_modes || mean.out_dim != noise_cov.out_dim)
    throw std::invalid_argument("gaussian_velocity_mismatch: shape mismatch");
  if (t < 0.0 || t > 1.0)
    throw std::invalid_argument("gaussian_velocity_mismatch: t outside [0,1]");
  SpectralCoeffs v = SpectralCoeffs::zeros(mean.n_modes, mean.out_dim);
  for (int d = 0; d < mean.out_dim; ++d) {
    for (int k = 0; k < mean.n_modes; ++k) {
      double c = data_cov.at(k, d), kap = noise_cov.at(k, d);
      double f = (1.0 - t) * kap / ((1.0 - t) * (1.0 - t) * kap + t * t * c);
      v.re(k, d) = f * mean.re(k, d);
      if (k >= 1) v.im(k, d) = f * mean.im(k, d);
    }
  }
  return v;
}

static double second_moment(double c_a, double g, int dim, double m0s_plus_s0, double t) {
  if (c_a == 0.0) return m0s_plus_s0 + g * g * dim * t;
  double e = std::exp(2.0 * c_a * t);
  return e * m0s_plus_s0 + g * g * dim * (e - 1.0) / (2.0 * c_a);
}

double linear_sde_kl_closed_form(const LinearSdeSpec& a, double c_b) {
  if (a.diffusion <= 0) throw std::invalid_argument("linear_sde_kl: diffusion must be positive");
  if (a.drift_coeff == 0.0)
    throw std::domain_error("linear_sde_kl_closed_form: c_A = 0, use the quadrature path");
  double cA = a.drift_coeff, g = a.diffusion;
  double M0 = a.dim * a.init_mean * a.init_mean;
  double S0 = a.dim * a.init_var;
  double r = (std::exp(2.0 * cA) - 1.0) / (2.0 * cA);
  double d = cA - c_b;
  return d * d / (2.0 * g * g) * ((M0 + S0) * r + g * g * a.dim / (2.0 * cA) * (r - 1.0));
}

double linear_sde_kl_quadrature(const LinearSdeSpec& a, double c_b, int n_nodes) {
  if (n_nodes < 3 || n_nodes % 2 == 0)
    throw std::invalid_argument("linear_sde_kl_quadrature: n_nodes must be odd and >= 3");
  if (a.diffusion <= 0) throw std::invalid_argument("linear_sde_kl: diffusion must be positive");
  double cA = a.drift_coeff, g = a.diffusion;
  double ms = a.dim * a.init_mean * a.init_mean + a.dim * a.init_var;
  double h = 1.0 / (n_nodes - 1);
  double s = 0.0;
  for (int i = 0; i < n_nodes; ++i) {
    double w = (i == 0 || i == n_nodes - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    s += w * second_moment(cA, g, a.dim, ms, i * h);
  }
  s *= h / 3.0;
  double d = cA - c_b;
  return d * d / (2.0 * g * g) * s;
}

}  // namespace fkl
