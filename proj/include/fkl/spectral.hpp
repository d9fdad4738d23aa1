#pragma once

#include <vector>

namespace fkl {

// Uniform grid on [0,1]; sample j sits at j/(m_points-1). The original horizon T
// is kept as metadata only, all math happens on the rescaled interval.
struct TimeGrid {
  int m_points = 2;
  double physical_horizon = 1.0;

  double time(int j) const { return double(j) / double(m_points - 1); }
};

// Real signal on a TimeGrid, time-major layout: values[j*out_dim + d].
struct FunctionSample {
  TimeGrid grid;
  int out_dim = 1;
  std::vector<double> values;

  double at(int j, int d) const { return values[size_t(j) * out_dim + d]; }
  double& at(int j, int d) { return values[size_t(j) * out_dim + d]; }
};

// Truncated Fourier coefficients of a real signal, one-sided storage.
// Convention: f_k = (1/M) sum_j f(x_j) exp(-2 pi i k j / M), the Hermitian
// partner f_{-k} = conj(f_k) is implicit. Storage is flat real, dim-major:
// block d holds [Re f_0, Re f_1 .. Re f_{K-1}, Im f_1 .. Im f_{K-1}], which is
// what the field and estimator hot loops iterate over.
struct SpectralCoeffs {
  int n_modes = 0;  // K
  int out_dim = 0;  // D
  std::vector<double> a;

  static SpectralCoeffs zeros(int n_modes, int out_dim);

  int per_dim() const { return 2 * n_modes - 1; }
  size_t flat_size() const { return size_t(per_dim()) * out_dim; }

  double re(int k, int d) const { return a[size_t(d) * per_dim() + k]; }
  double& re(int k, int d) { return a[size_t(d) * per_dim() + k]; }
  // k >= 1
  double im(int k, int d) const { return a[size_t(d) * per_dim() + n_modes + k - 1]; }
  double& im(int k, int d) { return a[size_t(d) * per_dim() + n_modes + k - 1]; }

  bool same_shape(const SpectralCoeffs& o) const {
    return n_modes == o.n_modes && out_dim == o.out_dim;
  }
};

// n_modes must satisfy n_modes <= m_points/2 + 1; throws otherwise.
SpectralCoeffs to_spectral(const FunctionSample& f, int n_modes);

// Evaluates on grid.m_points torus points. When the top stored mode is the
// Nyquist pair for that grid (2*(K-1) == m_points) its single copy is used, so
// the round trip through to_spectral is exact.
FunctionSample from_spectral(const SpectralCoeffs& c, const TimeGrid& grid);

// One-sided Parseval sum: sum_d ( |f_0|^2 + 2 sum_{k>=1} |f_k|^2 ).
double l2_norm_sq(const SpectralCoeffs& c);

// Even reflection to 2M-2 samples (duplicated endpoints dropped); removes the
// wrap-around jump of non-periodic signals before to_spectral. The returned
// grid spans twice the physical horizon.
FunctionSample mirror_extend(const FunctionSample& f);

// small vector helpers used by oracles and tests
SpectralCoeffs sub(const SpectralCoeffs& x, const SpectralCoeffs& y);
SpectralCoeffs add(const SpectralCoeffs& x, const SpectralCoeffs& y);
SpectralCoeffs scale(const SpectralCoeffs& x, double s);

}  // namespace fkl
