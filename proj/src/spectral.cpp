#include "fkl/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace fkl {

static constexpr double kTwoPi = 6.283185307179586476925286766559;

SpectralCoeffs SpectralCoeffs::zeros(int n_modes, int out_dim) {
  SpectralCoeffs c;
  c.n_modes = n_modes;
  c.out_dim = out_dim;
  c.a.assign(size_t(2 * n_modes - 1) * out_dim, 0.0);
  return c;
}

SpectralCoeffs to_spectral(const FunctionSample& f, int n_modes) {
  const int m = f.grid.m_points;
  const int d_out = f.out_dim;
  if (n_modes < 1 || n_modes > m / 2 + 1)
    throw std::invalid_argument("to_spectral: n_modes exceeds grid resolution");

  SpectralCoeffs c = SpectralCoeffs::zeros(n_modes, d_out);
  // direct DFT sums; grids are small enough that O(M K) beats pulling in an FFT
  for (int k = 0; k < n_modes; ++k) {
    const double w = kTwoPi * k / m;
    for (int j = 0; j < m; ++j) {
      const double cs = std::cos(w * j), sn = std::sin(w * j);
      for (int d = 0; d < d_out; ++d) {
        const double v = f.at(j, d);
        c.re(k, d) += v * cs;
        if (k >= 1) c.im(k, d) -= v * sn;
      }
    }
  }
  for (double& x : c.a) x /= m;
  return c;
}

FunctionSample from_spectral(const SpectralCoeffs& c, const TimeGrid& grid) {
  const int m = grid.m_points;
  const int K = c.n_modes;
  FunctionSample f;
  f.grid = grid;
  f.out_dim = c.out_dim;
  f.values.assign(size_t(m) * c.out_dim, 0.0);
  for (int k = 0; k < K; ++k) {
    // Hermitian partner doubles every mode except DC and a true Nyquist pair
    const double pair = (k == 0 || 2 * k == m) ? 1.0 : 2.0;
    const double w = kTwoPi * k / m;
    for (int j = 0; j < m; ++j) {
      const double cs = std::cos(w * j), sn = std::sin(w * j);
      for (int d = 0; d < c.out_dim; ++d) {
        const double rr = c.re(k, d);
        const double ii = k >= 1 ? c.im(k, d) : 0.0;
        f.at(j, d) += pair * (rr * cs - ii * sn);
      }
    }
  }
  return f;
}

double l2_norm_sq(const SpectralCoeffs& c) {
  double s = 0.0;
  for (int d = 0; d < c.out_dim; ++d) {
    s += c.re(0, d) * c.re(0, d);
    for (int k = 1; k < c.n_modes; ++k)
      s += 2.0 * (c.re(k, d) * c.re(k, d) + c.im(k, d) * c.im(k, d));
  }
  return s;
}

FunctionSample mirror_extend(const FunctionSample& f) {
  const int m = f.grid.m_points;
  if (m < 2) throw std::invalid_argument("mirror_extend: need at least 2 samples");
  FunctionSample g;
  g.grid.m_points = 2 * m - 2;
  g.grid.physical_horizon = 2.0 * f.grid.physical_horizon;
  g.out_dim = f.out_dim;
  g.values.resize(size_t(2 * m - 2) * f.out_dim);
  for (int j = 0; j < m; ++j)
    for (int d = 0; d < f.out_dim; ++d) g.at(j, d) = f.at(j, d);
  for (int j = 1; j < m - 1; ++j)
    for (int d = 0; d < f.out_dim; ++d) g.at(2 * m - 2 - j, d) = f.at(j, d);
  return g;
}

static SpectralCoeffs combine(const SpectralCoeffs& x, const SpectralCoeffs& y, double sy) {
  if (!x.same_shape(y)) throw std::invalid_argument("coefficient shape mismatch");
  SpectralCoeffs r = x;
  for (size_t i = 0; i < r.a.size(); ++i) r.a[i] += sy * y.a[i];
  return r;
}

SpectralCoeffs sub(const SpectralCoeffs& x, const SpectralCoeffs& y) { return combine(x, y, -1.0); }
SpectralCoeffs add(const SpectralCoeffs& x, const SpectralCoeffs& y) { return combine(x, y, 1.0); }

SpectralCoeffs scale(const SpectralCoeffs& x, double s) {
  SpectralCoeffs r = x;
  for (double& v : r.a) v *= s;
  return r;
}

}  // namespace fkl
