#include "fkl/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fkl {

static void check_lambdas(DiagonalCovariance& c) {
  double mx = 0.0;
  for (double l : c.lam) {
    if (!(l > 1e-300)) throw std::invalid_argument("covariance eigenvalue must be positive");
    mx = std::max(mx, l);
  }
  c.ill_conditioned = false;
  for (double l : c.lam)
    if (l < 1e-15 * mx) c.ill_conditioned = true;
}

DiagonalCovariance matern_covariance(double sigma2, double tau, double alpha, int n_modes,
                                     int out_dim) {
  if (sigma2 <= 0 || tau <= 0 || alpha <= 0)
    throw std::invalid_argument("matern_covariance: parameters must be positive");
  if (n_modes < 1 || out_dim < 1)
    throw std::invalid_argument("matern_covariance: bad shape");
  DiagonalCovariance c;
  c.n_modes = n_modes;
  c.out_dim = out_dim;
  c.kind = CovKind::MaternOperator;
  c.sigma2 = sigma2;
  c.tau = tau;
  c.alpha = alpha;
  c.lam.resize(size_t(n_modes) * out_dim);
  for (int k = 0; k < n_modes; ++k) {
    double w = 4.0 * M_PI * M_PI * double(k) * double(k) + tau * tau;
    double l = sigma2 * std::pow(w, -alpha);
    for (int d = 0; d < out_dim; ++d) c.at(k, d) = l;
  }
  check_lambdas(c);
  return c;
}

DiagonalCovariance identity_covariance(int n_modes, int out_dim) {
  DiagonalCovariance c;
  c.n_modes = n_modes;
  c.out_dim = out_dim;
  c.kind = CovKind::Identity;
  c.lam.assign(size_t(n_modes) * out_dim, 1.0);
  return c;
}

DiagonalCovariance custom_covariance(const std::vector<double>& lam_per_mode, int out_dim) {
  DiagonalCovariance c;
  c.n_modes = int(lam_per_mode.size());
  c.out_dim = out_dim;
  c.kind = CovKind::Custom;
  c.lam.resize(size_t(c.n_modes) * out_dim);
  for (int d = 0; d < out_dim; ++d)
    for (int k = 0; k < c.n_modes; ++k) c.at(k, d) = lam_per_mode[k];
  check_lambdas(c);
  return c;
}

DiagonalCovariance roughened_empirical_covariance(const std::vector<SpectralCoeffs>& samples,
                                                  double floor_eps, double exponent) {
  if (samples.size() < 2)
    throw std::invalid_argument("roughened_empirical_covariance: need at least 2 samples");
  if (floor_eps <= 0) throw std::invalid_argument("roughened_empirical_covariance: floor_eps");
  const int K = samples[0].n_modes, D = samples[0].out_dim;
  for (const auto& s : samples)
    if (s.n_modes != K || s.out_dim != D)
      throw std::invalid_argument("roughened_empirical_covariance: shape mismatch");
  const double n = double(samples.size());

  DiagonalCovariance c;
  c.n_modes = K;
  c.out_dim = D;
  c.kind = CovKind::RoughenedEmpirical;
  c.floor_eps = floor_eps;
  c.lam.resize(size_t(K) * D);
  for (int d = 0; d < D; ++d) {
    for (int k = 0; k < K; ++k) {
      double v;
      if (k == 0) {
        double m = 0;
        for (const auto& s : samples) m += s.re(0, d);
        m /= n;
        double ss = 0;
        for (const auto& s : samples) ss += (s.re(0, d) - m) * (s.re(0, d) - m);
        v = ss / (n - 1);
      } else {
        double mr = 0, mi = 0;
        for (const auto& s : samples) {
          mr += s.re(k, d);
          mi += s.im(k, d);
        }
        mr /= n;
        mi /= n;
        double ss = 0;
        for (const auto& s : samples) {
          ss += (s.re(k, d) - mr) * (s.re(k, d) - mr);
          ss += (s.im(k, d) - mi) * (s.im(k, d) - mi);
        }
        v = ss / (2 * n - 2);
      }
      double kk = std::max(double(k), 1.0);
      c.at(k, d) = std::pow(kk, exponent) * std::max(v, floor_eps);
    }
  }
  check_lambdas(c);
  return c;
}

GaussianMeasure centered_measure(const DiagonalCovariance& cov) {
  GaussianMeasure m;
  m.mean = SpectralCoeffs::zeros(cov.n_modes, cov.out_dim);
  m.cov = cov;
  return m;
}

SpectralCoeffs sample(const GaussianMeasure& measure, Rng& rng) {
  const int K = measure.cov.n_modes, D = measure.cov.out_dim;
  SpectralCoeffs s = SpectralCoeffs::zeros(K, D);
  for (int d = 0; d < D; ++d) {
    s.re(0, d) = measure.mean.re(0, d) + rng.normal(0.0, std::sqrt(measure.cov.at(0, d)));
    for (int k = 1; k < K; ++k) {
      double sd = std::sqrt(0.5 * measure.cov.at(k, d));
      s.re(k, d) = measure.mean.re(k, d) + rng.normal(0.0, sd);
      s.im(k, d) = measure.mean.im(k, d) + rng.normal(0.0, sd);
    }
  }
  return s;
}

double cm_norm_sq(const SpectralCoeffs& f, const DiagonalCovariance& noise_cov,
                  int n_sum_modes) {
  if (f.n_modes != noise_cov.n_modes || f.out_dim != noise_cov.out_dim)
    throw std::invalid_argument("cm_norm_sq: shape mismatch");
  if (n_sum_modes < 1 || n_sum_modes > f.n_modes)
    throw std::invalid_argument("cm_norm_sq: n_sum_modes out of range");
  double s = 0.0;
  for (int d = 0; d < f.out_dim; ++d) {
    s += f.re(0, d) * f.re(0, d) / noise_cov.at(0, d);
    for (int k = 1; k < n_sum_modes; ++k)
      s += 2.0 * (f.re(k, d) * f.re(k, d) + f.im(k, d) * f.im(k, d)) / noise_cov.at(k, d);
  }
  return s;
}

std::vector<double> flat_cm_weights(const DiagonalCovariance& cov, int n_sum_modes) {
  if (n_sum_modes < 1 || n_sum_modes > cov.n_modes)
    throw std::invalid_argument("flat_cm_weights: n_sum_modes out of range");
  if (cov.ill_conditioned)
    std::fprintf(stderr,
                 "warning: covariance spans >15 decades; Cameron-Martin weights are "
                 "ill-conditioned\n");
  const int K = cov.n_modes, P = 2 * K - 1;
  std::vector<double> w(size_t(P) * cov.out_dim, 0.0);
  for (int d = 0; d < cov.out_dim; ++d) {
    double* b = w.data() + size_t(d) * P;
    b[0] = 1.0 / cov.at(0, d);
    for (int k = 1; k < n_sum_modes; ++k) {
      b[k] = 2.0 / cov.at(k, d);
      b[K + k - 1] = 2.0 / cov.at(k, d);
    }
  }
  return w;
}

TraceDiagnostic trace_diagnostic(const DiagonalCovariance& cov) {
  if (cov.n_modes < 8) throw std::invalid_argument("trace_diagnostic: need >= 8 modes");
  TraceDiagnostic t;
  for (double l : cov.lam) t.trace_truncated += l;
  // least squares slope of log lambda vs log k over the top half of modes, dim 0
  int k0 = cov.n_modes / 2;
  if (k0 < 1) k0 = 1;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int k = k0; k < cov.n_modes; ++k) {
    double x = std::log(double(k)), y = std::log(cov.at(k, 0));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  double denom = n * sxx - sx * sx;
  double slope = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
  t.tail_decay_exponent = -slope;
  t.trace_class_flag = t.tail_decay_exponent > 1.0;
  return t;
}

void write_covariance_csv(const std::string& path, const DiagonalCovariance& cov) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "k,d,lambda\n";
  out.precision(17);
  for (int d = 0; d < cov.out_dim; ++d)
    for (int k = 0; k < cov.n_modes; ++k)
      out << k << "," << d << "," << cov.at(k, d) << "\n";
}

DiagonalCovariance read_covariance_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string header;
  std::getline(in, header);
  if (header != "k,d,lambda") throw std::runtime_error(path + ": expected header k,d,lambda");
  int max_k = -1, max_d = -1;
  std::vector<std::tuple<int, int, double>> rows;
  int k, d;
  double l;
  char c1, c2;
  while (in >> k >> c1 >> d >> c2 >> l) {
    rows.emplace_back(k, d, l);
    max_k = std::max(max_k, k);
    max_d = std::max(max_d, d);
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  DiagonalCovariance cov;
  cov.n_modes = max_k + 1;
  cov.out_dim = max_d + 1;
  cov.kind = CovKind::Custom;
  cov.lam.assign(size_t(cov.n_modes) * cov.out_dim, 0.0);
  for (auto& [rk, rd, rl] : rows) cov.at(rk, rd) = rl;
  check_lambdas(cov);
  return cov;
}

}  // namespace fkl
