#include "fkl/estimator.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace fkl {

TimeSampler TimeSampler::uniform(double t_min, double t_max) {
  TimeSampler s;
  s.kind = Kind::Uniform;
  s.t_min = t_min;
  s.t_max = t_max;
  s.validate();
  return s;
}

TimeSampler TimeSampler::importance(double t_min, double t_max) {
  TimeSampler s;
  s.kind = Kind::Importance;
  s.t_min = t_min;
  s.t_max = t_max;
  s.validate();
  return s;
}

TimeSampler TimeSampler::logit_normal(double mean, double std, double t_min, double t_max) {
  TimeSampler s;
  s.kind = Kind::LogitNormal;
  s.ln_mean = mean;
  s.ln_std = std;
  s.t_min = t_min;
  s.t_max = t_max;
  s.validate();
  return s;
}

void TimeSampler::validate() const {
  if (!(0.0 <= t_min && t_min < t_max && t_max < 1.0))
    throw std::invalid_argument("TimeSampler: need 0 <= t_min < t_max < 1");
  if (kind == Kind::LogitNormal && !(ln_std > 0.0))
    throw std::invalid_argument("TimeSampler: logit-normal std must be positive");
}

// antiderivative of t/(1-t)
static double mass(double t) { return -std::log1p(-t) - t; }

static double logit(double t) { return std::log(t / (1.0 - t)); }

static double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double TimeSampler::draw(Rng& rng) const {
  switch (kind) {
    case Kind::Uniform:
      return rng.uniform(t_min, t_max);
    case Kind::Importance: {
      const double a = mass(t_min), b = mass(t_max);
      const double u = a + (b - a) * rng.uniform();
      double lo = t_min, hi = t_max;
      for (int i = 0; i < 80 && hi - lo > 1e-12; ++i) {
        double mid = 0.5 * (lo + hi);
        (mass(mid) < u ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    case Kind::LogitNormal: {
      const double lo = logit(std::max(t_min, 1e-15)), hi = logit(t_max);
      for (int i = 0; i < 100000; ++i) {
        double z = rng.normal(ln_mean, ln_std);
        if (z >= lo && z <= hi) return 1.0 / (1.0 + std::exp(-z));
      }
      throw std::runtime_error("TimeSampler: logit-normal support misses [t_min, t_max]");
    }
  }
  return t_min;
}

double TimeSampler::weight(double t) const {
  const double odds = t / (1.0 - t);
  switch (kind) {
    case Kind::Uniform:
      return odds * (t_max - t_min);
    case Kind::Importance:
      return mass(t_max) - mass(t_min);
    case Kind::LogitNormal: {
      const double zn = norm_cdf((logit(t_max) - ln_mean) / ln_std) -
                        norm_cdf((logit(std::max(t_min, 1e-15)) - ln_mean) / ln_std);
      const double u = (logit(t) - ln_mean) / ln_std;
      const double phi = std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
      const double q = phi / (ln_std * t * (1.0 - t)) / zn;
      return odds / q;
    }
  }
  return 0.0;
}

const char* TimeSampler::name() const {
  switch (kind) {
    case Kind::Uniform:
      return "uniform";
    case Kind::Importance:
      return "importance_t_over_1mt";
    case Kind::LogitNormal:
      return "logit_normal";
  }
  return "?";
}

PoolSource::PoolSource(std::vector<SpectralCoeffs> p) : pool(std::move(p)) {
  if (pool.empty()) throw std::invalid_argument("PoolSource: empty pool");
  for (const auto& s : pool)
    if (!s.same_shape(pool[0])) throw std::invalid_argument("PoolSource: shape mismatch");
}

FklEstimate estimate_fkl(const VelocityField& field_a, const VelocityField& field_b,
                         const FunctionSource& src, const GaussianMeasure& noise,
                         const FklConfig& cfg, int n_threads) {
  if (field_a.n_modes != field_b.n_modes || field_a.out_dim != field_b.out_dim)
    throw std::invalid_argument("estimate_fkl: field shape mismatch");
  if (src.n_modes() != field_a.n_modes || src.out_dim() != field_a.out_dim)
    throw std::invalid_argument("estimate_fkl: source shape mismatch");
  if (noise.cov.n_modes != field_a.n_modes || noise.cov.out_dim != field_a.out_dim)
    throw std::invalid_argument("estimate_fkl: noise shape mismatch");
  if (cfg.n_function_samples < 1 || cfg.n_time_per_function < 1)
    throw std::invalid_argument("estimate_fkl: counts must be >= 1");
  cfg.sampler.validate();

  const int K = field_a.n_modes;
  const int n_sum = cfg.n_sum_modes == 0 ? K : cfg.n_sum_modes;
  const std::vector<double> wcm = flat_cm_weights(noise.cov, n_sum);
  const size_t F = wcm.size();
  const int nf = cfg.n_function_samples, nt = cfg.n_time_per_function;
  const bool same_field = &field_a == &field_b;

  std::vector<double> contrib(size_t(nf) * nt);

  auto run_range = [&](int f_lo, int f_hi) {
    std::vector<double> ts(nt), x1, xt(size_t(nt) * F), va(size_t(nt) * F),
        vb(size_t(nt) * F);
    for (int i = f_lo; i < f_hi; ++i) {
      Rng rng(cfg.seed, uint64_t(i));
      SpectralCoeffs s1 = src.draw(rng);
      x1 = s1.a;
      for (int j = 0; j < nt; ++j) ts[j] = cfg.sampler.draw(rng);
      for (int j = 0; j < nt; ++j) {
        SpectralCoeffs x0 = sample(noise, rng);
        const double t = ts[j];
        double* row = xt.data() + size_t(j) * F;
        for (size_t f = 0; f < F; ++f) row[f] = t * x1[f] + (1.0 - t) * x0.a[f];
      }
      if (same_field) {
        for (int j = 0; j < nt; ++j) contrib[size_t(i) * nt + j] = 0.0;
        continue;
      }
      field_a.eval_batch(xt.data(), ts.data(), nt, va.data());
      field_b.eval_batch(xt.data(), ts.data(), nt, vb.data());
      for (int j = 0; j < nt; ++j) {
        const double* pa = va.data() + size_t(j) * F;
        const double* pb = vb.data() + size_t(j) * F;
        double g = 0.0;
        for (size_t f = 0; f < F; ++f) {
          const double d = pa[f] - pb[f];
          g += d * d * wcm[f];
        }
        contrib[size_t(i) * nt + j] = cfg.sampler.weight(ts[j]) * g;
      }
    }
  };

  if (n_threads <= 1 || nf < 2) {
    run_range(0, nf);
  } else {
    int nw = std::min<int>(n_threads, nf);
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (int w = 0; w < nw; ++w) {
      int lo = int(int64_t(nf) * w / nw), hi = int(int64_t(nf) * (w + 1) / nw);
      pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  FklEstimate e;
  e.n_evals = int64_t(nf) * nt;
  double sum = 0.0;
  for (double c : contrib) sum += c;
  e.value = sum / double(e.n_evals);
  double ss = 0.0;
  for (double c : contrib) ss += (c - e.value) * (c - e.value);
  e.std_error = e.n_evals > 1
                    ? std::sqrt(ss / double(e.n_evals - 1) / double(e.n_evals))
                    : 0.0;
  e.n_sum_modes = n_sum;
  e.sampler = cfg.sampler.name();
  e.t_min = cfg.sampler.t_min;
  e.t_max = cfg.sampler.t_max;
  e.seed = cfg.seed;
  e.fingerprint_a = field_a.fingerprint();
  e.fingerprint_b = field_b.fingerprint();
  return e;
}

std::vector<SweepRow> sweep_axis(const VelocityField& field_a, const VelocityField& field_b,
                                 const FunctionSource& src, const GaussianMeasure& noise,
                                 const FklConfig& cfg, const std::string& axis,
                                 const std::vector<double>& values, int n_threads) {
  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (double v : values) {
    FklConfig c = cfg;
    if (axis == "n_sum_modes")
      c.n_sum_modes = int(v);
    else if (axis == "n_functions")
      c.n_function_samples = int(v);
    else if (axis == "n_time")
      c.n_time_per_function = int(v);
    else if (axis == "t_max")
      c.sampler.t_max = v;
    else
      throw std::invalid_argument("sweep_axis: unknown axis " + axis);
    SweepRow r;
    r.axis = axis;
    r.axis_value = v;
    r.est = estimate_fkl(field_a, field_b, src, noise, c, n_threads);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "axis,axis_value,value,std_error,n_evals,n_sum_modes,sampler,t_max,seed\n";
  out.precision(17);
  for (const auto& r : rows)
    out << r.axis << "," << r.axis_value << "," << r.est.value << "," << r.est.std_error
        << "," << r.est.n_evals << "," << r.est.n_sum_modes << "," << r.est.sampler << ","
        << r.est.t_max << "," << r.est.seed << "\n";
}

}  // namespace fkl
