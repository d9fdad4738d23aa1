#include "fkl/train.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "fkl/estimator.hpp"

namespace fkl {

static constexpr int kTimeFeatures = 16;  // sin/cos of 2 pi t 2^j, j = 0..7
static constexpr int kCondFeatures = 2;

int trained_input_dim(int n_modes, int out_dim) {
  return (2 * n_modes - 1) * out_dim + kTimeFeatures + kCondFeatures;
}

static void fill_input_row(double* row, const double* x, int F, double t, int cond) {
  std::memcpy(row, x, sizeof(double) * size_t(F));
  double f = 2.0 * M_PI * t;
  for (int j = 0; j < 8; ++j) {
    row[F + 2 * j] = std::sin(f);
    row[F + 2 * j + 1] = std::cos(f);
    f *= 2.0;
  }
  row[F + kTimeFeatures] = cond == 0 ? 1.0 : 0.0;
  row[F + kTimeFeatures + 1] = cond == 0 ? 0.0 : 1.0;
}

TrainedField::TrainedField(std::shared_ptr<const Mlp> net,
                           std::shared_ptr<const std::vector<double>> ema, int modes, int dim,
                           int condition)
    : net_(std::move(net)), ema_(std::move(ema)), cond_(condition) {
  n_modes = modes;
  out_dim = dim;
  exact_boundary = true;
  const int F = (2 * modes - 1) * dim;
  if (net_->in_dim() != F + kTimeFeatures + kCondFeatures || net_->out_dim() != F)
    throw std::invalid_argument("TrainedField: network shape does not match modes/dim");
  if (int(ema_->size()) != net_->n_params())
    throw std::invalid_argument("TrainedField: weight vector length mismatch");
  if (cond_ != 0 && cond_ != 1) throw std::invalid_argument("TrainedField: condition must be 0/1");
}

TrainedField TrainedField::from_file(const std::string& path, int condition) {
  WeightsFile w = read_weights(path);
  auto net = std::make_shared<Mlp>(w.dims);
  auto ema = std::make_shared<std::vector<double>>(std::move(w.ema));
  return TrainedField(std::move(net), std::move(ema), int(w.n_modes), int(w.out_dim), condition);
}

void TrainedField::eval_batch(const double* X, const double* t, int B, double* V) const {
  const int F = (2 * n_modes - 1) * out_dim;
  const int din = net_->in_dim();
  std::vector<double> in(size_t(B) * din), mt(size_t(B) * F), m1(size_t(B) * F);
  for (int b = 0; b < B; ++b)
    fill_input_row(in.data() + size_t(b) * din, X + size_t(b) * F, F, t[b], cond_);
  net_->forward(ema_->data(), in.data(), B, mt.data(), nullptr);
  for (int b = 0; b < B; ++b)
    fill_input_row(in.data() + size_t(b) * din, X + size_t(b) * F, F, 1.0, cond_);
  net_->forward(ema_->data(), in.data(), B, m1.data(), nullptr);
  for (size_t i = 0; i < mt.size(); ++i) V[i] = X[i] + (mt[i] - m1[i]);
}

uint64_t TrainedField::fingerprint() const {
  uint64_t h = mix64(0x6e65746669656c64ULL ^ uint64_t(cond_));
  for (int d : net_->dims()) h = mix64(h ^ uint64_t(d));
  return hash_doubles(h, ema_->data(), ema_->size());
}

namespace {

struct Batch {
  std::vector<double> in_t, in_1;  // B x din
  std::vector<double> xt;          // B x F
  std::vector<double> u;           // B x F
};

// round-robin over a shuffled union of the two pools; reshuffles on wrap
struct UnionSampler {
  const std::vector<SpectralCoeffs>& sa;
  const std::vector<SpectralCoeffs>& sb;
  std::vector<int> order;
  size_t cursor = 0;

  UnionSampler(const std::vector<SpectralCoeffs>& a, const std::vector<SpectralCoeffs>& b,
               Rng& rng)
      : sa(a), sb(b), order(a.size() + b.size()) {
    for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
    shuffle(rng);
  }
  void shuffle(Rng& rng) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[size_t(rng.uniform_int(i))]);
  }
  std::pair<const double*, int> next(Rng& rng) {
    if (cursor == order.size()) {
      cursor = 0;
      shuffle(rng);
    }
    const int idx = order[cursor++];
    return size_t(idx) < sa.size()
               ? std::make_pair(sa[size_t(idx)].a.data(), 0)
               : std::make_pair(sb[size_t(idx) - sa.size()].a.data(), 1);
  }
};

void draw_batch(Batch& bat, int B, int din, int F, UnionSampler& pool,
                const GaussianMeasure& noise, const TimeSampler& tsamp, Rng& rng) {
  bat.in_t.resize(size_t(B) * din);
  bat.in_1.resize(size_t(B) * din);
  bat.xt.resize(size_t(B) * F);
  bat.u.resize(size_t(B) * F);
  for (int b = 0; b < B; ++b) {
    auto [x1, cond] = pool.next(rng);
    SpectralCoeffs x0 = sample(noise, rng);
    const double t = tsamp.draw(rng);
    double* xt = bat.xt.data() + size_t(b) * F;
    double* u = bat.u.data() + size_t(b) * F;
    for (int f = 0; f < F; ++f) {
      xt[f] = t * x1[f] + (1.0 - t) * x0.a[f];
      u[f] = x1[f] - x0.a[f];
    }
    fill_input_row(bat.in_t.data() + size_t(b) * din, xt, F, t, cond);
    fill_input_row(bat.in_1.data() + size_t(b) * din, xt, F, 1.0, cond);
  }
}

// v = xt + m_t - m_1, loss = mean_b sum_f dw[f] (v - u)^2; fills dv with
// dL/dm_t (dL/dm_1 is its negation)
double batch_loss(const Mlp& net, const double* params, const Batch& bat, int B, int F,
                  const std::vector<double>& dw, Mlp::Tape* tape_t, Mlp::Tape* tape_1,
                  std::vector<double>& mt, std::vector<double>& m1, std::vector<double>& dv) {
  net.forward(params, bat.in_t.data(), B, mt.data(), tape_t);
  net.forward(params, bat.in_1.data(), B, m1.data(), tape_1);
  double loss = 0.0;
  for (size_t i = 0; i < size_t(B) * F; ++i) {
    const int f = int(i % size_t(F));
    const double r = bat.xt[i] + mt[i] - m1[i] - bat.u[i];
    loss += dw[f] * r * r;
    dv[i] = 2.0 * dw[f] * r / double(B);
  }
  return loss / double(B);
}

}  // namespace

TrainResult train_field(const std::vector<SpectralCoeffs>& samples_a,
                        const std::vector<SpectralCoeffs>& samples_b,
                        const GaussianMeasure& noise, const TrainConfig& cfg) {
  if (samples_a.empty() || samples_b.empty())
    throw std::invalid_argument("train_field: empty sample pool");
  const int K = noise.cov.n_modes, D = noise.cov.out_dim;
  for (const auto* pool : {&samples_a, &samples_b})
    for (const auto& s : *pool)
      if (s.n_modes != K || s.out_dim != D)
        throw std::invalid_argument("train_field: pool/noise shape mismatch");
  if (cfg.iterations < 0 || cfg.batch_size < 1 || cfg.depth < 1 || cfg.width < 1 ||
      cfg.eval_batch < 1)
    throw std::invalid_argument("train_field: bad config");

  const int F = (2 * K - 1) * D;
  const int din = trained_input_dim(K, D);
  std::vector<int> dims;
  dims.push_back(din);
  for (int l = 0; l < cfg.depth; ++l) dims.push_back(cfg.width);
  dims.push_back(F);
  auto net = std::make_shared<Mlp>(dims);

  Rng rng(cfg.seed, 0);
  std::vector<double> params = net->init_params(rng);
  std::vector<double> ema = params;
  const int P = net->n_params();
  std::vector<double> grad(static_cast<size_t>(P)), adam_m(size_t(P), 0.0), adam_v(size_t(P), 0.0);

  // mixed norm weights: pair weights for L2, pair/lambda for Cameron-Martin
  const std::vector<double> pw = flat_cm_weights(identity_covariance(K, D), K);
  const std::vector<double> cmw = flat_cm_weights(noise.cov, K);
  std::vector<double> dw(static_cast<size_t>(F));
  const double w_mid = 0.5 * (cfg.w_start + cfg.w_end);
  auto set_dw = [&](double w) {
    for (int f = 0; f < F; ++f) dw[f] = w * pw[f] + (1.0 - w) * cmw[f];
  };

  UnionSampler pool(samples_a, samples_b, rng);
  const TimeSampler early = TimeSampler::logit_normal(cfg.ln_mean, cfg.ln_std, 1e-12, 1.0 - 1e-12);
  const TimeSampler late = TimeSampler::uniform(1e-12, 1.0 - 1e-12);

  // fixed probe batch for the start/end EMA loss comparison, mid-decay weights
  TrainResult res;
  Rng probe_rng(cfg.seed, 0xE7A1);
  UnionSampler probe_pool(samples_a, samples_b, probe_rng);
  Batch probe;
  draw_batch(probe, cfg.eval_batch, din, F, probe_pool, noise, late, probe_rng);
  std::vector<double> pmt(size_t(cfg.eval_batch) * F), pm1(size_t(cfg.eval_batch) * F),
      pdv(size_t(cfg.eval_batch) * F);
  set_dw(w_mid);
  res.eval_loss_start =
      batch_loss(*net, ema.data(), probe, cfg.eval_batch, F, dw, nullptr, nullptr, pmt, pm1, pdv);

  Batch bat;
  Mlp::Tape tape_t, tape_1;
  std::vector<double> bmt(size_t(cfg.batch_size) * F), bm1(size_t(cfg.batch_size) * F),
      bdv(size_t(cfg.batch_size) * F);
  res.loss_history.reserve(size_t(cfg.iterations));
  for (int it = 0; it < cfg.iterations; ++it) {
    const double frac = cfg.iterations > 1 ? double(it) / double(cfg.iterations - 1) : 1.0;
    set_dw(cfg.w_start + (cfg.w_end - cfg.w_start) * frac);
    const TimeSampler& tsamp = frac < cfg.curriculum_switch ? early : late;

    draw_batch(bat, cfg.batch_size, din, F, pool, noise, tsamp, rng);
    const double loss = batch_loss(*net, params.data(), bat, cfg.batch_size, F, dw, &tape_t,
                                   &tape_1, bmt, bm1, bdv);
    if (!std::isfinite(loss)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "train_field: non-finite loss at iteration %d (seed %llu)",
                    it, (unsigned long long)cfg.seed);
      throw std::runtime_error(buf);
    }
    res.loss_history.push_back(loss);

    std::fill(grad.begin(), grad.end(), 0.0);
    net->backward(params.data(), tape_t, bdv.data(), cfg.batch_size, grad.data(), nullptr);
    for (double& g : bdv) g = -g;
    net->backward(params.data(), tape_1, bdv.data(), cfg.batch_size, grad.data(), nullptr);

    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, it + 1), c2 = 1.0 - std::pow(b2, it + 1);
    for (int p = 0; p < P; ++p) {
      adam_m[p] = b1 * adam_m[p] + (1.0 - b1) * grad[p];
      adam_v[p] = b2 * adam_v[p] + (1.0 - b2) * grad[p] * grad[p];
      params[p] -= cfg.learning_rate * (adam_m[p] / c1) / (std::sqrt(adam_v[p] / c2) + eps);
      ema[p] = cfg.ema_rate * ema[p] + (1.0 - cfg.ema_rate) * params[p];
    }
  }

  set_dw(w_mid);
  res.eval_loss_end =
      batch_loss(*net, ema.data(), probe, cfg.eval_batch, F, dw, nullptr, nullptr, pmt, pm1, pdv);

  res.weights.n_modes = uint32_t(K);
  res.weights.out_dim = uint32_t(D);
  res.weights.dims = dims;
  res.weights.params = params;
  res.weights.ema = ema;
  auto ema_ptr = std::make_shared<const std::vector<double>>(std::move(ema));
  res.field_a = std::make_shared<TrainedField>(net, ema_ptr, K, D, 0);
  res.field_b = std::make_shared<TrainedField>(net, ema_ptr, K, D, 1);
  return res;
}

}  // namespace fkl
