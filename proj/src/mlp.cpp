#include "fkl/mlp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fkl {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using CMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using CVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

double gelu(double x) { return 0.5 * x * std::erfc(-x * M_SQRT1_2); }

double gelu_grad(double x) {
  const double cdf = 0.5 * std::erfc(-x * M_SQRT1_2);
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

Mlp::Mlp(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw std::invalid_argument("Mlp: need at least one layer");
  for (int d : dims_)
    if (d < 1) throw std::invalid_argument("Mlp: layer dims must be positive");
  int off = 0;
  for (int l = 0; l + 1 < int(dims_.size()); ++l) {
    w_off_.push_back(off);
    off += dims_[l + 1] * dims_[l];
    b_off_.push_back(off);
    off += dims_[l + 1];
  }
  n_params_ = off;
}

std::vector<double> Mlp::init_params(Rng& rng) const {
  std::vector<double> p(size_t(n_params_), 0.0);
  for (int l = 0; l < n_layers(); ++l) {
    const double s = std::sqrt(6.0 / double(dims_[l] + dims_[l + 1]));
    double* w = p.data() + w_off_[l];
    for (int i = 0; i < dims_[l + 1] * dims_[l]; ++i) w[i] = rng.uniform(-s, s);
  }
  return p;
}

void Mlp::forward(const double* params, const double* X, int B, double* Y, Tape* tape) const {
  const int L = n_layers();
  if (tape) {
    tape->inputs.assign(size_t(L), {});
    tape->pre.assign(size_t(L - 1), {});
  }
  std::vector<double> cur(X, X + size_t(B) * dims_[0]);
  for (int l = 0; l < L; ++l) {
    if (tape) tape->inputs[l] = cur;
    const int di = dims_[l], dj = dims_[l + 1];
    CMatMap Xm(cur.data(), B, di);
    CMatMap W(params + w_off_[l], dj, di);
    CVecMap b(params + b_off_[l], dj);
    std::vector<double> next(size_t(B) * dj);
    MatMap Ym(next.data(), B, dj);
    Ym.noalias() = Xm * W.transpose();
    Ym.rowwise() += b.transpose();
    if (l < L - 1) {
      if (tape) tape->pre[l] = next;
      for (double& v : next) v = gelu(v);
    }
    cur = std::move(next);
  }
  std::memcpy(Y, cur.data(), sizeof(double) * size_t(B) * dims_.back());
}

void Mlp::backward(const double* params, const Tape& tape, const double* dY, int B,
                   double* grad, double* dX) const {
  const int L = n_layers();
  std::vector<double> d(dY, dY + size_t(B) * dims_.back());
  for (int l = L - 1; l >= 0; --l) {
    const int di = dims_[l], dj = dims_[l + 1];
    if (l < L - 1) {
      const double* pre = tape.pre[l].data();
      for (size_t i = 0; i < d.size(); ++i) d[i] *= gelu_grad(pre[i]);
    }
    CMatMap Dm(d.data(), B, dj);
    CMatMap In(tape.inputs[l].data(), B, di);
    CMatMap W(params + w_off_[l], dj, di);
    MatMap Gw(grad + w_off_[l], dj, di);
    VecMap Gb(grad + b_off_[l], dj);
    Gw.noalias() += Dm.transpose() * In;
    Gb.noalias() += Dm.colwise().sum().transpose();
    if (l > 0 || dX) {
      std::vector<double> dprev(size_t(B) * di);
      MatMap Pm(dprev.data(), B, di);
      Pm.noalias() = Dm * W;
      if (l == 0) {
        std::memcpy(dX, dprev.data(), sizeof(double) * dprev.size());
        return;
      }
      d = std::move(dprev);
    }
  }
}

static void write_u32(std::ofstream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

static uint32_t read_u32(std::ifstream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

void write_weights(const std::string& path, const WeightsFile& w) {
  if (w.params.size() != w.ema.size())
    throw std::invalid_argument("write_weights: params/ema length mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write("FKLW", 4);
  write_u32(out, 1);
  write_u32(out, w.n_modes);
  write_u32(out, w.out_dim);
  write_u32(out, uint32_t(w.dims.size()) - 1);
  for (int d : w.dims) write_u32(out, uint32_t(d));
  out.write(reinterpret_cast<const char*>(w.params.data()),
            std::streamsize(sizeof(double) * w.params.size()));
  out.write(reinterpret_cast<const char*>(w.ema.data()),
            std::streamsize(sizeof(double) * w.ema.size()));
  if (!out) throw std::runtime_error("short write on " + path);
}

WeightsFile read_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "FKLW", 4) != 0)
    throw std::runtime_error(path + ": not a FKLW weights file");
  const uint32_t version = read_u32(in);
  if (version != 1) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "unsupported FKLW version %u", version);
    throw std::runtime_error(buf);
  }
  WeightsFile w;
  w.n_modes = read_u32(in);
  w.out_dim = read_u32(in);
  const uint32_t n_layers = read_u32(in);
  if (n_layers == 0 || n_layers > 64) throw std::runtime_error(path + ": bad layer count");
  w.dims.resize(n_layers + 1);
  for (auto& d : w.dims) d = int(read_u32(in));
  Mlp net(w.dims);
  w.params.resize(size_t(net.n_params()));
  w.ema.resize(size_t(net.n_params()));
  in.read(reinterpret_cast<char*>(w.params.data()),
          std::streamsize(sizeof(double) * w.params.size()));
  in.read(reinterpret_cast<char*>(w.ema.data()),
          std::streamsize(sizeof(double) * w.ema.size()));
  if (!in) throw std::runtime_error(path + ": truncated weights file");
  return w;
}

}  // namespace fkl
