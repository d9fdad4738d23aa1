#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fkl/rng.hpp"

namespace fkl {

double gelu(double x);
double gelu_grad(double x);

// Plain fully connected network with GELU hidden activations and a linear
// output layer. Parameters live in one flat vector, per layer weight matrix
// (rows x cols = dims[l+1] x dims[l], row-major) followed by bias, so the
// optimizer and the EMA copy can treat them as a single array. Gradients come
// from hand-written reverse mode; see tests for the finite-difference check.
class Mlp {
 public:
  explicit Mlp(std::vector<int> dims);

  const std::vector<int>& dims() const { return dims_; }
  int in_dim() const { return dims_.front(); }
  int out_dim() const { return dims_.back(); }
  int n_layers() const { return int(dims_.size()) - 1; }
  int n_params() const { return n_params_; }

  std::vector<double> init_params(Rng& rng) const;  // Glorot uniform, zero bias

  // Caches per-layer inputs and pre-activations from forward for backward.
  struct Tape {
    std::vector<std::vector<double>> inputs;  // inputs[l]: B x dims[l]
    std::vector<std::vector<double>> pre;     // pre[l]:    B x dims[l+1]
  };

  // X: B x in_dim row-major, Y: B x out_dim. tape may be null for inference.
  void forward(const double* params, const double* X, int B, double* Y, Tape* tape) const;

  // dY: B x out_dim upstream gradient. Accumulates (+=) into grad (n_params);
  // dX (B x in_dim), if non-null, receives the input gradient (overwritten).
  void backward(const double* params, const Tape& tape, const double* dY, int B,
                double* grad, double* dX) const;

  int weight_offset(int layer) const { return w_off_[layer]; }
  int bias_offset(int layer) const { return b_off_[layer]; }

 private:
  std::vector<int> dims_;
  std::vector<int> w_off_, b_off_;
  int n_params_ = 0;
};

// Binary weight snapshot: magic "FKLW", version u32, n_modes u32, out_dim u32,
// n_layers u32, layer dims u32 each, then the flat float64 weight/bias blocks,
// then the EMA blocks of the same length. Little-endian throughout.
struct WeightsFile {
  uint32_t n_modes = 0;
  uint32_t out_dim = 0;
  std::vector<int> dims;
  std::vector<double> params;
  std::vector<double> ema;
};

void write_weights(const std::string& path, const WeightsFile& w);
WeightsFile read_weights(const std::string& path);

}  // namespace fkl
