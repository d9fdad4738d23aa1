#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fkl/covariance.hpp"
#include "fkl/field.hpp"
#include "fkl/mlp.hpp"

namespace fkl {

struct TrainConfig {
  int iterations = 2000;
  int batch_size = 64;
  double learning_rate = 1e-3;
  int width = 128;
  int depth = 3;          // hidden layers
  double w_start = 1.0;   // Hilbert-norm share of the loss, linearly decayed
  double w_end = 0.5;
  double curriculum_switch = 0.4;  // fraction of iterations on logit-normal t
  double ln_mean = 0.0;
  double ln_std = 1.0;
  double ema_rate = 0.999;
  int eval_batch = 512;  // fixed held-out batch for the start/end loss probe
  uint64_t seed = 0;
};

// A network velocity field with the subtraction wrapper
//   v(x, t) = x + m(x, t, c) - m(x, 1, c),
// which pins v(x, 1) = x exactly for every weight state. The network input is
// [flat coefficients | sin/cos of 2 pi t 2^j, j = 0..7 | one-hot condition].
// Evaluation uses the EMA weights.
class TrainedField : public VelocityField {
 public:
  TrainedField(std::shared_ptr<const Mlp> net, std::shared_ptr<const std::vector<double>> ema,
               int n_modes, int out_dim, int condition);
  static TrainedField from_file(const std::string& path, int condition);

  void eval_batch(const double* X, const double* t, int B, double* V) const override;
  uint64_t fingerprint() const override;
  int condition() const { return cond_; }

 private:
  std::shared_ptr<const Mlp> net_;
  std::shared_ptr<const std::vector<double>> ema_;
  int cond_;
};

struct TrainResult {
  std::shared_ptr<TrainedField> field_a;
  std::shared_ptr<TrainedField> field_b;
  std::vector<double> loss_history;  // per-iteration training batch loss
  double eval_loss_start = 0.0;      // EMA loss on the fixed probe batch
  double eval_loss_end = 0.0;
  WeightsFile weights;
};

// Conditional flow-matching regression of one shared network onto both pools;
// the condition bit selects the measure. Per step: (x1, c) from the shuffled
// union, x0 ~ noise, t from the curriculum, target u = x1 - x0, loss
//   w ||v - u||^2_{L2} + (1 - w) ||v - u||^2_{CM(noise)}
// with both norms summed over the stored modes. Adam (0.9, 0.999, 1e-8), EMA
// tracked at cfg.ema_rate and used for evaluation.
TrainResult train_field(const std::vector<SpectralCoeffs>& samples_a,
                        const std::vector<SpectralCoeffs>& samples_b,
                        const GaussianMeasure& noise, const TrainConfig& cfg);

int trained_input_dim(int n_modes, int out_dim);

}  // namespace fkl
