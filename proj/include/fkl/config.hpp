#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fkl/covariance.hpp"
#include "fkl/estimator.hpp"
#include "fkl/sim.hpp"
#include "fkl/train.hpp"

namespace fkl {

struct CovSpec {
  std::string kind = "matern";  // matern | identity
  double sigma2 = 1.0;
  double tau = 3.0;
  double alpha = 1.0;
};

DiagonalCovariance make_covariance(const CovSpec& spec, int n_modes, int out_dim);

// Gaussian measure pair N(m, R) vs N(0, R) with m(x) = amplitude sin(2 pi f x)
// in every output dimension, flowed from noise N(0, C).
struct MeasureConfig {
  int dim = 1;
  int n_grid = 128;
  int n_modes = 65;
  double mean_amplitude = 0.2;
  int mean_frequency = 1;
  CovSpec data_cov{"matern", 2.0, 3.0, 2.0};
  CovSpec noise_cov{"matern", 1.0, 3.0, 1.0};
};

SpectralCoeffs measure_mean(const MeasureConfig& mc);

struct SystemConfig {
  std::string name = "lotka_volterra";
  double horizon = 0.0;  // 0: system default
  double dt = 0.0;       // 0: system default
  int n_paths = 100;
  // per-system parameters; members not used by a system are ignored by it
  double lv_alpha = 1.0, lv_beta = 0.4, lv_gamma = 0.1, lv_delta = 0.4;
  double rep_beta = 10.0, rep_n = 3.0, rep_k = 1.0, rep_gamma = 1.0;
  double petal_L = 1.0, petal_amp = 0.25, petal_kappa = 0.5, petal_sigma_z = 0.04,
         petal_speed = 0.2, petal_sigma_init = 0.1;
  int petal_branches = 8;
  double sde_c = 0.01, sde_g = 0.75, sde_m0 = 2.0, sde_var0 = 0.2;
  int sde_dim = 1;
  double sigma = 0.1;  // lotka_volterra / repressilator diffusion
};

SdeSystem make_system(const SystemConfig& sc);
SimConfig make_sim_config(const SystemConfig& sc, uint64_t seed);

struct FieldConfig {
  std::string backend = "softmax";  // softmax | trained | analytic
  double t_collapse = 1e-3;
  bool split_pool = true;
  bool mirror = true;
  int n_modes = 0;  // 0: half the saved grid after mirroring
  TrainConfig train;
};

struct FklSettings {
  int n_functions = 400;
  int n_time = 50;
  int n_sum_modes = 0;  // 0: all
  std::string sampler = "importance";  // importance | uniform | logit_normal
  double t_min = 1e-6;
  double t_max = 1.0 - 1e-4;
  double ln_mean = 0.0;
  double ln_std = 1.0;
};

TimeSampler make_sampler(const FklSettings& s);
FklConfig make_fkl_config(const FklSettings& s, uint64_t seed);

struct MetricSettings {
  int swd_projections = 128;
  int mwd_candidates = 256;
  int mwd_refine = 50;
  double mmd_bandwidth = 1.0;
};

struct ExperimentConfig {
  uint64_t seed = 0;
  bool seed_set = false;  // true once a config file or flag pinned it
  int threads = 1;
  std::string output_dir = ".";
  MeasureConfig measure;
  SystemConfig system;
  FieldConfig field;
  FklSettings fkl;
  MetricSettings metrics;
};

// Strict parse: every key must belong to the schema, unknown keys throw with
// the offending path. Values type-checked; missing keys keep defaults.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_json(const std::string& text);

// --seed flag > config file > FKL_SEED environment variable > 0
uint64_t resolve_seed(const ExperimentConfig& cfg, const uint64_t* flag_seed);

}  // namespace fkl
