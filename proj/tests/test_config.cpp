#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "fkl/config.hpp"

using namespace fkl;

namespace {

std::string thrown_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("full config json lands in every section") {
  const char* text = R"({
    "seed": 42,
    "threads": 2,
    "output_dir": "out",
    "measure": {
      "dim": 2, "n_grid": 64, "n_modes": 17,
      "mean_amplitude": 0.5, "mean_frequency": 3,
      "data_cov": {"kind": "matern", "sigma2": 1.5, "tau": 2.0, "alpha": 1.25},
      "noise_cov": {"kind": "identity"}
    },
    "system": {
      "name": "linear_sde", "horizon": 2.0, "dt": 0.005, "n_paths": 64,
      "sde_c": 0.1, "sde_g": 0.5, "sde_m0": 1.0, "sde_var0": 0.3, "sde_dim": 3
    },
    "field": {
      "backend": "trained", "t_collapse": 1e-4, "split_pool": false,
      "mirror": false, "n_modes": 33,
      "train": {"iterations": 10, "batch_size": 8, "learning_rate": 0.01,
                "width": 32, "depth": 2, "ema_rate": 0.99, "eval_batch": 16}
    },
    "fkl": {
      "n_functions": 200, "n_time": 25, "n_sum_modes": 16,
      "sampler": "logit_normal", "t_min": 0.001, "t_max": 0.95,
      "ln_mean": 0.5, "ln_std": 1.5
    },
    "metrics": {"swd_projections": 64, "mwd_candidates": 128, "mwd_refine": 20,
                "mmd_bandwidth": 2.0}
  })";
  ExperimentConfig cfg = parse_config_json(text);
  CHECK(cfg.seed == 42);
  CHECK(cfg.seed_set);
  CHECK(cfg.threads == 2);
  CHECK(cfg.output_dir == "out");
  CHECK(cfg.measure.dim == 2);
  CHECK(cfg.measure.n_grid == 64);
  CHECK(cfg.measure.n_modes == 17);
  CHECK(cfg.measure.mean_amplitude == 0.5);
  CHECK(cfg.measure.mean_frequency == 3);
  CHECK(cfg.measure.data_cov.kind == "matern");
  CHECK(cfg.measure.data_cov.alpha == 1.25);
  CHECK(cfg.measure.noise_cov.kind == "identity");
  CHECK(cfg.system.name == "linear_sde");
  CHECK(cfg.system.horizon == 2.0);
  CHECK(cfg.system.sde_dim == 3);
  CHECK(cfg.field.backend == "trained");
  CHECK(cfg.field.split_pool == false);
  CHECK(cfg.field.mirror == false);
  CHECK(cfg.field.n_modes == 33);
  CHECK(cfg.field.train.iterations == 10);
  CHECK(cfg.field.train.width == 32);
  CHECK(cfg.fkl.n_functions == 200);
  CHECK(cfg.fkl.sampler == "logit_normal");
  CHECK(cfg.fkl.t_max == 0.95);
  CHECK(cfg.metrics.swd_projections == 64);
  CHECK(cfg.metrics.mmd_bandwidth == 2.0);

  // defaults survive when sections are missing
  ExperimentConfig d = parse_config_json("{}");
  CHECK(d.seed == 0);
  CHECK(!d.seed_set);
  CHECK(d.measure.n_modes == 65);
  CHECK(d.measure.mean_amplitude == 0.2);
  CHECK(d.fkl.n_functions == 400);
  CHECK(d.field.backend == "softmax");
}

TEST_CASE("unknown keys and bad types report their json path") {
  std::string msg = thrown_message([] { parse_config_json(R"({"measure": {"bogus": 1}})"); });
  CHECK(msg.find("$.measure.bogus") != std::string::npos);

  msg = thrown_message([] { parse_config_json(R"({"threads": "two"})"); });
  CHECK(msg.find("$.threads") != std::string::npos);

  msg = thrown_message([] { parse_config_json(R"({"field": {"train": {"widht": 3}}})"); });
  CHECK(msg.find("$.field.train.widht") != std::string::npos);

  msg = thrown_message([] { parse_config_json("{nope") ; });
  CHECK(msg.find("parse error") != std::string::npos);

  CHECK_THROWS_AS(parse_config_json(R"({"threads": 0})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_json(R"({"measure": {"n_grid": 1}})"), std::invalid_argument);
}

TEST_CASE("backend, sampler, and covariance kinds are validated") {
  CHECK_THROWS_AS(parse_config_json(R"({"field": {"backend": "bogus"}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_json(R"({"fkl": {"sampler": "bogus"}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_json(R"({"fkl": {"t_max": 1.5}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_json(R"({"measure": {"data_cov": {"kind": "bogus"}}})"),
                  std::invalid_argument);

  FklSettings s;
  s.sampler = "uniform";
  CHECK(make_sampler(s).kind == TimeSampler::Kind::Uniform);
  s.sampler = "importance";
  CHECK(make_sampler(s).kind == TimeSampler::Kind::Importance);
  s.sampler = "logit_normal";
  CHECK(make_sampler(s).kind == TimeSampler::Kind::LogitNormal);
  s.sampler = "nope";
  CHECK_THROWS_AS(make_sampler(s), std::invalid_argument);
}

TEST_CASE("seed resolution prefers flag over config over environment") {
  ExperimentConfig cfg;
  uint64_t flag = 11;

  cfg.seed = 7;
  cfg.seed_set = true;
  CHECK(resolve_seed(cfg, &flag) == 11);
  CHECK(resolve_seed(cfg, nullptr) == 7);

  cfg.seed_set = false;
  setenv("FKL_SEED", "99", 1);
  CHECK(resolve_seed(cfg, nullptr) == 99);
  CHECK(resolve_seed(cfg, &flag) == 11);

  setenv("FKL_SEED", "notanumber", 1);
  CHECK_THROWS_AS(resolve_seed(cfg, nullptr), std::invalid_argument);

  unsetenv("FKL_SEED");
  CHECK(resolve_seed(cfg, nullptr) == 0);
}

TEST_CASE("configured mean lands on the configured frequency") {
  MeasureConfig mc;  // amplitude 0.2 at frequency 1 on a 128 grid
  SpectralCoeffs m = measure_mean(mc);
  REQUIRE(m.n_modes == 65);
  CHECK(m.im(1, 0) == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(std::fabs(m.re(1, 0)) < 1e-12);
  CHECK(std::fabs(m.re(0, 0)) < 1e-12);
  for (int k = 2; k < 65; ++k) {
    CHECK(std::fabs(m.re(k, 0)) < 1e-12);
    CHECK(std::fabs(m.im(k, 0)) < 1e-12);
  }

  mc.mean_frequency = 2;
  mc.mean_amplitude = 0.8;
  mc.dim = 2;
  SpectralCoeffs m2 = measure_mean(mc);
  for (int d = 0; d < 2; ++d) {
    CHECK(m2.im(2, d) == doctest::Approx(-0.4).epsilon(1e-12));
    CHECK(std::fabs(m2.im(1, d)) < 1e-12);
  }
}

TEST_CASE("system defaults produce the canonical grids") {
  SystemConfig sc;
  sc.name = "lotka_volterra";
  SimConfig lv = make_sim_config(sc, 5);
  CHECK(lv.horizon == 8.0);
  CHECK(lv.dt == 0.02);
  CHECK(lv.n_paths == 100);
  CHECK(lv.seed == 5);

  sc.name = "repressilator";
  SimConfig rep = make_sim_config(sc, 0);
  CHECK(rep.horizon == 7.5);
  CHECK(rep.dt == 0.01);

  sc.name = "petal";
  SimConfig pet = make_sim_config(sc, 0);
  CHECK(pet.horizon == 4.0);
  CHECK(pet.dt == 0.04);

  sc.name = "linear_sde";
  SimConfig lin = make_sim_config(sc, 0);
  CHECK(lin.horizon == 1.0);
  CHECK(lin.dt == 0.01);

  // hyphenated spellings are accepted everywhere
  sc.name = "lotka-volterra";
  CHECK(make_sim_config(sc, 0).horizon == 8.0);
  CHECK(make_system(sc).name == "lotka_volterra");
  sc.name = "linear-sde";
  CHECK(make_sim_config(sc, 0).horizon == 1.0);

  // explicit overrides win
  sc.name = "lotka_volterra";
  sc.horizon = 2.0;
  sc.dt = 0.5;
  SimConfig ov = make_sim_config(sc, 0);
  CHECK(ov.horizon == 2.0);
  CHECK(ov.dt == 0.5);
}

TEST_CASE("system and covariance factories plumb their parameters") {
  SystemConfig sc;
  sc.name = "linear_sde";
  sc.sde_c = 0.5;
  sc.sde_dim = 4;
  SdeSystem sys = make_system(sc);
  CHECK(sys.dim == 4);
  CHECK(sys.name == "linear_sde_c0.5");

  sc.name = "petal";
  sc.petal_branches = 0;
  CHECK_THROWS_AS(make_system(sc), std::invalid_argument);

  sc.name = "warp_drive";
  CHECK_THROWS_AS(make_system(sc), std::invalid_argument);

  CovSpec ident{"identity", 0.0, 0.0, 0.0};
  DiagonalCovariance ic = make_covariance(ident, 4, 2);
  for (int d = 0; d < 2; ++d)
    for (int k = 0; k < 4; ++k) CHECK(ic.at(k, d) == 1.0);

  CovSpec mat{"matern", 2.0, 3.0, 2.0};
  DiagonalCovariance mc = make_covariance(mat, 4, 1);
  DiagonalCovariance ref = matern_covariance(2.0, 3.0, 2.0, 4, 1);
  for (int k = 0; k < 4; ++k) CHECK(mc.at(k, 0) == ref.at(k, 0));

  FklSettings fs;
  fs.n_functions = 123;
  fs.n_time = 7;
  fs.n_sum_modes = 3;
  FklConfig fc = make_fkl_config(fs, 99);
  CHECK(fc.n_function_samples == 123);
  CHECK(fc.n_time_per_function == 7);
  CHECK(fc.n_sum_modes == 3);
  CHECK(fc.seed == 99);
  CHECK(fc.sampler.kind == TimeSampler::Kind::Importance);
}

TEST_CASE("config files load from disk") {
  const std::string path = "config_tmp.json";
  {
    std::ofstream out(path);
    out << R"({"seed": 3, "measure": {"n_modes": 9}})";
  }
  ExperimentConfig cfg = load_config(path);
  CHECK(cfg.seed == 3);
  CHECK(cfg.measure.n_modes == 9);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_config(path), std::runtime_error);
}
