#include "fkl/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace fkl {

using nlohmann::json;

namespace {

// strict section reader: every consumed key is recorded, finish() rejects the rest
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw std::invalid_argument("config: " + path_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument("config: bad value type at " + path_ + "." + key);
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& sub(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw std::invalid_argument("config: unknown key " + path_ + "." + it.key());
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

CovSpec parse_cov(const json& j, const std::string& path) {
  Section s(j, path);
  CovSpec c;
  s.get("kind", c.kind);
  s.get("sigma2", c.sigma2);
  s.get("tau", c.tau);
  s.get("alpha", c.alpha);
  s.finish();
  if (c.kind != "matern" && c.kind != "identity")
    throw std::invalid_argument("config: " + path + ".kind must be matern or identity");
  return c;
}

}  // namespace

DiagonalCovariance make_covariance(const CovSpec& spec, int n_modes, int out_dim) {
  if (spec.kind == "identity") return identity_covariance(n_modes, out_dim);
  return matern_covariance(spec.sigma2, spec.tau, spec.alpha, n_modes, out_dim);
}

SpectralCoeffs measure_mean(const MeasureConfig& mc) {
  FunctionSample f;
  f.grid = TimeGrid{mc.n_grid, 1.0};
  f.out_dim = mc.dim;
  f.values.resize(size_t(mc.n_grid) * mc.dim);
  for (int j = 0; j < mc.n_grid; ++j) {
    // torus phase j/M, matching the analysis convention
    const double v = mc.mean_amplitude *
                     std::sin(2.0 * M_PI * mc.mean_frequency * double(j) / double(mc.n_grid));
    for (int d = 0; d < mc.dim; ++d) f.at(j, d) = v;
  }
  return to_spectral(f, mc.n_modes);
}

// accept both lotka-volterra and lotka_volterra spellings
static std::string canonical_system_name(std::string name) {
  for (char& c : name)
    if (c == '-') c = '_';
  return name;
}

SdeSystem make_system(const SystemConfig& sc) {
  const std::string name = canonical_system_name(sc.name);
  if (name == "lotka_volterra")
    return lotka_volterra_system(sc.lv_alpha, sc.lv_beta, sc.lv_gamma, sc.lv_delta, sc.sigma);
  if (name == "repressilator")
    return repressilator_system(sc.rep_beta, sc.rep_n, sc.rep_k, sc.rep_gamma, sc.sigma);
  if (name == "petal")
    return petal_system(sc.petal_L, sc.petal_amp, sc.petal_kappa, sc.petal_sigma_z,
                        sc.petal_speed, sc.petal_branches, sc.petal_sigma_init);
  if (name == "linear_sde")
    return linear_sde_system(sc.sde_c, sc.sde_g, sc.sde_dim, sc.sde_m0, sc.sde_var0);
  throw std::invalid_argument("config: unknown system " + sc.name);
}

SimConfig make_sim_config(const SystemConfig& sc, uint64_t seed) {
  const std::string name = canonical_system_name(sc.name);
  double T = sc.horizon, dt = sc.dt;
  if (T == 0.0) {
    if (name == "lotka_volterra") T = 8.0;
    else if (name == "repressilator") T = 7.5;
    else if (name == "petal") T = 4.0;
    else T = 1.0;
  }
  if (dt == 0.0) {
    if (name == "lotka_volterra") dt = 0.02;
    else if (name == "repressilator") dt = 0.01;
    else if (name == "petal") dt = 0.04;
    else dt = 0.01;
  }
  return SimConfig{T, dt, sc.n_paths, seed};
}

TimeSampler make_sampler(const FklSettings& s) {
  if (s.sampler == "importance") return TimeSampler::importance(s.t_min, s.t_max);
  if (s.sampler == "uniform") return TimeSampler::uniform(s.t_min, s.t_max);
  if (s.sampler == "logit_normal")
    return TimeSampler::logit_normal(s.ln_mean, s.ln_std, s.t_min, s.t_max);
  throw std::invalid_argument("config: unknown sampler " + s.sampler);
}

FklConfig make_fkl_config(const FklSettings& s, uint64_t seed) {
  FklConfig c;
  c.n_function_samples = s.n_functions;
  c.n_time_per_function = s.n_time;
  c.n_sum_modes = s.n_sum_modes;
  c.sampler = make_sampler(s);
  c.seed = seed;
  return c;
}

ExperimentConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }

  ExperimentConfig cfg;
  Section root(j, "$");
  if (root.has("seed")) {
    uint64_t s = 0;
    root.get("seed", s);
    cfg.seed = s;
    cfg.seed_set = true;
  }
  root.get("threads", cfg.threads);
  root.get("output_dir", cfg.output_dir);

  if (root.has("measure")) {
    Section m(root.sub("measure"), "$.measure");
    m.get("dim", cfg.measure.dim);
    m.get("n_grid", cfg.measure.n_grid);
    m.get("n_modes", cfg.measure.n_modes);
    m.get("mean_amplitude", cfg.measure.mean_amplitude);
    m.get("mean_frequency", cfg.measure.mean_frequency);
    if (m.has("data_cov")) cfg.measure.data_cov = parse_cov(m.sub("data_cov"), "$.measure.data_cov");
    if (m.has("noise_cov"))
      cfg.measure.noise_cov = parse_cov(m.sub("noise_cov"), "$.measure.noise_cov");
    m.finish();
    if (cfg.measure.dim < 1 || cfg.measure.n_grid < 2 || cfg.measure.n_modes < 1)
      throw std::invalid_argument("config: bad measure shape");
  }

  if (root.has("system")) {
    Section s(root.sub("system"), "$.system");
    s.get("name", cfg.system.name);
    s.get("horizon", cfg.system.horizon);
    s.get("dt", cfg.system.dt);
    s.get("n_paths", cfg.system.n_paths);
    s.get("sigma", cfg.system.sigma);
    s.get("lv_alpha", cfg.system.lv_alpha);
    s.get("lv_beta", cfg.system.lv_beta);
    s.get("lv_gamma", cfg.system.lv_gamma);
    s.get("lv_delta", cfg.system.lv_delta);
    s.get("rep_beta", cfg.system.rep_beta);
    s.get("rep_n", cfg.system.rep_n);
    s.get("rep_k", cfg.system.rep_k);
    s.get("rep_gamma", cfg.system.rep_gamma);
    s.get("petal_L", cfg.system.petal_L);
    s.get("petal_amp", cfg.system.petal_amp);
    s.get("petal_kappa", cfg.system.petal_kappa);
    s.get("petal_sigma_z", cfg.system.petal_sigma_z);
    s.get("petal_speed", cfg.system.petal_speed);
    s.get("petal_sigma_init", cfg.system.petal_sigma_init);
    s.get("petal_branches", cfg.system.petal_branches);
    s.get("sde_c", cfg.system.sde_c);
    s.get("sde_g", cfg.system.sde_g);
    s.get("sde_m0", cfg.system.sde_m0);
    s.get("sde_var0", cfg.system.sde_var0);
    s.get("sde_dim", cfg.system.sde_dim);
    s.finish();
  }

  if (root.has("field")) {
    Section f(root.sub("field"), "$.field");
    f.get("backend", cfg.field.backend);
    f.get("t_collapse", cfg.field.t_collapse);
    f.get("split_pool", cfg.field.split_pool);
    f.get("mirror", cfg.field.mirror);
    f.get("n_modes", cfg.field.n_modes);
    if (f.has("train")) {
      Section t(f.sub("train"), "$.field.train");
      t.get("iterations", cfg.field.train.iterations);
      t.get("batch_size", cfg.field.train.batch_size);
      t.get("learning_rate", cfg.field.train.learning_rate);
      t.get("width", cfg.field.train.width);
      t.get("depth", cfg.field.train.depth);
      t.get("w_start", cfg.field.train.w_start);
      t.get("w_end", cfg.field.train.w_end);
      t.get("curriculum_switch", cfg.field.train.curriculum_switch);
      t.get("ln_mean", cfg.field.train.ln_mean);
      t.get("ln_std", cfg.field.train.ln_std);
      t.get("ema_rate", cfg.field.train.ema_rate);
      t.get("eval_batch", cfg.field.train.eval_batch);
      t.finish();
    }
    f.finish();
    if (cfg.field.backend != "softmax" && cfg.field.backend != "trained" &&
        cfg.field.backend != "analytic")
      throw std::invalid_argument("config: field.backend must be softmax, trained or analytic");
  }

  if (root.has("fkl")) {
    Section k(root.sub("fkl"), "$.fkl");
    k.get("n_functions", cfg.fkl.n_functions);
    k.get("n_time", cfg.fkl.n_time);
    k.get("n_sum_modes", cfg.fkl.n_sum_modes);
    k.get("sampler", cfg.fkl.sampler);
    k.get("t_min", cfg.fkl.t_min);
    k.get("t_max", cfg.fkl.t_max);
    k.get("ln_mean", cfg.fkl.ln_mean);
    k.get("ln_std", cfg.fkl.ln_std);
    k.finish();
    make_sampler(cfg.fkl);  // validates bounds and name
  }

  if (root.has("metrics")) {
    Section m(root.sub("metrics"), "$.metrics");
    m.get("swd_projections", cfg.metrics.swd_projections);
    m.get("mwd_candidates", cfg.metrics.mwd_candidates);
    m.get("mwd_refine", cfg.metrics.mwd_refine);
    m.get("mmd_bandwidth", cfg.metrics.mmd_bandwidth);
    m.finish();
  }

  root.finish();
  if (cfg.threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_json(text);
}

uint64_t resolve_seed(const ExperimentConfig& cfg, const uint64_t* flag_seed) {
  if (flag_seed) return *flag_seed;
  if (cfg.seed_set) return cfg.seed;
  if (const char* env = std::getenv("FKL_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return uint64_t(v);
    throw std::invalid_argument("FKL_SEED must be a nonnegative integer");
  }
  return 0;
}

}  // namespace fkl
