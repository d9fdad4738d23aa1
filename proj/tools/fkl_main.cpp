// fkl: function-space KL estimation between path measures, with seeded SDE
// simulation, closed-form oracles and marginal-cloud metrics.
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fkl/config.hpp"
#include "fkl/estimator.hpp"
#include "fkl/field.hpp"
#include "fkl/metrics.hpp"
#include "fkl/oracle.hpp"
#include "fkl/sim.hpp"
#include "fkl/train.hpp"

using nlohmann::json;
using namespace fkl;

namespace {

std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

json estimate_to_json(const FklEstimate& e) {
  return json{{"value", e.value},
              {"std_error", e.std_error},
              {"n_evals", e.n_evals},
              {"sampler", {{"name", e.sampler}, {"t_min", e.t_min}, {"t_max", e.t_max}}},
              {"n_sum_modes", e.n_sum_modes},
              {"seed", e.seed},
              {"field_fingerprints", {hex64(e.fingerprint_a), hex64(e.fingerprint_b)}},
              {"note", "std_error ignores within-function correlation"}};
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << j.dump(2) << "\n";
    std::cout << "wrote " << out_path << "\n";
  }
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> vals;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    if (next > pos) vals.push_back(std::stod(s.substr(pos, next - pos)));
    pos = next + 1;
  }
  if (vals.empty()) throw std::invalid_argument("empty list: " + s);
  return vals;
}

// shared state assembled per subcommand from --config plus flag overrides
struct Common {
  CLI::App* cmd = nullptr;
  std::string config_path;
  uint64_t seed_flag = 0;
  ExperimentConfig cfg;

  void attach(CLI::App* c) {
    cmd = c;
    c->add_option("--config", config_path, "JSON config file (strict schema)");
    c->add_option("--seed", seed_flag, "seed override");
    c->add_option("--threads", cfg.threads, "worker cap for inner parallelism");
    c->add_option("--output-dir", cfg.output_dir, "artifact directory");
  }

  void load() {
    const int threads_flag = cfg.threads;
    const std::string out_flag = cfg.output_dir;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (cmd->count("--threads")) cfg.threads = threads_flag;
    if (cmd->count("--output-dir")) cfg.output_dir = out_flag;
    const bool has_seed = cmd->count("--seed") > 0;
    cfg.seed = resolve_seed(cfg, has_seed ? &seed_flag : nullptr);
    cfg.seed_set = true;
  }
};

// trajectory pools -> spectral coefficient pools, split into field/estimation
// halves unless disabled (self-matching bias guard)
struct SpectralPools {
  std::vector<SpectralCoeffs> field_pool, est_pool;
};

SpectralPools make_pools(const TrajectoryDataset& ds, int n_modes, bool mirror, bool split) {
  std::vector<SpectralCoeffs> all = paths_to_coeffs(ds, n_modes, mirror);
  SpectralPools p;
  if (!split) {
    p.field_pool = all;
    p.est_pool = std::move(all);
    return p;
  }
  for (size_t i = 0; i < all.size(); ++i)
    (i % 2 == 0 ? p.field_pool : p.est_pool).push_back(std::move(all[i]));
  return p;
}

int default_modes(const TrajectoryDataset& ds, bool mirror) {
  const int m = mirror ? 2 * ds.grid.m_points - 2 : ds.grid.m_points;
  return m / 2 + 1;
}

struct BuiltFields {
  std::shared_ptr<VelocityField> a, b;
  GaussianMeasure noise;
};

BuiltFields build_fields(const ExperimentConfig& cfg, const std::vector<SpectralCoeffs>& pa,
                         const std::vector<SpectralCoeffs>& pb) {
  std::vector<SpectralCoeffs> pooled = pa;
  pooled.insert(pooled.end(), pb.begin(), pb.end());
  BuiltFields out;
  out.noise = centered_measure(roughened_empirical_covariance(pooled));
  if (cfg.field.backend == "softmax") {
    out.a = std::make_shared<EmpiricalSoftmaxField>(pa, out.noise.cov, cfg.field.t_collapse);
    out.b = std::make_shared<EmpiricalSoftmaxField>(pb, out.noise.cov, cfg.field.t_collapse);
  } else if (cfg.field.backend == "trained") {
    TrainConfig tc = cfg.field.train;
    tc.seed = cfg.seed;
    TrainResult tr = train_field(pa, pb, out.noise, tc);
    out.a = tr.field_a;
    out.b = tr.field_b;
  } else {
    throw std::invalid_argument("field.backend must be softmax or trained for this command");
  }
  return out;
}

int cmd_simulate(Common& com, const std::string& out_stem) {
  com.load();
  const SdeSystem system = make_system(com.cfg.system);
  const SimConfig sim = make_sim_config(com.cfg.system, com.cfg.seed);
  TrajectoryDataset ds = euler_maruyama(system, sim);
  const std::string stem =
      out_stem.empty() ? com.cfg.output_dir + "/" + system.name : out_stem;
  write_trajectories(stem, ds);
  std::cout << "wrote " << stem << ".json shape [" << ds.n_paths << ", " << ds.grid.m_points
            << ", " << ds.dim << "]\n";
  return 0;
}

int cmd_snapshots(Common& com, const std::string& traj, const std::string& times_str,
                  const std::string& rule_str, const std::string& out_prefix) {
  com.load();
  TrajectoryDataset ds = read_trajectories(traj);
  const std::vector<double> times = parse_list(times_str);
  SplitRule rule;
  if (rule_str == "odd")
    rule = SplitRule::OddTrainEvenVal;
  else if (rule_str == "shared")
    rule = SplitRule::AllSharedResample;
  else
    throw std::invalid_argument("--rule must be odd or shared");
  SnapshotSet set = extract_snapshots(ds, times, rule);
  const std::string prefix =
      out_prefix.empty() ? com.cfg.output_dir + "/" + ds.system : out_prefix;
  write_snapshot_csv(prefix + "_train.csv", set, "train");
  write_snapshot_csv(prefix + "_validation.csv", set, "validation");
  int n_train = 0, n_val = 0;
  for (const auto& c : set.clouds) (c.label == "train" ? n_train : n_val) += 1;
  std::cout << "wrote " << prefix << "_train.csv (" << n_train << " clouds), " << prefix
            << "_validation.csv (" << n_val << " clouds)\n";
  return 0;
}

int cmd_oracle_linear_sde(double ca, double cb, double g, int d, double m0, double var0,
                          const std::string& out) {
  LinearSdeSpec a{ca, g, d, m0, var0};
  LinearSdeSpec b{cb, g, d, m0, var0};
  const double fwd =
      ca != 0.0 ? linear_sde_kl_closed_form(a, cb) : linear_sde_kl_quadrature(a, cb, 20001);
  const double rev =
      cb != 0.0 ? linear_sde_kl_closed_form(b, ca) : linear_sde_kl_quadrature(b, ca, 20001);
  emit(json{{"case", "linear-sde"},
            {"params", {{"ca", ca}, {"cb", cb}, {"g", g}, {"d", d}, {"m0", m0}, {"var0", var0}}},
            {"kl_forward", fwd},
            {"kl_reverse", rev}},
       out);
  return 0;
}

int cmd_oracle_gaussian(Common& com, const std::string& out) {
  com.load();
  const MeasureConfig& mc = com.cfg.measure;
  const DiagonalCovariance R = make_covariance(mc.data_cov, mc.n_modes, mc.dim);
  const double kl = gaussian_mean_shift_kl(measure_mean(mc), R);
  emit(json{{"case", "gaussian"},
            {"params",
             {{"mean_amplitude", mc.mean_amplitude},
              {"mean_frequency", mc.mean_frequency},
              {"dim", mc.dim},
              {"n_modes", mc.n_modes}}},
            {"kl_forward", kl},
            {"kl_reverse", kl}},
       out);
  return 0;
}

int cmd_fkl(Common& com, const std::string& a_path, const std::string& b_path,
            const std::string& out, const std::string& sweep_spec) {
  com.load();
  ExperimentConfig& cfg = com.cfg;
  TrajectoryDataset da = read_trajectories(a_path);
  TrajectoryDataset db = read_trajectories(b_path);
  if (da.dim != db.dim || da.grid.m_points != db.grid.m_points)
    throw std::invalid_argument("fkl: trajectory shapes differ");

  const int n_modes =
      cfg.field.n_modes > 0 ? cfg.field.n_modes : default_modes(da, cfg.field.mirror);
  SpectralPools pa = make_pools(da, n_modes, cfg.field.mirror, cfg.field.split_pool);
  SpectralPools pb = make_pools(db, n_modes, cfg.field.mirror, cfg.field.split_pool);
  BuiltFields fields = build_fields(cfg, pa.field_pool, pb.field_pool);

  FklConfig fc = make_fkl_config(cfg.fkl, cfg.seed);
  PoolSource src_a(pa.est_pool), src_b(pb.est_pool);
  const FklEstimate fwd =
      estimate_fkl(*fields.a, *fields.b, src_a, fields.noise, fc, cfg.threads);
  const FklEstimate rev =
      estimate_fkl(*fields.b, *fields.a, src_b, fields.noise, fc, cfg.threads);

  const TraceDiagnostic td = trace_diagnostic(fields.noise.cov);
  json doc{{"forward", estimate_to_json(fwd)},
           {"reverse", estimate_to_json(rev)},
           {"backend", cfg.field.backend},
           {"n_modes", n_modes},
           {"mirror", cfg.field.mirror},
           {"split_pool", cfg.field.split_pool},
           {"noise",
            {{"kind", "roughened_empirical"},
             {"trace_truncated", td.trace_truncated},
             {"tail_decay_exponent", td.tail_decay_exponent},
             {"trace_class", td.trace_class_flag}}}};
  emit(doc, out);

  if (!sweep_spec.empty()) {
    const size_t eq = sweep_spec.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--sweep wants axis=v1,v2,... (axis in n_sum_modes, "
                                  "n_functions, n_time, t_max)");
    const std::string axis = sweep_spec.substr(0, eq) == "modes" ? "n_sum_modes"
                                                                 : sweep_spec.substr(0, eq);
    const std::vector<double> values = parse_list(sweep_spec.substr(eq + 1));
    const auto rows =
        sweep_axis(*fields.a, *fields.b, src_a, fields.noise, fc, axis, values, cfg.threads);
    const std::string csv = (out.empty() ? cfg.output_dir + "/sweep" : out) + "_" + axis + ".csv";
    write_sweep_csv(csv, rows);
    std::cout << "wrote " << csv << "\n";
  }
  return 0;
}

int cmd_fit_velocity(Common& com, const std::string& a_path, const std::string& b_path,
                     const std::string& out, const std::string& loss_csv) {
  com.load();
  ExperimentConfig& cfg = com.cfg;
  TrajectoryDataset da = read_trajectories(a_path);
  TrajectoryDataset db = read_trajectories(b_path);
  const int n_modes =
      cfg.field.n_modes > 0 ? cfg.field.n_modes : default_modes(da, cfg.field.mirror);
  std::vector<SpectralCoeffs> pa = paths_to_coeffs(da, n_modes, cfg.field.mirror);
  std::vector<SpectralCoeffs> pb = paths_to_coeffs(db, n_modes, cfg.field.mirror);
  std::vector<SpectralCoeffs> pooled = pa;
  pooled.insert(pooled.end(), pb.begin(), pb.end());
  GaussianMeasure noise = centered_measure(roughened_empirical_covariance(pooled));

  TrainConfig tc = cfg.field.train;
  tc.seed = cfg.seed;
  TrainResult tr = train_field(pa, pb, noise, tc);

  const std::string wpath = out.empty() ? cfg.output_dir + "/velocity.fklw" : out;
  write_weights(wpath, tr.weights);
  if (!loss_csv.empty()) {
    std::ofstream lc(loss_csv);
    if (!lc) throw std::runtime_error("cannot write " + loss_csv);
    lc << "iteration,loss\n";
    lc.precision(17);
    for (size_t i = 0; i < tr.loss_history.size(); ++i) lc << i << "," << tr.loss_history[i] << "\n";
  }
  std::cout << "wrote " << wpath << "\n";
  std::cout << "probe loss (EMA): start " << tr.eval_loss_start << ", end " << tr.eval_loss_end
            << "\n";
  return 0;
}

int cmd_metrics(Common& com, const std::string& ref_path, const std::string& cand_path,
                const std::string& name, const std::string& out, double fkl_fwd,
                double fkl_rev, bool have_fkl) {
  com.load();
  const MetricSettings& ms = com.cfg.metrics;
  SnapshotSet ref = read_snapshot_csv(ref_path, "reference");
  SnapshotSet cand = read_snapshot_csv(cand_path, "candidate");

  MetricReport report;
  report.row_labels.push_back(name.empty() ? cand_path : name);
  char buf[64];
  std::snprintf(buf, sizeof buf, "swd: %d projections, seed %" PRIu64, ms.swd_projections,
                com.cfg.seed);
  report.metadata.push_back(buf);
  std::snprintf(buf, sizeof buf, "mwd: %d candidates, %d refine steps", ms.mwd_candidates,
                ms.mwd_refine);
  report.metadata.push_back(buf);
  std::snprintf(buf, sizeof buf, "mmd: rbf bandwidth %g, unbiased", ms.mmd_bandwidth);
  report.metadata.push_back(buf);

  for (const auto& rc : ref.clouds) {
    const SnapshotCloud* cc = nullptr;
    for (const auto& c : cand.clouds)
      if (c.tau == rc.tau) cc = &c;
    if (!cc) continue;
    const PointCloud p = PointCloud::from(rc.n, rc.dim, rc.points);
    const PointCloud q = PointCloud::from(cc->n, cc->dim, cc->points);
    const double vals[5] = {
        wasserstein(p, q, 1), wasserstein(p, q, 2),
        sliced_wasserstein(p, q, 2, ms.swd_projections, com.cfg.seed),
        max_sliced_wasserstein(p, q, 2, ms.mwd_candidates, ms.mwd_refine, com.cfg.seed).value,
        mmd_rbf(p, q, ms.mmd_bandwidth)};
    const char* names[5] = {"emd", "w2", "swd", "mwd", "mmd"};
    for (int i = 0; i < 5; ++i) {
      std::snprintf(buf, sizeof buf, "tau=%g:%s", rc.tau, names[i]);
      report.col_labels.push_back(buf);
      report.values.push_back(vals[i]);
    }
  }
  if (have_fkl) {
    report.col_labels.push_back("fkl_forward");
    report.values.push_back(fkl_fwd);
    report.col_labels.push_back("fkl_reverse");
    report.values.push_back(fkl_rev);
  }
  const std::string path = out.empty() ? com.cfg.output_dir + "/metrics.csv" : out;
  write_metric_report_csv(path, report);
  std::cout << "wrote " << path << " (" << report.col_labels.size() << " columns)\n";
  return 0;
}

int cmd_rank(const std::string& scores_path, bool higher_is_better, const std::string& out) {
  std::ifstream in(scores_path);
  if (!in) throw std::runtime_error("cannot open " + scores_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(scores_path + ": empty score table");
  std::vector<std::string> methods;
  std::vector<double> scores;
  int n_tasks = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t pos = line.find(',');
    if (pos == std::string::npos) throw std::runtime_error(scores_path + ": need label,v1,v2,...");
    methods.push_back(line.substr(0, pos));
    int cols = 0;
    while (pos != std::string::npos) {
      size_t next = line.find(',', pos + 1);
      scores.push_back(std::stod(line.substr(pos + 1, next - pos - 1)));
      ++cols;
      pos = next;
    }
    if (n_tasks < 0) n_tasks = cols;
    if (cols != n_tasks) throw std::runtime_error(scores_path + ": ragged score table");
  }
  const RankResult r =
      rank_methods(scores, int(methods.size()), n_tasks, !higher_is_better);
  json ranks = json::object();
  for (size_t i = 0; i < methods.size(); ++i) ranks[methods[i]] = r.avg_ranks[i];
  emit(json{{"avg_ranks", ranks},
            {"friedman_statistic", r.friedman},
            {"n_methods", methods.size()},
            {"n_tasks", n_tasks},
            {"lower_is_better", !higher_is_better}},
       out);
  return 0;
}

int cmd_convert(const std::string& csv_in, const std::string& traj_in, const std::string& out) {
  if (!csv_in.empty() == !traj_in.empty())
    throw std::invalid_argument("convert: pass exactly one of --csv (ingest) or --traj (dump)");
  if (!traj_in.empty()) {
    TrajectoryDataset ds = read_trajectories(traj_in);
    std::ofstream o(out);
    if (!o) throw std::runtime_error("cannot write " + out);
    o << "path,time";
    for (int d = 0; d < ds.dim; ++d) o << ",dim" << d;
    o << "\n";
    o.precision(17);
    for (int p = 0; p < ds.n_paths; ++p)
      for (int j = 0; j < ds.grid.m_points; ++j) {
        o << p << "," << ds.grid.physical_horizon * ds.grid.time(j);
        for (int d = 0; d < ds.dim; ++d) o << "," << ds.at(p, j, d);
        o << "\n";
      }
    std::cout << "wrote " << out << "\n";
    return 0;
  }

  std::ifstream in(csv_in);
  if (!in) throw std::runtime_error("cannot open " + csv_in);
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 9) != "path,time")
    throw std::runtime_error(csv_in + ": expected header path,time,dim0,...");
  int dim = -1;
  {
    size_t commas = 0;
    for (char c : line) commas += c == ',';
    dim = int(commas) - 1;
  }
  if (dim < 1) throw std::runtime_error(csv_in + ": no data columns");

  std::vector<double> flat;
  std::vector<double> times;
  int n_paths = 0, per_path = -1, row_in_path = 0;
  long long last_path = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    size_t pos = 0;
    while (pos <= line.size()) {
      size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      row.push_back(std::stod(line.substr(pos, next - pos)));
      pos = next + 1;
    }
    if (int(row.size()) != dim + 2) throw std::runtime_error(csv_in + ": ragged row");
    const long long p = llround(row[0]);
    if (p != last_path) {
      if (last_path >= 0) {
        if (per_path < 0) per_path = row_in_path;
        if (row_in_path != per_path) throw std::runtime_error(csv_in + ": uneven path lengths");
      }
      if (p != last_path + 1) throw std::runtime_error(csv_in + ": paths must be 0,1,2,...");
      last_path = p;
      ++n_paths;
      row_in_path = 0;
    }
    if (n_paths == 1) times.push_back(row[1]);
    ++row_in_path;
    flat.insert(flat.end(), row.begin() + 2, row.end());
  }
  if (n_paths == 0) throw std::runtime_error(csv_in + ": no rows");
  if (per_path < 0) per_path = row_in_path;
  if (row_in_path != per_path) throw std::runtime_error(csv_in + ": uneven path lengths");
  if (per_path < 2) throw std::runtime_error(csv_in + ": need >= 2 time points");

  const double T = times.back() - times.front();
  const double dt = T / double(per_path - 1);
  for (int j = 0; j < per_path; ++j)
    if (std::abs(times[j] - (times.front() + j * dt)) > 1e-9 * std::max(1.0, std::abs(T)))
      throw std::runtime_error(csv_in + ": time grid is not uniform");

  TrajectoryDataset ds;
  ds.system = "imported";
  ds.config = SimConfig{T, dt, n_paths, 0};
  ds.grid = TimeGrid{per_path, T};
  ds.n_paths = n_paths;
  ds.dim = dim;
  ds.paths = std::move(flat);
  write_trajectories(out, ds);
  std::cout << "wrote " << out << ".json shape [" << n_paths << ", " << per_path << ", " << dim
            << "]\n";
  return 0;
}

// Gaussian estimator rows plus the closed-form SDE table; --full adds the
// simulated SDE pipeline for case 1
int cmd_validate(Common& com, bool full, const std::string& out_csv) {
  com.load();
  const int threads = com.cfg.threads;
  int failures = 0;
  std::vector<std::string> lines;
  char buf[256];

  auto row = [&](const std::string& name, double analytic, double estimated, double tol_rel,
                 bool checked) {
    const double rel = std::abs(estimated - analytic) / std::max(1e-300, std::abs(analytic));
    const bool pass = !checked || rel <= tol_rel;
    if (checked && !pass) ++failures;
    std::snprintf(buf, sizeof buf, "%-34s analytic %10.4f   estimated %10.4f   rel %6.2f%%  %s",
                  name.c_str(), analytic, estimated, 100.0 * rel,
                  checked ? (pass ? "PASS" : "FAIL") : "info");
    lines.push_back(buf);
  };

  // Gaussian block: analytic fields, importance sampler
  for (const auto& [s, f0, D] : std::vector<std::tuple<double, int, int>>{
           {0.2, 1, 1}, {0.6, 1, 1}, {0.2, 2, 1}, {0.2, 1, 2}, {0.2, 1, 3}}) {
    MeasureConfig mc;
    mc.dim = D;
    mc.mean_amplitude = s;
    mc.mean_frequency = f0;
    const DiagonalCovariance R = make_covariance(mc.data_cov, mc.n_modes, D);
    const DiagonalCovariance C = make_covariance(mc.noise_cov, mc.n_modes, D);
    const SpectralCoeffs mean = measure_mean(mc);
    const double oracle_kl = gaussian_mean_shift_kl(mean, R);

    AnalyticGaussianField fa(mean, R, C), fb(SpectralCoeffs::zeros(mc.n_modes, D), R, C);
    GaussianMeasure nu_a{mean, R}, noise{SpectralCoeffs::zeros(mc.n_modes, D), C};
    MeasureSource src(nu_a);
    FklConfig fc = make_fkl_config(com.cfg.fkl, com.cfg.seed);
    fc.n_function_samples = 4000;
    fc.n_sum_modes = 64;
    const FklEstimate est = estimate_fkl(fa, fb, src, noise, fc, threads);
    std::snprintf(buf, sizeof buf, "gaussian s=%.1f f0=%d D=%d", s, f0, D);
    row(buf, oracle_kl, est.value, 0.03, true);
  }

  // SDE closed-form column: case, D, c_A, c_B, g (m0 = 2, var0 = 0.2 shared)
  const double table[5][4] = {{1, 0.01, 1.5, 0.75},
                              {1, 0.10, 2.0, 0.75},
                              {2, 0.01, 1.5, 0.75},
                              {3, 0.01, 1.5, 0.75},
                              {5, 0.01, 1.5, 1.00}};
  const double expected[5][2] = {
      {8.93, 54.71}, {15.89, 186.19}, {17.86, 109.43}, {26.79, 164.14}, {26.34, 158.22}};
  for (int i = 0; i < 5; ++i) {
    const int D = int(table[i][0]);
    LinearSdeSpec a{table[i][1], table[i][3], D, 2.0, 0.2};
    LinearSdeSpec b{table[i][2], table[i][3], D, 2.0, 0.2};
    const double fwd = linear_sde_kl_closed_form(a, table[i][2]);
    const double rev = linear_sde_kl_closed_form(b, table[i][1]);
    std::snprintf(buf, sizeof buf, "sde case %d forward", i + 1);
    row(buf, expected[i][0], fwd, 0.01 / expected[i][0], true);
    std::snprintf(buf, sizeof buf, "sde case %d reverse", i + 1);
    row(buf, expected[i][1], rev, 0.01 / expected[i][1], true);
  }

  if (full) {
    // end-to-end case 1: simulate, softmax fields on mirrored spectra
    for (int i = 0; i < (full ? 1 : 0); ++i) {
      ExperimentConfig cfg = com.cfg;
      cfg.system.name = "linear_sde";
      cfg.system.n_paths = 5000;
      cfg.system.horizon = 1.0;
      cfg.system.dt = 1.0 / 127.0;
      cfg.field.backend = "softmax";
      cfg.field.mirror = true;
      cfg.fkl.t_max = 0.765;
      cfg.fkl.n_functions = 2000;
      cfg.fkl.n_time = 50;

      cfg.system.sde_c = table[0][1];
      TrajectoryDataset da = euler_maruyama(make_system(cfg.system),
                                            make_sim_config(cfg.system, cfg.seed));
      cfg.system.sde_c = table[0][2];
      TrajectoryDataset db = euler_maruyama(make_system(cfg.system),
                                            make_sim_config(cfg.system, cfg.seed + 1));
      const int n_modes = default_modes(da, true);
      SpectralPools pa = make_pools(da, n_modes, true, true);
      SpectralPools pb = make_pools(db, n_modes, true, true);
      BuiltFields fields = build_fields(cfg, pa.field_pool, pb.field_pool);
      FklConfig fc = make_fkl_config(cfg.fkl, cfg.seed);
      PoolSource sa(pa.est_pool), sb(pb.est_pool);
      const FklEstimate fwd = estimate_fkl(*fields.a, *fields.b, sa, fields.noise, fc, threads);
      const FklEstimate rev = estimate_fkl(*fields.b, *fields.a, sb, fields.noise, fc, threads);
      row("sde case 1 end-to-end forward", expected[0][0], fwd.value, 0.25, true);
      row("sde case 1 end-to-end reverse", expected[0][1], rev.value, 0.25, true);
    }
  }

  for (const auto& l : lines) std::cout << l << "\n";
  std::cout << (failures == 0 ? "validate: all rows pass\n"
                              : "validate: " + std::to_string(failures) + " row(s) FAIL\n");
  if (!out_csv.empty()) {
    std::ofstream o(out_csv);
    if (!o) throw std::runtime_error("cannot write " + out_csv);
    o << "row\n";
    for (const auto& l : lines) o << "\"" << l << "\"\n";
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"function-space KL estimation toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Euler-Maruyama trajectories to FKLT files");
  Common sim_com;
  std::string sim_out;
  sim_com.attach(sim);
  sim->add_option("--system", sim_com.cfg.system.name,
                  "lotka_volterra | repressilator | petal | linear_sde");
  sim->add_option("--paths", sim_com.cfg.system.n_paths, "number of paths");
  sim->add_option("--horizon", sim_com.cfg.system.horizon, "time horizon (0: system default)");
  sim->add_option("--dt", sim_com.cfg.system.dt, "step size (0: system default)");
  sim->add_option("--out", sim_out, "output stem (writes stem.json + stem.fklt)");

  // snapshots
  auto* snap = app.add_subcommand("snapshots", "extract marginal clouds from trajectories");
  Common snap_com;
  std::string snap_traj, snap_times, snap_rule = "odd", snap_out;
  snap_com.attach(snap);
  snap->add_option("--traj", snap_traj, "trajectory stem or manifest")->required();
  snap->add_option("--times", snap_times, "comma-separated physical times")->required();
  snap->add_option("--rule", snap_rule, "odd (odd train / even validation) | shared");
  snap->add_option("--out", snap_out, "output prefix");

  // oracle
  auto* orc = app.add_subcommand("oracle", "closed-form KL for the two special cases");
  Common orc_com;
  std::string orc_case, orc_out;
  double orc_ca = 0.01, orc_cb = 1.5, orc_g = 0.75, orc_m0 = 2.0, orc_var0 = 0.2;
  double orc_mean_scale = -1.0;
  int orc_d = 1, orc_mean_freq = -1;
  orc_com.attach(orc);
  orc->add_option("case", orc_case, "gaussian | linear-sde")->required();
  orc->add_option("--ca", orc_ca, "drift of measure A");
  orc->add_option("--cb", orc_cb, "drift of measure B");
  orc->add_option("--g", orc_g, "shared diffusion");
  orc->add_option("--d", orc_d, "dimension");
  orc->add_option("--m0", orc_m0, "initial mean");
  orc->add_option("--var0", orc_var0, "initial variance");
  orc->add_option("--mean-scale", orc_mean_scale, "gaussian: mean amplitude");
  orc->add_option("--mean-freq", orc_mean_freq, "gaussian: mean frequency");
  orc->add_option("--out", orc_out, "write JSON here instead of stdout");

  // fkl
  auto* fklc = app.add_subcommand("fkl", "estimate KL between two trajectory measures");
  Common fkl_com;
  std::string fkl_a, fkl_b, fkl_out, fkl_sweep;
  fkl_com.attach(fklc);
  fklc->add_option("--a", fkl_a, "trajectory stem for measure A")->required();
  fklc->add_option("--b", fkl_b, "trajectory stem for measure B")->required();
  fklc->add_option("--backend", fkl_com.cfg.field.backend, "softmax | trained");
  fklc->add_option("--n-modes", fkl_com.cfg.field.n_modes, "stored modes (0: grid limit)");
  fklc->add_flag("--no-mirror", "skip the even mirror extension");
  fklc->add_flag("--no-split", "use full pools for both field and estimation");
  fklc->add_option("--n-functions", fkl_com.cfg.fkl.n_functions, "x1 draws");
  fklc->add_option("--n-time", fkl_com.cfg.fkl.n_time, "time draws per function");
  fklc->add_option("--n-sum-modes", fkl_com.cfg.fkl.n_sum_modes, "norm truncation (0: all)");
  fklc->add_option("--sampler", fkl_com.cfg.fkl.sampler, "importance | uniform | logit_normal");
  fklc->add_option("--t-min", fkl_com.cfg.fkl.t_min, "time support lower end");
  fklc->add_option("--t-max", fkl_com.cfg.fkl.t_max, "time support upper end");
  fklc->add_option("--t-collapse", fkl_com.cfg.field.t_collapse, "softmax collapse threshold");
  fklc->add_option("--out", fkl_out, "write JSON here instead of stdout");
  fklc->add_option("--sweep", fkl_sweep, "axis=v1,v2,... ablation sweep CSV");

  // fit-velocity
  auto* fit = app.add_subcommand("fit-velocity", "train the shared two-measure network");
  Common fit_com;
  std::string fit_a, fit_b, fit_out, fit_loss;
  fit_com.attach(fit);
  fit->add_option("--a", fit_a, "trajectory stem for measure A")->required();
  fit->add_option("--b", fit_b, "trajectory stem for measure B")->required();
  fit->add_option("--n-modes", fit_com.cfg.field.n_modes, "stored modes (0: grid limit)");
  fit->add_flag("--no-mirror", "skip the even mirror extension");
  fit->add_option("--iterations", fit_com.cfg.field.train.iterations, "training steps");
  fit->add_option("--batch", fit_com.cfg.field.train.batch_size, "batch size");
  fit->add_option("--lr", fit_com.cfg.field.train.learning_rate, "Adam learning rate");
  fit->add_option("--width", fit_com.cfg.field.train.width, "hidden width");
  fit->add_option("--depth", fit_com.cfg.field.train.depth, "hidden layers");
  fit->add_option("--out", fit_out, "weights file (FKLW)");
  fit->add_option("--loss-csv", fit_loss, "per-iteration loss history");

  // metrics
  auto* met = app.add_subcommand("metrics", "marginal-cloud metrics between snapshot CSVs");
  Common met_com;
  std::string met_ref, met_cand, met_name, met_out;
  double met_fwd = 0.0, met_rev = 0.0;
  met_com.attach(met);
  met->add_option("--ref", met_ref, "reference snapshot CSV")->required();
  met->add_option("--cand", met_cand, "candidate snapshot CSV")->required();
  met->add_option("--name", met_name, "method label for the report row");
  met->add_option("--swd-projections", met_com.cfg.metrics.swd_projections, "SWD directions");
  met->add_option("--mwd-candidates", met_com.cfg.metrics.mwd_candidates, "MWD candidates");
  met->add_option("--mwd-refine", met_com.cfg.metrics.mwd_refine, "MWD ascent steps");
  met->add_option("--mmd-bandwidth", met_com.cfg.metrics.mmd_bandwidth, "RBF bandwidth");
  met->add_option("--fkl-forward", met_fwd, "append a forward FKL column");
  met->add_option("--fkl-reverse", met_rev, "append a reverse FKL column");
  met->add_option("--out", met_out, "report CSV path");

  // rank
  auto* rnk = app.add_subcommand("rank", "average ranks + Friedman statistic");
  std::string rnk_scores, rnk_out;
  bool rnk_higher = false;
  rnk->add_option("--scores", rnk_scores, "CSV: header, then method,score1,score2,...")
      ->required();
  rnk->add_flag("--higher-is-better", rnk_higher, "rank 1 goes to the largest score");
  rnk->add_option("--out", rnk_out, "write JSON here instead of stdout");

  // validate
  auto* val = app.add_subcommand("validate", "closed-form suite: analytic vs estimated");
  Common val_com;
  bool val_full = false;
  std::string val_out;
  val_com.attach(val);
  val->add_flag("--full", val_full, "add the simulated SDE case-1 pipeline (minutes)");
  val->add_option("--out", val_out, "also write the table to this CSV");

  // convert
  auto* cnv = app.add_subcommand("convert", "CSV trajectory dump <-> FKLT");
  std::string cnv_csv, cnv_traj, cnv_out;
  cnv->add_option("--csv", cnv_csv, "ingest: plain CSV path,time,dim0,...");
  cnv->add_option("--traj", cnv_traj, "dump: trajectory stem or manifest");
  cnv->add_option("--out", cnv_out, "output stem (ingest) or CSV (dump)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_com, sim_out);
    if (snap->parsed()) return cmd_snapshots(snap_com, snap_traj, snap_times, snap_rule, snap_out);
    if (orc->parsed()) {
      if (orc_case == "linear-sde")
        return cmd_oracle_linear_sde(orc_ca, orc_cb, orc_g, orc_d, orc_m0, orc_var0, orc_out);
      if (orc_case == "gaussian") {
        if (orc_mean_scale >= 0.0) orc_com.cfg.measure.mean_amplitude = orc_mean_scale;
        if (orc_mean_freq > 0) orc_com.cfg.measure.mean_frequency = orc_mean_freq;
        if (orc->count("--d")) orc_com.cfg.measure.dim = orc_d;
        return cmd_oracle_gaussian(orc_com, orc_out);
      }
      throw std::invalid_argument("oracle case must be gaussian or linear-sde");
    }
    if (fklc->parsed()) {
      if (fklc->count("--no-mirror")) fkl_com.cfg.field.mirror = false;
      if (fklc->count("--no-split")) fkl_com.cfg.field.split_pool = false;
      return cmd_fkl(fkl_com, fkl_a, fkl_b, fkl_out, fkl_sweep);
    }
    if (fit->parsed()) {
      if (fit->count("--no-mirror")) fit_com.cfg.field.mirror = false;
      return cmd_fit_velocity(fit_com, fit_a, fit_b, fit_out, fit_loss);
    }
    if (met->parsed())
      return cmd_metrics(met_com, met_ref, met_cand, met_name, met_out, met_fwd, met_rev,
                         met->count("--fkl-forward") || met->count("--fkl-reverse"));
    if (rnk->parsed()) return cmd_rank(rnk_scores, rnk_higher, rnk_out);
    if (val->parsed()) return cmd_validate(val_com, val_full, val_out);
    if (cnv->parsed()) return cmd_convert(cnv_csv, cnv_traj, cnv_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
