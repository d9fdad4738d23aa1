#include "fkl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace fkl {

using nlohmann::json;

static int validated_steps(const SimConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.horizon > 0.0) || cfg.n_paths < 1)
    throw std::invalid_argument("SimConfig: need dt > 0, horizon > 0, n_paths >= 1");
  const double ratio = cfg.horizon / cfg.dt;
  const long long n = std::llround(ratio);
  if (n < 1 || std::abs(cfg.horizon - double(n) * cfg.dt) > 1e-9 * std::max(1.0, cfg.horizon))
    throw std::invalid_argument("SimConfig: horizon must be an integer number of steps");
  return int(n);
}

TrajectoryDataset euler_maruyama(const SdeSystem& system, const SimConfig& cfg) {
  const int n_steps = validated_steps(cfg);
  const int sd = system.state_dim > 0 ? system.state_dim : system.dim;
  const int D = system.dim;
  if (D < 1 || sd < 1) throw std::invalid_argument("SdeSystem: bad dimensions");
  if (int(system.diffusion.size()) != sd)
    throw std::invalid_argument("SdeSystem: diffusion size must match state dim");

  TrajectoryDataset ds;
  ds.grid = TimeGrid{n_steps + 1, cfg.horizon};
  ds.n_paths = cfg.n_paths;
  ds.dim = D;
  ds.system = system.name;
  ds.config = cfg;
  ds.paths.resize(size_t(cfg.n_paths) * (n_steps + 1) * D);

  const double sdt = std::sqrt(cfg.dt);
  std::vector<double> y(sd), dy(sd), obs(D);
  for (int p = 0; p < cfg.n_paths; ++p) {
    Rng rng(cfg.seed, uint64_t(p));
    system.init(rng, y.data());
    for (int j = 0; j <= n_steps; ++j) {
      if (system.observe)
        system.observe(y.data(), obs.data());
      else
        std::copy(y.begin(), y.end(), obs.begin());
      double* row = ds.paths.data() + (size_t(p) * (n_steps + 1) + j) * D;
      std::copy(obs.begin(), obs.end(), row);
      if (j == n_steps) break;

      system.drift(cfg.dt * j, y.data(), dy.data());
      for (int d = 0; d < sd; ++d) {
        y[d] += dy[d] * cfg.dt;
        if (system.diffusion[d] != 0.0) y[d] += system.diffusion[d] * sdt * rng.normal();
        if (!std::isfinite(y[d]) || std::abs(y[d]) > 1e9) {
          char buf[128];
          std::snprintf(buf, sizeof buf, "%s: path %d diverged at step %d",
                        system.name.c_str(), p, j + 1);
          throw std::runtime_error(buf);
        }
      }
    }
  }
  return ds;
}

SdeSystem lotka_volterra_system(double alpha, double beta, double gamma, double delta,
                                double sigma) {
  SdeSystem s;
  s.name = "lotka_volterra";
  s.dim = 2;
  s.state_dim = 2;
  s.drift = [=](double, const double* y, double* dy) {
    dy[0] = alpha * y[0] - beta * y[0] * y[1];
    dy[1] = gamma * y[0] * y[1] - delta * y[1];
  };
  s.diffusion = {sigma, sigma};
  s.init = [](Rng& rng, double* y) {
    y[0] = rng.uniform(5.0, 5.1);
    y[1] = rng.uniform(4.0, 4.1);
  };
  return s;
}

SdeSystem repressilator_system(double beta, double n, double k, double gamma, double sigma) {
  SdeSystem s;
  s.name = "repressilator";
  s.dim = 3;
  s.state_dim = 3;
  s.drift = [=](double, const double* y, double* dy) {
    // cyclic repression: 3 <- 2 <- 1 <- 3
    for (int i = 0; i < 3; ++i) {
      const double rep = y[(i + 2) % 3];
      dy[i] = beta / (1.0 + std::pow(rep / k, n)) - gamma * y[i];
    }
  };
  s.diffusion = {sigma, sigma, sigma};
  s.init = [](Rng& rng, double* y) {
    y[0] = rng.uniform(1.0, 1.1);
    y[1] = rng.uniform(1.0, 1.1);
    y[2] = rng.uniform(2.0, 2.1);
  };
  return s;
}

SdeSystem petal_system(double L, double amp, double kappa, double sigma_z, double speed,
                       int branches, double sigma_init) {
  if (branches < 1) throw std::invalid_argument("petal_system: branches >= 1");
  SdeSystem s;
  s.name = "petal";
  s.dim = 2;
  s.state_dim = 3;  // (u, z, branch)
  s.drift = [=](double, const double* y, double* dy) {
    dy[0] = speed;
    dy[1] = -kappa * y[1];
    dy[2] = 0.0;
  };
  s.diffusion = {0.0, sigma_z, 0.0};
  s.init = [=](Rng& rng, double* y) {
    y[0] = 0.0;
    y[1] = sigma_init * rng.normal();
    y[2] = double(rng.uniform_int(uint64_t(branches)));
  };
  s.observe = [=](const double* y, double* out) {
    const double u = y[0], z = y[1];
    const double w = 2.0 * M_PI / L;
    // spine and its unit normal
    const double sx = u, sy = amp * std::sin(w * u);
    const double tx = 1.0, ty = amp * w * std::cos(w * u);
    const double tn = std::sqrt(tx * tx + ty * ty);
    const double px = sx - z * ty / tn, py = sy + z * tx / tn;
    const double th = 2.0 * M_PI * y[2] / double(branches);
    const double c = std::cos(th), sn = std::sin(th);
    out[0] = c * px - sn * py;
    out[1] = sn * px + c * py;
  };
  return s;
}

SdeSystem linear_sde_system(double c, double g, int dim, double m0, double var0) {
  if (dim < 1) throw std::invalid_argument("linear_sde_system: dim >= 1");
  if (var0 < 0.0) throw std::invalid_argument("linear_sde_system: var0 >= 0");
  SdeSystem s;
  char buf[64];
  std::snprintf(buf, sizeof buf, "linear_sde_c%g", c);
  s.name = buf;
  s.dim = dim;
  s.state_dim = dim;
  s.drift = [=](double, const double* y, double* dy) {
    for (int d = 0; d < dim; ++d) dy[d] = c * y[d];
  };
  s.diffusion.assign(size_t(dim), g);
  const double sd0 = std::sqrt(var0);
  s.init = [=](Rng& rng, double* y) {
    for (int d = 0; d < dim; ++d) y[d] = m0 + sd0 * rng.normal();
  };
  return s;
}

SnapshotSet extract_snapshots(const TrajectoryDataset& ds, const std::vector<double>& times,
                              SplitRule rule, const std::vector<std::string>& labels) {
  if (times.empty()) throw std::invalid_argument("extract_snapshots: no times");
  if (rule == SplitRule::Explicit && labels.size() != times.size())
    throw std::invalid_argument("extract_snapshots: need one label per time");

  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  const double T = ds.grid.physical_horizon;
  const double dt = T / double(ds.grid.m_points - 1);

  SnapshotSet set;
  for (size_t i = 0; i < sorted.size(); ++i) {
    const double t = sorted[i];
    const long long j = std::llround(t / dt);
    if (j < 0 || j >= ds.grid.m_points || std::abs(t - double(j) * dt) > 1e-9 * std::max(1.0, T)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "extract_snapshots: time %.17g is off-grid", t);
      throw std::invalid_argument(buf);
    }

    auto cloud_of = [&](const char* label, int parity) {
      SnapshotCloud c;
      c.tau = t / T;
      c.label = label;
      c.dim = ds.dim;
      for (int p = 0; p < ds.n_paths; ++p) {
        if (parity >= 0 && p % 2 != parity) continue;
        const double* row = ds.paths.data() + (size_t(p) * ds.grid.m_points + j) * ds.dim;
        c.points.insert(c.points.end(), row, row + ds.dim);
        ++c.n;
      }
      return c;
    };

    switch (rule) {
      case SplitRule::OddTrainEvenVal:
        set.clouds.push_back(cloud_of(i % 2 == 0 ? "train" : "validation", -1));
        break;
      case SplitRule::AllSharedResample:
        set.clouds.push_back(cloud_of("train", 0));
        set.clouds.push_back(cloud_of("validation", 1));
        break;
      case SplitRule::Explicit: {
        // labels follow the caller's ordering of `times`
        const size_t orig = size_t(std::find(times.begin(), times.end(), t) - times.begin());
        set.clouds.push_back(cloud_of(labels[orig].c_str(), -1));
        break;
      }
    }
  }
  return set;
}

void write_trajectories(const std::string& stem, const TrajectoryDataset& ds) {
  const std::string payload = stem + ".fklt";
  {
    std::ofstream out(payload, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + payload);
    out.write("FKLT", 4);
    out.write(reinterpret_cast<const char*>(ds.paths.data()),
              std::streamsize(sizeof(double) * ds.paths.size()));
    if (!out) throw std::runtime_error("short write on " + payload);
  }
  json manifest = {
      {"format", "FKLT"},
      {"system", ds.system},
      {"config", {{"horizon", ds.config.horizon}, {"dt", ds.config.dt}, {"n_paths", ds.config.n_paths}}},
      {"seed", ds.config.seed},
      {"shape", {ds.n_paths, ds.grid.m_points, ds.dim}},
      {"dtype", "f64le"},
      {"payload", payload.substr(payload.find_last_of('/') + 1)},
  };
  std::ofstream out(stem + ".json");
  if (!out) throw std::runtime_error("cannot write " + stem + ".json");
  out << manifest.dump(2) << "\n";
}

TrajectoryDataset read_trajectories(const std::string& stem) {
  const bool has_ext = stem.size() > 5 && stem.substr(stem.size() - 5) == ".json";
  const std::string mpath = has_ext ? stem : stem + ".json";
  std::ifstream in(mpath);
  if (!in) throw std::runtime_error("cannot open " + mpath);
  json manifest = json::parse(in);
  if (manifest.value("format", "") != std::string("FKLT") ||
      manifest.value("dtype", "") != std::string("f64le"))
    throw std::runtime_error(mpath + ": not a FKLT manifest");

  TrajectoryDataset ds;
  ds.system = manifest.value("system", "");
  ds.config.horizon = manifest["config"]["horizon"].get<double>();
  ds.config.dt = manifest["config"]["dt"].get<double>();
  ds.config.n_paths = manifest["config"]["n_paths"].get<int>();
  ds.config.seed = manifest.value("seed", uint64_t(0));
  auto shape = manifest["shape"];
  ds.n_paths = shape[0].get<int>();
  ds.grid = TimeGrid{shape[1].get<int>(), ds.config.horizon};
  ds.dim = shape[2].get<int>();

  const std::string dir = mpath.find('/') == std::string::npos
                              ? std::string()
                              : mpath.substr(0, mpath.find_last_of('/') + 1);
  const std::string ppath = dir + manifest["payload"].get<std::string>();
  std::ifstream pin(ppath, std::ios::binary);
  if (!pin) throw std::runtime_error("cannot open " + ppath);
  char magic[4];
  pin.read(magic, 4);
  if (!pin || std::memcmp(magic, "FKLT", 4) != 0)
    throw std::runtime_error(ppath + ": not a FKLT payload");
  ds.paths.resize(size_t(ds.n_paths) * ds.grid.m_points * ds.dim);
  pin.read(reinterpret_cast<char*>(ds.paths.data()),
           std::streamsize(sizeof(double) * ds.paths.size()));
  if (!pin) throw std::runtime_error(ppath + ": truncated payload");
  pin.peek();
  if (!pin.eof()) throw std::runtime_error(ppath + ": payload larger than manifest shape");
  return ds;
}

void write_snapshot_csv(const std::string& path, const SnapshotSet& set,
                        const std::string& label_filter) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  int dim = 0;
  for (const auto& c : set.clouds)
    if (label_filter.empty() || c.label == label_filter) dim = c.dim;
  out << "time";
  for (int d = 0; d < dim; ++d) out << ",dim" << d;
  out << "\n";
  out.precision(17);
  for (const auto& c : set.clouds) {
    if (!label_filter.empty() && c.label != label_filter) continue;
    for (int i = 0; i < c.n; ++i) {
      out << c.tau;
      for (int d = 0; d < c.dim; ++d) out << "," << c.points[size_t(i) * c.dim + d];
      out << "\n";
    }
  }
}

SnapshotSet read_snapshot_csv(const std::string& path, const std::string& label) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty snapshot csv");
  int dim = -1;
  {
    size_t commas = 0;
    for (char c : line) commas += c == ',';
    dim = int(commas);
  }
  if (dim < 1 || line.substr(0, 4) != "time")
    throw std::runtime_error(path + ": expected header time,dim0,...");

  std::vector<std::pair<double, std::vector<double>>> groups;  // sorted by time
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(size_t(dim) + 1);
    size_t pos = 0;
    while (pos <= line.size()) {
      size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      try {
        row.push_back(std::stod(line.substr(pos, next - pos)));
      } catch (const std::exception&) {
        char buf[96];
        std::snprintf(buf, sizeof buf, ": bad number on line %zu", lineno);
        throw std::runtime_error(path + buf);
      }
      pos = next + 1;
    }
    if (int(row.size()) != dim + 1) {
      char buf[96];
      std::snprintf(buf, sizeof buf, ": wrong column count on line %zu", lineno);
      throw std::runtime_error(path + buf);
    }
    auto it = std::lower_bound(groups.begin(), groups.end(), row[0],
                               [](const auto& g, double t) { return g.first < t; });
    if (it == groups.end() || it->first != row[0]) it = groups.insert(it, {row[0], {}});
    it->second.insert(it->second.end(), row.begin() + 1, row.end());
  }

  SnapshotSet set;
  for (auto& [t, pts] : groups) {
    SnapshotCloud c;
    c.tau = t;
    c.label = label;
    c.dim = dim;
    c.n = int(pts.size() / size_t(dim));
    c.points = std::move(pts);
    set.clouds.push_back(std::move(c));
  }
  return set;
}

std::vector<SpectralCoeffs> paths_to_coeffs(const TrajectoryDataset& ds, int n_modes,
                                            bool mirror) {
  std::vector<SpectralCoeffs> out;
  out.reserve(size_t(ds.n_paths));
  FunctionSample f;
  f.grid = TimeGrid{ds.grid.m_points, 1.0};
  f.out_dim = ds.dim;
  const size_t block = size_t(ds.grid.m_points) * ds.dim;
  for (int p = 0; p < ds.n_paths; ++p) {
    f.values.assign(ds.paths.begin() + size_t(p) * block,
                    ds.paths.begin() + size_t(p + 1) * block);
    out.push_back(mirror ? to_spectral(mirror_extend(f), n_modes) : to_spectral(f, n_modes));
  }
  return out;
}

}  // namespace fkl
