#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fkl/rng.hpp"
#include "fkl/spectral.hpp"

namespace fkl {

// Ito system with constant per-dimension diffusion. The integrator state may
// be larger than the observed output (the petal system integrates intrinsic
// coordinates and maps to the plane through `observe`).
struct SdeSystem {
  std::string name;
  int dim = 0;        // observed dimension
  int state_dim = 0;  // integrator state dimension
  std::function<void(double t, const double* y, double* dy)> drift;
  std::vector<double> diffusion;                         // per state dimension
  std::function<void(Rng&, double*)> init;               // fills a state vector
  std::function<void(const double* y, double* out)> observe;  // empty: identity
};

struct SimConfig {
  double horizon = 1.0;
  double dt = 0.01;
  int n_paths = 1;
  uint64_t seed = 0;
};

struct TrajectoryDataset {
  TimeGrid grid;
  int n_paths = 0;
  int dim = 0;
  std::vector<double> paths;  // row-major (path, time, dim)
  std::string system;
  SimConfig config;

  double at(int p, int j, int d) const {
    return paths[(size_t(p) * grid.m_points + j) * dim + d];
  }
};

// y_{j+1} = y_j + drift(t_j, y_j) dt + diffusion * sqrt(dt) * xi. Path p uses
// the derived stream (seed, p), so results do not depend on evaluation order.
TrajectoryDataset euler_maruyama(const SdeSystem& system, const SimConfig& cfg);

SdeSystem lotka_volterra_system(double alpha = 1.0, double beta = 0.4, double gamma = 0.1,
                                double delta = 0.4, double sigma = 0.1);
SdeSystem repressilator_system(double beta = 10.0, double n = 3.0, double k = 1.0,
                               double gamma = 1.0, double sigma = 0.1);
SdeSystem petal_system(double L = 1.0, double amp = 0.25, double kappa = 0.5,
                       double sigma_z = 0.04, double speed = 0.2, int branches = 8,
                       double sigma_init = 0.1);
// dY = c Y dt + g dW per coordinate, init N(m0, var0) i.i.d.
SdeSystem linear_sde_system(double c, double g, int dim, double m0, double var0);

enum class SplitRule { OddTrainEvenVal, AllSharedResample, Explicit };

struct SnapshotCloud {
  double tau = 0.0;  // rescaled time in [0, 1]
  std::string label;  // "train" or "validation"
  int n = 0, dim = 0;
  std::vector<double> points;  // row-major n x dim
};

struct SnapshotSet {
  std::vector<SnapshotCloud> clouds;
};

// times are physical and must sit on the grid (no interpolation). Odd rule:
// 1st, 3rd, ... of the sorted list are train. Resample rule: every time gets
// both labels, paths split even/odd by index into disjoint halves. Explicit
// rule: caller provides one label per time.
SnapshotSet extract_snapshots(const TrajectoryDataset& ds, const std::vector<double>& times,
                              SplitRule rule, const std::vector<std::string>& labels = {});

// JSON manifest at <stem>.json plus binary payload <stem>.fklt: magic "FKLT",
// then the row-major (path, time, dim) float64 block, little-endian.
void write_trajectories(const std::string& stem, const TrajectoryDataset& ds);
TrajectoryDataset read_trajectories(const std::string& stem);

void write_snapshot_csv(const std::string& path, const SnapshotSet& set,
                        const std::string& label_filter = "");

// groups rows by their time value (exact match after parsing); clouds come
// back sorted by time and carry the given label
SnapshotSet read_snapshot_csv(const std::string& path, const std::string& label);

// One spectral function per path: values are the observed coordinates on the
// saved grid, optionally run through the even mirror extension first.
std::vector<SpectralCoeffs> paths_to_coeffs(const TrajectoryDataset& ds, int n_modes,
                                            bool mirror);

}  // namespace fkl
