#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fkl {

struct PointCloud {
  int n = 0;
  int dim = 0;
  std::vector<double> pts;  // row-major n x dim

  static PointCloud from(int n, int dim, std::vector<double> pts);
  double at(int i, int d) const { return pts[size_t(i) * dim + d]; }
};

// Exact W_p between uniform empirical measures, p in {1, 2}. Equal sizes are
// solved as a linear assignment (shortest augmenting path with potentials);
// unequal sizes in one dimension via the quantile-function integral, in
// several dimensions by the transportation simplex on the integer-mass
// transport polytope. Desk scale: n <= 5000.
double wasserstein(const PointCloud& p, const PointCloud& q, int order);

// Monte Carlo average of 1-D W_p^p over Gaussian-normalized random unit
// directions, then ^(1/p). Direction j is drawn from the stream (seed, j).
double sliced_wasserstein(const PointCloud& p, const PointCloud& q, int order = 2,
                          int n_projections = 128, uint64_t seed = 0);

// Best 1-D W_order over directions: n_candidates random unit vectors (streams
// (seed, j), so the sliced estimate's directions are a subset), then
// refine_steps of finite-difference ascent on the sphere with step halving.
// A lower bound on the true max-sliced distance.
struct MwdResult {
  double value = 0.0;
  std::vector<double> direction;
};
MwdResult max_sliced_wasserstein(const PointCloud& p, const PointCloud& q, int order = 2,
                                 int n_candidates = 256, int refine_steps = 50,
                                 uint64_t seed = 0);

// sqrt of the unbiased MMD^2 U-statistic (within-cloud diagonals excluded),
// RBF kernel exp(-|x-y|^2 / (2 bandwidth^2)), clipped at zero.
double mmd_rbf(const PointCloud& p, const PointCloud& q, double bandwidth = 1.0);

// exact 1-D W_p^p between uniform samples (quantile integral); used by the
// sliced metrics and exposed for tests
double wasserstein_1d_pow(const std::vector<double>& xs_sorted,
                          const std::vector<double>& ys_sorted, int order);

struct RankResult {
  std::vector<double> avg_ranks;  // one per method, rank 1 = best
  double friedman = 0.0;          // chi^2_F with M-1 degrees of freedom
};

// scores: methods x tasks row-major; ties get average ranks
RankResult rank_methods(const std::vector<double>& scores, int n_methods, int n_tasks,
                        bool lower_is_better = true);

struct MetricReport {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<double> values;  // rows x cols
  std::vector<std::string> metadata;  // emitted as leading # comment lines
};

void write_metric_report_csv(const std::string& path, const MetricReport& report);

}  // namespace fkl
