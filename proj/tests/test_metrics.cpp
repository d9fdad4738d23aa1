#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "fkl/metrics.hpp"
#include "fkl/rng.hpp"

using namespace fkl;

namespace {

PointCloud random_cloud(int n, int dim, uint64_t seed, double shift = 0.0) {
  Rng rng(seed, 0);
  std::vector<double> pts(size_t(n) * dim);
  for (double& v : pts) v = rng.normal(shift, 1.0);
  return PointCloud::from(n, dim, std::move(pts));
}

double pair_cost(const PointCloud& p, int i, const PointCloud& q, int j, int order) {
  double s = 0.0;
  for (int d = 0; d < p.dim; ++d) {
    double diff = p.at(i, d) - q.at(j, d);
    s += diff * diff;
  }
  return order == 2 ? s : std::sqrt(s);
}

// minimum mean assignment cost over all permutations (equal sizes)
double brute_force_assignment(const PointCloud& p, const PointCloud& q, int order) {
  std::vector<int> perm(size_t(p.n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = HUGE_VAL;
  do {
    double c = 0.0;
    for (int i = 0; i < p.n; ++i) c += pair_cost(p, i, q, perm[size_t(i)], order);
    best = std::min(best, c / p.n);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return order == 2 ? std::sqrt(best) : best;
}

// minimum cost over all integer transport matrices with the given marginals,
// masses in units of 1/(n*m)
double brute_force_transport(const PointCloud& p, const PointCloud& q, int order) {
  const int n = p.n, m = q.n;
  std::vector<std::vector<double>> cost(static_cast<size_t>(n),
                                        std::vector<double>(static_cast<size_t>(m), 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) cost[size_t(i)][size_t(j)] = pair_cost(p, i, q, j, order);
  std::vector<int> col_left(size_t(m), n);  // each column must absorb n units
  double best = HUGE_VAL;
  // fill row by row; each row distributes m units across the columns
  std::function<void(int, int, int, double)> rec = [&](int i, int j, int row_left, double acc) {
    if (acc >= best) return;
    if (i == n) {
      best = acc;
      return;
    }
    if (j == m) {
      if (row_left == 0) rec(i + 1, 0, m, acc);
      return;
    }
    const int hi = std::min(row_left, col_left[size_t(j)]);
    for (int f = hi; f >= 0; --f) {
      col_left[size_t(j)] -= f;
      rec(i, j + 1, row_left - f, acc + f * cost[size_t(i)][size_t(j)]);
      col_left[size_t(j)] += f;
    }
  };
  rec(0, 0, m, 0.0);
  best /= double(n) * double(m);
  return order == 2 ? std::sqrt(best) : best;
}

}  // namespace

TEST_CASE("equal-size transport matches permutation enumeration") {
  PointCloud p = random_cloud(6, 3, 101);
  PointCloud q = random_cloud(6, 3, 202);
  for (int order : {1, 2})
    CHECK(wasserstein(p, q, order) ==
          doctest::Approx(brute_force_assignment(p, q, order)).epsilon(1e-12));
}

TEST_CASE("one-dimensional quantile integral matches hand values") {
  // masses 1/2 at {0, 1} vs 1/3 at {0.5, 1.5, 2.5} on the 1/6 grid
  CHECK(wasserstein_1d_pow({0.0, 1.0}, {0.5, 1.5, 2.5}, 1) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(wasserstein_1d_pow({0.0, 1.0}, {0.5, 1.5, 2.5}, 2) ==
        doctest::Approx(1.25).epsilon(1e-14));

  PointCloud p = PointCloud::from(2, 1, {0.0, 1.0});
  PointCloud q = PointCloud::from(3, 1, {0.5, 1.5, 2.5});
  CHECK(wasserstein(p, q, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(wasserstein(p, q, 2) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));

  // unsorted input to the full solver, same measure
  PointCloud ps = PointCloud::from(2, 1, {1.0, 0.0});
  PointCloud qs = PointCloud::from(3, 1, {2.5, 0.5, 1.5});
  CHECK(wasserstein(ps, qs, 2) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));
}

TEST_CASE("unequal sizes match the exhaustive transport search") {
  PointCloud p2 = random_cloud(2, 2, 7);
  PointCloud q3 = random_cloud(3, 2, 8);
  for (int order : {1, 2})
    CHECK(wasserstein(p2, q3, order) ==
          doctest::Approx(brute_force_transport(p2, q3, order)).epsilon(1e-10));

  PointCloud p3 = random_cloud(3, 2, 9);
  PointCloud q4 = random_cloud(4, 2, 10);
  for (int order : {1, 2})
    CHECK(wasserstein(p3, q4, order) ==
          doctest::Approx(brute_force_transport(p3, q4, order)).epsilon(1e-10));

  // one-dimensional unequal sizes agree with the quantile path
  PointCloud pa = random_cloud(4, 1, 11);
  PointCloud qb = random_cloud(6, 1, 12);
  for (int order : {1, 2})
    CHECK(wasserstein(pa, qb, order) ==
          doctest::Approx(brute_force_transport(pa, qb, order)).epsilon(1e-10));
}

TEST_CASE("translation moves the clouds by exactly its length") {
  PointCloud p = random_cloud(25, 3, 33);
  const double v[3] = {0.8, -0.6, 1.1};
  std::vector<double> shifted = p.pts;
  for (int i = 0; i < p.n; ++i)
    for (int d = 0; d < 3; ++d) shifted[size_t(i) * 3 + d] += v[d];
  PointCloud q = PointCloud::from(p.n, 3, std::move(shifted));
  const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  CHECK(wasserstein(p, q, 2) == doctest::Approx(len).epsilon(1e-12));
  CHECK(wasserstein(p, q, 1) == doctest::Approx(len).epsilon(1e-12));
}

TEST_CASE("sliced distances are bounded by max-sliced, and that by the full distance") {
  PointCloud p = random_cloud(40, 3, 1);
  PointCloud q = random_cloud(50, 3, 2, 0.7);
  const double w2 = wasserstein(p, q, 2);
  const double swd = sliced_wasserstein(p, q, 2, 128, 5);
  MwdResult mwd = max_sliced_wasserstein(p, q, 2, 256, 50, 5);
  CHECK(swd <= mwd.value + 1e-12);
  CHECK(mwd.value <= w2 + 1e-12);
  CHECK(swd > 0.0);
  REQUIRE(mwd.direction.size() == 3);
  double norm = 0.0;
  for (double d : mwd.direction) norm += d * d;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("in one dimension every sliced variant collapses to the exact distance") {
  PointCloud p = random_cloud(10, 1, 21);
  PointCloud q = random_cloud(7, 1, 22, 0.5);
  const double w = wasserstein(p, q, 2);
  CHECK(sliced_wasserstein(p, q, 2, 16, 3) == doctest::Approx(w).epsilon(1e-12));
  CHECK(max_sliced_wasserstein(p, q, 2, 8, 10, 3).value == doctest::Approx(w).epsilon(1e-12));
}

TEST_CASE("kernel discrepancy matches hand values and clips at zero") {
  // interleaved clouds: the unbiased statistic goes negative and clips
  PointCloud p = PointCloud::from(2, 1, {0.0, 1.0});
  PointCloud q = PointCloud::from(3, 1, {0.5, 1.5, 2.5});
  CHECK(mmd_rbf(p, q, 1.0) == 0.0);

  // coincident pairs far apart: within terms are exactly 1, cross is e^{-2}
  PointCloud a = PointCloud::from(2, 1, {0.0, 0.0});
  PointCloud b = PointCloud::from(2, 1, {2.0, 2.0});
  CHECK(mmd_rbf(a, b, 1.0) ==
        doctest::Approx(std::sqrt(2.0 - 2.0 * std::exp(-2.0))).epsilon(1e-12));
}

TEST_CASE("kernel discrepancy saturates for well-separated clouds") {
  PointCloud p = random_cloud(30, 2, 40);
  std::vector<double> q10 = p.pts, q20 = p.pts;
  for (size_t i = 0; i < q10.size(); i += 2) {
    q10[i] += 10.0;
    q20[i] += 20.0;
  }
  double m10 = mmd_rbf(p, PointCloud::from(30, 2, std::move(q10)), 1.0);
  double m20 = mmd_rbf(p, PointCloud::from(30, 2, std::move(q20)), 1.0);
  CHECK(m10 > 0.5);
  CHECK(std::fabs(m10 - m20) < 0.01 * m10);
}

TEST_CASE("rank aggregation reproduces the textbook example") {
  // methods A [1,2], B [2,1], C [3,3], lower is better
  RankResult r = rank_methods({1.0, 2.0, 2.0, 1.0, 3.0, 3.0}, 3, 2, true);
  REQUIRE(r.avg_ranks.size() == 3);
  CHECK(r.avg_ranks[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(r.avg_ranks[1] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(r.avg_ranks[2] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.friedman == doctest::Approx(3.0).epsilon(1e-12));

  // ties share the average rank
  RankResult t = rank_methods({1.0, 1.0, 1.0, 2.0}, 2, 2, true);
  CHECK(t.avg_ranks[0] == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(t.avg_ranks[1] == doctest::Approx(1.75).epsilon(1e-12));

  // higher-is-better flips the ordering
  RankResult h = rank_methods({1.0, 2.0, 2.0, 1.0, 3.0, 3.0}, 3, 2, false);
  CHECK(h.avg_ranks[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("invalid metric inputs are rejected") {
  PointCloud p = random_cloud(5, 2, 1);
  PointCloud q3 = random_cloud(5, 3, 2);
  CHECK_THROWS_AS(wasserstein(p, q3, 2), std::invalid_argument);
  CHECK_THROWS_AS(wasserstein(p, p, 3), std::invalid_argument);
  CHECK_THROWS_AS(sliced_wasserstein(p, q3, 2), std::invalid_argument);
  CHECK_THROWS_AS(max_sliced_wasserstein(p, q3, 2), std::invalid_argument);
  CHECK_THROWS_AS(mmd_rbf(p, q3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(mmd_rbf(PointCloud::from(1, 1, {0.0}), PointCloud::from(2, 1, {1.0, 2.0}), 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(mmd_rbf(p, p, 0.0), std::invalid_argument);

  CHECK_THROWS_AS(PointCloud::from(2, 2, {1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(PointCloud::from(1, 1, {std::nan("")}), std::invalid_argument);

  const double nan = std::nan("");
  CHECK_THROWS_AS(rank_methods({1.0, nan, 2.0, 1.0}, 2, 2, true), std::invalid_argument);
  CHECK_THROWS_AS(rank_methods({1.0, 2.0}, 1, 2, true), std::invalid_argument);
  CHECK_THROWS_AS(rank_methods({1.0, 2.0, 3.0}, 2, 2, true), std::invalid_argument);

  PointCloud big = random_cloud(5001, 1, 3);
  CHECK_THROWS_AS(wasserstein(big, big, 2), std::invalid_argument);
}

TEST_CASE("metric reports serialize with metadata comments") {
  MetricReport rep;
  rep.row_labels = {"emd", "swd"};
  rep.col_labels = {"tau=0.25", "tau=0.5"};
  rep.values = {0.1, 0.2, 0.3, 0.4};
  rep.metadata = {"n_train=100", "seed=7"};
  const std::string path = "report_tmp.csv";
  write_metric_report_csv(path, rep);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "# n_train=100");
  std::getline(in, line);
  CHECK(line == "# seed=7");
  std::getline(in, line);
  CHECK(line == "method,tau=0.25,tau=0.5");
  std::getline(in, line);
  CHECK(line.substr(0, 4) == "emd,");
  std::getline(in, line);
  CHECK(line.substr(0, 4) == "swd,");
  in.close();
  std::remove(path.c_str());

  MetricReport bad = rep;
  bad.values.pop_back();
  CHECK_THROWS_AS(write_metric_report_csv(path, bad), std::invalid_argument);
}
