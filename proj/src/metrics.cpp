#include "fkl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fkl/rng.hpp"

namespace fkl {

PointCloud PointCloud::from(int n, int dim, std::vector<double> pts) {
  if (n < 1 || dim < 1 || pts.size() != size_t(n) * dim)
    throw std::invalid_argument("PointCloud: bad shape");
  for (double v : pts)
    if (!std::isfinite(v)) throw std::invalid_argument("PointCloud: non-finite entry");
  PointCloud c;
  c.n = n;
  c.dim = dim;
  c.pts = std::move(pts);
  return c;
}

static double pair_cost(const PointCloud& p, int i, const PointCloud& q, int j, int order) {
  double s = 0.0;
  for (int d = 0; d < p.dim; ++d) {
    const double df = p.at(i, d) - q.at(j, d);
    s += df * df;
  }
  return order == 2 ? s : std::sqrt(s);
}

// shortest augmenting path assignment with potentials, O(n^3)
static double assignment_cost(const std::vector<double>& cost, int n) {
  const double INF = std::numeric_limits<double>::infinity();
  std::vector<double> u(size_t(n) + 1, 0.0), v(size_t(n) + 1, 0.0);
  std::vector<int> match(size_t(n) + 1, 0), way(size_t(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(size_t(n) + 1, INF);
    std::vector<char> used(size_t(n) + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = -1;
      double delta = INF;
      const double* row = cost.data() + size_t(i0 - 1) * n;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost[size_t(match[j] - 1) * n + (j - 1)];
  return total;
}

double wasserstein_1d_pow(const std::vector<double>& xs, const std::vector<double>& ys,
                          int order) {
  const size_t n = xs.size(), m = ys.size();
  if (n == 0 || m == 0) throw std::invalid_argument("wasserstein_1d: empty cloud");
  size_t i = 0, j = 0;
  double u = 0.0, total = 0.0;
  while (i < n && j < m) {
    const double ui = double(i + 1) / double(n), uj = double(j + 1) / double(m);
    const double next = std::min(ui, uj);
    const double d = std::abs(xs[i] - ys[j]);
    total += (next - u) * (order == 2 ? d * d : d);
    u = next;
    if (ui <= next) ++i;
    if (uj <= next) ++j;
  }
  return total;
}

namespace {

// transportation simplex with a spanning-tree basis and integer masses
class TransportSimplex {
 public:
  TransportSimplex(const std::vector<double>& cost, std::vector<int64_t> a,
                   std::vector<int64_t> b)
      : c_(cost), a_(std::move(a)), b_(std::move(b)), n_(int(a_.size())), m_(int(b_.size())) {}

  double solve() {
    northwest_corner();
    const int n_nodes = n_ + m_;
    double max_c = 0.0;
    for (double v : c_) max_c = std::max(max_c, std::abs(v));
    const double tol = 1e-11 * std::max(1.0, max_c);
    const long long dantzig_cap = 60LL * n_nodes + 2000;
    const long long hard_cap = 500LL * n_nodes * n_nodes + 100000;
    for (long long it = 0;; ++it) {
      if (it > hard_cap) throw std::runtime_error("transport simplex: pivot cap exceeded");
      compute_potentials();
      int ei = -1, ej = -1;
      double best = -tol;
      if (it < dantzig_cap) {  // most negative reduced cost
        for (int i = 0; i < n_; ++i) {
          const double* row = c_.data() + size_t(i) * m_;
          for (int j = 0; j < m_; ++j) {
            const double r = row[j] - u_[i] - v_[j];
            if (r < best) {
              best = r;
              ei = i;
              ej = j;
            }
          }
        }
      } else {  // Bland: first negative, guards against cycling
        for (int i = 0; i < n_ && ei < 0; ++i)
          for (int j = 0; j < m_; ++j)
            if (c_[size_t(i) * m_ + j] - u_[i] - v_[j] < -tol) {
              ei = i;
              ej = j;
              break;
            }
      }
      if (ei < 0) break;
      pivot(ei, ej);
    }
    double total = 0.0;
    for (const Edge& e : edges_)
      if (e.alive) total += double(e.flow) * c_[size_t(e.i) * m_ + e.j];
    return total;
  }

 private:
  struct Edge {
    int i, j;
    int64_t flow;
    bool alive;
  };

  void add_edge(int i, int j, int64_t f) {
    adj_[i].push_back(int(edges_.size()));
    adj_[n_ + j].push_back(int(edges_.size()));
    edges_.push_back({i, j, f, true});
  }

  void northwest_corner() {
    adj_.assign(size_t(n_ + m_), {});
    std::vector<int64_t> ar = a_, br = b_;
    int i = 0, j = 0;
    while (true) {
      const int64_t q = std::min(ar[i], br[j]);
      add_edge(i, j, q);
      ar[i] -= q;
      br[j] -= q;
      if (i == n_ - 1 && j == m_ - 1) break;
      if (ar[i] == 0 && i < n_ - 1)
        ++i;
      else
        ++j;
    }
  }

  void compute_potentials() {
    u_.assign(size_t(n_), 0.0);
    v_.assign(size_t(m_), 0.0);
    std::vector<char> seen(size_t(n_ + m_), 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int eid : adj_[node]) {
        const Edge& e = edges_[eid];
        if (!e.alive) continue;
        const int other = node == e.i ? n_ + e.j : e.i;
        if (seen[other]) continue;
        seen[other] = 1;
        if (other >= n_)
          v_[other - n_] = c_[size_t(e.i) * m_ + e.j] - u_[e.i];
        else
          u_[other] = c_[size_t(e.i) * m_ + e.j] - v_[e.j];
        stack.push_back(other);
      }
    }
  }

  // unique tree path from row node ei to column node ej, then augment around
  // the cycle closed by the entering edge
  void pivot(int ei, int ej) {
    const int n_nodes = n_ + m_;
    std::vector<int> par_edge(size_t(n_nodes), -1), par_node(size_t(n_nodes), -1);
    std::vector<char> seen(size_t(n_nodes), 0);
    std::vector<int> stack = {ei};
    seen[ei] = 1;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      if (node == n_ + ej) break;
      for (int eid : adj_[node]) {
        const Edge& e = edges_[eid];
        if (!e.alive) continue;
        const int other = node == e.i ? n_ + e.j : e.i;
        if (seen[other]) continue;
        seen[other] = 1;
        par_edge[other] = eid;
        par_node[other] = node;
        stack.push_back(other);
      }
    }
    if (!seen[n_ + ej]) throw std::logic_error("transport simplex: basis not spanning");

    // walk back from ej's node; edges leaving a column node carry +, edges
    // leaving a row node carry - (alternating signs around the cycle)
    std::vector<int> path;
    for (int node = n_ + ej; node != ei; node = par_node[node]) path.push_back(par_edge[node]);

    int64_t theta = std::numeric_limits<int64_t>::max();
    int leave = -1;
    bool minus = true;  // first edge stepping back from the column node is a minus edge
    for (int eid : path) {
      if (minus && edges_[eid].flow < theta) {
        theta = edges_[eid].flow;
        leave = eid;
      }
      minus = !minus;
    }
    minus = true;
    for (int eid : path) {
      edges_[eid].flow += minus ? -theta : theta;
      minus = !minus;
    }
    edges_[leave].alive = false;
    add_edge(ei, ej, theta);
  }

  const std::vector<double>& c_;
  std::vector<int64_t> a_, b_;
  int n_, m_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<double> u_, v_;
};

}  // namespace

double wasserstein(const PointCloud& p, const PointCloud& q, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("wasserstein: order must be 1 or 2");
  if (p.dim != q.dim) throw std::invalid_argument("wasserstein: dimension mismatch");
  if (p.n < 1 || q.n < 1 || p.n > 5000 || q.n > 5000)
    throw std::invalid_argument("wasserstein: cloud sizes must be in [1, 5000]");

  if (p.n == q.n) {
    std::vector<double> cost(size_t(p.n) * q.n);
    for (int i = 0; i < p.n; ++i)
      for (int j = 0; j < q.n; ++j) cost[size_t(i) * q.n + j] = pair_cost(p, i, q, j, order);
    const double mean = assignment_cost(cost, p.n) / double(p.n);
    return order == 2 ? std::sqrt(mean) : mean;
  }

  if (p.dim == 1) {
    std::vector<double> xs = p.pts, ys = q.pts;
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    const double w = wasserstein_1d_pow(xs, ys, order);
    return order == 2 ? std::sqrt(w) : w;
  }

  const int64_t g = std::gcd(int64_t(p.n), int64_t(q.n));
  const int64_t L = int64_t(p.n) / g * int64_t(q.n);
  std::vector<double> cost(size_t(p.n) * q.n);
  for (int i = 0; i < p.n; ++i)
    for (int j = 0; j < q.n; ++j) cost[size_t(i) * q.n + j] = pair_cost(p, i, q, j, order);
  std::vector<int64_t> a(size_t(p.n), L / p.n), b(size_t(q.n), L / q.n);
  const double mean = TransportSimplex(cost, std::move(a), std::move(b)).solve() / double(L);
  return order == 2 ? std::sqrt(mean) : mean;
}

static std::vector<double> random_unit_direction(int dim, uint64_t seed, uint64_t stream) {
  Rng rng(seed, stream);
  std::vector<double> v(static_cast<size_t>(dim));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (int d = 0; d < dim; ++d) {
      v[d] = rng.normal();
      norm += v[d] * v[d];
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

static double projected_w_pow(const PointCloud& p, const PointCloud& q,
                              const std::vector<double>& dir, int order,
                              std::vector<double>& xs, std::vector<double>& ys) {
  xs.resize(size_t(p.n));
  ys.resize(size_t(q.n));
  for (int i = 0; i < p.n; ++i) {
    double s = 0.0;
    for (int d = 0; d < p.dim; ++d) s += p.at(i, d) * dir[d];
    xs[i] = s;
  }
  for (int j = 0; j < q.n; ++j) {
    double s = 0.0;
    for (int d = 0; d < q.dim; ++d) s += q.at(j, d) * dir[d];
    ys[j] = s;
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  return wasserstein_1d_pow(xs, ys, order);
}

double sliced_wasserstein(const PointCloud& p, const PointCloud& q, int order,
                          int n_projections, uint64_t seed) {
  if (order != 1 && order != 2)
    throw std::invalid_argument("sliced_wasserstein: order must be 1 or 2");
  if (p.dim != q.dim) throw std::invalid_argument("sliced_wasserstein: dimension mismatch");
  if (n_projections < 1) throw std::invalid_argument("sliced_wasserstein: n_projections >= 1");
  std::vector<double> xs, ys;
  double acc = 0.0;
  for (int j = 0; j < n_projections; ++j) {
    const auto dir = random_unit_direction(p.dim, seed, uint64_t(j));
    acc += projected_w_pow(p, q, dir, order, xs, ys);
  }
  const double mean = acc / double(n_projections);
  return order == 2 ? std::sqrt(mean) : mean;
}

MwdResult max_sliced_wasserstein(const PointCloud& p, const PointCloud& q, int order,
                                 int n_candidates, int refine_steps, uint64_t seed) {
  if (order != 1 && order != 2)
    throw std::invalid_argument("max_sliced_wasserstein: order must be 1 or 2");
  if (p.dim != q.dim) throw std::invalid_argument("max_sliced_wasserstein: dimension mismatch");
  if (n_candidates < 1) throw std::invalid_argument("max_sliced_wasserstein: n_candidates >= 1");

  std::vector<double> xs, ys;
  auto eval = [&](const std::vector<double>& dir) {
    return projected_w_pow(p, q, dir, order, xs, ys);
  };

  MwdResult best;
  double best_pow = -1.0;
  for (int j = 0; j < n_candidates; ++j) {
    auto dir = random_unit_direction(p.dim, seed, uint64_t(j));
    const double w = eval(dir);
    if (w > best_pow) {
      best_pow = w;
      best.direction = std::move(dir);
    }
  }

  const double h = 1e-4;
  double step = 0.25;
  std::vector<double> g(static_cast<size_t>(p.dim)), cand(static_cast<size_t>(p.dim));
  auto renorm = [](std::vector<double>& v) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    const double inv = 1.0 / std::sqrt(n2);
    for (double& x : v) x *= inv;
  };
  for (int s = 0; s < refine_steps; ++s) {
    for (int d = 0; d < p.dim; ++d) {
      cand = best.direction;
      cand[d] += h;
      renorm(cand);
      g[d] = (eval(cand) - best_pow) / h;
    }
    cand = best.direction;
    for (int d = 0; d < p.dim; ++d) cand[d] += step * g[d];
    renorm(cand);
    const double w = eval(cand);
    if (w > best_pow) {
      best_pow = w;
      best.direction = cand;
    } else {
      step *= 0.5;
    }
  }
  best.value = order == 2 ? std::sqrt(best_pow) : best_pow;
  return best;
}

double mmd_rbf(const PointCloud& p, const PointCloud& q, double bandwidth) {
  if (p.dim != q.dim) throw std::invalid_argument("mmd_rbf: dimension mismatch");
  if (p.n < 2 || q.n < 2) throw std::invalid_argument("mmd_rbf: need >= 2 points per cloud");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("mmd_rbf: bandwidth > 0");
  const double inv = -0.5 / (bandwidth * bandwidth);
  auto ksum = [&](const PointCloud& a, const PointCloud& b, bool skip_diag) {
    double s = 0.0;
    for (int i = 0; i < a.n; ++i)
      for (int j = 0; j < b.n; ++j) {
        if (skip_diag && i == j) continue;
        double d2 = 0.0;
        for (int d = 0; d < a.dim; ++d) {
          const double df = a.at(i, d) - b.at(j, d);
          d2 += df * df;
        }
        s += std::exp(inv * d2);
      }
    return s;
  };
  const double mmd2 = ksum(p, p, true) / (double(p.n) * (p.n - 1)) +
                      ksum(q, q, true) / (double(q.n) * (q.n - 1)) -
                      2.0 * ksum(p, q, false) / (double(p.n) * q.n);
  return std::sqrt(std::max(0.0, mmd2));
}

RankResult rank_methods(const std::vector<double>& scores, int n_methods, int n_tasks,
                        bool lower_is_better) {
  if (n_methods < 2 || n_tasks < 2)
    throw std::invalid_argument("rank_methods: need >= 2 methods and >= 2 tasks");
  if (scores.size() != size_t(n_methods) * n_tasks)
    throw std::invalid_argument("rank_methods: score matrix shape mismatch");
  for (double s : scores)
    if (std::isnan(s)) throw std::invalid_argument("rank_methods: NaN score");

  RankResult res;
  res.avg_ranks.assign(size_t(n_methods), 0.0);
  std::vector<int> idx(static_cast<size_t>(n_methods));
  for (int t = 0; t < n_tasks; ++t) {
    std::iota(idx.begin(), idx.end(), 0);
    auto key = [&](int m) {
      const double s = scores[size_t(m) * n_tasks + t];
      return lower_is_better ? s : -s;
    };
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return key(a) < key(b); });
    for (int i = 0; i < n_methods;) {
      int j = i;
      while (j < n_methods && key(idx[j]) == key(idx[i])) ++j;
      const double r = 0.5 * double(i + 1 + j);  // average of ranks i+1 .. j
      for (int k = i; k < j; ++k) res.avg_ranks[size_t(idx[k])] += r;
      i = j;
    }
  }
  const double M = n_methods, T = n_tasks;
  double sum = 0.0;
  for (double& r : res.avg_ranks) {
    r /= T;
    sum += (r - (M + 1) / 2) * (r - (M + 1) / 2);
  }
  res.friedman = 12.0 * T / (M * (M + 1)) * sum;
  return res;
}

void write_metric_report_csv(const std::string& path, const MetricReport& report) {
  const size_t rows = report.row_labels.size(), cols = report.col_labels.size();
  if (report.values.size() != rows * cols)
    throw std::invalid_argument("write_metric_report_csv: shape mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& m : report.metadata) out << "# " << m << "\n";
  out << "method";
  for (const auto& c : report.col_labels) out << "," << c;
  out << "\n";
  out.precision(12);
  for (size_t r = 0; r < rows; ++r) {
    out << report.row_labels[r];
    for (size_t c = 0; c < cols; ++c) out << "," << report.values[r * cols + c];
    out << "\n";
  }
}

}  // namespace fkl
