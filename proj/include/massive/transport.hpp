#pragma once

// Small dense solvers used by the measure metrics: min-cost transport by
// successive shortest paths, log-domain Sinkhorn with epsilon scaling,
// Dinic max-flow, and a two-phase tableau simplex.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <vector>

#include "massive/error.hpp"

namespace massive::transport {

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double v = 0.0) : rows(r), cols(c), data(r * c, v) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

struct TransportResult {
  double cost = 0.0;
  Matrix plan;
  std::size_t iterations = 0;
};

namespace detail {

inline constexpr double kFlowEps = 1e-15;

inline void check_marginals(std::span<const double> a, std::span<const double> b, const Matrix& cost) {
  require(a.size() == cost.rows && b.size() == cost.cols, ErrorKind::dimension_mismatch,
          "cost matrix does not match marginals");
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  require(std::abs(sa - sb) <= 1e-9, ErrorKind::unbalanced, "marginals have different total mass");
  for (double v : a) require(v >= 0.0, ErrorKind::invalid_parameter, "negative marginal");
  for (double v : b) require(v >= 0.0, ErrorKind::invalid_parameter, "negative marginal");
}

}  // namespace detail

/// Exact optimal transport between discrete marginals `a` (rows) and `b`
/// (columns), by successive shortest augmenting paths with Dijkstra and
/// node potentials on the complete bipartite graph.
inline TransportResult exact(std::span<const double> a, std::span<const double> b, const Matrix& cost) {
  detail::check_marginals(a, b, cost);
  const std::size_t n = a.size(), m = b.size();
  for (double c : cost.data) require(c >= 0.0 && std::isfinite(c), ErrorKind::invalid_parameter, "cost must be finite and >= 0");

  TransportResult out;
  out.plan = Matrix(n, m, 0.0);
  std::vector<double> supply(a.begin(), a.end()), demand(b.begin(), b.end());
  // Demands are scaled so both sides carry the same total exactly.
  {
    const double sa = std::accumulate(supply.begin(), supply.end(), 0.0);
    const double sb = std::accumulate(demand.begin(), demand.end(), 0.0);
    if (sb > 0.0)
      for (double& v : demand) v *= sa / sb;
  }
  // Node layout: rows 0..n-1, columns n..n+m-1. Potentials keep reduced
  // costs non-negative.
  const std::size_t V = n + m;
  std::vector<double> pot(V, 0.0), dist(V);
  std::vector<std::ptrdiff_t> prev(V);
  std::vector<bool> done(V);
  constexpr double inf = std::numeric_limits<double>::infinity();

  double remaining = std::accumulate(supply.begin(), supply.end(), 0.0);
  const double total = remaining;
  std::size_t guard = 0;
  while (remaining > detail::kFlowEps * std::max(1.0, total)) {
    require(++guard < 100000, ErrorKind::convergence, "transport augmentation did not terminate");
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), false);
    for (std::size_t i = 0; i < n; ++i)
      if (supply[i] > detail::kFlowEps) dist[i] = 0.0;
    // Dense Dijkstra. Forward arcs row->col always exist; backward arcs
    // col->row exist where the plan is positive.
    for (;;) {
      std::size_t u = V;
      double best = inf;
      for (std::size_t v = 0; v < V; ++v)
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      if (u == V) break;
      done[u] = true;
      if (u < n) {
        for (std::size_t j = 0; j < m; ++j) {
          const std::size_t v = n + j;
          if (done[v]) continue;
          const double rc = cost(u, j) + pot[u] - pot[v];
          if (dist[u] + rc < dist[v]) {
            dist[v] = dist[u] + std::max(rc, 0.0);
            prev[v] = static_cast<std::ptrdiff_t>(u);
          }
        }
      } else {
        const std::size_t j = u - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (done[i] || out.plan(i, j) <= detail::kFlowEps) continue;
          const double rc = -cost(i, j) + pot[u] - pot[i];
          if (dist[u] + rc < dist[i]) {
            dist[i] = dist[u] + std::max(rc, 0.0);
            prev[i] = static_cast<std::ptrdiff_t>(u);
          }
        }
      }
    }
    // Nearest column with unmet demand.
    std::size_t sink = V;
    for (std::size_t j = 0; j < m; ++j)
      if (demand[j] > detail::kFlowEps && dist[n + j] < inf && (sink == V || dist[n + j] < dist[sink]))
        sink = n + j;
    if (sink == V) break;
    for (std::size_t v = 0; v < V; ++v)
      if (dist[v] < inf) pot[v] += dist[v];

    // Bottleneck along the path.
    double delta = demand[sink - n];
    std::size_t v = sink;
    while (prev[v] >= 0) {
      const auto u = static_cast<std::size_t>(prev[v]);
      if (u >= n) delta = std::min(delta, out.plan(v, u - n));  // backward arc col u -> row v
      v = u;
    }
    delta = std::min(delta, supply[v]);
    // Apply.
    v = sink;
    while (prev[v] >= 0) {
      const auto u = static_cast<std::size_t>(prev[v]);
      if (u < n)
        out.plan(u, v - n) += delta;
      else
        out.plan(v, u - n) -= delta;
      v = u;
    }
    supply[v] -= delta;
    demand[sink - n] -= delta;
    remaining -= delta;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      if (out.plan(i, j) < 0.0) out.plan(i, j) = 0.0;
      out.cost += out.plan(i, j) * cost(i, j);
    }
  out.iterations = guard;
  return out;
}

struct SinkhornOptions {
  double epsilon = 1e-3;
  double tolerance = 1e-9;  // L1 marginal violation
  std::size_t max_iterations = 200000;
};

/// Entropic transport in the log domain. The regularization is annealed from
/// the cost scale down to `epsilon` (halving, warm-started potentials), then
/// iterated at `epsilon` until the row marginal violation is below tolerance.
/// Returns the transport cost <P, C> of the entropic plan.
inline TransportResult sinkhorn(std::span<const double> a, std::span<const double> b, const Matrix& cost,
                                const SinkhornOptions& opt = {}) {
  detail::check_marginals(a, b, cost);
  require(opt.epsilon > 0.0, ErrorKind::invalid_parameter, "Sinkhorn epsilon must be positive");
  const std::size_t n = a.size(), m = b.size();
  std::vector<double> la(n), lb(m);
  for (std::size_t i = 0; i < n; ++i) la[i] = a[i] > 0.0 ? std::log(a[i]) : -INFINITY;
  for (std::size_t j = 0; j < m; ++j) lb[j] = b[j] > 0.0 ? std::log(b[j]) : -INFINITY;
  std::vector<double> f(n, 0.0), g(m, 0.0), buf(std::max(n, m));

  auto lse = [&](std::size_t len) {
    double mx = -INFINITY;
    for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, buf[k]);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (std::size_t k = 0; k < len; ++k) s += std::exp(buf[k] - mx);
    return mx + std::log(s);
  };
  auto update_f = [&](double eps) {
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] <= 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) buf[j] = (g[j] - cost(i, j)) / eps + lb[j];
      f[i] = -eps * lse(m);
    }
  };
  auto update_g = [&](double eps) {
    for (std::size_t j = 0; j < m; ++j) {
      if (b[j] <= 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) buf[i] = (f[i] - cost(i, j)) / eps + la[i];
      g[j] = -eps * lse(n);
    }
  };
  auto row_violation = [&](double eps) {
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        row += std::exp((f[i] + g[j] - cost(i, j)) / eps + la[i] + lb[j]);
      err += std::abs(row - a[i]);
    }
    return err;
  };

  double cmax = 0.0;
  for (double c : cost.data) cmax = std::max(cmax, c);
  std::size_t iters = 0;
  for (double eps = std::max(cmax, opt.epsilon); eps > opt.epsilon; eps *= 0.5) {
    for (int k = 0; k < 10; ++k, ++iters) {
      update_f(eps);
      update_g(eps);
    }
  }
  bool converged = false;
  while (iters < opt.max_iterations) {
    update_f(opt.epsilon);
    update_g(opt.epsilon);
    ++iters;
    if (iters % 10 == 0 && row_violation(opt.epsilon) < opt.tolerance) {
      converged = true;
      break;
    }
  }
  require(converged, ErrorKind::convergence, "Sinkhorn did not reach the marginal tolerance");

  TransportResult out;
  out.plan = Matrix(n, m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double p = std::exp((f[i] + g[j] - cost(i, j)) / opt.epsilon + la[i] + lb[j]);
      out.plan(i, j) = p;
      out.cost += p * cost(i, j);
    }
  out.iterations = iters;
  return out;
}

/// Maximum flow from rows to columns through the arcs where `allowed(i,j)`
/// holds, with row capacities `a` and column capacities `b` (Dinic).
template <class Allowed>
double bipartite_max_flow(std::span<const double> a, std::span<const double> b, Allowed&& allowed) {
  const std::size_t n = a.size(), m = b.size();
  const std::size_t S = n + m, T = n + m + 1, V = n + m + 2;
  struct Arc {
    std::size_t to;
    double cap;
  };
  std::vector<Arc> arcs;
  std::vector<std::vector<std::size_t>> adj(V);
  auto add = [&](std::size_t u, std::size_t v, double c) {
    adj[u].push_back(arcs.size());
    arcs.push_back({v, c});
    adj[v].push_back(arcs.size());
    arcs.push_back({u, 0.0});
  };
  for (std::size_t i = 0; i < n; ++i) add(S, i, a[i]);
  for (std::size_t j = 0; j < m; ++j) add(n + j, T, b[j]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (allowed(i, j)) add(i, n + j, INFINITY);

  constexpr double eps = 1e-15;
  std::vector<int> level(V);
  std::vector<std::size_t> it(V);
  double flow = 0.0;
  auto bfs = [&] {
    std::fill(level.begin(), level.end(), -1);
    std::queue<std::size_t> q;
    level[S] = 0;
    q.push(S);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (auto e : adj[u])
        if (arcs[e].cap > eps && level[arcs[e].to] < 0) {
          level[arcs[e].to] = level[u] + 1;
          q.push(arcs[e].to);
        }
    }
    return level[T] >= 0;
  };
  auto dfs = [&](auto&& self, std::size_t u, double pushed) -> double {
    if (u == T) return pushed;
    for (auto& i = it[u]; i < adj[u].size(); ++i) {
      const auto e = adj[u][i];
      const auto v = arcs[e].to;
      if (arcs[e].cap <= eps || level[v] != level[u] + 1) continue;
      const double got = self(self, v, std::min(pushed, arcs[e].cap));
      if (got > eps) {
        arcs[e].cap -= got;
        arcs[e ^ 1].cap += got;
        return got;
      }
    }
    return 0.0;
  };
  while (bfs()) {
    std::fill(it.begin(), it.end(), 0);
    while (true) {
      const double f = dfs(dfs, S, INFINITY);
      if (f <= eps) break;
      flow += f;
    }
  }
  return flow;
}

struct LpResult {
  double objective = 0.0;
  std::vector<double> x;
};

/// Minimizes c.x subject to A x = b, x >= 0, by the two-phase tableau simplex
/// with Bland's rule. Throws on infeasibility or unboundedness.
inline LpResult simplex_min(const Matrix& A, std::vector<double> b, std::vector<double> c) {
  const std::size_t rows = A.rows, cols = A.cols;
  require(b.size() == rows && c.size() == cols, ErrorKind::dimension_mismatch, "LP dimensions");
  constexpr double tol = 1e-11;
  // Tableau columns: original | artificial | rhs.
  const std::size_t W = cols + rows + 1;
  Matrix tab(rows + 1, W, 0.0);
  std::vector<std::size_t> basis(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double sign = b[r] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < cols; ++j) tab(r, j) = sign * A(r, j);
    tab(r, cols + r) = 1.0;
    tab(r, W - 1) = sign * b[r];
    basis[r] = cols + r;
  }

  auto pivot = [&](std::size_t pr, std::size_t pc) {
    const double p = tab(pr, pc);
    for (std::size_t j = 0; j < W; ++j) tab(pr, j) /= p;
    for (std::size_t r = 0; r <= rows; ++r) {
      if (r == pr) continue;
      const double f = tab(r, pc);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < W; ++j) tab(r, j) -= f * tab(pr, j);
    }
    basis[pr] = pc;
  };
  // Objective row holds reduced costs; minimize. `allowed` limits entering
  // columns (artificials leave the problem after phase one).
  auto run = [&](std::size_t allowed) {
    for (std::size_t guard = 0; guard < 50000; ++guard) {
      std::size_t pc = W;
      for (std::size_t j = 0; j < allowed; ++j)
        if (tab(rows, j) < -tol) {
          pc = j;
          break;
        }
      if (pc == W) return;
      std::size_t pr = rows;
      double best = INFINITY;
      for (std::size_t r = 0; r < rows; ++r)
        if (tab(r, pc) > tol) {
          const double ratio = tab(r, W - 1) / tab(r, pc);
          if (ratio < best - tol || (std::abs(ratio - best) <= tol && pr < rows && basis[r] < basis[pr])) {
            best = ratio;
            pr = r;
          }
        }
      require(pr < rows, ErrorKind::convergence, "linear program is unbounded");
      pivot(pr, pc);
    }
    throw Error(ErrorKind::convergence, "simplex iteration limit reached");
  };

  // Phase one: minimize the sum of artificials.
  for (std::size_t j = 0; j < W; ++j) tab(rows, j) = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < W; ++j)
      if (j < cols || j == W - 1) tab(rows, j) -= tab(r, j);
  run(cols + rows);
  require(std::abs(tab(rows, W - 1)) < 1e-8, ErrorKind::convergence, "linear program is infeasible");
  // Drive remaining artificials out of the basis where possible.
  for (std::size_t r = 0; r < rows; ++r) {
    if (basis[r] < cols) continue;
    for (std::size_t j = 0; j < cols; ++j)
      if (std::abs(tab(r, j)) > tol) {
        pivot(r, j);
        break;
      }
  }
  // Phase two objective row.
  for (std::size_t j = 0; j < W; ++j) tab(rows, j) = j < cols ? c[j] : 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t bc = basis[r];
    if (bc >= cols) continue;
    const double f = tab(rows, bc);
    if (f == 0.0) continue;
    for (std::size_t j = 0; j < W; ++j) tab(rows, j) -= f * tab(r, j);
  }
  run(cols);

  LpResult out;
  out.x.assign(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    if (basis[r] < cols) out.x[basis[r]] = tab(r, W - 1);
  for (std::size_t j = 0; j < cols; ++j) out.objective += c[j] * out.x[j];
  return out;
}

}  // namespace massive::transport
