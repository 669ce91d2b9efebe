#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "massive/ambient.hpp"
#include "massive/error.hpp"
#include "massive/parallel.hpp"
#include "massive/simplex.hpp"
#include "massive/transport.hpp"

namespace massive {

/// Finitely supported purely atomic measure on a base space. Probability
/// measures have total mass 1 (within 1e-9); the squared measure is flagged
/// as unnormalized.
class AtomicMeasure {
 public:
  static constexpr double kMassTolerance = 1e-9;

  AtomicMeasure() = default;

  AtomicMeasure(BaseSpace space, std::vector<Point> positions, std::vector<double> masses,
                bool probability = true)
      : space_(space), masses_(std::move(masses)), probability_(probability) {
    space_.validate();
    require(positions.size() == masses_.size(), ErrorKind::dimension_mismatch,
            "positions and masses differ in length");
    require(!masses_.empty(), ErrorKind::invalid_parameter, "measure has no atoms");
    coords_.reserve(positions.size() * static_cast<std::size_t>(space_.dim));
    for (auto& p : positions) {
      check_point(space_, p);
      canonicalize(space_, p);
      coords_.insert(coords_.end(), p.begin(), p.end());
    }
    for (double m : masses_)
      require(std::isfinite(m) && m > 0.0, ErrorKind::invalid_parameter, "atom masses must be positive");
    const double total = total_mass();
    if (probability_)
      require(std::abs(total - 1.0) <= kMassTolerance, ErrorKind::invalid_parameter,
              "probability measure must have total mass one");
    else
      require(total <= 1.0 + kMassTolerance, ErrorKind::invalid_parameter, "total mass exceeds one");
  }

  const BaseSpace& space() const { return space_; }
  std::size_t size() const { return masses_.size(); }
  double mass(std::size_t i) const { return masses_[i]; }
  std::span<const double> masses() const { return masses_; }
  std::span<const double> position(std::size_t i) const {
    return std::span<const double>(coords_).subspan(i * static_cast<std::size_t>(space_.dim),
                                                    static_cast<std::size_t>(space_.dim));
  }
  Point point(std::size_t i) const {
    auto p = position(i);
    return Point(p.begin(), p.end());
  }
  double total_mass() const { return std::accumulate(masses_.begin(), masses_.end(), 0.0); }
  bool is_probability() const { return probability_; }

  bool operator==(const AtomicMeasure&) const = default;

 private:
  BaseSpace space_;
  std::vector<double> masses_;
  std::vector<double> coords_;
  bool probability_ = true;
};

/// Empirical measure sum_i s_i delta_{x_i}. Atoms are not merged; coinciding
/// positions are rejected since the map would not be invertible. Zero masses
/// (frozen particles of an explicit sequence) contribute no atom. A positive
/// tail mass yields a sub-probability measure.
inline AtomicMeasure em(const MassSequence& masses, std::span<const Point> positions, const BaseSpace& space,
                        double tolerance = 1e-12) {
  require(positions.size() == masses.size(), ErrorKind::dimension_mismatch,
          "em needs one position per mass");
  std::vector<Point> pts;
  std::vector<double> ms;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (masses[i] == 0.0) continue;
    pts.push_back(positions[i]);
    ms.push_back(masses[i]);
  }
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      require(distance(space, pts[i], pts[j]) > tolerance, ErrorKind::injectivity,
              "atoms " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
  const bool probability = masses.tail_mass() <= AtomicMeasure::kMassTolerance;
  return AtomicMeasure(space, std::move(pts), std::move(ms), probability);
}

struct MassesAndPositions {
  MassSequence masses;
  std::vector<Point> positions;
};

/// Inverse of em on its image: masses sorted non-increasingly with their
/// positions carried along (ties keep atom order).
inline MassesAndPositions em_inverse(const AtomicMeasure& mu) {
  std::vector<std::size_t> order(mu.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return mu.mass(a) > mu.mass(b); });
  std::vector<double> ms;
  MassesAndPositions out;
  for (auto i : order) {
    ms.push_back(mu.mass(i));
    out.positions.push_back(mu.point(i));
  }
  const double tail = std::max(0.0, 1.0 - mu.total_mass());
  out.masses = MassSequence(std::move(ms), tail, MassLaw::explicit_masses());
  return out;
}

/// eta^2 = sum_x eta{x}^2 delta_x.
inline AtomicMeasure squared_measure(const AtomicMeasure& mu) {
  std::vector<Point> pts;
  std::vector<double> ms;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    pts.push_back(mu.point(i));
    ms.push_back(mu.mass(i) * mu.mass(i));
  }
  return AtomicMeasure(mu.space(), std::move(pts), std::move(ms), false);
}

/// Mass of the atoms lying in the set described by `indicator`.
inline double mass_in(const AtomicMeasure& mu, const std::function<bool(std::span<const double>)>& indicator) {
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (indicator(mu.position(i))) acc += mu.mass(i);
  return acc;
}

// ---------------------------------------------------------------------------
// Distances

inline constexpr std::size_t kDefaultAtomCap = 64;

namespace detail {

inline void check_pair(const AtomicMeasure& mu, const AtomicMeasure& nu) {
  require(mu.space() == nu.space(), ErrorKind::representation_mismatch, "measures live on different spaces");
}

inline void check_cap(const AtomicMeasure& mu, const AtomicMeasure& nu, std::size_t cap) {
  require(mu.size() <= cap && nu.size() <= cap, ErrorKind::size_limit,
          "support exceeds " + std::to_string(cap) + " atoms; use the Sinkhorn-based bounds instead");
}

inline double bounded_distance(const BaseSpace& s, std::span<const double> x, std::span<const double> y) {
  return std::min(distance(s, x, y), 1.0);
}

inline transport::Matrix cross_cost(const AtomicMeasure& mu, const AtomicMeasure& nu, int power) {
  transport::Matrix c(mu.size(), nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j)
      c(i, j) = power == 2 ? distance_squared(mu.space(), mu.position(i), nu.position(j))
                           : distance(mu.space(), mu.position(i), nu.position(j));
  return c;
}

}  // namespace detail

/// Prokhorov distance for the bounded metric d1 = min(d, 1).
///
/// By Strassen's theorem the condition mu(A) <= nu(A^eps) + eps for all A
/// holds iff the bipartite network with arcs d1 <= eps carries flow at least
/// |mu| - eps. The flow deficit is a step function of eps that only changes
/// at the pairwise distances, so the infimum is found exactly by a binary
/// search over those thresholds.
inline double prokhorov(const AtomicMeasure& mu, const AtomicMeasure& nu, std::size_t cap = kDefaultAtomCap) {
  detail::check_pair(mu, nu);
  detail::check_cap(mu, nu, cap);
  const std::size_t n = mu.size(), m = nu.size();
  transport::Matrix d(n, m);
  std::vector<double> levels{0.0};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      d(i, j) = detail::bounded_distance(mu.space(), mu.position(i), nu.position(j));
      levels.push_back(d(i, j));
    }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  const double total = mu.total_mass();
  auto deficit = [&](double eps) {
    const double f = transport::bipartite_max_flow(mu.masses(), nu.masses(),
                                                   [&](std::size_t i, std::size_t j) { return d(i, j) <= eps; });
    return std::max(0.0, total - f);
  };
  constexpr double slack = 1e-12;
  // Smallest level index k with deficit(levels[k]) <= levels[k]; the last
  // level admits every arc, so the search is well defined.
  std::size_t lo = 0, hi = levels.size() - 1;
  std::vector<double> cache(levels.size(), -1.0);
  auto g = [&](std::size_t k) {
    if (cache[k] < 0.0) cache[k] = deficit(levels[k]);
    return cache[k];
  };
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (g(mid) <= levels[mid] + slack)
      hi = mid;
    else
      lo = mid + 1;
  }
  double best = levels[lo];
  if (lo > 0) best = std::min(best, g(lo - 1));
  return std::clamp(best, 0.0, 1.0);
}

/// Phi_eps(mu) = sum_{i,j} m_i m_j cos(2 d1(x_i, x_j) / (pi eps)).
inline double cosine_energy(const AtomicMeasure& mu, double eps) {
  double acc = 0.0;
  const double k = 2.0 / (std::numbers::pi * eps);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    acc += mu.mass(i) * mu.mass(i);
    for (std::size_t j = i + 1; j < mu.size(); ++j)
      acc += 2.0 * mu.mass(i) * mu.mass(j) *
             std::cos(k * detail::bounded_distance(mu.space(), mu.position(i), mu.position(j)));
  }
  return acc;
}

struct WeakAtomicOptions {
  double grid_min = 1e-4;
  std::size_t refine_peaks = 8;
};

/// sup over eps in (0, 1] of |Phi_eps(mu) - Phi_eps(nu)|.
///
/// In kappa = 1/eps the difference is a trigonometric sum
///   c0 + sum_l w_l cos(omega_l kappa),  omega_l = 2 d1 / pi <= 2 / pi,
/// so a uniform kappa grid with spacing well below the shortest period
/// resolves every oscillation; the largest local maxima are then refined by
/// golden-section search. kappa runs up to 1/lower, where the lower eps end
/// is moved below the smallest nonzero atom separation.
inline double cosine_energy_gap(const AtomicMeasure& mu, const AtomicMeasure& nu,
                                const WeakAtomicOptions& opt = {}) {
  detail::check_pair(mu, nu);
  double c0 = 0.0, dmin = 1.0;
  std::vector<double> omega, weight;
  auto collect = [&](const AtomicMeasure& m, double sign) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      c0 += sign * m.mass(i) * m.mass(i);
      for (std::size_t j = i + 1; j < m.size(); ++j) {
        const double dij = detail::bounded_distance(m.space(), m.position(i), m.position(j));
        if (dij > 0.0) dmin = std::min(dmin, dij);
        omega.push_back(2.0 * dij / std::numbers::pi);
        weight.push_back(sign * 2.0 * m.mass(i) * m.mass(j));
      }
    }
  };
  collect(mu, 1.0);
  collect(nu, -1.0);
  const double lower = std::min(opt.grid_min, 0.05 * dmin);
  auto h = [&](double kappa) {
    double acc = c0;
    for (std::size_t l = 0; l < omega.size(); ++l) acc += weight[l] * std::cos(omega[l] * kappa);
    return std::abs(acc);
  };
  const double omega_max = omega.empty() ? 0.0 : *std::max_element(omega.begin(), omega.end());
  const double step = omega_max > 0.0 ? std::min(0.25, std::numbers::pi / (8.0 * omega_max)) : 1.0;
  const double kmax = 1.0 / lower;
  const auto n = static_cast<std::size_t>(std::ceil((kmax - 1.0) / step)) + 1;
  std::vector<double> grid(n), val(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = std::min(kmax, 1.0 + step * static_cast<double>(i));
    val[i] = h(grid[i]);
  }
  double best = *std::max_element(val.begin(), val.end());

  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = i == 0 || val[i] >= val[i - 1];
    const bool right = i + 1 == n || val[i] >= val[i + 1];
    if (left && right) peaks.push_back(i);
  }
  std::sort(peaks.begin(), peaks.end(), [&](auto a, auto b) { return val[a] > val[b]; });
  if (peaks.size() > opt.refine_peaks) peaks.resize(opt.refine_peaks);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (auto i : peaks) {
    double a = grid[i == 0 ? 0 : i - 1];
    double b = grid[i + 1 == n ? n - 1 : i + 1];
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = h(c), fd = h(d);
    for (int it = 0; it < 100 && b - a > 1e-12 * b; ++it) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - phi * (b - a);
        fc = h(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + phi * (b - a);
        fd = h(d);
      }
    }
    best = std::max({best, fc, fd});
  }
  return best;
}

inline double weak_atomic_distance(const AtomicMeasure& mu, const AtomicMeasure& nu,
                                   const WeakAtomicOptions& opt = {}, std::size_t cap = kDefaultAtomCap) {
  return prokhorov(mu, nu, cap) + cosine_energy_gap(mu, nu, opt);
}

enum class W2Method { exact, sinkhorn };

/// L2-Wasserstein distance between measures of equal total mass.
inline double w2(const AtomicMeasure& mu, const AtomicMeasure& nu, W2Method method = W2Method::exact,
                 const transport::SinkhornOptions& opt = {}) {
  detail::check_pair(mu, nu);
  const auto cost = detail::cross_cost(mu, nu, 2);
  const auto res = method == W2Method::exact ? transport::exact(mu.masses(), nu.masses(), cost)
                                             : transport::sinkhorn(mu.masses(), nu.masses(), cost, opt);
  return std::sqrt(std::max(0.0, res.cost));
}

/// L1-Wasserstein distance (exact), cost d.
inline double w1(const AtomicMeasure& mu, const AtomicMeasure& nu) {
  detail::check_pair(mu, nu);
  return transport::exact(mu.masses(), nu.masses(), detail::cross_cost(mu, nu, 1)).cost;
}

/// Bounded-Lipschitz distance: sup of sum f (mu - nu) over |f| <= 1 and
/// Lip(f) <= 1. Solved through the dual linear program, a transshipment on
/// the joint support with arc costs d(x, y) and unit-cost creation or
/// disposal of mass at every point.
inline double bounded_lipschitz(const AtomicMeasure& mu, const AtomicMeasure& nu,
                                std::size_t cap = kDefaultAtomCap) {
  detail::check_pair(mu, nu);
  detail::check_cap(mu, nu, cap);
  const auto& space = mu.space();
  std::vector<Point> pts;
  std::vector<double> c;
  auto add = [&](const AtomicMeasure& m, double sign) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      std::size_t k = 0;
      while (k < pts.size() && distance(space, pts[k], m.position(i)) > 1e-12) ++k;
      if (k == pts.size()) {
        pts.push_back(m.point(i));
        c.push_back(0.0);
      }
      c[k] += sign * m.mass(i);
    }
  };
  add(mu, 1.0);
  add(nu, -1.0);
  const std::size_t N = pts.size();
  // Columns: w_xy for x != y, then p_x, then q_x.
  const std::size_t arcs = N * (N - 1);
  transport::Matrix A(N, arcs + 2 * N, 0.0);
  std::vector<double> cost(arcs + 2 * N, 1.0);
  std::size_t col = 0;
  for (std::size_t x = 0; x < N; ++x)
    for (std::size_t y = 0; y < N; ++y) {
      if (x == y) continue;
      A(x, col) += 1.0;
      A(y, col) -= 1.0;
      cost[col] = distance(space, pts[x], pts[y]);
      ++col;
    }
  for (std::size_t x = 0; x < N; ++x) {
    A(x, arcs + x) = 1.0;
    A(x, arcs + N + x) = -1.0;
  }
  return std::max(0.0, transport::simplex_min(A, c, cost).objective);
}

// ---------------------------------------------------------------------------
// Batch evaluation

enum class Metric { prokhorov, weak_atomic, w2_exact, w2_sinkhorn, w1, bounded_lipschitz };

inline std::string to_string(Metric m) {
  switch (m) {
    case Metric::prokhorov: return "prokhorov";
    case Metric::weak_atomic: return "weak_atomic";
    case Metric::w2_exact: return "w2_exact";
    case Metric::w2_sinkhorn: return "w2_sinkhorn";
    case Metric::w1: return "w1";
    case Metric::bounded_lipschitz: return "bounded_lipschitz";
  }
  return "unknown";
}

inline Metric metric_from_string(const std::string& s) {
  for (Metric m : {Metric::prokhorov, Metric::weak_atomic, Metric::w2_exact, Metric::w2_sinkhorn, Metric::w1,
                   Metric::bounded_lipschitz})
    if (to_string(m) == s) return m;
  throw Error(ErrorKind::invalid_parameter, "unknown metric '" + s + "'");
}

inline double distance(Metric metric, const AtomicMeasure& mu, const AtomicMeasure& nu) {
  switch (metric) {
    case Metric::prokhorov: return prokhorov(mu, nu);
    case Metric::weak_atomic: return weak_atomic_distance(mu, nu);
    case Metric::w2_exact: return w2(mu, nu, W2Method::exact);
    case Metric::w2_sinkhorn: return w2(mu, nu, W2Method::sinkhorn);
    case Metric::w1: return w1(mu, nu);
    case Metric::bounded_lipschitz: return bounded_lipschitz(mu, nu);
  }
  return NAN;
}

/// Symmetric matrix of pairwise distances, rows evaluated in parallel.
inline transport::Matrix distance_matrix(std::span<const AtomicMeasure> measures, Metric metric,
                                         unsigned threads = 0) {
  const std::size_t n = measures.size();
  transport::Matrix out(n, n, 0.0);
  parallel_for(n, resolve_threads(threads), [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) out(i, j) = distance(metric, measures[i], measures[j]);
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
  return out;
}

}  // namespace massive
