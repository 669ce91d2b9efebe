#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "massive/ambient.hpp"
#include "massive/error.hpp"
#include "massive/potential.hpp"
#include "massive/rng.hpp"
#include "massive/simplex.hpp"

namespace massive {

enum class DriftVariant { pairwise_mass, girsanov_derived };

inline std::string to_string(DriftVariant v) {
  return v == DriftVariant::pairwise_mass ? "pairwise_mass" : "girsanov_derived";
}

struct Interaction {
  PairPotential potential;
  double beta = 0.0;

  bool operator==(const Interaction&) const = default;
};

/// Deliberate perturbations of the dynamics, used as negative controls for
/// the statistical tests. The defaults leave the dynamics untouched.
struct Faults {
  double speed_scale = 1.0;  // multiplies every particle speed
  double attraction = 0.0;   // rate of a deterministic pull towards `attraction_center`
  Point attraction_center;

  bool active() const { return speed_scale != 1.0 || attraction != 0.0; }
  bool operator==(const Faults&) const = default;
};

inline constexpr double kDistanceFloor = 1e-12;

struct SystemConfig {
  BaseSpace space = BaseSpace::torus(1);
  MassSequence masses;
  std::optional<Interaction> interaction;
  double dt = 1e-3;
  double horizon = 1.0;
  int record_stride = 1;
  std::uint64_t seed = 0;
  DriftVariant drift_variant = DriftVariant::girsanov_derived;
  bool strict_integrability = false;
  std::vector<Point> initial_positions;  // empty: sample from the reference measure
  Faults faults;

  std::size_t particles() const { return masses.size(); }

  std::size_t steps() const {
    return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  }

  void validate() const {
    space.validate();
    require(masses.size() > 0, ErrorKind::invalid_parameter, "no particles");
    require(dt > 0.0 && std::isfinite(dt), ErrorKind::invalid_parameter, "dt must be positive");
    require(horizon > 0.0 && std::isfinite(horizon), ErrorKind::invalid_parameter, "horizon must be positive");
    require(dt <= horizon, ErrorKind::invalid_parameter, "dt exceeds the horizon");
    require(record_stride >= 1, ErrorKind::invalid_parameter, "record stride must be >= 1");
    require(faults.speed_scale >= 0.0, ErrorKind::invalid_parameter, "speed scale must be >= 0");
    if (faults.attraction != 0.0)
      require(static_cast<int>(faults.attraction_center.size()) == space.dim, ErrorKind::dimension_mismatch,
              "attraction centre has the wrong dimension");
    if (!initial_positions.empty()) {
      require(initial_positions.size() == masses.size(), ErrorKind::dimension_mismatch,
              "one initial position per particle is required");
      for (const auto& p : initial_positions) check_point(space, p);
    }
    if (interaction) {
      interaction->potential.validate();
      require(interaction->beta >= 0.0, ErrorKind::invalid_parameter, "beta must be >= 0");
      if (strict_integrability)
        require(interaction->potential.integrable_in(space.dim), ErrorKind::invalid_parameter,
                "interaction is not integrable in dimension " + std::to_string(space.dim));
    }
  }
};

/// Recorded path: frames at `times`, each holding particles x dim
/// coordinates. Masses are stored once and never change.
struct Trajectory {
  BaseSpace space;
  MassSequence masses;
  std::vector<double> times;
  std::vector<double> coords;  // time-major, then particle, then coordinate
  std::optional<double> collision_time;

  std::size_t particles() const { return masses.size(); }
  std::size_t frames() const { return times.size(); }
  std::span<const double> frame(std::size_t t) const {
    const std::size_t w = particles() * static_cast<std::size_t>(space.dim);
    return std::span<const double>(coords).subspan(t * w, w);
  }
  std::span<const double> position(std::size_t t, std::size_t i) const {
    const auto d = static_cast<std::size_t>(space.dim);
    return frame(t).subspan(i * d, d);
  }
};

// ---------------------------------------------------------------------------
// Stepping

/// Initial configuration: the configured positions, or i.i.d. draws from the
/// reference measure. Returned flat (particle-major).
inline std::vector<double> initial_state(const SystemConfig& cfg, RngStream& rng) {
  const auto d = static_cast<std::size_t>(cfg.space.dim);
  std::vector<double> x(cfg.particles() * d);
  for (std::size_t i = 0; i < cfg.particles(); ++i) {
    std::span<double> xi(x.data() + i * d, d);
    if (cfg.initial_positions.empty())
      sample_reference(cfg.space, xi, rng);
    else {
      std::copy(cfg.initial_positions[i].begin(), cfg.initial_positions[i].end(), xi.begin());
      canonicalize(cfg.space, xi);
    }
  }
  return x;
}

/// Interaction drift b_i for every particle, written into `out`.
///   pairwise_mass:    b_i = -(beta/2) sum_{j != i} s_i s_j (-sigma'(d_ij)) u_ij
///   girsanov_derived: b_i = -beta sum_{j != i} s_j (-sigma'(d_ij)) u_ij
/// with u_ij the unit vector at X^i towards X^j; both are repulsive for a
/// decreasing sigma. Frozen (zero-mass) particles receive no drift.
inline void interaction_drift(const SystemConfig& cfg, std::span<const double> x, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (!cfg.interaction || cfg.interaction->beta == 0.0) return;
  const auto& inter = *cfg.interaction;
  const auto d = static_cast<std::size_t>(cfg.space.dim);
  const std::size_t n = cfg.particles();
  std::vector<double> u(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double si = cfg.masses[i];
    if (si == 0.0) continue;
    const double pref = cfg.drift_variant == DriftVariant::pairwise_mass ? -0.5 * inter.beta * si : -inter.beta;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || cfg.masses[j] == 0.0) continue;
      const double r = unit_toward(cfg.space, x.subspan(i * d, d), x.subspan(j * d, d), u);
      if (!(r >= kDistanceFloor))
        throw Error(ErrorKind::step_rejected, "particles " + std::to_string(i) + " and " + std::to_string(j) +
                                                  " at distance " + std::to_string(r) +
                                                  " below the floor; drift blows up");
      const double w = pref * cfg.masses[j] * (-inter.potential.derivative(r));
      for (std::size_t k = 0; k < d; ++k) out[i * d + k] += w * u[k];
    }
  }
  for (double v : out)
    require(std::isfinite(v), ErrorKind::step_rejected, "interaction drift is not finite");
}

/// One step of length h in place. The base diffusion is advanced exactly at
/// speed 1/s_i; with an interaction the drift evaluated at the start of the
/// step is added (Euler-Maruyama on the torus). `drift` is scratch space.
inline void advance(const SystemConfig& cfg, std::vector<double>& x, double h, RngStream& rng,
                    std::vector<double>& drift) {
  const auto d = static_cast<std::size_t>(cfg.space.dim);
  const std::size_t n = cfg.particles();
  const bool interacting = cfg.interaction && cfg.interaction->beta != 0.0;
  if (interacting) {
    drift.resize(x.size());
    interaction_drift(cfg, x, drift);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> xi(x.data() + i * d, d);
    const double s = cfg.masses[i];
    const double speed = s > 0.0 ? cfg.faults.speed_scale / s : 0.0;
    step_in_place(cfg.space, xi, h, speed, rng);
    if (interacting) {
      for (std::size_t k = 0; k < d; ++k) xi[k] += drift[i * d + k] * h;
      canonicalize(cfg.space, xi);
    }
    if (cfg.faults.attraction != 0.0 && s > 0.0) {
      std::vector<double> u(d);
      const double r = unit_toward(cfg.space, xi, cfg.faults.attraction_center, u);
      const double move = std::min(r, cfg.faults.attraction * r * h);
      for (std::size_t k = 0; k < d; ++k) xi[k] += move * u[k];
      canonicalize(cfg.space, xi);
    }
  }
}

namespace detail {

inline Trajectory run(const SystemConfig& cfg, RngStream& rng) {
  cfg.validate();
  Trajectory tr;
  tr.space = cfg.space;
  tr.masses = cfg.masses;
  auto x = initial_state(cfg, rng);
  std::vector<double> drift;
  const std::size_t n = cfg.steps();
  tr.times.push_back(0.0);
  tr.coords.insert(tr.coords.end(), x.begin(), x.end());
  for (std::size_t k = 1; k <= n; ++k) {
    const double t0 = static_cast<double>(k - 1) * cfg.dt;
    const double h = std::min(cfg.dt, cfg.horizon - t0);
    advance(cfg, x, h, rng, drift);
    if (k % static_cast<std::size_t>(cfg.record_stride) == 0 || k == n) {
      tr.times.push_back(k == n ? cfg.horizon : static_cast<double>(k) * cfg.dt);
      tr.coords.insert(tr.coords.end(), x.begin(), x.end());
    }
  }
  return tr;
}

}  // namespace detail

/// Free system: exact in law at the grid times.
inline Trajectory simulate_free(const SystemConfig& cfg, RngStream& rng) {
  require(!cfg.interaction, ErrorKind::invalid_parameter, "simulate_free called with an interaction");
  return detail::run(cfg, rng);
}

inline Trajectory simulate_interacting(const SystemConfig& cfg, RngStream& rng) {
  require(cfg.interaction.has_value(), ErrorKind::invalid_parameter, "simulate_interacting needs an interaction");
  return detail::run(cfg, rng);
}

inline Trajectory simulate(const SystemConfig& cfg, RngStream& rng) { return detail::run(cfg, rng); }

// ---------------------------------------------------------------------------
// Collisions

/// Streaming first-passage detector for pair distances below `delta`.
/// Frames are compared at their own times; in dimension one the gap between
/// consecutive frames is bridged by the Brownian-bridge crossing probability
/// of the pair difference, with variance 2 h (1/s_i + 1/s_j).
class CollisionDetector {
 public:
  CollisionDetector(BaseSpace space, const MassSequence& masses, double delta)
      : space_(space), masses_(masses.masses().begin(), masses.masses().end()), delta_(delta) {
    require(delta > 0.0, ErrorKind::invalid_parameter, "collision threshold must be positive");
  }

  /// Checks the first frame. Returns true once a collision is recorded.
  bool start(std::span<const double> x, double t) {
    if (any_pair_below(x)) hit_ = t;
    return hit_.has_value();
  }

  /// Checks the frame `next` at time t reached from `prev` after h.
  bool feed(std::span<const double> prev, std::span<const double> next, double t, double h) {
    if (hit_) return true;
    if (any_pair_below(next)) {
      hit_ = t;
      return true;
    }
    if (space_.dim == 1 && bridged_crossing(prev, next, h)) hit_ = t;
    return hit_.has_value();
  }

  std::optional<double> time() const { return hit_; }

  double min_pair_distance(std::span<const double> x) const {
    const auto d = static_cast<std::size_t>(space_.dim);
    double best = INFINITY;
    for (std::size_t i = 0; i < masses_.size(); ++i)
      for (std::size_t j = i + 1; j < masses_.size(); ++j)
        best = std::min(best, distance_squared(space_, x.subspan(i * d, d), x.subspan(j * d, d)));
    return std::sqrt(best);
  }

 private:
  // Squared pair distances against delta^2, with early exit.
  bool any_pair_below(std::span<const double> x) const {
    const auto d = static_cast<std::size_t>(space_.dim);
    const bool torus = space_.kind == SpaceKind::torus;
    const double d2 = delta_ * delta_;
    const std::size_t n = masses_.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d && acc < d2; ++k) {
          double v = std::abs(x[i * d + k] - x[j * d + k]);
          if (torus) {
            v -= std::floor(v);
            v = std::min(v, 1.0 - v);
          }
          acc += v * v;
        }
        if (acc < d2) return true;
      }
    return false;
  }

  bool bridged_crossing(std::span<const double> prev, std::span<const double> next, double h) const {
    const std::size_t n = masses_.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double inv = (masses_[i] > 0.0 ? 1.0 / masses_[i] : 0.0) + (masses_[j] > 0.0 ? 1.0 / masses_[j] : 0.0);
        if (inv == 0.0) continue;
        const double var = 2.0 * h * inv;
        // Pair difference lifted continuously across the step.
        double a = prev[i] - prev[j];
        double b = next[i] - next[j];
        if (space_.kind == SpaceKind::torus) {
          a -= std::floor(a + 0.5);
          b = a + detail::torus_delta(a, b);
        }
        const double levels[3] = {0.0, -1.0, 1.0};
        const int count = space_.kind == SpaceKind::torus ? 3 : 1;
        for (int l = 0; l < count; ++l) {
          const double level = levels[l];
          const double da = a - level, db = b - level;
          if (da * db <= 0.0) return true;
          const double ga = std::abs(da) - delta_, gb = std::abs(db) - delta_;
          if (ga <= 0.0 || gb <= 0.0) return true;
          if (std::exp(-2.0 * ga * gb / var) > 0.5) return true;
        }
      }
    return false;
  }

  BaseSpace space_;
  std::vector<double> masses_;
  double delta_;
  std::optional<double> hit_;
};

/// First recorded time with a pair closer than delta (with bridge refinement
/// in dimension one); +infinity if none.
inline double first_collision_time(const Trajectory& tr, double delta) {
  CollisionDetector det(tr.space, tr.masses, delta);
  if (tr.frames() == 0) return INFINITY;
  if (det.start(tr.frame(0), tr.times[0])) return *det.time();
  for (std::size_t k = 1; k < tr.frames(); ++k)
    if (det.feed(tr.frame(k - 1), tr.frame(k), tr.times[k], tr.times[k] - tr.times[k - 1])) return *det.time();
  return INFINITY;
}

/// Collision time of a freshly simulated path, checked at every step without
/// storing the path.
inline double simulate_collision_time(const SystemConfig& cfg, RngStream& rng, double delta) {
  cfg.validate();
  CollisionDetector det(cfg.space, cfg.masses, delta);
  auto x = initial_state(cfg, rng);
  if (det.start(x, 0.0)) return 0.0;
  std::vector<double> prev, drift;
  const std::size_t n = cfg.steps();
  for (std::size_t k = 1; k <= n; ++k) {
    const double t0 = static_cast<double>(k - 1) * cfg.dt;
    const double h = std::min(cfg.dt, cfg.horizon - t0);
    prev = x;
    advance(cfg, x, h, rng, drift);
    if (det.feed(prev, x, t0 + h, h)) return *det.time();
  }
  return INFINITY;
}

inline std::vector<double> min_pair_distance_series(const Trajectory& tr) {
  require(tr.particles() >= 2, ErrorKind::insufficient_data, "need at least two particles");
  CollisionDetector det(tr.space, tr.masses, 1.0);
  std::vector<double> out(tr.frames());
  for (std::size_t k = 0; k < tr.frames(); ++k) out[k] = det.min_pair_distance(tr.frame(k));
  return out;
}

}  // namespace massive
