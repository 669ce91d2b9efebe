#pragma once

// Base spaces, exact transition sampling of their diffusions, and the
// symbol-level test-function algebra on which L and Gamma act exactly.
//
// The base diffusion is generated by Delta (torus, Neumann interval) or by
// Delta - x.grad (Ornstein-Uhlenbeck), so Gaussian increments have variance
// 2 dt per coordinate and Gamma(f, g) = grad f . grad g on every space.

#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "massive/error.hpp"
#include "massive/rng.hpp"

namespace massive {

enum class SpaceKind { torus, euclidean_ou, interval_reflected };

inline std::string to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::torus: return "torus";
    case SpaceKind::euclidean_ou: return "euclidean_ou";
    case SpaceKind::interval_reflected: return "interval_reflected";
  }
  return "unknown";
}

using Point = std::vector<double>;

struct BaseSpace {
  SpaceKind kind = SpaceKind::torus;
  int dim = 1;

  static BaseSpace torus(int d) { return {SpaceKind::torus, d}; }
  static BaseSpace ornstein_uhlenbeck(int d) { return {SpaceKind::euclidean_ou, d}; }
  static BaseSpace interval() { return {SpaceKind::interval_reflected, 1}; }

  void validate() const {
    require(dim >= 1, ErrorKind::invalid_parameter, "dimension must be >= 1");
    require(kind != SpaceKind::interval_reflected || dim == 1, ErrorKind::invalid_parameter,
            "the reflected interval is one-dimensional");
  }

  /// Largest possible distance (infinite for the Euclidean space).
  double diameter() const {
    switch (kind) {
      case SpaceKind::torus: return 0.5 * std::sqrt(static_cast<double>(dim));
      case SpaceKind::interval_reflected: return 1.0;
      case SpaceKind::euclidean_ou: return INFINITY;
    }
    return INFINITY;
  }

  bool operator==(const BaseSpace&) const = default;
};

namespace detail {

inline double wrap_unit(double x) {
  double y = x - std::floor(x);
  return y >= 1.0 ? 0.0 : y;
}

// Minimal-image signed displacement in [-1/2, 1/2).
inline double torus_delta(double from, double to) {
  double d = to - from;
  d -= std::floor(d + 0.5);
  return d;
}

// Reflection map R -> [0,1] (even, 2-periodic).
inline double fold_unit(double x) {
  double y = x - 2.0 * std::floor(0.5 * x);
  return y > 1.0 ? 2.0 - y : y;
}

}  // namespace detail

inline void check_point(const BaseSpace& space, std::span<const double> x) {
  require(static_cast<int>(x.size()) == space.dim, ErrorKind::dimension_mismatch,
          "point has dimension " + std::to_string(x.size()) + ", space has " +
              std::to_string(space.dim));
}

/// Squared distance; the torus uses the flat metric on [0,1)^d with
/// per-coordinate min(|dx|, 1 - |dx|).
inline double distance_squared(const BaseSpace& space, std::span<const double> x,
                               std::span<const double> y) {
  check_point(space, x);
  check_point(space, y);
  double acc = 0.0;
  for (int k = 0; k < space.dim; ++k) {
    double d = std::abs(x[k] - y[k]);
    if (space.kind == SpaceKind::torus) {
      d -= std::floor(d);
      d = std::min(d, 1.0 - d);
    }
    acc += d * d;
  }
  return acc;
}

inline double distance(const BaseSpace& space, std::span<const double> x, std::span<const double> y) {
  return std::sqrt(distance_squared(space, x, y));
}

/// Unit vector at `from` along the shortest geodesic towards `to`, written
/// into `out`; returns the distance.
inline double unit_toward(const BaseSpace& space, std::span<const double> from,
                          std::span<const double> to, std::span<double> out) {
  double acc = 0.0;
  for (int k = 0; k < space.dim; ++k) {
    const double d = space.kind == SpaceKind::torus ? detail::torus_delta(from[k], to[k]) : to[k] - from[k];
    out[k] = d;
    acc += d * d;
  }
  const double r = std::sqrt(acc);
  if (r > 0.0)
    for (int k = 0; k < space.dim; ++k) out[k] /= r;
  return r;
}

/// Maps an arbitrary coordinate vector back into the space (wrap or fold).
inline void canonicalize(const BaseSpace& space, std::span<double> x) {
  if (space.kind == SpaceKind::torus)
    for (double& v : x) v = detail::wrap_unit(v);
  else if (space.kind == SpaceKind::interval_reflected)
    for (double& v : x) v = detail::fold_unit(v);
}

/// Exact transition of the base diffusion run at `speed` for time `dt`, in
/// place. Speed zero freezes the point.
inline void step_in_place(const BaseSpace& space, std::span<double> x, double dt, double speed,
                          RngStream& rng) {
  require(dt >= 0.0 && speed >= 0.0, ErrorKind::invalid_parameter, "dt and speed must be non-negative");
  const double tau = dt * speed;
  if (tau == 0.0) return;
  switch (space.kind) {
    case SpaceKind::torus: {
      const double sd = std::sqrt(2.0 * tau);
      for (double& v : x) v = detail::wrap_unit(v + sd * rng.normal());
      break;
    }
    case SpaceKind::euclidean_ou: {
      const double decay = std::exp(-tau);
      const double sd = std::sqrt(-std::expm1(-2.0 * tau));
      for (double& v : x) v = v * decay + sd * rng.normal();
      break;
    }
    case SpaceKind::interval_reflected: {
      const double sd = std::sqrt(2.0 * tau);
      for (double& v : x) v = detail::fold_unit(v + sd * rng.normal());
      break;
    }
  }
}

inline Point step(const BaseSpace& space, const Point& x, double dt, double speed, RngStream& rng) {
  check_point(space, x);
  Point y = x;
  step_in_place(space, y, dt, speed, rng);
  return y;
}

/// Draw from the reference measure (uniform, standard Gaussian, uniform).
inline void sample_reference(const BaseSpace& space, std::span<double> x, RngStream& rng) {
  for (double& v : x) v = space.kind == SpaceKind::euclidean_ou ? rng.normal() : rng.uniform();
}

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

/// Finite linear combination of eigenfunctions of the base generator:
///   torus:    sum_k a_k cos(2 pi k.x) + b_k sin(2 pi k.x)
///   OU:       sum_alpha c_alpha prod_i He_{alpha_i}(x_i)  (probabilists')
///   interval: sum_m c_m cos(m pi x)
/// Keys are frequency vectors / multi-indices; torus keys are canonical
/// (first non-zero entry positive).
class TestFunction {
 public:
  struct Coeff {
    double a = 0.0;  // cosine / Hermite / cosine-series coefficient
    double b = 0.0;  // sine coefficient (torus only)
    bool operator==(const Coeff&) const = default;
  };
  using Key = std::vector<int>;
  using Terms = std::map<Key, Coeff>;

  TestFunction() = default;
  explicit TestFunction(BaseSpace space) : space_(space) { space_.validate(); }

  static TestFunction constant(BaseSpace space, double c) {
    TestFunction f(space);
    f.add_term(Key(static_cast<std::size_t>(space.dim), 0), {c, 0.0});
    return f;
  }
  static TestFunction cos_mode(BaseSpace space, Key k, double c = 1.0) {
    require(space.kind == SpaceKind::torus, ErrorKind::representation_mismatch, "cos_mode needs a torus");
    TestFunction f(space);
    f.add_term(std::move(k), {c, 0.0});
    return f;
  }
  static TestFunction sin_mode(BaseSpace space, Key k, double c = 1.0) {
    require(space.kind == SpaceKind::torus, ErrorKind::representation_mismatch, "sin_mode needs a torus");
    TestFunction f(space);
    f.add_term(std::move(k), {0.0, c});
    return f;
  }
  static TestFunction hermite(BaseSpace space, Key alpha, double c = 1.0) {
    require(space.kind == SpaceKind::euclidean_ou, ErrorKind::representation_mismatch,
            "Hermite modes need the OU space");
    TestFunction f(space);
    f.add_term(std::move(alpha), {c, 0.0});
    return f;
  }
  static TestFunction cosine(int m, double c = 1.0) {
    TestFunction f(BaseSpace::interval());
    f.add_term({m}, {c, 0.0});
    return f;
  }

  /// Adds a term, canonicalizing torus frequencies and merging duplicates.
  void add_term(Key key, Coeff c) {
    require(static_cast<int>(key.size()) == space_.dim, ErrorKind::dimension_mismatch,
            "mode key has wrong dimension");
    switch (space_.kind) {
      case SpaceKind::torus: {
        int sign = 0;
        for (int v : key)
          if (v != 0) {
            sign = v > 0 ? 1 : -1;
            break;
          }
        if (sign < 0) {
          for (int& v : key) v = -v;
          c.b = -c.b;
        }
        if (sign == 0) c.b = 0.0;
        break;
      }
      case SpaceKind::euclidean_ou:
        for (int v : key) require(v >= 0, ErrorKind::invalid_parameter, "Hermite index must be >= 0");
        c.b = 0.0;
        break;
      case SpaceKind::interval_reflected:
        key[0] = std::abs(key[0]);
        c.b = 0.0;
        break;
    }
    auto& slot = terms_[key];
    slot.a += c.a;
    slot.b += c.b;
    if (slot.a == 0.0 && slot.b == 0.0) terms_.erase(key);
  }

  const BaseSpace& space() const { return space_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  double operator()(std::span<const double> x) const {
    double acc = 0.0;
    for (const auto& [k, c] : terms_) acc += mode_value(k, c, x);
    return acc;
  }

  /// Gradient at x, written into `out` (size dim).
  void gradient(std::span<const double> x, std::span<double> out) const {
    for (auto& g : out) g = 0.0;
    for (const auto& [k, c] : terms_) add_mode_gradient(k, c, x, 1.0, out);
  }

  Point gradient(std::span<const double> x) const {
    Point g(static_cast<std::size_t>(space_.dim));
    gradient(x, g);
    return g;
  }

  /// Eigenvalue of the base generator on mode `key`.
  double eigenvalue(const Key& key) const {
    constexpr double pi = std::numbers::pi;
    switch (space_.kind) {
      case SpaceKind::torus: {
        double k2 = 0.0;
        for (int v : key) k2 += static_cast<double>(v) * v;
        return -4.0 * pi * pi * k2;
      }
      case SpaceKind::euclidean_ou: {
        int order = 0;
        for (int v : key) order += v;
        return -static_cast<double>(order);
      }
      case SpaceKind::interval_reflected:
        return -pi * pi * static_cast<double>(key[0]) * key[0];
    }
    return 0.0;
  }

  /// L f, exact at symbol level.
  TestFunction apply_L() const {
    TestFunction out(space_);
    for (const auto& [k, c] : terms_) {
      const double lam = eigenvalue(k);
      if (lam != 0.0) out.terms_[k] = {c.a * lam, c.b * lam};
    }
    return out;
  }

  TestFunction& operator+=(const TestFunction& g) {
    require(space_ == g.space_, ErrorKind::representation_mismatch, "test functions on different spaces");
    for (const auto& [k, c] : g.terms_) add_term(k, c);
    return *this;
  }
  friend TestFunction operator+(TestFunction f, const TestFunction& g) { return f += g; }
  friend TestFunction operator*(double s, TestFunction f) {
    for (auto& [k, c] : f.terms_) {
      c.a *= s;
      c.b *= s;
    }
    if (s == 0.0) f.terms_.clear();
    return f;
  }

  /// Pointwise product, expanded back into the mode basis.
  friend TestFunction operator*(const TestFunction& f, const TestFunction& g) {
    require(f.space_ == g.space_, ErrorKind::representation_mismatch, "test functions on different spaces");
    TestFunction out(f.space_);
    for (const auto& [k1, c1] : f.terms_)
      for (const auto& [k2, c2] : g.terms_) out.add_product(k1, c1, k2, c2);
    return out;
  }

  bool operator==(const TestFunction&) const = default;

 private:
  static double dot_phase(const Key& k, std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) acc += static_cast<double>(k[i]) * x[i];
    return 2.0 * std::numbers::pi * acc;
  }

  static double hermite_he(int n, double x) {
    if (n == 0) return 1.0;
    double h0 = 1.0, h1 = x;
    for (int j = 1; j < n; ++j) {
      const double h2 = x * h1 - j * h0;
      h0 = h1;
      h1 = h2;
    }
    return h1;
  }

  double mode_value(const Key& k, const Coeff& c, std::span<const double> x) const {
    switch (space_.kind) {
      case SpaceKind::torus: {
        const double ph = dot_phase(k, x);
        return c.a * std::cos(ph) + (c.b != 0.0 ? c.b * std::sin(ph) : 0.0);
      }
      case SpaceKind::euclidean_ou: {
        double v = c.a;
        for (std::size_t i = 0; i < k.size(); ++i) v *= hermite_he(k[i], x[i]);
        return v;
      }
      case SpaceKind::interval_reflected:
        return c.a * std::cos(std::numbers::pi * k[0] * x[0]);
    }
    return 0.0;
  }

  void add_mode_gradient(const Key& k, const Coeff& c, std::span<const double> x, double scale,
                         std::span<double> out) const {
    constexpr double pi = std::numbers::pi;
    switch (space_.kind) {
      case SpaceKind::torus: {
        const double ph = dot_phase(k, x);
        const double dphase = -c.a * std::sin(ph) + c.b * std::cos(ph);
        for (std::size_t i = 0; i < k.size(); ++i) out[i] += scale * 2.0 * pi * k[i] * dphase;
        break;
      }
      case SpaceKind::euclidean_ou: {
        for (std::size_t i = 0; i < k.size(); ++i) {
          if (k[i] == 0) continue;
          double v = c.a * k[i] * hermite_he(k[i] - 1, x[i]);
          for (std::size_t j = 0; j < k.size(); ++j)
            if (j != i) v *= hermite_he(k[j], x[j]);
          out[i] += scale * v;
        }
        break;
      }
      case SpaceKind::interval_reflected:
        out[0] += scale * (-c.a * pi * k[0] * std::sin(pi * k[0] * x[0]));
        break;
    }
  }

  void add_product(const Key& k1, const Coeff& c1, const Key& k2, const Coeff& c2) {
    const std::size_t d = k1.size();
    switch (space_.kind) {
      case SpaceKind::torus: {
        // (a1 cos A + b1 sin A)(a2 cos B + b2 sin B) in terms of A+B and A-B.
        Key sum(d), diff(d);
        for (std::size_t i = 0; i < d; ++i) {
          sum[i] = k1[i] + k2[i];
          diff[i] = k1[i] - k2[i];
        }
        add_term(sum, {0.5 * (c1.a * c2.a - c1.b * c2.b), 0.5 * (c1.a * c2.b + c1.b * c2.a)});
        add_term(diff, {0.5 * (c1.a * c2.a + c1.b * c2.b), 0.5 * (c1.b * c2.a - c1.a * c2.b)});
        break;
      }
      case SpaceKind::euclidean_ou: {
        // He_m He_n = sum_j C(m,j) C(n,j) j! He_{m+n-2j}, coordinatewise.
        std::vector<std::pair<Key, double>> acc{{Key{}, c1.a * c2.a}};
        for (std::size_t i = 0; i < d; ++i) {
          std::vector<std::pair<Key, double>> next;
          const int m = k1[i], n = k2[i];
          for (int j = 0; j <= std::min(m, n); ++j) {
            const double w = binom(m, j) * binom(n, j) * std::tgamma(j + 1.0);
            for (const auto& [key, v] : acc) {
              Key kk = key;
              kk.push_back(m + n - 2 * j);
              next.emplace_back(std::move(kk), v * w);
            }
          }
          acc = std::move(next);
        }
        for (auto& [key, v] : acc) add_term(key, {v, 0.0});
        break;
      }
      case SpaceKind::interval_reflected:
        add_term({k1[0] + k2[0]}, {0.5 * c1.a * c2.a, 0.0});
        add_term({k1[0] - k2[0]}, {0.5 * c1.a * c2.a, 0.0});
        break;
    }
  }

  static double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  }

  BaseSpace space_;
  Terms terms_;
};

inline TestFunction apply_L(const TestFunction& f) { return f.apply_L(); }

/// Carre du champ Gamma(f, g)(x) = grad f . grad g.
inline double gamma(const TestFunction& f, const TestFunction& g, std::span<const double> x) {
  require(f.space() == g.space(), ErrorKind::representation_mismatch, "test functions on different spaces");
  const auto gf = f.gradient(x);
  const auto gg = g.gradient(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < gf.size(); ++i) acc += gf[i] * gg[i];
  return acc;
}

}  // namespace massive
