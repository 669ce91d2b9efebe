#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "massive/ambient.hpp"
#include "massive/dynamics.hpp"
#include "massive/error.hpp"
#include "massive/measures.hpp"
#include "massive/potential.hpp"

namespace massive {

/// Mass cutoff phi(s) = smoothstep((s - eps) / w) * P(s), with the quintic
/// smoothstep 6x^5 - 15x^4 + 10x^3 clamped to [0, 1] (C^2 at both ends).
/// phi vanishes on [0, eps] and equals P(s) on [eps + w, 1].
class MassCutoff {
 public:
  MassCutoff() = default;
  MassCutoff(double eps, double w, std::vector<double> poly = {1.0}) : eps_(eps), w_(w), poly_(std::move(poly)) {
    require(eps > 0.0 && eps < 1.0, ErrorKind::invalid_parameter, "cutoff threshold must lie in (0,1)");
    require(w > 0.0, ErrorKind::invalid_parameter, "cutoff ramp width must be positive");
    require(!poly_.empty(), ErrorKind::invalid_parameter, "cutoff polynomial is empty");
  }
  /// Ramp width eps/2 by default.
  explicit MassCutoff(double eps, std::vector<double> poly = {1.0}) : MassCutoff(eps, eps / 2.0, std::move(poly)) {}

  double eps() const { return eps_; }
  double width() const { return w_; }
  const std::vector<double>& poly() const { return poly_; }

  double value(double s) const {
    if (s <= eps_) return 0.0;
    return step((s - eps_) / w_) * poly_value(s);
  }

  double derivative(double s) const {
    if (s <= eps_) return 0.0;
    const double x = (s - eps_) / w_;
    return step_derivative(x) / w_ * poly_value(s) + step(x) * poly_derivative(s);
  }

  bool operator==(const MassCutoff&) const = default;

 private:
  static double step(double x) {
    if (x >= 1.0) return 1.0;
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
  }
  static double step_derivative(double x) {
    if (x >= 1.0) return 0.0;
    return 30.0 * x * x * (x - 1.0) * (x - 1.0);
  }
  double poly_value(double s) const {
    double acc = 0.0;
    for (auto it = poly_.rbegin(); it != poly_.rend(); ++it) acc = acc * s + *it;
    return acc;
  }
  double poly_derivative(double s) const {
    double acc = 0.0;
    for (std::size_t k = poly_.size(); k-- > 1;) acc = acc * s + static_cast<double>(k) * poly_[k];
    return acc;
  }

  double eps_ = 0.5;
  double w_ = 0.25;
  std::vector<double> poly_{1.0};
};

// ---------------------------------------------------------------------------
// Outer functions

/// Value, gradient and Hessian of a function of k variables at a point.
struct Jet {
  double value = 0.0;
  std::vector<double> grad;
  std::vector<double> hess;  // row-major k x k

  explicit Jet(std::size_t k = 0) : grad(k, 0.0), hess(k * k, 0.0) {}
  std::size_t dim() const { return grad.size(); }
  double h(std::size_t i, std::size_t j) const { return hess[i * dim() + j]; }
};

enum class OuterOp { constant, polynomial, sum, product, exp, tanh, sin, cos };

inline std::string to_string(OuterOp op) {
  switch (op) {
    case OuterOp::constant: return "const";
    case OuterOp::polynomial: return "poly";
    case OuterOp::sum: return "sum";
    case OuterOp::product: return "product";
    case OuterOp::exp: return "exp";
    case OuterOp::tanh: return "tanh";
    case OuterOp::sin: return "sin";
    case OuterOp::cos: return "cos";
  }
  return "unknown";
}

struct Monomial {
  double coeff = 0.0;
  std::vector<int> exponents;  // exponents[i] of variable t_i

  bool operator==(const Monomial&) const = default;
};

/// Smooth outer function F(t_1, ..., t_k) as an expression tree over
/// polynomials, sums, products and a fixed library of analytic unary maps.
/// All partial derivatives up to order two are exact.
class Outer {
 public:
  struct Node {
    OuterOp op = OuterOp::constant;
    double c = 0.0;
    std::vector<Monomial> terms;
    std::vector<std::shared_ptr<const Node>> kids;
  };

  Outer() : Outer(constant(0.0)) {}

  static Outer constant(double c) {
    auto n = std::make_shared<Node>();
    n->op = OuterOp::constant;
    n->c = c;
    return Outer(std::move(n));
  }
  static Outer polynomial(std::vector<Monomial> terms) {
    for (const auto& m : terms)
      for (int e : m.exponents) require(e >= 0, ErrorKind::invalid_parameter, "negative polynomial exponent");
    auto n = std::make_shared<Node>();
    n->op = OuterOp::polynomial;
    n->terms = std::move(terms);
    return Outer(std::move(n));
  }
  /// t_i
  static Outer variable(int i) {
    std::vector<int> e(static_cast<std::size_t>(i) + 1, 0);
    e.back() = 1;
    return polynomial({{1.0, e}});
  }
  static Outer apply(OuterOp op, const Outer& arg) {
    require(op == OuterOp::exp || op == OuterOp::tanh || op == OuterOp::sin || op == OuterOp::cos,
            ErrorKind::invalid_parameter, "not a unary outer function");
    auto n = std::make_shared<Node>();
    n->op = op;
    n->kids = {arg.root_};
    return Outer(std::move(n));
  }
  static Outer combine(OuterOp op, std::vector<Outer> args) {
    require(op == OuterOp::sum || op == OuterOp::product, ErrorKind::invalid_parameter, "not an n-ary outer function");
    auto n = std::make_shared<Node>();
    n->op = op;
    for (auto& a : args) n->kids.push_back(a.root_);
    return Outer(std::move(n));
  }
  explicit Outer(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

  friend Outer operator+(const Outer& a, const Outer& b) { return combine(OuterOp::sum, {a, b}); }
  friend Outer operator*(const Outer& a, const Outer& b) { return combine(OuterOp::product, {a, b}); }

  const Node& root() const { return *root_; }

  /// Number of variables referenced (largest index + 1).
  int arity() const { return arity(*root_); }

  /// Same function with every variable index increased by `offset`.
  Outer shifted(int offset) const { return Outer(shift(root_, offset)); }

  Jet jet(std::span<const double> t) const { return jet(*root_, t); }
  double operator()(std::span<const double> t) const { return jet(t).value; }

 private:
  static int arity(const Node& n) {
    int a = 0;
    for (const auto& m : n.terms) a = std::max(a, static_cast<int>(m.exponents.size()));
    for (const auto& k : n.kids) a = std::max(a, arity(*k));
    return a;
  }

  static std::shared_ptr<const Node> shift(const std::shared_ptr<const Node>& n, int offset) {
    auto out = std::make_shared<Node>(*n);
    for (auto& m : out->terms) m.exponents.insert(m.exponents.begin(), static_cast<std::size_t>(offset), 0);
    for (auto& k : out->kids) k = shift(k, offset);
    return out;
  }

  static double ipow(double x, int n) {
    if (n < 0) return 0.0;
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
  }

  static Jet jet(const Node& n, std::span<const double> t) {
    const std::size_t k = t.size();
    Jet out(k);
    switch (n.op) {
      case OuterOp::constant: out.value = n.c; return out;
      case OuterOp::polynomial: {
        for (const auto& m : n.terms) {
          require(m.exponents.size() <= k, ErrorKind::dimension_mismatch, "outer function needs more variables");
          auto e = [&](std::size_t i) { return i < m.exponents.size() ? m.exponents[i] : 0; };
          // prod over l not in {i, j} of t_l^{e_l}, with the i, j powers lowered.
          auto partial = [&](std::size_t i, std::size_t j, bool use_j) {
            double r = m.coeff;
            for (std::size_t l = 0; l < k; ++l) {
              int p = e(l);
              if (l == i) {
                r *= p;
                --p;
              }
              if (use_j && l == j) {
                r *= p;
                --p;
              }
              if (r == 0.0) return 0.0;
              r *= ipow(t[l], p);
            }
            return r;
          };
          double v = m.coeff;
          for (std::size_t l = 0; l < k; ++l) v *= ipow(t[l], e(l));
          out.value += v;
          for (std::size_t i = 0; i < k; ++i) {
            if (e(i) == 0) continue;
            out.grad[i] += partial(i, k, false);
            for (std::size_t j = 0; j < k; ++j) out.hess[i * k + j] += partial(i, j, true);
          }
        }
        return out;
      }
      case OuterOp::sum: {
        for (const auto& c : n.kids) {
          const Jet a = jet(*c, t);
          out.value += a.value;
          for (std::size_t i = 0; i < k; ++i) out.grad[i] += a.grad[i];
          for (std::size_t i = 0; i < k * k; ++i) out.hess[i] += a.hess[i];
        }
        return out;
      }
      case OuterOp::product: {
        out.value = 1.0;
        for (const auto& c : n.kids) {
          const Jet a = jet(*c, t);
          Jet next(k);
          next.value = out.value * a.value;
          for (std::size_t i = 0; i < k; ++i) next.grad[i] = out.grad[i] * a.value + out.value * a.grad[i];
          for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
              next.hess[i * k + j] = out.hess[i * k + j] * a.value + out.grad[i] * a.grad[j] +
                                     a.grad[i] * out.grad[j] + out.value * a.hess[i * k + j];
          out = std::move(next);
        }
        return out;
      }
      default: break;
    }
    const Jet a = jet(*n.kids.front(), t);
    const double x = a.value;
    double g0 = 0.0, g1 = 0.0, g2 = 0.0;
    switch (n.op) {
      case OuterOp::exp: g0 = g1 = g2 = std::exp(x); break;
      case OuterOp::tanh: {
        g0 = std::tanh(x);
        g1 = 1.0 - g0 * g0;
        g2 = -2.0 * g0 * g1;
        break;
      }
      case OuterOp::sin: g0 = std::sin(x), g1 = std::cos(x), g2 = -g0; break;
      case OuterOp::cos: g0 = std::cos(x), g1 = -std::sin(x), g2 = -g0; break;
      default: break;
    }
    out.value = g0;
    for (std::size_t i = 0; i < k; ++i) out.grad[i] = g1 * a.grad[i];
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        out.hess[i * k + j] = g1 * a.hess[i * k + j] + g2 * a.grad[i] * a.grad[j];
    return out;
  }

  std::shared_ptr<const Node> root_;
};

// ---------------------------------------------------------------------------
// Cylinder functions

struct CutoffPair {
  MassCutoff phi;
  TestFunction f;
};

/// u(mu) = F( (phi_1 (x) f_1)*(mu), ..., (phi_k (x) f_k)*(mu) ) with
/// (phi (x) f)*(mu) = sum_x mu{x} phi(mu{x}) f(x).
class CylinderFunction {
 public:
  CylinderFunction() = default;
  CylinderFunction(Outer F, std::vector<CutoffPair> pairs) : F_(std::move(F)), pairs_(std::move(pairs)) {
    require(F_.arity() <= static_cast<int>(pairs_.size()), ErrorKind::dimension_mismatch,
            "outer function uses more variables than there are pairs");
    for (std::size_t i = 1; i < pairs_.size(); ++i)
      require(pairs_[i].f.space() == pairs_[0].f.space(), ErrorKind::representation_mismatch,
              "test functions live on different spaces");
  }

  static CylinderFunction constant(double c) { return CylinderFunction(Outer::constant(c), {}); }
  /// The elementary function (phi (x) f)*.
  static CylinderFunction linear(MassCutoff phi, TestFunction f) {
    return CylinderFunction(Outer::variable(0), {{std::move(phi), std::move(f)}});
  }

  const Outer& outer() const { return F_; }
  const std::vector<CutoffPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }

  /// Smallest cutoff threshold; atoms at or below it never contribute.
  double threshold() const {
    double e = 1.0;
    for (const auto& p : pairs_) e = std::min(e, p.phi.eps());
    return e;
  }

 private:
  Outer F_ = Outer::constant(0.0);
  std::vector<CutoffPair> pairs_;
};

namespace detail {

inline void check_space(const TestFunction& f, const AtomicMeasure& mu) {
  require(f.space() == mu.space(), ErrorKind::representation_mismatch, "test function and measure spaces differ");
}

inline std::vector<double> pair_values(const CylinderFunction& u, const AtomicMeasure& mu);

}  // namespace detail

/// sum over atoms with mass above the cutoff of m phi(m) f(x).
inline double eval_pair(const MassCutoff& phi, const TestFunction& f, const AtomicMeasure& mu) {
  detail::check_space(f, mu);
  double acc = 0.0;
  for (std::size_t a = 0; a < mu.size(); ++a) {
    const double m = mu.mass(a);
    if (m <= phi.eps()) continue;
    acc += m * phi.value(m) * f(mu.position(a));
  }
  return acc;
}

/// Number of atoms that can contribute to eval_pair.
inline std::size_t contributing_atoms(const MassCutoff& phi, const AtomicMeasure& mu) {
  std::size_t c = 0;
  for (std::size_t a = 0; a < mu.size(); ++a) c += mu.mass(a) > phi.eps() ? 1 : 0;
  return c;
}

inline std::vector<double> detail::pair_values(const CylinderFunction& u, const AtomicMeasure& mu) {
  std::vector<double> t(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) t[i] = eval_pair(u.pairs()[i].phi, u.pairs()[i].f, mu);
  return t;
}

inline double eval(const CylinderFunction& u, const AtomicMeasure& mu) {
  return u.outer()(detail::pair_values(u, mu));
}

/// Extended generator
///   sum_i dF_i * [sum_x phi_i(m) (L f_i)(x)]
/// + sum_ij d2F_ij * [sum_x m phi_i(m) phi_j(m) Gamma(f_i, f_j)(x)].
inline double generator(const CylinderFunction& u, const AtomicMeasure& mu) {
  const std::size_t k = u.size();
  if (k == 0) return 0.0;
  const auto t = detail::pair_values(u, mu);
  const Jet J = u.outer().jet(t);
  std::vector<TestFunction> Lf;
  std::vector<Point> grads(k);
  for (const auto& p : u.pairs()) Lf.push_back(p.f.apply_L());
  const double eps = u.threshold();
  std::vector<double> phis(k);
  double acc = 0.0;
  for (std::size_t a = 0; a < mu.size(); ++a) {
    const double m = mu.mass(a);
    if (m <= eps) continue;
    const auto x = mu.position(a);
    for (std::size_t i = 0; i < k; ++i) {
      phis[i] = u.pairs()[i].phi.value(m);
      if (phis[i] == 0.0) continue;
      grads[i] = u.pairs()[i].f.gradient(x);
      acc += J.grad[i] * phis[i] * Lf[i](x);
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (phis[i] == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) {
        if (phis[j] == 0.0 || J.h(i, j) == 0.0) continue;
        double dot = 0.0;
        for (std::size_t c = 0; c < grads[i].size(); ++c) dot += grads[i][c] * grads[j][c];
        acc += J.h(i, j) * m * phis[i] * phis[j] * dot;
      }
    }
  }
  return acc;
}

/// Carre du champ sum_ij dF_i dG_j [sum_x m phi_i(m) psi_j(m) Gamma(f_i, g_j)(x)].
inline double carre_du_champ(const CylinderFunction& u, const CylinderFunction& v, const AtomicMeasure& mu) {
  if (u.size() == 0 || v.size() == 0) return 0.0;
  const Jet Ju = u.outer().jet(detail::pair_values(u, mu));
  const Jet Jv = v.outer().jet(detail::pair_values(v, mu));
  const double eps = std::min(u.threshold(), v.threshold());
  double acc = 0.0;
  for (std::size_t a = 0; a < mu.size(); ++a) {
    const double m = mu.mass(a);
    if (m <= eps) continue;
    const auto x = mu.position(a);
    // Gradient in x of the atom's contribution, without the mass factor.
    Point gu(x.size(), 0.0), gv(x.size(), 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double w = Ju.grad[i] * u.pairs()[i].phi.value(m);
      if (w == 0.0) continue;
      const auto g = u.pairs()[i].f.gradient(x);
      for (std::size_t c = 0; c < g.size(); ++c) gu[c] += w * g[c];
    }
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double w = Jv.grad[j] * v.pairs()[j].phi.value(m);
      if (w == 0.0) continue;
      const auto g = v.pairs()[j].f.gradient(x);
      for (std::size_t c = 0; c < g.size(); ++c) gv[c] += w * g[c];
    }
    double dot = 0.0;
    for (std::size_t c = 0; c < gu.size(); ++c) dot += gu[c] * gv[c];
    acc += m * dot;
  }
  return acc;
}

/// W(mu) = 1/2 sum_{i != j} m_i m_j sigma(d(x_i, x_j)).
inline double interaction_energy(const PairPotential& sigma, const AtomicMeasure& mu) {
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = i + 1; j < mu.size(); ++j) {
      const double r = distance(mu.space(), mu.position(i), mu.position(j));
      require(r > 0.0, ErrorKind::singularity, "coincident atoms in the interaction energy");
      acc += mu.mass(i) * mu.mass(j) * sigma.value(r);
    }
  return acc;
}

/// Gradient of W in the position of atom k:
///   m_k sum_{j != k} m_j sigma'(d_kj) grad_x d(x, x_j)|_{x = x_k},
/// where grad_x d(x, y) is the unit vector pointing away from y.
inline Point interaction_gradient(const PairPotential& sigma, const AtomicMeasure& mu, std::size_t k) {
  const auto d = static_cast<std::size_t>(mu.space().dim);
  Point g(d, 0.0), u(d);
  for (std::size_t j = 0; j < mu.size(); ++j) {
    if (j == k) continue;
    const double r = unit_toward(mu.space(), mu.position(k), mu.position(j), u);
    require(r > 0.0, ErrorKind::singularity, "coincident atoms in the interaction gradient");
    const double w = mu.mass(k) * mu.mass(j) * sigma.derivative(r);
    for (std::size_t c = 0; c < d; ++c) g[c] -= w * u[c];
  }
  return g;
}

/// Girsanov-corrected generator L u + phi^{-1} G(phi, u) for phi = exp(-beta W):
///   L u - beta sum_i dF_i sum_x phi_i(m_x) <grad_x W, grad f_i(x)>.
/// This is the generator of the dynamics with the girsanov_derived drift.
inline double girsanov_generator(const CylinderFunction& u, const AtomicMeasure& mu, const Interaction& inter) {
  const double base = generator(u, mu);
  if (inter.beta == 0.0 || u.size() == 0) return base;
  const Jet J = u.outer().jet(detail::pair_values(u, mu));
  const double eps = u.threshold();
  double cross = 0.0;
  for (std::size_t a = 0; a < mu.size(); ++a) {
    const double m = mu.mass(a);
    if (m <= eps) continue;
    const auto x = mu.position(a);
    Point gW;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double w = J.grad[i] * u.pairs()[i].phi.value(m);
      if (w == 0.0) continue;
      if (gW.empty()) gW = interaction_gradient(inter.potential, mu, a);
      const auto g = u.pairs()[i].f.gradient(x);
      double dot = 0.0;
      for (std::size_t c = 0; c < g.size(); ++c) dot += gW[c] * g[c];
      cross += w * dot;
    }
  }
  return base - inter.beta * cross;
}

/// sum over atoms above the cutoff of phi(m) (L f)(x): the action of the
/// Dean-Kawasaki drift on phi (x) f.
inline double dual_pairing(const AtomicMeasure& rho, const MassCutoff& phi, const TestFunction& f) {
  detail::check_space(f, rho);
  const TestFunction Lf = f.apply_L();
  double acc = 0.0;
  for (std::size_t a = 0; a < rho.size(); ++a) {
    const double m = rho.mass(a);
    if (m <= phi.eps()) continue;
    acc += phi.value(m) * Lf(rho.position(a));
  }
  return acc;
}

/// Pointwise product u v as a cylinder function on the concatenated pairs.
inline CylinderFunction product(const CylinderFunction& u, const CylinderFunction& v) {
  auto pairs = u.pairs();
  pairs.insert(pairs.end(), v.pairs().begin(), v.pairs().end());
  return CylinderFunction(u.outer() * v.outer().shifted(static_cast<int>(u.size())), std::move(pairs));
}

/// Pointwise sum u + v.
inline CylinderFunction sum(const CylinderFunction& u, const CylinderFunction& v) {
  auto pairs = u.pairs();
  pairs.insert(pairs.end(), v.pairs().begin(), v.pairs().end());
  return CylinderFunction(u.outer() + v.outer().shifted(static_cast<int>(u.size())), std::move(pairs));
}

/// G o u for a unary library function G.
inline CylinderFunction compose(OuterOp G, const CylinderFunction& u) {
  return CylinderFunction(Outer::apply(G, u.outer()), u.pairs());
}

inline CylinderFunction scaled(double c, const CylinderFunction& u) {
  return CylinderFunction(Outer::constant(c) * u.outer(), u.pairs());
}

}  // namespace massive
