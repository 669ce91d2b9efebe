#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "massive/ambient.hpp"
#include "massive/error.hpp"
#include "massive/simplex.hpp"

namespace massive {

/// Spectral gap of the Laplacian on the unit flat torus.
inline constexpr double kTorusSpectralGap = 4.0 * std::numbers::pi * std::numbers::pi;

/// Transition density at time t of the Delta-diffusion on the unit circle,
/// w.r.t. Lebesgue measure, at displacement z:
///   sum_n (4 pi t)^{-1/2} exp(-(z+n)^2 / (4t))
///   = 1 + 2 sum_{n>=1} exp(-4 pi^2 n^2 t) cos(2 pi n z).
/// The image sum is used for t <= 0.2, the spectral sum above; both are cut
/// once terms fall below 1e-16.
inline double wrapped_gaussian(double z, double t) {
  require(t > 0.0, ErrorKind::invalid_parameter, "heat kernel time must be positive");
  constexpr double pi = std::numbers::pi;
  constexpr double cut = 1e-16;
  z -= std::floor(z + 0.5);  // z in [-1/2, 1/2)
  if (t <= 0.2) {
    const double norm = 1.0 / std::sqrt(4.0 * pi * t);
    double acc = norm * std::exp(-z * z / (4.0 * t));
    for (int n = 1;; ++n) {
      const double a = norm * std::exp(-(z + n) * (z + n) / (4.0 * t));
      const double b = norm * std::exp(-(z - n) * (z - n) / (4.0 * t));
      acc += a + b;
      if (a < cut && b < cut) break;
    }
    return acc;
  }
  double acc = 1.0;
  for (int n = 1;; ++n) {
    const double e = std::exp(-4.0 * pi * pi * n * n * t);
    acc += 2.0 * e * std::cos(2.0 * pi * n * z);
    if (2.0 * e < cut) break;
  }
  return acc;
}

/// Heat kernel h_t(x, y) of the torus w.r.t. the uniform measure: product of
/// the coordinate wrapped Gaussians.
inline double heat_kernel(const BaseSpace& space, std::span<const double> x, std::span<const double> y,
                          double t) {
  require(space.kind == SpaceKind::torus, ErrorKind::representation_mismatch,
          "heat kernel is provided for the torus only");
  check_point(space, x);
  check_point(space, y);
  double v = 1.0;
  for (int k = 0; k < space.dim; ++k) v *= wrapped_gaussian(y[k] - x[k], t);
  return v;
}

struct LogProductDensity {
  double partial_sum = 0.0;
  double tail_bound = 0.0;
};

/// log of the infinite-product kernel prod_k h_{t/s_k}(x_k, y_k) over the
/// represented particles, with a bound on the contribution of the particles
/// beyond the truncation.
///
/// Tail bound: with tau = t/s, |h_tau - 1| <= delta(tau) = 2 e^{-lambda tau} /
/// (1 - e^{-lambda tau}) per coordinate, and |log(1 + u)| <= 2|u| for
/// |u| <= 1/2. Every neglected mass is at most s_max,
/// their sum is the tail mass T, and s -> e^{-lambda t / s} / s is increasing
/// on (0, lambda t], so sum_k e^{-lambda t/s_k} <= (T / s_max) e^{-lambda t/s_max}.
inline LogProductDensity log_product_density(const BaseSpace& space,
                                             std::span<const Point> x, std::span<const Point> y,
                                             const MassSequence& masses, double t) {
  require(t > 0.0, ErrorKind::invalid_parameter, "time must be positive");
  require(space.kind == SpaceKind::torus, ErrorKind::representation_mismatch, "torus only");
  require(x.size() == y.size(), ErrorKind::dimension_mismatch, "point sequences differ in length");
  require(x.size() <= masses.size(), ErrorKind::dimension_mismatch, "more points than masses");
  LogProductDensity out;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double s = masses[k];
    if (s == 0.0) continue;  // frozen particle: identity kernel, no density term
    out.partial_sum += std::log(heat_kernel(space, x[k], y[k], t / s));
  }

  // Neglected particles: those beyond x.size(), holding mass
  // sum(masses[K..]) + tail.
  double tail = masses.tail_mass();
  for (std::size_t k = x.size(); k < masses.size(); ++k) tail += masses[k];
  if (tail <= 0.0) return out;
  // Largest single neglected mass: the first unused represented mass, or a
  // piece of the unrepresented tail.
  double s_max = masses.tail_mass();
  if (x.size() < masses.size()) s_max = std::max(s_max, masses[x.size()]);
  const double a = kTorusSpectralGap * t;
  if (s_max > a) {
    out.tail_bound = INFINITY;
    return out;
  }
  const double e = std::exp(-a / s_max);
  const double delta_max = 2.0 * e / (1.0 - e);
  if (!(delta_max <= 0.5)) {
    out.tail_bound = INFINITY;
    return out;
  }
  const double sum_exp = (tail / s_max) * e;
  out.tail_bound = space.dim * 2.0 * (2.0 / (1.0 - e)) * sum_exp;
  return out;
}

}  // namespace massive
