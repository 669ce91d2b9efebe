#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "massive/error.hpp"

namespace massive {

enum class PotentialKind { riesz, logarithmic, mie, dyson };

inline std::string to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::riesz: return "riesz";
    case PotentialKind::logarithmic: return "logarithmic";
    case PotentialKind::mie: return "mie";
    case PotentialKind::dyson: return "dyson";
  }
  return "unknown";
}

/// Isotropic pair potential sigma(t) of the distance t > 0.
///   riesz(p):          t^{-p} / p, and -log t for p = 0
///   logarithmic:       (-log t)^+
///   mie(a, b, al, be): a t^{-al} - b t^{-be}, a, b > 0, al > be > 0
///   dyson:             -log t
struct PairPotential {
  PotentialKind kind = PotentialKind::riesz;
  double p = 1.0;
  double a = 1.0, b = 1.0, alpha = 12.0, beta_exp = 6.0;

  static PairPotential riesz(double p) { return {PotentialKind::riesz, p}; }
  static PairPotential logarithmic() { return {PotentialKind::logarithmic, 0.0}; }
  static PairPotential dyson() { return {PotentialKind::dyson, 0.0}; }
  static PairPotential mie(double a, double b, double alpha, double beta_exp) {
    return {PotentialKind::mie, 0.0, a, b, alpha, beta_exp};
  }

  void validate() const {
    switch (kind) {
      case PotentialKind::riesz:
        require(p >= 0.0 && std::isfinite(p), ErrorKind::invalid_parameter, "Riesz exponent must be >= 0");
        break;
      case PotentialKind::mie:
        require(a > 0.0 && b > 0.0 && alpha > beta_exp && beta_exp > 0.0, ErrorKind::invalid_parameter,
                "Mie potential needs a, b > 0 and alpha > beta > 0");
        break;
      default: break;
    }
  }

  double value(double t) const {
    require(t > 0.0, ErrorKind::singularity, "pair potential evaluated at distance 0");
    switch (kind) {
      case PotentialKind::riesz: return p == 0.0 ? -std::log(t) : std::pow(t, -p) / p;
      case PotentialKind::logarithmic: return std::max(0.0, -std::log(t));
      case PotentialKind::mie: return a * std::pow(t, -alpha) - b * std::pow(t, -beta_exp);
      case PotentialKind::dyson: return -std::log(t);
    }
    return NAN;
  }

  double derivative(double t) const {
    require(t > 0.0, ErrorKind::singularity, "pair potential evaluated at distance 0");
    switch (kind) {
      case PotentialKind::riesz: return -std::pow(t, -p - 1.0);
      case PotentialKind::logarithmic: return t < 1.0 ? -1.0 / t : 0.0;
      case PotentialKind::mie:
        return -a * alpha * std::pow(t, -alpha - 1.0) + b * beta_exp * std::pow(t, -beta_exp - 1.0);
      case PotentialKind::dyson: return -1.0 / t;
    }
    return NAN;
  }

  /// Whether sigma(|x|) is locally integrable against the Lebesgue measure
  /// in a form usable for the Girsanov weight on a d-dimensional space.
  bool integrable_in(int d) const {
    switch (kind) {
      case PotentialKind::riesz: return p < d - 1.0;
      case PotentialKind::mie: return alpha < d - 1.0;
      default: return d >= 2;
    }
  }

  bool operator==(const PairPotential&) const = default;
};

}  // namespace massive
