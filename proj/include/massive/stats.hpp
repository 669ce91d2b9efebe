#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace massive::stats {

/// Mean and standard error of the mean. `se` is NaN for fewer than two
/// samples.
struct MeanSe {
  double mean = 0.0;
  double se = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
};

// Welford accumulation keeps the result independent of magnitude offsets.
inline MeanSe mean_se(std::span<const double> xs) {
  MeanSe out;
  out.n = xs.size();
  if (xs.empty()) {
    out.mean = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  out.mean = mean;
  if (k >= 2) out.se = std::sqrt(m2 / static_cast<double>(k - 1) / static_cast<double>(k));
  return out;
}

inline double variance(std::span<const double> xs) {
  const auto ms = mean_se(xs);
  return ms.se * ms.se * static_cast<double>(ms.n);
}

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

/// Two-sided standard normal tail probability P(|Z| > |z|).
inline double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

/// z such that P(|Z| > z) = p, by bisection.
inline double normal_two_sided_quantile(double p) {
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_two_sided_p(mid) > p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Upper-tail chi-square probability via the regularized incomplete gamma
/// function (series / continued fraction, Numerical Recipes style).
inline double chi_square_sf(double x, double dof) {
  const double a = 0.5 * dof;
  const double z = 0.5 * x;
  if (z <= 0.0) return 1.0;
  const double gln = std::lgamma(a);
  if (z < a + 1.0) {
    double sum = 1.0 / a, del = sum, ap = a;
    for (int n = 0; n < 1000; ++n) {
      ap += 1.0;
      del *= z / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-z + a * std::log(z) - gln);
  }
  double b = z + 1.0 - a, c = 1.0 / 1e-300, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-z + a * std::log(z) - gln) * h;
}

/// Asymptotic Kolmogorov distribution tail P(K > lambda).
inline double kolmogorov_sf(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace massive::stats
