#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "massive/heat_kernel.hpp"

using namespace massive;

namespace {

const BaseSpace kCircle = BaseSpace::torus(1);

double h(double x, double y, double t) { return heat_kernel(kCircle, Point{x}, Point{y}, t); }

// Midpoint rule; spectrally accurate for smooth periodic integrands.
template <class F>
double integrate_circle(F f, int n = 256) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += f((i + 0.5) / n);
  return acc / n;
}

MassSequence dyadic(int n) {
  std::vector<double> m;
  for (int k = 1; k <= n; ++k) m.push_back(std::ldexp(1.0, -k));
  return MassSequence(m, std::ldexp(1.0, -n), MassLaw::explicit_masses());
}

}  // namespace

TEST(HeatKernel, EquilibratesAtLargeTime) {
  EXPECT_NEAR(h(0.1, 0.7, 10.0), 1.0, 1e-9);
  EXPECT_NEAR(heat_kernel(BaseSpace::torus(3), Point{0.1, 0.2, 0.3}, Point{0.9, 0.5, 0.0}, 10.0), 1.0, 1e-9);
}

TEST(HeatKernel, Symmetric) {
  auto rng = RngStream::for_task(1, stream_tag::oracle, 0);
  for (int i = 0; i < 100; ++i) {
    const double x = rng.uniform(), y = rng.uniform(), t = 0.001 + rng.uniform();
    EXPECT_NEAR(h(x, y, t), h(y, x, t), 1e-14 * h(x, y, t));
  }
}

TEST(HeatKernel, Conservative) {
  for (double t : {0.005, 0.05, 0.2, 0.21, 1.0})
    for (double x : {0.0, 0.3, 0.77}) EXPECT_NEAR(integrate_circle([&](double y) { return h(x, y, t); }), 1.0, 1e-8);
}

TEST(HeatKernel, SeriesAgreeAtSwitch) {
  // Image sum just below the switch against spectral sum just above, and the
  // two representations evaluated directly at the same time.
  for (double z : {0.0, 0.1, 0.25, 0.5}) {
    double spectral = 1.0;
    for (int n = 1; n < 50; ++n)
      spectral += 2.0 * std::exp(-4.0 * std::numbers::pi * std::numbers::pi * n * n * 0.2) *
                  std::cos(2.0 * std::numbers::pi * n * z);
    EXPECT_NEAR(wrapped_gaussian(z, 0.2), spectral, 1e-14);
  }
}

TEST(HeatKernel, ChapmanKolmogorov) {
  for (auto [s, t] : {std::pair{0.01, 0.02}, std::pair{0.05, 0.3}, std::pair{0.3, 0.4}})
    for (auto [x, y] : {std::pair{0.1, 0.4}, std::pair{0.0, 0.9}}) {
      const double lhs = integrate_circle([&](double z) { return h(x, z, s) * h(z, y, t); }, 512);
      EXPECT_NEAR(lhs, h(x, y, s + t), 1e-6);
    }
}

TEST(HeatKernel, RejectsBadInput) {
  EXPECT_THROW(h(0.1, 0.2, 0.0), Error);
  EXPECT_THROW(heat_kernel(BaseSpace::ornstein_uhlenbeck(1), Point{0.0}, Point{0.0}, 1.0), Error);
}

TEST(LogProductDensity, DiagonalSingleParticle) {
  const auto m = MassSequence({1.0}, 0.0, MassLaw::explicit_masses());
  const std::vector<Point> x{{0.3}};
  const auto r = log_product_density(kCircle, x, x, m, 0.01);
  EXPECT_NEAR(r.partial_sum, std::log(wrapped_gaussian(0.0, 0.01)), 1e-14);
  EXPECT_GT(r.partial_sum, 0.0);
  EXPECT_EQ(r.tail_bound, 0.0);
}

TEST(LogProductDensity, LargeTimeVanishes) {
  const auto m = MassSequence({0.5, 0.3, 0.2}, 0.0, MassLaw::explicit_masses());
  const std::vector<Point> x{{0.1}, {0.5}, {0.9}}, y{{0.6}, {0.2}, {0.0}};
  EXPECT_NEAR(log_product_density(kCircle, x, y, m, 50.0).partial_sum, 0.0, 1e-12);
}

TEST(LogProductDensity, DyadicTailBoundAtForty) {
  const auto m = dyadic(40);
  auto rng = RngStream::for_task(2, stream_tag::oracle, 0);
  std::vector<Point> x(40, Point(1)), y(40, Point(1));
  for (int k = 0; k < 40; ++k) {
    x[k][0] = rng.uniform();
    y[k][0] = rng.uniform();
  }
  const auto r = log_product_density(kCircle, x, y, m, 0.1);
  EXPECT_LT(r.tail_bound, 1e-8);
}

// The bound must dominate the contribution of particles it omits, checked
// by extending the truncation.
TEST(LogProductDensity, TailBoundDominatesOmittedTerms) {
  const auto m = dyadic(60);
  auto rng = RngStream::for_task(3, stream_tag::oracle, 0);
  std::vector<Point> x(60, Point(1)), y(60, Point(1));
  for (int k = 0; k < 60; ++k) {
    x[k][0] = rng.uniform();
    y[k][0] = rng.uniform();
  }
  const double t = 0.1;
  const auto full = log_product_density(kCircle, x, y, m, t);
  double prev = INFINITY;
  for (std::size_t K = 1; K <= 40; ++K) {
    const std::span<const Point> xs(x.data(), K), ys(y.data(), K);
    const auto r = log_product_density(kCircle, xs, ys, m, t);
    EXPECT_LE(std::abs(full.partial_sum - r.partial_sum), r.tail_bound + 1e-15) << K;
    EXPECT_LE(r.tail_bound, prev);
    prev = r.tail_bound;
  }
}

TEST(LogProductDensity, InfiniteBoundWhenTailTooHeavy) {
  const auto m = dyadic(10);
  const std::vector<Point> x{{0.1}};
  EXPECT_TRUE(std::isinf(log_product_density(kCircle, x, x, m, 1e-4).tail_bound));
}
