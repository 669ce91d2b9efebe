#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "massive/ambient.hpp"
#include "massive/stats.hpp"

using namespace massive;
constexpr double pi = std::numbers::pi;

TEST(Distance, TorusWrapsAround) {
  const auto t1 = BaseSpace::torus(1);
  EXPECT_NEAR(distance(t1, Point{0.1}, Point{0.9}), 0.2, 1e-15);
  const auto t2 = BaseSpace::torus(2);
  EXPECT_NEAR(distance(t2, Point{0.0, 0.0}, Point{0.5, 0.5}), std::sqrt(0.5), 1e-15);
}

TEST(Distance, IdentityAndSymmetry) {
  auto rng = RngStream::for_task(1, stream_tag::oracle, 0);
  for (const auto& sp : {BaseSpace::torus(3), BaseSpace::ornstein_uhlenbeck(2), BaseSpace::interval()}) {
    for (int i = 0; i < 200; ++i) {
      Point x(sp.dim), y(sp.dim), z(sp.dim);
      sample_reference(sp, x, rng);
      sample_reference(sp, y, rng);
      sample_reference(sp, z, rng);
      EXPECT_EQ(distance(sp, x, x), 0.0);
      EXPECT_DOUBLE_EQ(distance(sp, x, y), distance(sp, y, x));
      EXPECT_LE(distance(sp, x, z), distance(sp, x, y) + distance(sp, y, z) + 1e-12);
    }
  }
}

TEST(Distance, DimensionMismatchThrows) {
  EXPECT_THROW(distance(BaseSpace::torus(2), Point{0.1}, Point{0.2, 0.3}), Error);
}

TEST(UnitToward, PointsAlongShortestGeodesic) {
  const auto t1 = BaseSpace::torus(1);
  Point u(1);
  const double r = unit_toward(t1, Point{0.1}, Point{0.9}, u);
  EXPECT_NEAR(r, 0.2, 1e-15);
  EXPECT_EQ(u[0], -1.0);
}

TEST(Step, ZeroTimeOrSpeedFreezes) {
  auto rng = RngStream::for_task(2, stream_tag::paths, 0);
  for (const auto& sp : {BaseSpace::torus(2), BaseSpace::ornstein_uhlenbeck(2)}) {
    const Point x{0.3, 0.7};
    EXPECT_EQ(step(sp, x, 0.0, 1.0, rng), x);
    EXPECT_EQ(step(sp, x, 0.1, 0.0, rng), x);
  }
  EXPECT_THROW(step(BaseSpace::torus(1), Point{0.1}, -1.0, 1.0, rng), Error);
  EXPECT_THROW(step(BaseSpace::torus(1), Point{0.1}, 1.0, -1.0, rng), Error);
}

TEST(Step, TorusIncrementVariance) {
  // The unwrapped increment is rebuilt from 64 sub-steps whose
  // minimal-image displacements cannot wrap (sd ~ 0.035).
  auto rng = RngStream::for_task(3, stream_tag::paths, 0);
  const auto sp = BaseSpace::torus(1);
  std::vector<double> sq(100000);
  for (auto& v : sq) {
    Point x{0.5};
    double total = 0.0;
    for (int j = 0; j < 64; ++j) {
      const Point y = step(sp, x, 0.01 / 64, 4.0, rng);
      total += detail::torus_delta(x[0], y[0]);
      x = y;
    }
    v = total * total;
  }
  const auto ms = stats::mean_se(sq);
  EXPECT_LT(std::abs(ms.mean - 0.08), 3.0 * ms.se);
}

TEST(Step, TorusCharacteristicFunction) {
  // E cos(2 pi (X' - x)) = exp(-4 pi^2 tau) for the wrapped increment.
  auto rng = RngStream::for_task(10, stream_tag::paths, 0);
  const auto sp = BaseSpace::torus(1);
  std::vector<double> v(100000);
  for (auto& c : v) c = std::cos(2.0 * pi * (step(sp, Point{0.2}, 0.01, 4.0, rng)[0] - 0.2));
  const auto ms = stats::mean_se(v);
  EXPECT_LT(std::abs(ms.mean - std::exp(-4.0 * pi * pi * 0.04)), 4.0 * ms.se);
}

TEST(Step, TorusPreservesUniform) {
  auto rng = RngStream::for_task(4, stream_tag::paths, 0);
  const auto sp = BaseSpace::torus(1);
  constexpr int bins = 20;
  std::vector<double> counts(bins, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    Point x(1);
    sample_reference(sp, x, rng);
    step_in_place(sp, x, 0.003, 1.0, rng);
    counts[std::min(bins - 1, static_cast<int>(x[0] * bins))] += 1.0;
  }
  double chi2 = 0.0;
  const double e = static_cast<double>(n) / bins;
  for (double c : counts) chi2 += (c - e) * (c - e) / e;
  EXPECT_GT(stats::chi_square_sf(chi2, bins - 1), 0.01);
}

TEST(Step, OrnsteinUhlenbeckPreservesGaussian) {
  auto rng = RngStream::for_task(5, stream_tag::paths, 0);
  const auto sp = BaseSpace::ornstein_uhlenbeck(1);
  std::vector<double> v(100000);
  for (auto& s : v) {
    Point x(1);
    sample_reference(sp, x, rng);
    step_in_place(sp, x, 0.3, 1.0, rng);
    s = x[0];
  }
  std::sort(v.begin(), v.end());
  double dmax = 0.0;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-v[i] / std::sqrt(2.0));
    dmax = std::max({dmax, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
  }
  EXPECT_GT(stats::kolmogorov_sf(dmax * std::sqrt(n)), 0.01);
}

TEST(Step, OrnsteinUhlenbeckTransitionMoments) {
  auto rng = RngStream::for_task(6, stream_tag::paths, 0);
  const auto sp = BaseSpace::ornstein_uhlenbeck(1);
  const double tau = 0.2 * 1.5;
  std::vector<double> v(100000);
  for (auto& s : v) s = step(sp, Point{2.0}, 0.2, 1.5, rng)[0];
  const auto ms = stats::mean_se(v);
  EXPECT_LT(std::abs(ms.mean - 2.0 * std::exp(-tau)), 4.0 * ms.se);
  EXPECT_NEAR(stats::variance(v), 1.0 - std::exp(-2.0 * tau), 0.01);
}

TEST(Step, IntervalStaysInside) {
  auto rng = RngStream::for_task(7, stream_tag::paths, 0);
  const auto sp = BaseSpace::interval();
  Point x{0.01};
  for (int i = 0; i < 10000; ++i) {
    step_in_place(sp, x, 0.05, 1.0, rng);
    ASSERT_GE(x[0], 0.0);
    ASSERT_LE(x[0], 1.0);
  }
}

TEST(ApplyL, TorusCosine) {
  const auto sp = BaseSpace::torus(1);
  const auto lf = apply_L(TestFunction::cos_mode(sp, {1}));
  EXPECT_EQ(lf, TestFunction::cos_mode(sp, {1}, -4.0 * pi * pi));
}

TEST(ApplyL, AnnihilatesConstants) {
  for (const auto& sp : {BaseSpace::torus(2), BaseSpace::ornstein_uhlenbeck(3), BaseSpace::interval()})
    EXPECT_TRUE(apply_L(TestFunction::constant(sp, 2.5)).is_zero());
}

TEST(ApplyL, HermiteTwoMatchesDirectDifferentiation) {
  const auto sp = BaseSpace::ornstein_uhlenbeck(1);
  const auto f = TestFunction::hermite(sp, {2});
  const auto lf = apply_L(f);
  for (double x : {-1.3, 0.0, 0.4, 2.2}) {
    EXPECT_NEAR(f(Point{x}), x * x - 1.0, 1e-14);
    EXPECT_NEAR(lf(Point{x}), 2.0 - 2.0 * x * x, 1e-13);
  }
}

// Central second differences of f against the generator on random points.
TEST(ApplyL, MatchesFiniteDifferences) {
  auto rng = RngStream::for_task(8, stream_tag::oracle, 0);
  const double h = 1e-4;
  auto check = [&](const TestFunction& f, bool ou) {
    const auto lf = apply_L(f);
    const int d = f.space().dim;
    for (int trial = 0; trial < 20; ++trial) {
      Point x(d);
      for (auto& v : x) v = 0.2 + 0.6 * rng.uniform();
      double lap = 0.0, drift = 0.0;
      for (int i = 0; i < d; ++i) {
        Point xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        lap += (f(xp) - 2.0 * f(x) + f(xm)) / (h * h);
        drift += x[i] * (f(xp) - f(xm)) / (2.0 * h);
      }
      const double expect = ou ? lap - drift : lap;
      EXPECT_NEAR(lf(x), expect, 1e-4 * (1.0 + std::abs(expect)));
    }
  };
  const auto t2 = BaseSpace::torus(2);
  check(TestFunction::cos_mode(t2, {1, 2}, 0.7) + TestFunction::sin_mode(t2, {2, -1}, 0.3), false);
  const auto ou = BaseSpace::ornstein_uhlenbeck(2);
  check(TestFunction::hermite(ou, {3, 1}) + TestFunction::hermite(ou, {0, 2}, -0.5), true);
  check(TestFunction::cosine(3) + TestFunction::cosine(1, 2.0), false);
}

TEST(ApplyL, TorusSpectralGap) {
  const auto sp = BaseSpace::torus(2);
  TestFunction f(sp);
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b) f.add_term({a, b}, {1.0, 0.5});
  const auto lf = apply_L(f);
  double gap = INFINITY;
  for (const auto& [k, c] : lf.terms()) gap = std::min(gap, std::abs(c.a / f.terms().at(k).a));
  EXPECT_NEAR(gap, 4.0 * pi * pi, 1e-12);
}

TEST(Gamma, TorusCosineAtQuarter) {
  const auto f = TestFunction::cos_mode(BaseSpace::torus(1), {1});
  EXPECT_NEAR(gamma(f, f, Point{0.25}), 4.0 * pi * pi, 1e-12);
}

TEST(Gamma, PositiveAndMatchesProductIdentity) {
  auto rng = RngStream::for_task(9, stream_tag::oracle, 0);
  auto check = [&](const TestFunction& f, const TestFunction& g) {
    const auto fg = f * g;
    const auto lfg = apply_L(fg), lf = apply_L(f), lg = apply_L(g);
    for (int i = 0; i < 1000; ++i) {
      Point x(f.space().dim);
      sample_reference(f.space(), x, rng);
      EXPECT_GE(gamma(f, f, x), 0.0);
      EXPECT_NEAR(fg(x), f(x) * g(x), 1e-9 * (1.0 + std::abs(fg(x))));
      const double id = 0.5 * (lfg(x) - f(x) * lg(x) - g(x) * lf(x));
      EXPECT_NEAR(gamma(f, g, x), id, 1e-9 * (1.0 + std::abs(id)));
    }
  };
  const auto t2 = BaseSpace::torus(2);
  check(TestFunction::cos_mode(t2, {1, 0}) + TestFunction::sin_mode(t2, {1, 1}, 0.5),
        TestFunction::sin_mode(t2, {0, 2}) + TestFunction::cos_mode(t2, {-1, 1}, 2.0));
  const auto ou = BaseSpace::ornstein_uhlenbeck(2);
  check(TestFunction::hermite(ou, {2, 1}), TestFunction::hermite(ou, {1, 3}, 0.5));
  check(TestFunction::cosine(2), TestFunction::cosine(3, -1.0) + TestFunction::cosine(1));
}

TEST(TestFunction, RejectsWrongRepresentation) {
  EXPECT_THROW(TestFunction::hermite(BaseSpace::torus(1), {1}), Error);
  EXPECT_THROW(TestFunction::cos_mode(BaseSpace::ornstein_uhlenbeck(1), {1}), Error);
  EXPECT_THROW(TestFunction::cos_mode(BaseSpace::torus(2), {1}), Error);
  const auto f = TestFunction::cos_mode(BaseSpace::torus(1), {1});
  const auto g = TestFunction::cosine(1);
  EXPECT_THROW(f + g, Error);
  EXPECT_THROW(gamma(f, g, Point{0.1}), Error);
}
