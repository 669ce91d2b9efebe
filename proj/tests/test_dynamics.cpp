#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "massive/dynamics.hpp"
#include "massive/heat_kernel.hpp"
#include "massive/stats.hpp"

using namespace massive;

namespace {

MassSequence explicit_masses(std::vector<double> m) {
  return MassSequence(std::move(m), 0.0, MassLaw::explicit_masses());
}

SystemConfig base_config(BaseSpace space, std::vector<double> masses, double dt, double horizon) {
  SystemConfig cfg;
  cfg.space = space;
  cfg.masses = explicit_masses(std::move(masses));
  cfg.dt = dt;
  cfg.horizon = horizon;
  return cfg;
}

}  // namespace

TEST(Potential, DecreasingAndPositiveNearZero) {
  for (const auto& p : {PairPotential::riesz(0.5), PairPotential::riesz(0.0), PairPotential::logarithmic(),
                        PairPotential::dyson(), PairPotential::mie(1.0, 1.0, 12.0, 6.0)}) {
    double prev = INFINITY;
    for (double t = 1e-4; t <= 0.05; t *= 1.5) {
      EXPECT_GT(p.value(t), 0.0) << to_string(p.kind);
      EXPECT_LT(p.value(t), prev);
      EXPECT_LT(p.derivative(t), 0.0);
      prev = p.value(t);
    }
  }
}

TEST(Potential, DerivativeMatchesFiniteDifference) {
  for (const auto& p : {PairPotential::riesz(1.5), PairPotential::riesz(0.0), PairPotential::logarithmic(),
                        PairPotential::dyson(), PairPotential::mie(1.0, 2.0, 4.0, 2.0)})
    for (double t : {0.05, 0.3, 0.8, 2.0}) {
      const double h = 1e-6 * t;
      const double fd = (p.value(t + h) - p.value(t - h)) / (2.0 * h);
      EXPECT_NEAR(p.derivative(t), fd, 1e-5 * (1.0 + std::abs(fd))) << to_string(p.kind) << " " << t;
    }
}

TEST(Potential, IntegrabilityAndErrors) {
  EXPECT_TRUE(PairPotential::riesz(0.5).integrable_in(2));
  EXPECT_FALSE(PairPotential::riesz(1.0).integrable_in(2));
  EXPECT_TRUE(PairPotential::riesz(1.5).integrable_in(3));
  EXPECT_THROW(PairPotential::riesz(1.0).value(0.0), Error);
  EXPECT_THROW(PairPotential::riesz(-1.0).validate(), Error);
  EXPECT_THROW(PairPotential::mie(1, 1, 2, 3).validate(), Error);
}

TEST(SystemConfig, Validation) {
  auto cfg = base_config(BaseSpace::torus(2), {0.5, 0.5}, 0.1, 0.05);
  EXPECT_THROW(cfg.validate(), Error);
  cfg.horizon = 1.0;
  cfg.interaction = Interaction{PairPotential::riesz(1.0), 1.0};
  cfg.strict_integrability = true;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.strict_integrability = false;
  EXPECT_NO_THROW(cfg.validate());
  cfg.initial_positions = {{0.1, 0.2}};
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Free, UnitMassMarginalMatchesHeatKernel) {
  auto cfg = base_config(BaseSpace::torus(1), {1.0}, 0.01, 0.01);
  cfg.initial_positions = {{0.3}};
  constexpr int bins = 64;
  const int n = 100000;
  std::vector<double> counts(bins, 0.0);
  for (int p = 0; p < n; ++p) {
    auto rng = RngStream::for_task(1, stream_tag::paths, static_cast<std::uint64_t>(p));
    const auto tr = simulate_free(cfg, rng);
    counts[std::min(bins - 1, static_cast<int>(tr.position(1, 0)[0] * bins))] += 1.0;
  }
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    double prob = 0.0;
    for (int q = 0; q < 32; ++q) {
      const double y = (b + (q + 0.5) / 32.0) / bins;
      prob += heat_kernel(cfg.space, Point{0.3}, Point{y}, 0.01) / (32.0 * bins);
    }
    const double e = prob * n;
    chi2 += (counts[b] - e) * (counts[b] - e) / e;
  }
  EXPECT_GT(stats::chi_square_sf(chi2, bins - 1), 0.01);
}

TEST(Free, SmallMassRunsFaster) {
  // Mass s runs the base diffusion at speed 1/s: marginal h_{t/s}.
  auto cfg = base_config(BaseSpace::torus(1), {0.75, 0.25}, 0.002, 0.002);
  cfg.initial_positions = {{0.5}, {0.0}};
  std::vector<double> c0(20000), c1(20000);
  for (std::size_t p = 0; p < c0.size(); ++p) {
    auto rng = RngStream::for_task(2, stream_tag::paths, p);
    const auto tr = simulate_free(cfg, rng);
    c0[p] = std::cos(2.0 * std::numbers::pi * (tr.position(1, 0)[0] - 0.5));
    c1[p] = std::cos(2.0 * std::numbers::pi * tr.position(1, 1)[0]);
  }
  const double lam = 4.0 * std::numbers::pi * std::numbers::pi;
  const auto m0 = stats::mean_se(c0), m1 = stats::mean_se(c1);
  EXPECT_LT(std::abs(m0.mean - std::exp(-lam * 0.002 / 0.75)), 4.0 * m0.se);
  EXPECT_LT(std::abs(m1.mean - std::exp(-lam * 0.002 / 0.25)), 4.0 * m1.se);
}

TEST(Free, EqualMassesExchangeable) {
  auto cfg = base_config(BaseSpace::torus(1), {0.5, 0.5}, 0.01, 0.05);
  cfg.initial_positions = {{0.1}, {0.6}};
  std::vector<double> diff(5000);
  for (std::size_t p = 0; p < diff.size(); ++p) {
    auto rng = RngStream::for_task(3, stream_tag::paths, p);
    const auto tr = simulate_free(cfg, rng);
    const std::size_t last = tr.frames() - 1;
    diff[p] = std::cos(2.0 * std::numbers::pi * (tr.position(last, 0)[0] - 0.1)) -
              std::cos(2.0 * std::numbers::pi * (tr.position(last, 1)[0] - 0.6));
  }
  const auto ms = stats::mean_se(diff);
  EXPECT_LT(std::abs(ms.mean), 3.5 * ms.se);
}

TEST(Free, ZeroMassIsFrozen) {
  auto cfg = base_config(BaseSpace::torus(2), {1.0, 0.0}, 0.01, 0.5);
  cfg.initial_positions = {{0.1, 0.2}, {0.7, 0.4}};
  auto rng = RngStream::for_task(4, stream_tag::paths, 0);
  const auto tr = simulate_free(cfg, rng);
  for (std::size_t k = 0; k < tr.frames(); ++k) {
    EXPECT_EQ(tr.position(k, 1)[0], 0.7);
    EXPECT_EQ(tr.position(k, 1)[1], 0.4);
  }
  EXPECT_NE(tr.position(tr.frames() - 1, 0)[0], 0.1);
}

TEST(Free, RecordingGridAndMasses) {
  auto cfg = base_config(BaseSpace::ornstein_uhlenbeck(2), {0.6, 0.4}, 0.01, 0.105);
  cfg.record_stride = 3;
  auto rng = RngStream::for_task(5, stream_tag::paths, 0);
  const auto tr = simulate_free(cfg, rng);
  EXPECT_EQ(cfg.steps(), 11u);
  ASSERT_EQ(tr.frames(), 5u);  // 0, 0.03, 0.06, 0.09, 0.105
  EXPECT_DOUBLE_EQ(tr.times.back(), 0.105);
  EXPECT_EQ(tr.masses, cfg.masses);
  EXPECT_EQ(tr.coords.size(), 5u * 2u * 2u);
}

TEST(Free, Deterministic) {
  const auto cfg = base_config(BaseSpace::torus(2), {0.5, 0.3, 0.2}, 0.01, 0.2);
  auto r1 = RngStream::for_task(6, stream_tag::paths, 7);
  auto r2 = RngStream::for_task(6, stream_tag::paths, 7);
  EXPECT_EQ(simulate_free(cfg, r1).coords, simulate_free(cfg, r2).coords);
}

TEST(Interacting, ZeroBetaMatchesFreePathwise) {
  auto cfg = base_config(BaseSpace::torus(2), {0.5, 0.3, 0.2}, 0.01, 0.2);
  auto r1 = RngStream::for_task(7, stream_tag::paths, 0);
  const auto free = simulate_free(cfg, r1);
  cfg.interaction = Interaction{PairPotential::riesz(0.5), 0.0};
  auto r2 = RngStream::for_task(7, stream_tag::paths, 0);
  EXPECT_EQ(simulate_interacting(cfg, r2).coords, free.coords);
}

TEST(Interacting, DriftHomogeneity) {
  auto cfg = base_config(BaseSpace::torus(1), {0.5, 0.5}, 0.01, 0.1);
  const double p = 0.7;
  cfg.interaction = Interaction{PairPotential::riesz(p), 1.0};
  cfg.drift_variant = DriftVariant::pairwise_mass;
  std::vector<double> a(2), b(2);
  interaction_drift(cfg, std::vector<double>{0.2, 0.3}, a);
  interaction_drift(cfg, std::vector<double>{0.2, 0.25}, b);
  EXPECT_NEAR(b[0] / a[0], std::pow(2.0, p + 1.0), 1e-12);
  // Repulsive: particle 0 is pushed away from particle 1 (negative direction).
  EXPECT_LT(a[0], 0.0);
  EXPECT_GT(a[1], 0.0);
  // Explicit value: -(beta/2) s_i s_j d^{-(p+1)} towards j.
  EXPECT_NEAR(a[0], -0.5 * 0.25 * std::pow(0.1, -(p + 1.0)), 1e-9);
  cfg.drift_variant = DriftVariant::girsanov_derived;
  interaction_drift(cfg, std::vector<double>{0.2, 0.3}, b);
  EXPECT_NEAR(b[0], -0.5 * std::pow(0.1, -(p + 1.0)), 1e-9);
}

TEST(Interacting, RepulsionIncreasesDistance) {
  auto cfg = base_config(BaseSpace::torus(2), {0.5, 0.5}, 1e-4, 0.01);
  cfg.initial_positions = {{0.5, 0.5}, {0.55, 0.5}};
  auto free_cfg = cfg;
  cfg.interaction = Interaction{PairPotential::riesz(0.5), 1.0};
  std::vector<double> diff(2000);
  for (std::size_t p = 0; p < diff.size(); ++p) {
    auto r1 = RngStream::for_task(8, stream_tag::paths, p);
    auto r2 = RngStream::for_task(8, stream_tag::paths, p);
    const auto a = simulate_interacting(cfg, r1), b = simulate_free(free_cfg, r2);
    const std::size_t last = a.frames() - 1;
    diff[p] = distance(cfg.space, a.position(last, 0), a.position(last, 1)) -
              distance(cfg.space, b.position(last, 0), b.position(last, 1));
  }
  const auto ms = stats::mean_se(diff);
  EXPECT_GT(ms.mean / ms.se, 3.0);
}

TEST(Interacting, RejectsCoincidentParticles) {
  auto cfg = base_config(BaseSpace::torus(1), {0.5, 0.5}, 0.01, 0.1);
  cfg.interaction = Interaction{PairPotential::riesz(1.0), 1.0};
  std::vector<double> out(2);
  try {
    interaction_drift(cfg, std::vector<double>{0.3, 0.3}, out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::step_rejected);
  }
}

TEST(Collision, TrivialCases) {
  auto cfg = base_config(BaseSpace::torus(1), {1.0}, 0.01, 0.1);
  auto rng = RngStream::for_task(9, stream_tag::paths, 0);
  EXPECT_TRUE(std::isinf(first_collision_time(simulate_free(cfg, rng), 1e-3)));
  auto frozen = base_config(BaseSpace::torus(1), {1.0, 0.0, 0.0}, 0.01, 0.1);
  frozen.initial_positions = {{0.0}, {0.3}, {0.6}};
  const auto tr = simulate_free(frozen, rng);
  Trajectory still{frozen.space, explicit_masses({1.0, 0.0}), {0.0, 0.1}, {0.3, 0.6, 0.3, 0.6}, {}};
  EXPECT_TRUE(std::isinf(first_collision_time(still, 1e-3)));
  EXPECT_THROW(first_collision_time(tr, 0.0), Error);
}

TEST(Collision, OneDimensionalPairCollides) {
  // Masses 1/2 with the speed halved give two particles at unit speed.
  auto cfg = base_config(BaseSpace::torus(1), {0.5, 0.5}, 1e-3, 1.0);
  cfg.faults.speed_scale = 0.5;
  cfg.initial_positions = {{0.2}, {0.21}};
  int hits = 0;
  for (std::uint64_t p = 0; p < 1000; ++p) {
    auto rng = RngStream::for_task(10, stream_tag::paths, p);
    if (simulate_collision_time(cfg, rng, 1e-3) <= 1.0) ++hits;
  }
  EXPECT_GT(hits, 950);
}

TEST(Collision, StreamingMatchesRecorded) {
  auto cfg = base_config(BaseSpace::torus(1), {0.6, 0.3, 0.1}, 1e-3, 0.2);
  for (std::uint64_t p = 0; p < 50; ++p) {
    auto r1 = RngStream::for_task(11, stream_tag::paths, p);
    auto r2 = RngStream::for_task(11, stream_tag::paths, p);
    EXPECT_EQ(simulate_collision_time(cfg, r1, 1e-2), first_collision_time(simulate_free(cfg, r2), 1e-2));
  }
}

TEST(MinPairDistance, Series) {
  Trajectory still{BaseSpace::torus(1), explicit_masses({0.5, 0.5}), {0.0, 1.0, 2.0}, {0.1, 0.6, 0.1, 0.6, 0.1, 0.6}, {}};
  const auto s = min_pair_distance_series(still);
  ASSERT_EQ(s.size(), 3u);
  for (double v : s) EXPECT_NEAR(v, 0.5, 1e-15);

  auto cfg = base_config(BaseSpace::torus(3), {0.4, 0.3, 0.2, 0.1}, 0.01, 0.3);
  auto rng = RngStream::for_task(12, stream_tag::paths, 0);
  const auto tr = simulate_free(cfg, rng);
  const auto series = min_pair_distance_series(tr);
  EXPECT_EQ(series.size(), tr.frames());
  for (double v : series) EXPECT_LE(v, std::sqrt(3.0) / 2.0);
  Trajectory one{BaseSpace::torus(1), explicit_masses({1.0}), {0.0}, {0.1}, {}};
  EXPECT_THROW(min_pair_distance_series(one), Error);
}
