#include <gtest/gtest.h>

#include <cmath>

#include "massive/verify.hpp"

using namespace massive;

namespace {

const BaseSpace kT1 = BaseSpace::torus(1);
const BaseSpace kT2 = BaseSpace::torus(2);

EnsembleSpec free_spec(std::size_t paths, double horizon = 0.1, int n = 8) {
  EnsembleSpec spec;
  spec.system.space = kT2;
  spec.system.masses = MassSequence(std::vector<double>(n, 1.0 / n), 0.0, MassLaw::uniform(n));
  spec.system.dt = 1e-3;
  spec.system.horizon = horizon;
  spec.system.seed = 17;
  spec.n_paths = paths;
  return spec;
}

CylinderFunction pair_u() {
  return CylinderFunction::linear(MassCutoff(0.05, 0.02), TestFunction::cos_mode(kT2, {1, 0}));
}

CylinderFunction nonlinear_u() {
  std::vector<CutoffPair> pairs{{MassCutoff(0.05, 0.02), TestFunction::cos_mode(kT2, {1, 0})},
                                {MassCutoff(0.05, 0.02), TestFunction::sin_mode(kT2, {0, 1})}};
  const Outer F = Outer::polynomial({{1.0, {2, 0}}, {0.5, {1, 1}}}) + Outer::apply(OuterOp::sin, Outer::variable(1));
  return CylinderFunction(F, pairs);
}

}  // namespace

TEST(Martingale, FreeSystemPasses) {
  const auto spec = free_spec(2000);
  const auto res = martingale_suite(spec, nonlinear_u());
  EXPECT_TRUE(res.martingale.pass) << res.martingale.z_score;
  EXPECT_TRUE(res.qv.pass) << res.qv.statistic;
  EXPECT_NEAR(res.qv.statistic, 1.0, 0.15);
}

TEST(Martingale, ScaledCompensatorRejects) {
  const auto spec = free_spec(2000);
  MartingaleOptions opt;
  opt.compensator_scale = 1.5;
  const auto r = martingale_test(spec, pair_u(), opt);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(std::abs(r.z_score), 5.0);
}

TEST(Martingale, ConstantIsIdenticallyZero) {
  const auto spec = free_spec(100);
  const auto s = martingale_samples(spec, CylinderFunction::constant(2.0),
                                    [](const AtomicMeasure&) { return 0.0; });
  for (double m : s.m_end) EXPECT_EQ(m, 0.0);
  const auto r = qv_report("qv", s, spec.significance);
  EXPECT_TRUE(r.pass);
}

TEST(Martingale, QvScalesQuadratically) {
  const auto spec = free_spec(200);
  const auto u = pair_u();
  const auto gen = [&](const CylinderFunction& v) {
    return martingale_samples(spec, v, [&](const AtomicMeasure& mu) { return generator(v, mu); });
  };
  const auto a = gen(u), b = gen(scaled(3.0, u));
  for (std::size_t i = 0; i < a.qv.size(); ++i) {
    EXPECT_NEAR(b.qv[i], 9.0 * a.qv[i], 1e-12 * (1.0 + std::abs(a.qv[i])));
    EXPECT_NEAR(b.m_end[i] * b.m_end[i], 9.0 * a.m_end[i] * a.m_end[i], 1e-10);
  }
}

TEST(Martingale, CutoffBelowTruncationIsValidityError) {
  auto spec = free_spec(100);
  MassLawSpec law;
  law.law = MassLaw::poisson_dirichlet(1.0);
  law.truncation.tail_threshold = 1e-2;
  spec.mass_law = law;
  const auto u = CylinderFunction::linear(MassCutoff(1e-4, 5e-5), TestFunction::cos_mode(kT2, {1, 0}));
  try {
    martingale_test(spec, u);
    FAIL() << "expected a validity error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validity);
  }
}

TEST(Martingale, Reproducible) {
  const auto spec = free_spec(200);
  const auto a = martingale_test(spec, pair_u());
  auto spec1 = spec;
  spec1.threads = 1;
  const auto b = martingale_test(spec1, pair_u());
  EXPECT_EQ(a.z_score, b.z_score);
  EXPECT_EQ(a.statistic, b.statistic);
}

TEST(ShadowMp, AgreesWithGenerator) {
  const auto spec = free_spec(1000);
  const auto r = shadow_mp_test(spec, MassCutoff(0.05, 0.02), TestFunction::cos_mode(kT2, {1, 1}));
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.diagnostics.at("generator_pass"), 1.0);
  EXPECT_LT(r.diagnostics.at("max_path_difference"), 1e-9);
  EXPECT_NEAR(r.z_score, r.diagnostics.at("generator_z"), 1e-6);
}

TEST(ShadowMp, ZeroCutoffVanishes) {
  const auto spec = free_spec(100);
  // Cutoff threshold above every mass: phi(m) = 0 on all atoms.
  const auto r = shadow_mp_test(spec, MassCutoff(0.5, 0.1), TestFunction::cos_mode(kT2, {1, 0}));
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.diagnostics.at("max_path_difference"), 0.0);
}

TEST(Rigidity, CorrectAlphaPassesWrongRejects) {
  const auto spec = free_spec(2000, 0.1, 4);
  const auto f = TestFunction::cos_mode(kT2, {1, 0});
  const auto good = rigidity_test(4, 4.0, spec, f);
  EXPECT_TRUE(good.ok()) << good.z_score;
  const auto bad = rigidity_test(4, 2.0, spec, f);
  EXPECT_TRUE(bad.expect_reject);
  EXPECT_TRUE(bad.ok());
  EXPECT_GT(std::abs(bad.z_score), 5.0);
}

TEST(Rigidity, ConstantFunctionIsZero) {
  const auto spec = free_spec(100, 0.1, 4);
  const auto r = rigidity_test(4, 2.0, spec, TestFunction::constant(kT2, 1.0));
  EXPECT_EQ(r.statistic, 0.0);
}

TEST(Rigidity, NonUniformMassesRejected) {
  auto spec = free_spec(100, 0.1, 4);
  spec.system.masses = MassSequence::from_explicit({0.4, 0.3, 0.2, 0.1});
  EXPECT_THROW(rigidity_test(4, 4.0, spec, TestFunction::cos_mode(kT2, {1, 0})), Error);
}

TEST(Richardson, TrapezoidIsSecondOrder) {
  auto spec = free_spec(300, 0.05);
  spec.system.dt = 4e-3;
  const auto r = richardson_check(spec, nonlinear_u());
  EXPECT_TRUE(r.pass) << r.statistic << " " << r.diagnostics.at("mean_d1");
}

TEST(Stationarity, FreeSystemPasses) {
  auto spec = free_spec(1000, 0.2);
  spec.observables = {pair_u(), nonlinear_u()};
  spec.checkpoints = {0.1, 0.2};
  const auto r = stationarity_test(spec);
  EXPECT_TRUE(r.pass) << r.z_score;
}

TEST(Stationarity, TimeZeroIsTrivial) {
  auto spec = free_spec(100, 0.1);
  spec.observables = {pair_u()};
  spec.checkpoints = {0.0};
  const auto r = stationarity_test(spec);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.statistic, 0.0);
}

TEST(Stationarity, AttractionRejects) {
  auto spec = free_spec(1000, 0.2);
  spec.system.faults.attraction = 200.0;
  spec.system.faults.attraction_center = {0.0, 0.0};
  spec.observables = {pair_u()};
  spec.checkpoints = {0.2};
  const auto r = stationarity_test(spec);
  EXPECT_FALSE(r.pass);
}

TEST(Stationarity, FixedLawNotApplicable) {
  auto spec = free_spec(100);
  spec.initial_law = InitialLaw::fixed;
  spec.system.initial_positions.assign(8, Point{0.5, 0.5});
  spec.observables = {pair_u()};
  try {
    stationarity_test(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_applicable);
  }
}

TEST(MassInvariance, FreeAndInteractingPass) {
  SystemConfig cfg;
  cfg.space = kT2;
  cfg.masses = MassSequence::from_explicit({0.5, 0.3, 0.2});
  cfg.dt = 1e-3;
  cfg.horizon = 0.05;
  std::vector<Trajectory> trs;
  std::vector<MassSequence> ms;
  auto rng = RngStream::for_task(1, stream_tag::paths, 0);
  trs.push_back(simulate(cfg, rng));
  ms.push_back(cfg.masses);
  cfg.interaction = Interaction{PairPotential::riesz(0.5), 0.5};
  cfg.drift_variant = DriftVariant::girsanov_derived;
  trs.push_back(simulate(cfg, rng));
  ms.push_back(cfg.masses);
  const auto r = mass_invariance_test(trs, ms);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.diagnostics.at("frames"), 102.0);
}

TEST(MassInvariance, CorruptedTrajectoryFails) {
  SystemConfig cfg;
  cfg.space = kT1;
  cfg.masses = MassSequence::from_explicit({0.5, 0.3, 0.2});
  cfg.dt = 1e-2;
  cfg.horizon = 0.05;
  auto rng = RngStream::for_task(1, stream_tag::paths, 0);
  std::vector<Trajectory> trs{simulate(cfg, rng)};
  std::vector<MassSequence> ms{MassSequence::from_explicit({0.6, 0.3, 0.1})};
  EXPECT_FALSE(mass_invariance_test(trs, ms).pass);
}

TEST(Collision, OneDimensionCollides) {
  EnsembleSpec spec;
  spec.system.space = kT1;
  MassLawSpec law;
  law.law = MassLaw::poisson_dirichlet(1.0);
  law.truncation.count = 16;
  spec.mass_law = law;
  spec.system.masses = MassSequence(std::vector<double>(16, 1.0 / 16), 0.0, MassLaw::uniform(16));
  spec.system.dt = 1e-5;
  spec.system.horizon = 0.1;
  spec.n_paths = 100;
  const auto r = collision_experiment(spec, 1e-4);
  EXPECT_TRUE(r.pass) << r.statistic;
}

TEST(Collision, SingleParticleNeverCollides) {
  EnsembleSpec spec;
  spec.system.space = kT2;
  spec.system.masses = MassSequence({1.0}, 0.0, MassLaw::uniform(1));
  spec.system.dt = 1e-3;
  spec.system.horizon = 0.1;
  spec.n_paths = 100;
  const auto r = collision_experiment(spec, 1e-4);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.diagnostics.at("events"), 0.0);
}

TEST(Varadhan, BoundHoldsAtListedTimes) {
  VaradhanSpec v;
  v.n_samples = 200000;
  const auto r = varadhan_check(v);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.diagnostics.at("monotone_in_t"), 1.0);
  // Wrapped-Gaussian oracle: <1_A1, H_t 1_A2> for the t = 0.01 entry.
  const double t = 0.01, r0 = 0.05;
  double exact = 0.0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    const double x = -r0 + 2.0 * r0 * (i + 0.5) / n;
    for (int k = -3; k <= 3; ++k) {
      const double s = std::sqrt(4.0 * t);
      const double a = (0.4 - r0 + k - x) / s, b = (0.4 + r0 + k - x) / s;
      exact += 0.5 * (std::erf(b) - std::erf(a)) * 2.0 * r0 / n;
    }
  }
  const double est = r.diagnostics.at("probability_t1");
  EXPECT_NEAR(est, exact, 0.05 * exact);
}

TEST(Varadhan, CoincidentPointsTrivial) {
  VaradhanSpec v;
  v.x2 = 0.0;
  v.n_samples = 1000;
  const auto r = varadhan_check(v);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.diagnostics.at("bound"), 0.0);
}

TEST(Girsanov, ZeroBetaMatchesReference) {
  EnsembleSpec spec;
  spec.system.space = BaseSpace::torus(3);
  spec.system.masses = MassSequence(std::vector<double>(4, 0.25), 0.0, MassLaw::uniform(4));
  spec.system.dt = 1e-3;
  spec.system.horizon = 0.05;
  spec.system.record_stride = 10;
  spec.n_paths = 200;
  spec.observables = {CylinderFunction::linear(MassCutoff(0.05, 0.02),
                                               TestFunction::cos_mode(BaseSpace::torus(3), {1, 0, 0}))};
  const auto r = girsanov_stationarity_test(Interaction{PairPotential::riesz(1.5), 0.0}, spec);
  EXPECT_TRUE(r.pass) << r.z_score;
}

TEST(Girsanov, MassOnlyObservableMatchesPi) {
  EnsembleSpec spec;
  const auto T3 = BaseSpace::torus(3);
  spec.system.space = T3;
  MassLawSpec law;
  law.law = MassLaw::poisson_dirichlet(1.0);
  law.truncation.count = 8;
  spec.mass_law = law;
  spec.system.masses = MassSequence(std::vector<double>(8, 0.125), 0.0, MassLaw::uniform(8));
  spec.system.dt = 1e-3;
  spec.system.horizon = 0.02;
  spec.system.record_stride = 10;
  spec.n_paths = 400;
  // Sum of squared-mass-weighted constants: sum_k m_k phi(m_k).
  spec.observables = {CylinderFunction::linear(MassCutoff(0.05, 0.02), TestFunction::constant(T3, 1.0))};
  ASSERT_TRUE(depends_on_masses_only(spec.observables[0]));
  const auto r = girsanov_stationarity_test(Interaction{PairPotential::riesz(1.5), 0.5}, spec);
  EXPECT_TRUE(r.pass) << r.z_score;
  EXPECT_EQ(r.diagnostics.at("mass_only_obs0"), 1.0);
}

TEST(Girsanov, NonIntegrableRejected) {
  EnsembleSpec spec = free_spec(100);
  spec.observables = {pair_u()};
  EXPECT_THROW(girsanov_stationarity_test(Interaction{PairPotential::riesz(2.5), 0.5}, spec), Error);
}
