#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "massive/verify.hpp"

namespace massive::suites {

/// Free system on torus(2) with n equal masses, started from the product law.
inline EnsembleSpec free_torus2(std::size_t paths, int n = 8, double dt = 1e-3, double horizon = 0.1,
                                std::uint64_t seed = 1) {
  EnsembleSpec spec;
  spec.system.space = BaseSpace::torus(2);
  spec.system.masses = MassSequence(std::vector<double>(static_cast<std::size_t>(n), 1.0 / n), 0.0,
                                    MassLaw::uniform(n));
  spec.system.dt = dt;
  spec.system.horizon = horizon;
  spec.system.seed = seed;
  spec.n_paths = paths;
  return spec;
}

/// Five cylinder functions on torus(2): two linear ones and three with a
/// nonlinear outer function. The cutoff threshold 0.05 resolves masses 1/8.
/// Only unit frequencies are used: at speed 8 a mode k relaxes at rate
/// 32 pi^2 |k|^2, and the trapezoidal compensator needs rate * dt well below 1.
inline std::vector<CylinderFunction> standard_observables() {
  const BaseSpace s = BaseSpace::torus(2);
  const MassCutoff phi(0.05, 0.02);
  TestFunction mixed(s);
  mixed.add_term({0, 1}, {0.0, 1.0});
  mixed.add_term({1, 0}, {0.5, 0.0});
  const auto c10 = TestFunction::cos_mode(s, {1, 0});
  const auto s10 = TestFunction::sin_mode(s, {1, 0});
  const auto c01 = TestFunction::cos_mode(s, {0, 1});
  const auto s01 = TestFunction::sin_mode(s, {0, 1});
  return {
      CylinderFunction::linear(phi, c10),
      CylinderFunction::linear(MassCutoff(0.05, 0.02, {1.0, 2.0}), mixed),
      CylinderFunction(Outer::polynomial({{1.0, {2, 0}}, {0.5, {1, 1}}}), {{phi, c10}, {phi, s01}}),
      CylinderFunction(Outer::apply(OuterOp::exp, Outer::variable(0)), {{phi, s10}}),
      CylinderFunction(Outer::apply(OuterOp::sin, Outer::variable(0)) * Outer::variable(1), {{phi, c01}, {phi, s10}}),
  };
}

struct Options {
  std::size_t paths = 2000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::optional<EnsembleSpec> ensemble;  // replaces the built-in free system
};

inline const std::vector<std::string>& names() {
  static const std::vector<std::string> n{"free-core", "negative-controls", "shadow",   "richardson",
                                          "collision", "varadhan",          "girsanov", "all"};
  return n;
}

inline EnsembleSpec base_ensemble(const Options& opt) {
  EnsembleSpec spec = opt.ensemble ? *opt.ensemble : free_torus2(opt.paths, 8, 1e-3, 0.1, opt.seed);
  if (!opt.ensemble) spec.n_paths = opt.paths;
  spec.threads = opt.threads;
  return spec;
}

/// Exact mass invariance on a few free and interacting paths of `spec`.
inline TestReport mass_invariance(const EnsembleSpec& spec, std::size_t per_kind = 20) {
  std::vector<Trajectory> trs;
  std::vector<MassSequence> expected;
  for (int interacting = 0; interacting < 2; ++interacting)
    for (std::size_t i = 0; i < per_kind; ++i) {
      SystemConfig cfg = detail::path_config(spec, i);
      if (interacting) {
        cfg.interaction = Interaction{PairPotential::riesz(0.5), 0.5};
        cfg.drift_variant = DriftVariant::girsanov_derived;
      }
      auto rng = RngStream::for_task(spec.system.seed, stream_tag::paths, i + interacting * per_kind);
      trs.push_back(simulate(cfg, rng));
      expected.push_back(cfg.masses);
    }
  return mass_invariance_test(trs, expected);
}

inline std::vector<TestReport> free_core(const Options& opt) {
  EnsembleSpec spec = base_ensemble(opt);
  const auto obs = spec.observables.empty() ? standard_observables() : spec.observables;
  std::vector<TestReport> out;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    auto res = martingale_suite(spec, obs[i]);
    res.martingale.name += "[u" + std::to_string(i) + "]";
    res.qv.name += "[u" + std::to_string(i) + "]";
    out.push_back(res.martingale);
    out.push_back(res.qv);
  }
  EnsembleSpec st = spec;
  st.system.horizon = std::max(spec.system.horizon, 0.2);
  st.observables = obs;
  st.checkpoints = {st.system.horizon};
  out.push_back(stationarity_test(st));
  out.push_back(mass_invariance(spec));
  return out;
}

inline std::vector<TestReport> negative_controls(const Options& opt) {
  const EnsembleSpec spec = base_ensemble(opt);
  std::vector<TestReport> out;
  MartingaleOptions fault;
  fault.compensator_scale = 1.5;
  auto r = martingale_test(spec, standard_observables()[0], fault);
  r.name = "martingale_fault_x1.5";
  r.expect_reject = true;
  out.push_back(r);

  EnsembleSpec four = free_torus2(spec.n_paths, 4, spec.system.dt, spec.system.horizon, spec.system.seed);
  four.threads = spec.threads;
  const auto f = TestFunction::cos_mode(BaseSpace::torus(2), {1, 0});
  out.push_back(rigidity_test(4, 4.0, four, f));
  out.back().name = "rigidity_alpha4";
  out.push_back(rigidity_test(4, 2.0, four, f));
  out.back().name = "rigidity_alpha2";

  EnsembleSpec pulled = spec;
  pulled.system.horizon = std::max(spec.system.horizon, 0.2);
  pulled.system.faults.attraction = 200.0;
  pulled.system.faults.attraction_center = {0.0, 0.0};
  pulled.observables = {standard_observables()[0]};
  pulled.checkpoints = {pulled.system.horizon};
  auto s = stationarity_test(pulled);
  s.name = "stationarity_attraction";
  s.expect_reject = true;
  out.push_back(s);
  return out;
}

inline std::vector<TestReport> shadow(const Options& opt) {
  const EnsembleSpec spec = base_ensemble(opt);
  return {shadow_mp_test(spec, MassCutoff(0.05, 0.02), TestFunction::sin_mode(BaseSpace::torus(2), {0, 1}))};
}

inline std::vector<TestReport> richardson(const Options& opt) {
  EnsembleSpec spec = base_ensemble(opt);
  spec.system.dt = 4e-3;
  spec.system.horizon = 0.05;
  return {richardson_check(spec, standard_observables()[2])};
}

/// Collision dichotomy: N = 16 Poisson-Dirichlet(1) masses, T = 0.1,
/// delta = 1e-4, dt = 1e-5, in dimensions one and two.
inline EnsembleSpec collision_spec(int dim, std::size_t paths, std::uint64_t seed, unsigned threads) {
  EnsembleSpec spec;
  spec.system.space = BaseSpace::torus(dim);
  MassLawSpec law;
  law.law = MassLaw::poisson_dirichlet(1.0);
  law.truncation.count = 16;
  law.seed = seed;
  spec.mass_law = law;
  spec.system.masses = sample_masses(law, 0);
  spec.system.dt = 1e-5;
  spec.system.horizon = 0.1;
  spec.system.seed = seed;
  spec.n_paths = paths;
  spec.threads = threads;
  return spec;
}

inline std::vector<TestReport> collision(const Options& opt) {
  const std::size_t paths = std::max<std::size_t>(100, opt.paths / 10);
  return {collision_experiment(collision_spec(1, paths, opt.seed, opt.threads), 1e-4),
          collision_experiment(collision_spec(2, paths, opt.seed, opt.threads), 1e-4)};
}

inline std::vector<TestReport> varadhan(const Options& opt) {
  VaradhanSpec v;
  v.seed = opt.seed;
  v.threads = opt.threads;
  v.n_samples = std::max<std::size_t>(10000, opt.paths * 100);
  return {varadhan_check(v)};
}

/// Riesz p = 1.5 on torus(3), beta = 0.5, eight Poisson-Dirichlet masses.
inline EnsembleSpec girsanov_spec(std::size_t paths, std::uint64_t seed, unsigned threads) {
  const BaseSpace s = BaseSpace::torus(3);
  EnsembleSpec spec;
  spec.system.space = s;
  MassLawSpec law;
  law.law = MassLaw::poisson_dirichlet(1.0);
  law.truncation.count = 8;
  law.seed = seed;
  spec.mass_law = law;
  spec.system.masses = sample_masses(law, 0);
  spec.system.dt = 1e-3;
  spec.system.horizon = 0.1;
  spec.system.record_stride = 10;
  spec.system.seed = seed;
  spec.n_paths = paths;
  spec.threads = threads;
  const MassCutoff phi(0.02, 0.01);
  const auto cx = TestFunction::cos_mode(s, {1, 0, 0}), cy = TestFunction::cos_mode(s, {0, 1, 0});
  spec.observables = {CylinderFunction(Outer::polynomial({{1.0, {2, 0}}, {1.0, {0, 2}}}), {{phi, cx}, {phi, cy}}),
                      CylinderFunction::linear(phi, cx),
                      CylinderFunction::linear(phi, TestFunction::constant(s, 1.0))};
  return spec;
}

inline const Interaction& girsanov_interaction() {
  static const Interaction i{PairPotential::riesz(1.5), 0.5};
  return i;
}

inline std::vector<TestReport> girsanov(const Options& opt) {
  return {girsanov_stationarity_test(girsanov_interaction(), girsanov_spec(opt.paths, opt.seed, opt.threads))};
}

/// Runs a named suite; throws invalid_parameter for an unknown name.
inline std::vector<TestReport> run(const std::string& name, const Options& opt) {
  if (name == "free-core") return free_core(opt);
  if (name == "negative-controls") return negative_controls(opt);
  if (name == "shadow") return shadow(opt);
  if (name == "richardson") return richardson(opt);
  if (name == "collision") return collision(opt);
  if (name == "varadhan") return varadhan(opt);
  if (name == "girsanov") return girsanov(opt);
  if (name == "all") {
    std::vector<TestReport> out;
    for (const auto& n : names())
      if (n != "all") {
        auto part = run(n, opt);
        out.insert(out.end(), part.begin(), part.end());
      }
    return out;
  }
  throw Error(ErrorKind::invalid_parameter, "unknown suite '" + name + "'");
}

}  // namespace massive::suites
