#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "massive/ambient.hpp"
#include "massive/cylinder.hpp"
#include "massive/dynamics.hpp"
#include "massive/error.hpp"
#include "massive/measures.hpp"
#include "massive/parallel.hpp"
#include "massive/rng.hpp"
#include "massive/simplex.hpp"
#include "massive/stats.hpp"

namespace massive {

enum class InitialLaw { product_nu, fixed };

inline std::string to_string(InitialLaw l) { return l == InitialLaw::product_nu ? "product_nu" : "fixed"; }

/// Ensemble of independent paths of one system. With a mass law, every path
/// draws its own masses; otherwise all paths share `system.masses`.
struct EnsembleSpec {
  SystemConfig system;
  std::optional<MassLawSpec> mass_law;
  std::size_t n_paths = 1000;
  std::vector<CylinderFunction> observables;
  std::vector<double> checkpoints;
  double significance = 0.0027;  // two-sided level; 0.0027 is the 3 sigma convention
  InitialLaw initial_law = InitialLaw::product_nu;
  unsigned threads = 0;

  void validate() const {
    require(n_paths >= 100, ErrorKind::invalid_parameter, "an ensemble needs at least 100 paths");
    require(significance > 0.0 && significance < 1.0, ErrorKind::invalid_parameter,
            "significance must lie in (0,1)");
    for (double t : checkpoints)
      require(t >= 0.0 && t <= system.horizon + 1e-12, ErrorKind::invalid_parameter,
              "checkpoint outside the horizon");
    if (initial_law == InitialLaw::fixed)
      require(!system.initial_positions.empty(), ErrorKind::invalid_parameter,
              "fixed initial law needs initial positions");
    else
      require(system.initial_positions.empty(), ErrorKind::invalid_parameter,
              "product initial law samples positions; do not set initial positions");
    if (mass_law) mass_law->validate();
    if (!mass_law) {
      SystemConfig probe = system;
      probe.validate();
    }
  }
};

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double standard_error = 0.0;
  double z_score = 0.0;
  double threshold = 3.0;
  bool pass = false;
  bool one_sided = false;
  bool expect_reject = false;  // negative control: the test is required to reject
  std::map<std::string, double> diagnostics;
  std::vector<std::string> notes;

  /// Whether the outcome is the required one.
  bool ok() const { return expect_reject ? !pass : pass; }
};

/// Two-sided z threshold at level alpha, Bonferroni-corrected over m tests.
inline double z_threshold(double alpha, std::size_t m = 1) {
  return stats::normal_two_sided_quantile(alpha / static_cast<double>(std::max<std::size_t>(m, 1)));
}

namespace detail {

inline double safe_z(double mean, double se) {
  if (se > 0.0) return mean / se;
  return mean == 0.0 ? 0.0 : std::copysign(INFINITY, mean);
}

inline SystemConfig path_config(const EnsembleSpec& spec, std::size_t i) {
  SystemConfig cfg = spec.system;
  if (spec.mass_law) cfg.masses = sample_masses(*spec.mass_law, i);
  if (spec.initial_law == InitialLaw::product_nu) cfg.initial_positions.clear();
  return cfg;
}

inline RngStream path_stream(const EnsembleSpec& spec, std::size_t i) {
  return RngStream::for_task(spec.system.seed, stream_tag::paths, i);
}

inline AtomicMeasure frame_measure(const SystemConfig& cfg, std::span<const double> x) {
  const auto d = static_cast<std::size_t>(cfg.space.dim);
  std::vector<Point> pts(cfg.particles());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i].assign(x.begin() + i * d, x.begin() + (i + 1) * d);
  return em(cfg.masses, pts, cfg.space);
}

/// Atoms beyond the truncation carry at most the tail mass each; they must
/// fall below the cutoff of every observable.
inline void check_resolution(const SystemConfig& cfg, double threshold) {
  require(cfg.masses.tail_mass() <= threshold, ErrorKind::validity,
          "cutoff threshold " + std::to_string(threshold) + " below the truncation tail mass " +
              std::to_string(cfg.masses.tail_mass()));
}

/// Simulates one path, calling on_frame(step, time, h, x) at every grid time
/// (step 0 is the initial state, h the length of the step just taken).
template <class OnFrame>
void stream_path(const SystemConfig& cfg, RngStream& rng, OnFrame&& on_frame) {
  auto x = initial_state(cfg, rng);
  std::vector<double> drift;
  on_frame(std::size_t{0}, 0.0, 0.0, std::span<const double>(x));
  const std::size_t n = cfg.steps();
  for (std::size_t k = 1; k <= n; ++k) {
    const double t0 = static_cast<double>(k - 1) * cfg.dt;
    const double h = std::min(cfg.dt, cfg.horizon - t0);
    advance(cfg, x, h, rng, drift);
    on_frame(k, k == n ? cfg.horizon : t0 + h, h, std::span<const double>(x));
  }
}

inline std::size_t checkpoint_index(const SystemConfig& cfg, double t) {
  const auto k = static_cast<std::size_t>(std::llround(t / cfg.dt));
  return std::min(k, cfg.steps());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Martingale problems

struct MartingaleOptions {
  /// Multiplies the compensator; 1 is the correct generator. Other values
  /// are fault injections whose rejection measures the power of the test.
  double compensator_scale = 1.0;
  /// Number of equal windows of the orthogonality transform.
  std::size_t windows = 4;
};

/// Per-path quantities of M_t = u(mu_t) - u(mu_0) - c int_0^t A(mu_s) ds for
/// a compensator A (trapezoidal quadrature on the step grid). For each
/// dictionary statistic g, `transform[g]` holds sum_j g(mu_{t_j}) (M_{t_{j+1}} - M_{t_j})
/// over equal windows [t_j, t_{j+1}]; it has mean zero when M is a martingale.
struct MartingaleSamples {
  std::vector<double> m_end, qv;
  std::array<std::vector<double>, 4> transform;
  std::size_t windows = 1;
};

using Compensator = std::function<double(const AtomicMeasure&)>;

inline MartingaleSamples martingale_samples(const EnsembleSpec& spec, const CylinderFunction& u,
                                            const Compensator& compensator, const MartingaleOptions& opt = {}) {
  spec.validate();
  const std::size_t n = spec.n_paths;
  const std::size_t steps = spec.system.steps();
  const std::size_t windows = std::clamp<std::size_t>(opt.windows, 1, steps);
  MartingaleSamples out;
  out.windows = windows;
  out.m_end.resize(n);
  out.qv.resize(n);
  for (auto& d : out.transform) d.assign(n, 0.0);
  std::vector<char> boundary(steps + 1, 0);
  for (std::size_t j = 0; j <= windows; ++j) boundary[j * steps / windows] = 1;

  parallel_for(n, resolve_threads(spec.threads), [&](std::size_t i) {
    const SystemConfig cfg = detail::path_config(spec, i);
    if (u.size() > 0) detail::check_resolution(cfg, u.threshold());
    auto rng = detail::path_stream(spec, i);
    double u0 = 0.0, a_prev = 0.0, g_prev = 0.0, int_a = 0.0, int_g = 0.0, m_left = 0.0;
    std::array<double, 4> g_left{};
    detail::stream_path(cfg, rng, [&](std::size_t k, double, double h, std::span<const double> x) {
      const AtomicMeasure mu = detail::frame_measure(cfg, x);
      const double uk = eval(u, mu);
      const double ak = compensator(mu);
      const double gk = carre_du_champ(u, u, mu);
      if (k == 0) {
        u0 = uk;
      } else {
        int_a += 0.5 * h * (a_prev + ak);
        int_g += 0.5 * h * (g_prev + gk);
      }
      a_prev = ak;
      g_prev = gk;
      const double m = uk - u0 - opt.compensator_scale * int_a;
      if (boundary[k]) {
        if (k > 0)
          for (std::size_t g = 0; g < 4; ++g) out.transform[g][i] += g_left[g] * (m - m_left);
        m_left = m;
        g_left = {uk, ak, uk * uk, gk};
      }
      out.m_end[i] = m;
    });
    out.qv[i] = 2.0 * int_g;
  });
  return out;
}

/// Tests E[M_T] = 0 and the orthogonality of the martingale increments to the
/// dictionary g in {u, A, u^2, Gamma(u,u)}; reports the worst z-score.
inline TestReport martingale_report(const std::string& name, const MartingaleSamples& s, double alpha) {
  TestReport r;
  r.name = name;
  r.threshold = z_threshold(alpha);
  bool first = true;
  auto consider = [&](const std::string& label, std::span<const double> values) {
    const auto ms = stats::mean_se(values);
    const double z = detail::safe_z(ms.mean, ms.se);
    r.diagnostics["z_" + label] = z;
    r.diagnostics["mean_" + label] = ms.mean;
    if (first || std::abs(z) > std::abs(r.z_score)) {
      r.z_score = z;
      r.statistic = ms.mean;
      r.standard_error = ms.se;
      r.notes = {"worst statistic: " + label};
      first = false;
    }
  };
  consider("end", s.m_end);
  const std::array<const char*, 4> labels{"u", "compensator", "u_squared", "carre_du_champ"};
  for (std::size_t g = 0; g < 4; ++g) consider(std::string("orth_") + labels[g], s.transform[g]);
  r.diagnostics["n_paths"] = static_cast<double>(s.m_end.size());
  r.diagnostics["windows"] = static_cast<double>(s.windows);
  r.pass = std::abs(r.z_score) < r.threshold;
  return r;
}

/// Compares E[M_T^2] with E[int_0^T 2 Gamma(u,u)(mu_s) ds], the predictable
/// quadratic variation for the generator L with Gamma(f) = |grad f|^2.
inline TestReport qv_report(const std::string& name, const MartingaleSamples& s, double alpha) {
  TestReport r;
  r.name = name;
  r.threshold = z_threshold(alpha);
  const std::size_t n = s.m_end.size();
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = s.m_end[i] * s.m_end[i];
  const auto ma = stats::mean_se(a);
  const auto mb = stats::mean_se(s.qv);
  r.diagnostics["mean_m_squared"] = ma.mean;
  r.diagnostics["mean_qv"] = mb.mean;
  if (ma.mean == 0.0 && mb.mean == 0.0) {
    r.statistic = 1.0;
    r.standard_error = 0.0;
    r.pass = true;
    r.notes = {"both sides vanish"};
    return r;
  }
  const double ratio = ma.mean / mb.mean;
  std::vector<double> lin(n);
  for (std::size_t i = 0; i < n; ++i) lin[i] = (a[i] - ratio * s.qv[i]) / mb.mean;
  const auto ml = stats::mean_se(lin);
  r.statistic = ratio;
  r.standard_error = ml.se;
  r.z_score = detail::safe_z(ratio - 1.0, ml.se);
  r.diagnostics["tolerance"] = r.threshold * ml.se;
  r.pass = std::abs(r.z_score) < r.threshold;
  return r;
}

inline TestReport martingale_test(const EnsembleSpec& spec, const CylinderFunction& u,
                                  const MartingaleOptions& opt = {}) {
  auto s = martingale_samples(spec, u, [&](const AtomicMeasure& mu) { return generator(u, mu); }, opt);
  auto r = martingale_report("martingale", s, spec.significance);
  r.diagnostics["compensator_scale"] = opt.compensator_scale;
  return r;
}

inline TestReport qv_test(const EnsembleSpec& spec, const CylinderFunction& u, const MartingaleOptions& opt = {}) {
  auto s = martingale_samples(spec, u, [&](const AtomicMeasure& mu) { return generator(u, mu); }, opt);
  return qv_report("quadratic_variation", s, spec.significance);
}

struct MartingaleSuiteResult {
  TestReport martingale;
  TestReport qv;
};

/// Martingale and quadratic-variation tests from one set of paths.
inline MartingaleSuiteResult martingale_suite(const EnsembleSpec& spec, const CylinderFunction& u,
                                              const MartingaleOptions& opt = {}) {
  auto s = martingale_samples(spec, u, [&](const AtomicMeasure& mu) { return generator(u, mu); }, opt);
  MartingaleSuiteResult out{martingale_report("martingale", s, spec.significance),
                            qv_report("quadratic_variation", s, spec.significance)};
  out.martingale.diagnostics["compensator_scale"] = opt.compensator_scale;
  return out;
}

/// Shadow martingale problem for (phi (x) f)*, with the drift given by the
/// dual pairing. The generator-based test runs on the same paths and the
/// largest per-path difference between the two martingales is reported.
inline TestReport shadow_mp_test(const EnsembleSpec& spec, const MassCutoff& phi, const TestFunction& f,
                                 const MartingaleOptions& opt = {}) {
  const auto u = CylinderFunction::linear(phi, f);
  const auto shadow =
      martingale_samples(spec, u, [&](const AtomicMeasure& mu) { return dual_pairing(mu, phi, f); }, opt);
  const auto direct = martingale_samples(spec, u, [&](const AtomicMeasure& mu) { return generator(u, mu); }, opt);
  auto r = martingale_report("shadow_martingale", shadow, spec.significance);
  const auto d = martingale_report("martingale", direct, spec.significance);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < shadow.m_end.size(); ++i)
    max_diff = std::max(max_diff, std::abs(shadow.m_end[i] - direct.m_end[i]));
  r.diagnostics["generator_z"] = d.z_score;
  r.diagnostics["generator_statistic"] = d.statistic;
  r.diagnostics["generator_pass"] = d.pass ? 1.0 : 0.0;
  r.diagnostics["max_path_difference"] = max_diff;
  r.diagnostics["compensator_scale"] = opt.compensator_scale;
  return r;
}

/// KLR rigidity: for uniform(n) masses, rho_t f - rho_0 f - alpha int rho_s(L f) ds
/// is a martingale iff alpha = n. Since the generator of (phi (x) f)* with
/// phi(1/n) = 1 equals n rho(L f), this is the martingale test with the
/// compensator scaled by alpha / n.
inline TestReport rigidity_test(int n, double alpha, const EnsembleSpec& spec, const TestFunction& f) {
  require(n >= 1, ErrorKind::invalid_parameter, "n must be >= 1");
  EnsembleSpec s = spec;
  if (s.mass_law) {
    require(s.mass_law->law.kind == MassLawKind::uniform && s.mass_law->law.n == n, ErrorKind::invalid_parameter,
            "rigidity needs uniform(n) masses");
  } else {
    const auto& m = s.system.masses;
    bool uniform = m.size() == static_cast<std::size_t>(n);
    for (std::size_t i = 0; uniform && i < m.size(); ++i) uniform = m[i] == 1.0 / n;
    require(uniform, ErrorKind::invalid_parameter, "rigidity needs uniform(n) masses");
  }
  const double inv = 1.0 / n;
  const MassCutoff phi(0.5 * inv, 0.25 * inv);
  MartingaleOptions opt;
  opt.compensator_scale = alpha / n;
  const auto u = CylinderFunction::linear(phi, f);
  auto samples =
      martingale_samples(s, u, [&](const AtomicMeasure& mu) { return generator(u, mu); }, opt);
  auto r = martingale_report("rigidity", samples, s.significance);
  r.diagnostics["n"] = n;
  r.diagnostics["alpha"] = alpha;
  r.expect_reject = alpha != n;
  return r;
}

/// Richardson check of the trapezoidal compensator: M_T is computed from one
/// path sampled on the grid dt/4 and read off at dt, dt/2 and dt/4. With
/// D1 = M(dt) - M(dt/2) and D2 = M(dt/2) - M(dt/4), a second-order rule gives
/// E[D2] = E[D1] / 4 up to higher order.
inline TestReport richardson_check(const EnsembleSpec& spec, const CylinderFunction& u) {
  EnsembleSpec fine = spec;
  fine.system.dt = spec.system.dt / 4.0;
  fine.validate();
  const std::size_t n = spec.n_paths;
  std::vector<double> d1(n), d2(n), comb(n);
  parallel_for(n, resolve_threads(spec.threads), [&](std::size_t i) {
    const SystemConfig cfg = detail::path_config(fine, i);
    auto rng = detail::path_stream(fine, i);
    std::vector<double> a;
    double u0 = 0.0, uT = 0.0;
    double hstep = cfg.dt;
    detail::stream_path(cfg, rng, [&](std::size_t k, double, double, std::span<const double> x) {
      const AtomicMeasure mu = detail::frame_measure(cfg, x);
      const double uk = eval(u, mu);
      if (k == 0) u0 = uk;
      uT = uk;
      a.push_back(generator(u, mu));
    });
    auto trap = [&](std::size_t stride) {
      double s = 0.0;
      for (std::size_t k = stride; k < a.size(); k += stride) s += 0.5 * hstep * stride * (a[k - stride] + a[k]);
      return s;
    };
    const double m1 = uT - u0 - trap(4), m2 = uT - u0 - trap(2), m4 = uT - u0 - trap(1);
    d1[i] = m1 - m2;
    d2[i] = m2 - m4;
    comb[i] = d2[i] - 0.25 * d1[i];
  });
  TestReport r;
  r.name = "richardson";
  r.threshold = z_threshold(spec.significance);
  const auto m1 = stats::mean_se(d1), m2 = stats::mean_se(d2), mc = stats::mean_se(comb);
  r.statistic = mc.mean;
  r.standard_error = mc.se;
  r.z_score = detail::safe_z(mc.mean, mc.se);
  r.diagnostics["mean_d1"] = m1.mean;
  r.diagnostics["mean_d2"] = m2.mean;
  r.diagnostics["se_d1"] = m1.se;
  r.diagnostics["se_d2"] = m2.se;
  // The cubic remainder is allowed as an absolute slack of |E D1| / 10.
  r.pass = std::abs(mc.mean) < r.threshold * mc.se + 0.1 * std::abs(m1.mean);
  return r;
}

// ---------------------------------------------------------------------------
// Stationarity and mass invariance

/// Paired comparison of observable means at time 0 and at each checkpoint,
/// Bonferroni-corrected over observables x checkpoints.
inline TestReport stationarity_test(const EnsembleSpec& spec) {
  spec.validate();
  require(spec.initial_law == InitialLaw::product_nu, ErrorKind::not_applicable,
          "stationarity requires the product initial law");
  require(!spec.observables.empty(), ErrorKind::invalid_parameter, "no observables");
  std::vector<double> cps = spec.checkpoints;
  if (cps.empty()) cps.push_back(spec.system.horizon);
  const std::size_t n = spec.n_paths, no = spec.observables.size(), nc = cps.size();
  std::vector<std::size_t> idx(nc);
  for (std::size_t c = 0; c < nc; ++c) idx[c] = detail::checkpoint_index(spec.system, cps[c]);
  // diff[(o * nc + c) * n + i] = u_o(mu_{t_c}) - u_o(mu_0) on path i.
  std::vector<double> diff(no * nc * n);
  parallel_for(n, resolve_threads(spec.threads), [&](std::size_t i) {
    const SystemConfig cfg = detail::path_config(spec, i);
    for (const auto& u : spec.observables)
      if (u.size() > 0) detail::check_resolution(cfg, u.threshold());
    auto rng = detail::path_stream(spec, i);
    std::vector<double> u0(no);
    detail::stream_path(cfg, rng, [&](std::size_t k, double, double, std::span<const double> x) {
      const bool start = k == 0;
      bool wanted = start;
      for (auto j : idx) wanted = wanted || j == k;
      if (!wanted) return;
      const AtomicMeasure mu = detail::frame_measure(cfg, x);
      for (std::size_t o = 0; o < no; ++o) {
        const double v = eval(spec.observables[o], mu);
        if (start) u0[o] = v;
        for (std::size_t c = 0; c < nc; ++c)
          if (idx[c] == k) diff[(o * nc + c) * n + i] = v - u0[o];
      }
    });
  });
  TestReport r;
  r.name = "stationarity";
  r.threshold = z_threshold(spec.significance, no * nc);
  bool first = true;
  for (std::size_t o = 0; o < no; ++o)
    for (std::size_t c = 0; c < nc; ++c) {
      const auto ms = stats::mean_se(std::span<const double>(diff).subspan((o * nc + c) * n, n));
      const double z = detail::safe_z(ms.mean, ms.se);
      r.diagnostics["z_obs" + std::to_string(o) + "_t" + std::to_string(c)] = z;
      if (first || std::abs(z) > std::abs(r.z_score)) {
        r.z_score = z;
        r.statistic = ms.mean;
        r.standard_error = ms.se;
        first = false;
      }
    }
  r.diagnostics["tests"] = static_cast<double>(no * nc);
  r.pass = std::abs(r.z_score) < r.threshold;
  return r;
}

/// Exact check that every recorded frame of every trajectory carries the
/// expected sorted mass vector, read back through the measure representation.
inline TestReport mass_invariance_test(std::span<const Trajectory> trajectories,
                                       std::span<const MassSequence> expected) {
  require(trajectories.size() == expected.size(), ErrorKind::dimension_mismatch,
          "one expected mass sequence per trajectory");
  TestReport r;
  r.name = "mass_invariance";
  r.threshold = 0.0;
  std::size_t bad = 0, frames = 0;
  for (std::size_t p = 0; p < trajectories.size(); ++p) {
    const auto& tr = trajectories[p];
    std::vector<double> want;
    for (double m : expected[p].masses())
      if (m > 0.0) want.push_back(m);
    std::sort(want.begin(), want.end(), std::greater<>());
    bool path_ok = true;
    for (std::size_t k = 0; k < tr.frames() && path_ok; ++k) {
      ++frames;
      std::vector<Point> pts(tr.particles());
      for (std::size_t i = 0; i < pts.size(); ++i) {
        auto q = tr.position(k, i);
        pts[i].assign(q.begin(), q.end());
      }
      const auto back = em_inverse(em(tr.masses, pts, tr.space));
      const auto got = back.masses.masses();
      path_ok = std::vector<double>(got.begin(), got.end()) == want;
    }
    bad += path_ok ? 0 : 1;
  }
  r.statistic = static_cast<double>(bad);
  r.diagnostics["paths"] = static_cast<double>(trajectories.size());
  r.diagnostics["frames"] = static_cast<double>(frames);
  r.pass = bad == 0;
  return r;
}

// ---------------------------------------------------------------------------
// Collisions

/// Fraction of paths with a pair closer than `delta` before the horizon.
/// Dimension one must collide (fraction >= 0.99); dimension two and above
/// must show no event.
inline TestReport collision_experiment(const EnsembleSpec& spec, double delta) {
  spec.validate();
  const std::size_t n = spec.n_paths;
  std::vector<double> hit(n), when(n);
  parallel_for(n, resolve_threads(spec.threads), [&](std::size_t i) {
    const SystemConfig cfg = detail::path_config(spec, i);
    auto rng = detail::path_stream(spec, i);
    const double t = cfg.particles() < 2 ? INFINITY : simulate_collision_time(cfg, rng, delta);
    when[i] = t;
    hit[i] = t <= cfg.horizon ? 1.0 : 0.0;
  });
  TestReport r;
  r.name = "collision_d" + std::to_string(spec.system.space.dim);
  r.one_sided = true;
  const auto ms = stats::mean_se(hit);
  r.statistic = ms.mean;
  r.standard_error = ms.se;
  double events = 0.0, tsum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (hit[i] > 0.0) {
      events += 1.0;
      tsum += when[i];
    }
  r.diagnostics["events"] = events;
  r.diagnostics["delta"] = delta;
  r.diagnostics["dt"] = spec.system.dt;
  if (events > 0) r.diagnostics["mean_collision_time"] = tsum / events;
  if (spec.system.space.dim == 1) {
    r.threshold = 0.99;
    r.pass = ms.mean >= 0.99;
  } else {
    r.threshold = 0.0;
    r.pass = events == 0.0;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Varadhan bound

struct VaradhanSpec {
  double x1 = 0.0, x2 = 0.4, radius = 0.05;
  std::vector<double> times{0.02, 0.01, 0.005};
  std::size_t n_samples = 1000000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

/// Single unit-mass particle on the circle. For each t, p(t) = <1_A1, H_t 1_A2>
/// with A_i the balls of radius r around x_i is estimated from starts
/// stratified uniformly over A1; the check is -2 t log p(t) >= (d - 2r)^2
/// up to a margin of 3 standard errors propagated through the logarithm.
inline TestReport varadhan_check(const VaradhanSpec& spec) {
  require(spec.radius > 0.0 && spec.radius < 0.25, ErrorKind::invalid_parameter, "radius must lie in (0, 1/4)");
  require(spec.n_samples >= 100, ErrorKind::invalid_parameter, "too few samples");
  const BaseSpace space = BaseSpace::torus(1);
  const double d = distance(space, std::array<double, 1>{spec.x1}, std::array<double, 1>{spec.x2});
  const double bound = std::pow(std::max(0.0, d - 2.0 * spec.radius), 2);
  const double len = 2.0 * spec.radius;
  TestReport r;
  r.name = "varadhan";
  r.one_sided = true;
  r.threshold = bound;
  r.pass = true;
  double worst_slack = INFINITY;
  std::vector<double> values;
  for (std::size_t ti = 0; ti < spec.times.size(); ++ti) {
    const double t = spec.times[ti];
    require(t > 0.0, ErrorKind::invalid_parameter, "times must be positive");
    std::vector<double> ind(spec.n_samples);
    parallel_for(spec.n_samples, resolve_threads(spec.threads), [&](std::size_t i) {
      auto rng = RngStream::for_task(spec.seed, stream_tag::paths, ti * spec.n_samples + i);
      const double u = (static_cast<double>(i) + rng.uniform()) / static_cast<double>(spec.n_samples);
      std::array<double, 1> x{detail::wrap_unit(spec.x1 - spec.radius + len * u)};
      step_in_place(space, x, t, 1.0, rng);
      ind[i] = distance(space, x, std::array<double, 1>{spec.x2}) < spec.radius ? 1.0 : 0.0;
    });
    const auto ms = stats::mean_se(ind);
    const std::string tag = "t" + std::to_string(ti);
    double value, margin;
    if (ms.mean > 0.0) {
      const double p = len * ms.mean;
      value = -2.0 * t * std::log(p);
      margin = 3.0 * 2.0 * t * ms.se / ms.mean;
    } else {
      // No hit: p <= 3 / n (rule of three) gives a lower bound on the value.
      value = -2.0 * t * std::log(len * 3.0 / static_cast<double>(spec.n_samples));
      margin = 0.0;
      r.notes.push_back("no hits at t = " + std::to_string(t) + "; margin widened to the rule-of-three bound");
    }
    values.push_back(value);
    r.diagnostics["time_" + tag] = t;
    r.diagnostics["probability_" + tag] = len * ms.mean;
    r.diagnostics["value_" + tag] = value;
    r.diagnostics["margin_" + tag] = margin;
    const double slack = value - bound + margin;
    if (slack < worst_slack) {
      worst_slack = slack;
      r.statistic = value;
      r.standard_error = margin / 3.0;
    }
    if (slack < 0.0) r.pass = false;
  }
  r.z_score = r.standard_error > 0.0 ? (r.statistic - bound) / r.standard_error : INFINITY;
  // Diagnostic only: the value should decrease as t decreases.
  std::vector<std::size_t> order(spec.times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return spec.times[a] < spec.times[b]; });
  bool monotone = true;
  for (std::size_t i = 1; i < order.size(); ++i)
    monotone = monotone && values[order[i]] + 3.0 * r.diagnostics["margin_t" + std::to_string(order[i])] >=
                               values[order[i - 1]];
  r.diagnostics["monotone_in_t"] = monotone ? 1.0 : 0.0;
  r.diagnostics["bound"] = bound;
  return r;
}

// ---------------------------------------------------------------------------
// Girsanov stationarity

struct GirsanovOptions {
  double burn_in_fraction = 0.5;
  std::size_t reference_samples = 32;  // weighted position samples per mass draw
};

/// True when every test function of u is constant, so u(mu) is a function
/// of the atom masses alone.
inline bool depends_on_masses_only(const CylinderFunction& u) {
  for (const auto& p : u.pairs())
    for (const auto& [key, c] : p.f.terms()) {
      (void)c;
      for (int k : key)
        if (k != 0) return false;
    }
  return true;
}

/// The girsanov_derived dynamics leaves Q^w = w Q_pi / Q_pi(w) invariant,
/// w = exp(-beta W). For each path, the time average of every observable
/// over the recorded frames after burn-in is paired with the self-normalized
/// importance-sampling estimate of E_{Q^w}[u | masses] for the same masses;
/// the paired differences are z-tested (Bonferroni over observables).
/// Observables that depend on masses only are compared instead with an
/// independent Monte-Carlo estimate of their pi-expectation.
inline TestReport girsanov_stationarity_test(const Interaction& inter, const EnsembleSpec& spec,
                                             const GirsanovOptions& opt = {}) {
  EnsembleSpec s = spec;
  s.system.interaction = inter;
  s.system.drift_variant = DriftVariant::girsanov_derived;
  s.validate();
  require(s.initial_law == InitialLaw::product_nu, ErrorKind::not_applicable,
          "Girsanov stationarity starts from the product law");
  require(s.system.space.kind == SpaceKind::torus, ErrorKind::representation_mismatch, "torus only");
  require(inter.potential.integrable_in(s.system.space.dim), ErrorKind::invalid_parameter,
          "interaction is not integrable in this dimension");
  require(!s.observables.empty(), ErrorKind::invalid_parameter, "no observables");
  require(opt.burn_in_fraction >= 0.0 && opt.burn_in_fraction < 1.0, ErrorKind::invalid_parameter,
          "burn-in fraction must lie in [0,1)");
  const std::size_t n = s.n_paths, no = s.observables.size();
  const std::size_t K = std::max<std::size_t>(opt.reference_samples, 2);
  const std::size_t first = detail::checkpoint_index(s.system, opt.burn_in_fraction * s.system.horizon);
  const std::size_t stride = static_cast<std::size_t>(s.system.record_stride);

  std::vector<double> dyn(no * n), ref(no * n), mass_only(no * n), rejected(n, 0.0);
  parallel_for(n, resolve_threads(s.threads), [&](std::size_t i) {
    const SystemConfig cfg = detail::path_config(s, i);
    for (const auto& u : s.observables)
      if (u.size() > 0) detail::check_resolution(cfg, u.threshold());
    // Dynamics side.
    auto rng = detail::path_stream(s, i);
    std::vector<double> acc(no, 0.0);
    std::size_t frames = 0;
    detail::stream_path(cfg, rng, [&](std::size_t k, double, double, std::span<const double> x) {
      if (k < first || (k - first) % stride != 0) return;
      const AtomicMeasure mu = detail::frame_measure(cfg, x);
      for (std::size_t o = 0; o < no; ++o) acc[o] += eval(s.observables[o], mu);
      ++frames;
    });
    for (std::size_t o = 0; o < no; ++o) dyn[o * n + i] = acc[o] / static_cast<double>(frames);
    // Reweighted reference side, same masses.
    auto rref = RngStream::for_task(s.system.seed, stream_tag::reweighting, i);
    SystemConfig probe = cfg;
    std::vector<double> wsum_u(no, 0.0);
    double wsum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto x = initial_state(probe, rref);
      AtomicMeasure mu;
      double W = 0.0;
      try {
        mu = detail::frame_measure(cfg, x);
        W = interaction_energy(inter.potential, mu);
      } catch (const Error&) {
        rejected[i] += 1.0;
        continue;
      }
      const double w = std::exp(-inter.beta * W);
      wsum += w;
      for (std::size_t o = 0; o < no; ++o) wsum_u[o] += w * eval(s.observables[o], mu);
    }
    for (std::size_t o = 0; o < no; ++o) ref[o * n + i] = wsum > 0.0 ? wsum_u[o] / wsum : 0.0;
    // Independent pure-mass reference draw.
    if (s.mass_law) {
      MassLawSpec other = *s.mass_law;
      other.seed = detail::mix64(other.seed ^ 0x5bd1e995u);
      SystemConfig c2 = cfg;
      c2.masses = sample_masses(other, i);
      auto r2 = RngStream::for_task(s.system.seed, stream_tag::oracle, i);
      const AtomicMeasure mu = detail::frame_measure(c2, initial_state(c2, r2));
      for (std::size_t o = 0; o < no; ++o) mass_only[o * n + i] = eval(s.observables[o], mu);
    }
  });

  TestReport r;
  r.name = "girsanov_stationarity";
  r.threshold = z_threshold(s.significance, no);
  bool first_stat = true;
  std::vector<double> diff(n);
  for (std::size_t o = 0; o < no; ++o) {
    const std::string tag = "obs" + std::to_string(o);
    for (std::size_t i = 0; i < n; ++i) diff[i] = dyn[o * n + i] - ref[o * n + i];
    double z, mean, se;
    if (depends_on_masses_only(s.observables[o]) && s.mass_law) {
      // The observable sees masses only; compare with independent mass draws.
      const auto a = stats::mean_se(std::span<const double>(dyn).subspan(o * n, n));
      const auto b = stats::mean_se(std::span<const double>(mass_only).subspan(o * n, n));
      mean = a.mean - b.mean;
      se = std::hypot(a.se, b.se);
      z = detail::safe_z(mean, se);
      r.diagnostics["mass_only_" + tag] = 1.0;
      r.diagnostics["pi_expectation_" + tag] = b.mean;
    } else {
      const auto ms = stats::mean_se(diff);
      mean = ms.mean;
      se = ms.se;
      z = detail::safe_z(mean, se);
    }
    r.diagnostics["z_" + tag] = z;
    r.diagnostics["dynamics_mean_" + tag] = stats::mean_se(std::span<const double>(dyn).subspan(o * n, n)).mean;
    r.diagnostics["reweighted_mean_" + tag] = stats::mean_se(std::span<const double>(ref).subspan(o * n, n)).mean;
    if (first_stat || std::abs(z) > std::abs(r.z_score)) {
      r.z_score = z;
      r.statistic = mean;
      r.standard_error = se;
      first_stat = false;
    }
  }
  double rej = 0.0;
  for (double v : rejected) rej += v;
  r.diagnostics["rejected_reference_samples"] = rej;
  r.diagnostics["burn_in_fraction"] = opt.burn_in_fraction;
  r.pass = std::abs(r.z_score) < r.threshold;
  return r;
}

}  // namespace massive
