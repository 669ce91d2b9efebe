#pragma once

// Mass sequences in the ordered infinite simplex: Poisson-Dirichlet
// stick-breaking, symmetric Dirichlet and uniform laws, the tau_p moment
// and the t* summability threshold of a rate sequence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "massive/error.hpp"
#include "massive/parallel.hpp"
#include "massive/rng.hpp"
#include "massive/stats.hpp"

namespace massive {

enum class MassLawKind { poisson_dirichlet, dirichlet_symmetric, uniform, explicit_masses };

inline std::string to_string(MassLawKind k) {
  switch (k) {
    case MassLawKind::poisson_dirichlet: return "poisson_dirichlet";
    case MassLawKind::dirichlet_symmetric: return "dirichlet_symmetric";
    case MassLawKind::uniform: return "uniform";
    case MassLawKind::explicit_masses: return "explicit";
  }
  return "unknown";
}

struct MassLaw {
  MassLawKind kind = MassLawKind::uniform;
  double beta = 1.0;  // poisson_dirichlet
  int n = 1;          // dirichlet_symmetric, uniform

  static MassLaw poisson_dirichlet(double beta) { return {MassLawKind::poisson_dirichlet, beta, 0}; }
  static MassLaw dirichlet_symmetric(int n) { return {MassLawKind::dirichlet_symmetric, 0.0, n}; }
  static MassLaw uniform(int n) { return {MassLawKind::uniform, 0.0, n}; }
  static MassLaw explicit_masses() { return {MassLawKind::explicit_masses, 0.0, 0}; }

  bool operator==(const MassLaw&) const = default;
};

/// Where an infinite stick-breaking sequence is cut. With `count` set the
/// first count-1 sticks are kept and the last atom takes the remaining
/// stick, so the sequence sums to one exactly; otherwise breaking stops once
/// the remaining stick is below `tail_threshold` and that remainder is
/// carried as tail mass.
struct Truncation {
  std::optional<int> count;
  double tail_threshold = 1e-6;

  bool operator==(const Truncation&) const = default;
};

struct MassLawSpec {
  MassLaw law;
  Truncation truncation;
  std::uint64_t seed = 0;
  std::vector<double> explicit_masses;  // law == explicit_masses only

  void validate() const {
    switch (law.kind) {
      case MassLawKind::poisson_dirichlet:
        require(law.beta > 0.0 && std::isfinite(law.beta), ErrorKind::invalid_parameter,
                "Poisson-Dirichlet parameter beta must be positive");
        break;
      case MassLawKind::dirichlet_symmetric:
      case MassLawKind::uniform:
        require(law.n >= 1, ErrorKind::invalid_parameter, "number of atoms n must be >= 1");
        break;
      case MassLawKind::explicit_masses:
        require(!explicit_masses.empty(), ErrorKind::invalid_parameter,
                "explicit law needs at least one mass");
        break;
    }
    if (truncation.count) {
      require(*truncation.count >= 1, ErrorKind::invalid_parameter, "truncation count must be >= 1");
    } else {
      require(truncation.tail_threshold > 0.0 && truncation.tail_threshold < 1.0,
              ErrorKind::invalid_parameter, "tail threshold must lie in (0,1)");
    }
  }
};

/// Finite truncation of a point of the ordered simplex: non-increasing
/// masses plus the mass not represented by the truncation.
class MassSequence {
 public:
  static constexpr double kSumTolerance = 1e-12;

  MassSequence() = default;

  /// Validating constructor. Zero masses are admitted only for the explicit
  /// law (points of the simplex outside its strictly positive part).
  MassSequence(std::vector<double> masses, double tail_mass, MassLaw law, std::uint64_t seed = 0)
      : masses_(std::move(masses)), tail_mass_(tail_mass), law_(law), seed_(seed) {
    require(!masses_.empty(), ErrorKind::invalid_parameter, "mass sequence is empty");
    require(tail_mass_ >= 0.0, ErrorKind::invalid_parameter, "tail mass must be non-negative");
    const bool allow_zero = law_.kind == MassLawKind::explicit_masses;
    for (std::size_t i = 0; i < masses_.size(); ++i) {
      const double m = masses_[i];
      require(std::isfinite(m) && m <= 1.0 && (allow_zero ? m >= 0.0 : m > 0.0),
              ErrorKind::invalid_parameter, "mass " + std::to_string(i) + " outside (0,1]");
      require(i == 0 || masses_[i - 1] >= m, ErrorKind::invalid_parameter,
              "masses must be non-increasing");
    }
    const double total = std::accumulate(masses_.begin(), masses_.end(), 0.0) + tail_mass_;
    require(std::abs(total - 1.0) <= kSumTolerance, ErrorKind::invalid_parameter,
            "masses plus tail must sum to one");
  }

  /// Sorts arbitrary non-negative weights descending (stable) and checks them.
  static MassSequence from_explicit(std::vector<double> masses, double tail_mass = 0.0) {
    std::stable_sort(masses.begin(), masses.end(), std::greater<>());
    return MassSequence(std::move(masses), tail_mass, MassLaw::explicit_masses());
  }

  std::span<const double> masses() const { return masses_; }
  double operator[](std::size_t i) const { return masses_[i]; }
  std::size_t size() const { return masses_.size(); }
  double tail_mass() const { return tail_mass_; }
  const MassLaw& law() const { return law_; }
  std::uint64_t seed() const { return seed_; }

  bool operator==(const MassSequence&) const = default;

 private:
  std::vector<double> masses_;
  double tail_mass_ = 0.0;
  MassLaw law_;
  std::uint64_t seed_ = 0;
};

/// Stick-breaking weights Lambda_i = r_i * prod_{k<i} (1 - r_k).
inline std::vector<double> stick_break(std::span<const double> sticks) {
  std::vector<double> out;
  out.reserve(sticks.size());
  double remaining = 1.0;
  for (double r : sticks) {
    out.push_back(r * remaining);
    remaining *= 1.0 - r;
  }
  return out;
}

namespace detail {

// Beta(1, beta) draw by inversion: density beta (1-r)^(beta-1).
inline double beta_one_draw(double beta, RngStream& rng) {
  return -std::expm1(std::log(rng.uniform()) / beta);
}

inline MassSequence finish_sticks(std::vector<double> weights, double tail, MassLaw law,
                                  std::uint64_t seed) {
  // Stable descending sort; ties keep generation order.
  std::stable_sort(weights.begin(), weights.end(), std::greater<>());
  // A truncated tail is re-derived from the kept masses so the sum
  // invariant holds to rounding. Finite laws carry no tail at all.
  if (tail > 0.0) {
    const double kept = std::accumulate(weights.begin(), weights.end(), 0.0);
    tail = std::max(0.0, 1.0 - kept);
  }
  return MassSequence(std::move(weights), tail, law, seed);
}

}  // namespace detail

/// Poisson-Dirichlet(beta) masses by Beta(1,beta) stick-breaking, stopping
/// once the remaining stick drops below `tail_threshold`.
inline MassSequence sample_poisson_dirichlet(double beta, double tail_threshold, RngStream& rng,
                                             std::uint64_t seed = 0) {
  require(beta > 0.0 && std::isfinite(beta), ErrorKind::invalid_parameter,
          "Poisson-Dirichlet parameter beta must be positive");
  require(tail_threshold > 0.0 && tail_threshold < 1.0, ErrorKind::invalid_parameter,
          "tail threshold must lie in (0,1)");
  std::vector<double> weights;
  double remaining = 1.0;
  while (remaining >= tail_threshold) {
    const double r = detail::beta_one_draw(beta, rng);
    const double w = r * remaining;
    remaining -= w;
    if (w > 0.0) weights.push_back(w);
  }
  return detail::finish_sticks(std::move(weights), remaining, MassLaw::poisson_dirichlet(beta), seed);
}

/// Poisson-Dirichlet(beta) cut at a fixed number of atoms; the last atom
/// receives the whole remaining stick.
inline MassSequence sample_poisson_dirichlet_count(double beta, int count, RngStream& rng,
                                                   std::uint64_t seed = 0) {
  require(beta > 0.0 && std::isfinite(beta), ErrorKind::invalid_parameter,
          "Poisson-Dirichlet parameter beta must be positive");
  require(count >= 1, ErrorKind::invalid_parameter, "truncation count must be >= 1");
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(count));
  double remaining = 1.0;
  for (int i = 0; i + 1 < count; ++i) {
    const double w = detail::beta_one_draw(beta, rng) * remaining;
    remaining -= w;
    weights.push_back(w);
  }
  weights.push_back(remaining);
  // Underflowed sticks carry no mass; drop them rather than break positivity.
  std::erase_if(weights, [](double w) { return !(w > 0.0); });
  return detail::finish_sticks(std::move(weights), 0.0, MassLaw::poisson_dirichlet(beta), seed);
}

inline MassSequence sample_masses(const MassLawSpec& spec, RngStream& rng) {
  spec.validate();
  switch (spec.law.kind) {
    case MassLawKind::poisson_dirichlet:
      if (spec.truncation.count)
        return sample_poisson_dirichlet_count(spec.law.beta, *spec.truncation.count, rng, spec.seed);
      return sample_poisson_dirichlet(spec.law.beta, spec.truncation.tail_threshold, rng, spec.seed);
    case MassLawKind::dirichlet_symmetric: {
      std::vector<double> e(static_cast<std::size_t>(spec.law.n));
      for (double& x : e) x = rng.exponential();
      const double total = std::accumulate(e.begin(), e.end(), 0.0);
      for (double& x : e) x /= total;
      return detail::finish_sticks(std::move(e), 0.0, spec.law, spec.seed);
    }
    case MassLawKind::uniform: {
      const auto n = static_cast<std::size_t>(spec.law.n);
      return MassSequence(std::vector<double>(n, 1.0 / static_cast<double>(n)), 0.0, spec.law,
                          spec.seed);
    }
    case MassLawKind::explicit_masses: {
      auto m = spec.explicit_masses;
      std::stable_sort(m.begin(), m.end(), std::greater<>());
      const double kept = std::accumulate(m.begin(), m.end(), 0.0);
      return MassSequence(std::move(m), std::max(0.0, 1.0 - kept), spec.law, spec.seed);
    }
  }
  throw Error(ErrorKind::invalid_parameter, "unknown mass law");
}

/// Sample number `index` of the law, on its own stream.
inline MassSequence sample_masses(const MassLawSpec& spec, std::uint64_t index) {
  auto rng = RngStream::for_task(spec.seed, stream_tag::masses, index);
  return sample_masses(spec, rng);
}

struct MomentEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  bool se_defined = false;
  std::size_t n_samples = 0;
};

/// sum_i s_i * tau_p(1/s_i) with tau_p(t) = t^{(p-1)/p}, i.e. sum_i s_i^{1/p}.
inline double tau_moment(std::span<const double> masses, double p) {
  double acc = 0.0;
  const double e = 1.0 / p;
  for (double s : masses)
    if (s > 0.0) acc += std::pow(s, e);
  return acc;
}

/// Monte-Carlo mean of the tau_p moment over the law. Only represented
/// masses contribute; the tail is excluded.
inline MomentEstimate moment_estimate(const MassLawSpec& spec, double p, std::size_t n_samples,
                                      unsigned threads = 1) {
  require(p > 1.0 && std::isfinite(p), ErrorKind::invalid_parameter, "moment exponent p must exceed 1");
  require(n_samples >= 1, ErrorKind::invalid_parameter, "need at least one sample");
  spec.validate();
  std::vector<double> values(n_samples);
  parallel_for(n_samples, threads, [&](std::size_t i) {
    values[i] = tau_moment(sample_masses(spec, i).masses(), p);
  });
  const auto ms = stats::mean_se(values);
  MomentEstimate out;
  out.estimate = ms.mean;
  out.n_samples = n_samples;
  out.se_defined = n_samples >= 2;
  out.standard_error = out.se_defined ? ms.se : std::numeric_limits<double>::quiet_NaN();
  return out;
}

/// Default t* search grid: 64 log-spaced points in [1e-3, 10].
inline std::vector<double> default_t_grid() {
  std::vector<double> g(64);
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = std::pow(10.0, -3.0 + 4.0 * static_cast<double>(i) / 63.0);
  return g;
}

struct TStarEstimate {
  double t_star = 0.0;
  /// Extrapolated limit of log k / (2 lambda_k); may be below the grid.
  double extrapolated = 0.0;
  /// Partial-sum tail-ratio verdict at each grid point.
  std::vector<double> grid;
  std::vector<bool> summable;
};

namespace detail {

// Ratio of the block sums over (n/2, n] and (n/4, n/2] of exp(-2 t lambda_k).
// For terms ~ k^{-a} it tends to 2^{1-a}: below one iff the series converges.
inline double tail_block_ratio(std::span<const double> rates, double t) {
  const std::size_t n = rates.size();
  const std::size_t q = n / 4, h = n / 2;
  // Factor out the largest term for stability.
  const double shift = -2.0 * t * rates[q];
  double lower = 0.0, upper = 0.0;
  for (std::size_t k = q; k < h; ++k) lower += std::exp(-2.0 * t * rates[k] - shift);
  for (std::size_t k = h; k < n; ++k) upper += std::exp(-2.0 * t * rates[k] - shift);
  return upper / lower;
}

}  // namespace detail

/// Estimate t* = inf{t > 0 : sum_k exp(-2 t lambda_k) < inf} from a finite
/// prefix of the rates. Stage one runs the partial-sum tail-ratio test at
/// each grid point; stage two extrapolates q_k = log k / (2 lambda_k), whose
/// limsup equals t* for non-decreasing rates, by a fit in 1/log k.
inline TStarEstimate t_star(std::vector<double> rates, std::vector<double> grid = default_t_grid()) {
  require(rates.size() >= 10, ErrorKind::insufficient_data, "t* needs at least 10 rates");
  for (double r : rates)
    require(r > 0.0 && std::isfinite(r), ErrorKind::invalid_parameter, "rates must be positive");
  require(!grid.empty(), ErrorKind::invalid_parameter, "empty t grid");
  std::sort(rates.begin(), rates.end());
  std::sort(grid.begin(), grid.end());

  TStarEstimate out;
  out.grid = grid;
  out.summable.reserve(grid.size());
  for (double t : grid) out.summable.push_back(detail::tail_block_ratio(rates, t) < 1.0);

  const std::size_t n = rates.size();
  std::vector<double> x, y;
  for (std::size_t k = std::max<std::size_t>(n / 4, 2); k <= n; ++k) {
    const double lk = std::log(static_cast<double>(k));
    x.push_back(1.0 / lk);
    y.push_back(lk / (2.0 * rates[k - 1]));
  }
  const auto fit = stats::linear_fit(x, y);
  out.extrapolated = std::max(0.0, fit.intercept);

  const bool summable_everywhere =
      std::all_of(out.summable.begin(), out.summable.end(), [](bool b) { return b; });
  if (summable_everywhere || out.extrapolated < grid.front()) {
    out.t_star = 0.0;
  } else {
    out.t_star = out.extrapolated;
  }
  return out;
}

}  // namespace massive
