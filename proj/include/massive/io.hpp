#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "massive/ambient.hpp"
#include "massive/cylinder.hpp"
#include "massive/dynamics.hpp"
#include "massive/error.hpp"
#include "massive/measures.hpp"
#include "massive/potential.hpp"
#include "massive/simplex.hpp"
#include "massive/verify.hpp"

namespace massive::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Numbers

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorKind::invalid_parameter,
          "not a number: '" + std::string(s) + "'");
  return v;
}

/// JSON has no infinities or NaN; those are written as strings.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

inline double to_number(const json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  require(j.is_number(), ErrorKind::invalid_parameter, "expected a number, got " + j.dump());
  return j.get<double>();
}

// ---------------------------------------------------------------------------
// Schema helpers

/// Reads fields of a JSON object and rejects keys that were never read.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    require(j_.is_object(), ErrorKind::invalid_parameter, where_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const std::string& key) {
    seen_.insert(key);
    require(j_.contains(key), ErrorKind::invalid_parameter, where_ + ": missing field '" + key + "'");
    return j_.at(key);
  }
  template <class T>
  T get(const std::string& key) {
    try {
      return at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::invalid_parameter, where_ + "." + key + ": " + e.what());
    }
  }
  template <class T>
  T get(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }
  double real(const std::string& key) { return to_number(at(key)); }
  double real(const std::string& key, double fallback) { return has(key) ? real(key) : fallback; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      require(seen_.count(key) > 0, ErrorKind::invalid_parameter, where_ + ": unknown field '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <class Enum, class... E>
Enum enum_from(const std::string& s, const std::string& what, E... values) {
  for (Enum v : {values...})
    if (to_string(v) == s) return v;
  throw Error(ErrorKind::invalid_parameter, "unknown " + what + " '" + s + "'");
}

// ---------------------------------------------------------------------------
// Simplex

inline MassLawKind mass_law_kind_from(const std::string& s) {
  return enum_from<MassLawKind>(s, "mass law", MassLawKind::poisson_dirichlet, MassLawKind::dirichlet_symmetric,
                                MassLawKind::uniform, MassLawKind::explicit_masses);
}

inline json law_params(const MassLaw& law) {
  switch (law.kind) {
    case MassLawKind::poisson_dirichlet: return {{"beta", law.beta}};
    case MassLawKind::dirichlet_symmetric:
    case MassLawKind::uniform: return {{"n", law.n}};
    case MassLawKind::explicit_masses: return json::object();
  }
  return json::object();
}

inline MassLaw law_from(const std::string& kind, const json& params) {
  MassLaw law;
  law.kind = mass_law_kind_from(kind);
  Reader r(params, "params");
  switch (law.kind) {
    case MassLawKind::poisson_dirichlet:
      law.beta = r.real("beta");
      law.n = 0;
      break;
    case MassLawKind::dirichlet_symmetric:
    case MassLawKind::uniform:
      law.beta = 0.0;
      law.n = r.get<int>("n");
      break;
    case MassLawKind::explicit_masses:
      law.beta = 0.0;
      law.n = 0;
      break;
  }
  r.finish();
  return law;
}

inline json to_json(const MassSequence& m) {
  return {{"law", to_string(m.law().kind)},
          {"params", law_params(m.law())},
          {"masses", std::vector<double>(m.masses().begin(), m.masses().end())},
          {"tail_mass", m.tail_mass()},
          {"seed", m.seed()}};
}

inline MassSequence mass_sequence_from_json(const json& j) {
  Reader r(j, "mass_sequence");
  const MassLaw law = law_from(r.get<std::string>("law"), r.has("params") ? r.at("params") : json::object());
  auto masses = r.get<std::vector<double>>("masses");
  const double tail = r.real("tail_mass", 0.0);
  const auto seed = r.get<std::uint64_t>("seed", 0);
  r.finish();
  return MassSequence(std::move(masses), tail, law, seed);
}

inline json to_json(const MassLawSpec& s) {
  json j = {{"law", to_string(s.law.kind)}, {"params", law_params(s.law)}, {"seed", s.seed}};
  json t = {{"tail_threshold", s.truncation.tail_threshold}};
  if (s.truncation.count) t["count"] = *s.truncation.count;
  j["truncation"] = t;
  if (s.law.kind == MassLawKind::explicit_masses) j["masses"] = s.explicit_masses;
  return j;
}

inline MassLawSpec mass_law_spec_from_json(const json& j) {
  Reader r(j, "mass_law");
  MassLawSpec s;
  s.law = law_from(r.get<std::string>("law"), r.has("params") ? r.at("params") : json::object());
  s.seed = r.get<std::uint64_t>("seed", 0);
  if (r.has("truncation")) {
    Reader t(r.at("truncation"), "truncation");
    s.truncation.tail_threshold = t.real("tail_threshold", s.truncation.tail_threshold);
    if (t.has("count")) s.truncation.count = t.get<int>("count");
    t.finish();
  }
  if (r.has("masses")) s.explicit_masses = r.get<std::vector<double>>("masses");
  r.finish();
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Ambient space

inline json to_json(const BaseSpace& s) { return {{"kind", to_string(s.kind)}, {"dim", s.dim}}; }

inline BaseSpace base_space_from_json(const json& j) {
  Reader r(j, "space");
  BaseSpace s;
  s.kind = enum_from<SpaceKind>(r.get<std::string>("kind"), "space", SpaceKind::torus, SpaceKind::euclidean_ou,
                                SpaceKind::interval_reflected);
  s.dim = r.get<int>("dim", s.kind == SpaceKind::interval_reflected ? 1 : 0);
  r.finish();
  s.validate();
  return s;
}

/// Torus modes carry a frequency vector "k" with cosine and sine
/// coefficients; Hermite modes a multi-index "alpha"; interval modes "m".
inline json to_json(const TestFunction& f) {
  json modes = json::array();
  for (const auto& [key, c] : f.terms()) {
    switch (f.space().kind) {
      case SpaceKind::torus: modes.push_back({{"k", key}, {"cos", c.a}, {"sin", c.b}}); break;
      case SpaceKind::euclidean_ou: modes.push_back({{"alpha", key}, {"coeff", c.a}}); break;
      case SpaceKind::interval_reflected: modes.push_back({{"m", key[0]}, {"coeff", c.a}}); break;
    }
  }
  return {{"space", to_json(f.space())}, {"modes", modes}};
}

inline TestFunction test_function_from_json(const json& j) {
  Reader r(j, "test_function");
  TestFunction f(base_space_from_json(r.at("space")));
  const json& modes = r.at("modes");
  require(modes.is_array(), ErrorKind::invalid_parameter, "modes must be an array");
  for (const auto& m : modes) {
    Reader mr(m, "mode");
    switch (f.space().kind) {
      case SpaceKind::torus:
        f.add_term(mr.get<std::vector<int>>("k"), {mr.real("cos", 0.0), mr.real("sin", 0.0)});
        break;
      case SpaceKind::euclidean_ou: f.add_term(mr.get<std::vector<int>>("alpha"), {mr.real("coeff"), 0.0}); break;
      case SpaceKind::interval_reflected: f.add_term({mr.get<int>("m")}, {mr.real("coeff"), 0.0}); break;
    }
    mr.finish();
  }
  r.finish();
  return f;
}

// ---------------------------------------------------------------------------
// Cylinder functions

inline json to_json(const MassCutoff& phi) { return {{"eps", phi.eps()}, {"w", phi.width()}, {"poly", phi.poly()}}; }

inline MassCutoff mass_cutoff_from_json(const json& j) {
  Reader r(j, "phi");
  const double eps = r.real("eps");
  const double w = r.real("w", eps / 2.0);
  auto poly = r.get<std::vector<double>>("poly", {1.0});
  r.finish();
  return MassCutoff(eps, w, std::move(poly));
}

inline json to_json(const Outer::Node& n) {
  json j = {{"op", to_string(n.op)}};
  switch (n.op) {
    case OuterOp::constant: j["c"] = n.c; break;
    case OuterOp::polynomial: {
      json terms = json::array();
      for (const auto& m : n.terms) terms.push_back({{"coeff", m.coeff}, {"exponents", m.exponents}});
      j["terms"] = terms;
      break;
    }
    default: {
      json args = json::array();
      for (const auto& k : n.kids) args.push_back(to_json(*k));
      j["args"] = args;
    }
  }
  return j;
}

inline json to_json(const Outer& F) { return to_json(F.root()); }

inline Outer outer_from_json(const json& j) {
  Reader r(j, "F");
  const OuterOp op = enum_from<OuterOp>(r.get<std::string>("op"), "outer op", OuterOp::constant,
                                        OuterOp::polynomial, OuterOp::sum, OuterOp::product, OuterOp::exp,
                                        OuterOp::tanh, OuterOp::sin, OuterOp::cos);
  Outer out;
  switch (op) {
    case OuterOp::constant: out = Outer::constant(r.real("c")); break;
    case OuterOp::polynomial: {
      std::vector<Monomial> terms;
      for (const auto& t : r.at("terms")) {
        Reader tr(t, "monomial");
        terms.push_back({tr.real("coeff"), tr.get<std::vector<int>>("exponents")});
        tr.finish();
      }
      out = Outer::polynomial(std::move(terms));
      break;
    }
    case OuterOp::sum:
    case OuterOp::product: {
      std::vector<Outer> args;
      for (const auto& a : r.at("args")) args.push_back(outer_from_json(a));
      out = Outer::combine(op, std::move(args));
      break;
    }
    default: {
      const json& args = r.at("args");
      require(args.is_array() && args.size() == 1, ErrorKind::invalid_parameter, "unary op needs one argument");
      out = Outer::apply(op, outer_from_json(args[0]));
    }
  }
  r.finish();
  return out;
}

inline json to_json(const CylinderFunction& u) {
  json pairs = json::array();
  for (const auto& p : u.pairs()) pairs.push_back({{"phi", to_json(p.phi)}, {"f", to_json(p.f)}});
  return {{"F", to_json(u.outer())}, {"pairs", pairs}};
}

inline CylinderFunction cylinder_from_json(const json& j) {
  Reader r(j, "cylinder_function");
  Outer F = outer_from_json(r.at("F"));
  std::vector<CutoffPair> pairs;
  for (const auto& p : r.at("pairs")) {
    Reader pr(p, "pair");
    pairs.push_back({mass_cutoff_from_json(pr.at("phi")), test_function_from_json(pr.at("f"))});
    pr.finish();
  }
  r.finish();
  return CylinderFunction(std::move(F), std::move(pairs));
}

// ---------------------------------------------------------------------------
// Dynamics

inline json to_json(const PairPotential& p) {
  json j = {{"kind", to_string(p.kind)}};
  switch (p.kind) {
    case PotentialKind::riesz: j["p"] = p.p; break;
    case PotentialKind::mie:
      j["a"] = p.a;
      j["b"] = p.b;
      j["alpha"] = p.alpha;
      j["beta"] = p.beta_exp;
      break;
    default: break;
  }
  return j;
}

inline PairPotential potential_from_json(const json& j) {
  Reader r(j, "potential");
  const auto kind = enum_from<PotentialKind>(r.get<std::string>("kind"), "potential", PotentialKind::riesz,
                                             PotentialKind::logarithmic, PotentialKind::mie, PotentialKind::dyson);
  PairPotential p;
  switch (kind) {
    case PotentialKind::riesz: p = PairPotential::riesz(r.real("p")); break;
    case PotentialKind::logarithmic: p = PairPotential::logarithmic(); break;
    case PotentialKind::dyson: p = PairPotential::dyson(); break;
    case PotentialKind::mie: p = PairPotential::mie(r.real("a"), r.real("b"), r.real("alpha"), r.real("beta")); break;
  }
  r.finish();
  p.validate();
  return p;
}

inline json to_json(const Interaction& i) { return {{"potential", to_json(i.potential)}, {"beta", i.beta}}; }

inline Interaction interaction_from_json(const json& j) {
  Reader r(j, "interaction");
  Interaction i{potential_from_json(r.at("potential")), r.real("beta")};
  r.finish();
  return i;
}

inline json to_json(const SystemConfig& c) {
  json j = {{"space", to_json(c.space)},
            {"masses", to_json(c.masses)},
            {"dt", c.dt},
            {"horizon", c.horizon},
            {"record_stride", c.record_stride},
            {"seed", c.seed},
            {"drift_variant", to_string(c.drift_variant)},
            {"strict_integrability", c.strict_integrability},
            {"initial_positions", c.initial_positions},
            {"faults",
             {{"speed_scale", c.faults.speed_scale},
              {"attraction", c.faults.attraction},
              {"attraction_center", c.faults.attraction_center}}}};
  j["interaction"] = c.interaction ? to_json(*c.interaction) : json(nullptr);
  return j;
}

/// `masses` may be omitted when the caller supplies them (for example from a
/// mass law); the returned config then has an empty sequence.
inline SystemConfig system_from_json(const json& j, bool masses_required = true) {
  Reader r(j, "system");
  SystemConfig c;
  c.space = base_space_from_json(r.at("space"));
  if (masses_required || r.has("masses")) c.masses = mass_sequence_from_json(r.at("masses"));
  c.dt = r.real("dt", c.dt);
  c.horizon = r.real("horizon", c.horizon);
  c.record_stride = r.get<int>("record_stride", c.record_stride);
  c.seed = r.get<std::uint64_t>("seed", c.seed);
  c.drift_variant = enum_from<DriftVariant>(r.get<std::string>("drift_variant", to_string(c.drift_variant)),
                                            "drift variant", DriftVariant::pairwise_mass,
                                            DriftVariant::girsanov_derived);
  c.strict_integrability = r.get<bool>("strict_integrability", c.strict_integrability);
  c.initial_positions = r.get<std::vector<Point>>("initial_positions", {});
  if (r.has("faults")) {
    Reader f(r.at("faults"), "faults");
    c.faults.speed_scale = f.real("speed_scale", 1.0);
    c.faults.attraction = f.real("attraction", 0.0);
    c.faults.attraction_center = f.get<Point>("attraction_center", {});
    f.finish();
  }
  if (r.has("interaction") && !r.at("interaction").is_null()) c.interaction = interaction_from_json(r.at("interaction"));
  r.finish();
  if (masses_required) c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Ensembles and reports

inline json to_json(const EnsembleSpec& s) {
  json obs = json::array();
  for (const auto& u : s.observables) obs.push_back(to_json(u));
  json j = {{"system", to_json(s.system)},
            {"n_paths", s.n_paths},
            {"observables", obs},
            {"checkpoints", s.checkpoints},
            {"significance", s.significance},
            {"initial_law", to_string(s.initial_law)},
            {"threads", s.threads}};
  j["mass_law"] = s.mass_law ? to_json(*s.mass_law) : json(nullptr);
  return j;
}

inline EnsembleSpec ensemble_from_json(const json& j) {
  Reader r(j, "ensemble");
  EnsembleSpec s;
  if (r.has("mass_law") && !r.at("mass_law").is_null()) s.mass_law = mass_law_spec_from_json(r.at("mass_law"));
  s.system = system_from_json(r.at("system"), !s.mass_law);
  if (s.mass_law && s.system.masses.size() == 0) s.system.masses = sample_masses(*s.mass_law, 0);
  s.n_paths = r.get<std::size_t>("n_paths", s.n_paths);
  if (r.has("observables"))
    for (const auto& u : r.at("observables")) s.observables.push_back(cylinder_from_json(u));
  s.checkpoints = r.get<std::vector<double>>("checkpoints", {});
  s.significance = r.real("significance", s.significance);
  s.initial_law = enum_from<InitialLaw>(r.get<std::string>("initial_law", to_string(s.initial_law)),
                                        "initial law", InitialLaw::product_nu, InitialLaw::fixed);
  s.threads = r.get<unsigned>("threads", 0);
  r.finish();
  s.validate();
  return s;
}

inline json to_json(const TestReport& t) {
  json diag = json::object();
  for (const auto& [k, v] : t.diagnostics) diag[k] = number(v);
  return {{"name", t.name},
          {"statistic", number(t.statistic)},
          {"standard_error", number(t.standard_error)},
          {"z_score", number(t.z_score)},
          {"threshold", number(t.threshold)},
          {"pass", t.pass},
          {"one_sided", t.one_sided},
          {"expect_reject", t.expect_reject},
          {"ok", t.ok()},
          {"diagnostics", diag},
          {"notes", t.notes}};
}

inline TestReport report_from_json(const json& j) {
  Reader r(j, "report");
  TestReport t;
  t.name = r.get<std::string>("name");
  t.statistic = r.real("statistic");
  t.standard_error = r.real("standard_error");
  t.z_score = r.real("z_score");
  t.threshold = r.real("threshold");
  t.pass = r.get<bool>("pass");
  t.one_sided = r.get<bool>("one_sided", false);
  t.expect_reject = r.get<bool>("expect_reject", false);
  r.has("ok");  // derived
  if (r.has("diagnostics"))
    for (const auto& [k, v] : r.at("diagnostics").items()) t.diagnostics[k] = to_number(v);
  t.notes = r.get<std::vector<std::string>>("notes", {});
  r.finish();
  return t;
}

inline void write_reports_jsonl(std::ostream& out, std::span<const TestReport> reports) {
  for (const auto& t : reports) out << to_json(t).dump() << '\n';
}

inline std::vector<TestReport> read_reports_jsonl(std::istream& in) {
  std::vector<TestReport> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(report_from_json(json::parse(line)));
  return out;
}

/// Fixed-width table with one row per report.
inline std::string summary_table(std::span<const TestReport> reports) {
  std::ostringstream os;
  auto cell = [](double v) {
    std::ostringstream c;
    c << std::setprecision(4) << v;
    return c.str();
  };
  os << std::left << std::setw(28) << "test" << std::setw(14) << "statistic" << std::setw(12) << "se"
     << std::setw(12) << "z" << std::setw(12) << "threshold" << "result\n";
  for (const auto& t : reports) {
    std::string result = t.ok() ? "PASS" : "FAIL";
    if (t.expect_reject) result += " (rejection required)";
    os << std::left << std::setw(28) << t.name << std::setw(14) << cell(t.statistic) << std::setw(12)
       << cell(t.standard_error) << std::setw(12) << cell(t.z_score) << std::setw(12) << cell(t.threshold) << result
       << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string coord_header(int dim) {
  std::string h;
  for (int c = 0; c < dim; ++c) h += ",x" + std::to_string(c);
  return h;
}

}  // namespace detail

/// Columns time,particle,x0,...; one row per recorded frame and particle.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& tr) {
  out << "time,particle" << detail::coord_header(tr.space.dim) << '\n';
  for (std::size_t k = 0; k < tr.frames(); ++k)
    for (std::size_t i = 0; i < tr.particles(); ++i) {
      out << format_double(tr.times[k]) << ',' << i;
      for (double v : tr.position(k, i)) out << ',' << format_double(v);
      out << '\n';
    }
}

/// Sidecar JSON: space, masses and collision time.
inline json trajectory_sidecar(const Trajectory& tr) {
  return {{"space", to_json(tr.space)},
          {"masses", to_json(tr.masses)},
          {"frames", tr.frames()},
          {"collision_time", tr.collision_time ? json(*tr.collision_time) : json(nullptr)}};
}

inline Trajectory read_trajectory_csv(std::istream& in, const json& sidecar) {
  Trajectory tr;
  Reader r(sidecar, "trajectory");
  tr.space = base_space_from_json(r.at("space"));
  tr.masses = mass_sequence_from_json(r.at("masses"));
  r.has("frames");
  if (r.has("collision_time") && !r.at("collision_time").is_null()) tr.collision_time = r.real("collision_time");
  r.finish();
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::invalid_parameter, "empty trajectory CSV");
  require(line == "time,particle" + detail::coord_header(tr.space.dim), ErrorKind::invalid_parameter,
          "unexpected trajectory header '" + line + "'");
  const std::size_t n = tr.particles(), d = static_cast<std::size_t>(tr.space.dim);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv(line);
    require(cells.size() == 2 + d, ErrorKind::invalid_parameter, "bad trajectory row '" + line + "'");
    const std::size_t particle = std::stoul(cells[1]);
    require(particle == row % n, ErrorKind::invalid_parameter, "trajectory rows out of order");
    if (particle == 0) tr.times.push_back(parse_double(cells[0]));
    for (std::size_t c = 0; c < d; ++c) tr.coords.push_back(parse_double(cells[2 + c]));
    ++row;
  }
  require(row % n == 0, ErrorKind::invalid_parameter, "incomplete final frame");
  return tr;
}

/// Rows mass,x0,...
inline void write_measure_csv(std::ostream& out, const AtomicMeasure& mu) {
  out << "mass" << detail::coord_header(mu.space().dim) << '\n';
  for (std::size_t i = 0; i < mu.size(); ++i) {
    out << format_double(mu.mass(i));
    for (double v : mu.position(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

inline AtomicMeasure read_measure_csv(std::istream& in, const BaseSpace& space, bool probability = true) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::invalid_parameter, "empty measure CSV");
  require(line == "mass" + detail::coord_header(space.dim), ErrorKind::invalid_parameter,
          "unexpected measure header '" + line + "'");
  std::vector<double> masses;
  std::vector<Point> pts;
  const auto d = static_cast<std::size_t>(space.dim);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv(line);
    require(cells.size() == 1 + d, ErrorKind::invalid_parameter, "bad measure row '" + line + "'");
    masses.push_back(parse_double(cells[0]));
    Point p(d);
    for (std::size_t c = 0; c < d; ++c) p[c] = parse_double(cells[1 + c]);
    pts.push_back(std::move(p));
  }
  return AtomicMeasure(space, std::move(pts), std::move(masses), probability);
}

// ---------------------------------------------------------------------------
// Files

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_parameter, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write '" + path + "'");
  out << text;
}

}  // namespace massive::io
