#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "massive/io.hpp"
#include "massive/massive.hpp"

namespace fs = std::filesystem;
using namespace massive;
using io::json;

#ifndef MASSIVE_VERSION
#define MASSIVE_VERSION "unknown"
#endif

namespace {

constexpr int kExitFailedTest = 1;
constexpr int kExitUsage = 2;
constexpr int kExitError = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out = "out";
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Loads --config; a manifest written by an earlier run is accepted and its
/// config snapshot is used, provided it came from the same command.
json load_config(const Globals& g, const std::string& command) {
  if (g.config.empty()) return json::object();
  json j = io::read_json_file(g.config);
  if (j.is_object() && j.value("kind", "") == "manifest") {
    require(j.at("command") == command, ErrorKind::invalid_parameter,
            "manifest was written by '" + j.at("command").get<std::string>() + "', not '" + command + "'");
    return j.at("config");
  }
  return j;
}

/// Collects emitted files and writes manifest.json into the output directory.
class Run {
 public:
  Run(const Globals& g, std::string command) : g_(g), command_(std::move(command)), started_(utc_now()) {
    fs::create_directories(g_.out);
  }

  std::string path(const std::string& name) const { return (fs::path(g_.out) / name).string(); }

  void emit(const std::string& name, const std::string& text) {
    io::write_text_file(path(name), text);
    outputs_.push_back(name);
  }

  void finish(const json& config, std::uint64_t seed) {
    json m = {{"kind", "manifest"},
              {"command", command_},
              {"code_version", MASSIVE_VERSION},
              {"master_seed", seed},
              {"threads", resolve_threads(g_.threads)},
              {"started", started_},
              {"finished", utc_now()},
              {"config", config},
              {"outputs", outputs_}};
    io::write_text_file(path("manifest.json"), m.dump(2) + "\n");
  }

 private:
  const Globals& g_;
  std::string command_;
  std::string started_;
  std::vector<std::string> outputs_;
};

// ---------------------------------------------------------------------------
// sample-masses

struct SampleArgs {
  std::string law;
  double beta = 1.0;
  int n = 0;
  std::optional<int> count;
  std::optional<double> tail;
  std::size_t samples = 0;
};

int cmd_sample_masses(const Globals& g, const SampleArgs& a) {
  json cfg = load_config(g, "sample-masses");
  io::Reader r(cfg, "config");
  MassLawSpec spec;
  if (r.has("mass_law")) spec = io::mass_law_spec_from_json(r.at("mass_law"));
  std::size_t samples = r.get<std::size_t>("samples", 1);
  r.finish();
  if (!a.law.empty()) {
    spec.law.kind = io::mass_law_kind_from(a.law);
    spec.law.beta = spec.law.kind == MassLawKind::poisson_dirichlet ? a.beta : 0.0;
    spec.law.n = spec.law.kind == MassLawKind::poisson_dirichlet ? 0 : a.n;
  }
  if (a.count) spec.truncation.count = *a.count;
  if (a.tail) spec.truncation.tail_threshold = *a.tail;
  if (a.samples > 0) samples = a.samples;
  if (g.seed) spec.seed = *g.seed;
  spec.validate();
  require(samples >= 1, ErrorKind::invalid_parameter, "samples must be >= 1");

  Run run(g, "sample-masses");
  std::ostringstream os;
  for (std::size_t i = 0; i < samples; ++i) os << io::to_json(sample_masses(spec, i)).dump() << '\n';
  run.emit("masses.jsonl", os.str());
  const json resolved = {{"mass_law", io::to_json(spec)}, {"samples", samples}};
  run.finish(resolved, spec.seed);
  std::cout << os.str();
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::size_t paths = 0;
  std::optional<double> dt, horizon;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  json cfg = load_config(g, "simulate");
  io::Reader r(cfg, "config");
  std::optional<MassLawSpec> law;
  if (r.has("mass_law") && !r.at("mass_law").is_null()) law = io::mass_law_spec_from_json(r.at("mass_law"));
  require(r.has("system"), ErrorKind::invalid_parameter, "simulate needs a 'system' section");
  SystemConfig sys = io::system_from_json(r.at("system"), !law);
  std::size_t paths = r.get<std::size_t>("paths", 1);
  const double collision_delta = r.real("collision_delta", 0.0);
  r.finish();
  if (a.paths > 0) paths = a.paths;
  if (a.dt) sys.dt = *a.dt;
  if (a.horizon) sys.horizon = *a.horizon;
  if (g.seed) {
    sys.seed = *g.seed;
    if (law) law->seed = *g.seed;
  }
  if (law) sys.masses = sample_masses(*law, 0);
  sys.validate();

  Run run(g, "simulate");
  for (std::size_t i = 0; i < paths; ++i) {
    SystemConfig c = sys;
    if (law) c.masses = sample_masses(*law, i);
    auto rng = RngStream::for_task(sys.seed, stream_tag::paths, i);
    Trajectory tr = simulate(c, rng);
    if (collision_delta > 0.0) {
      const double t = first_collision_time(tr, collision_delta);
      if (std::isfinite(t)) tr.collision_time = t;
    }
    const std::string stem = paths == 1 ? "trajectory" : "trajectory_" + std::to_string(i);
    std::ostringstream os;
    io::write_trajectory_csv(os, tr);
    run.emit(stem + ".csv", os.str());
    run.emit(stem + ".json", io::trajectory_sidecar(tr).dump(2) + "\n");
  }
  json resolved = {{"system", io::to_json(sys)}, {"paths", paths}, {"collision_delta", collision_delta}};
  resolved["mass_law"] = law ? io::to_json(*law) : json(nullptr);
  run.finish(resolved, sys.seed);
  std::cout << "wrote " << paths << " trajectory file(s) to " << g.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsArgs {
  std::vector<std::string> measures;
  std::vector<std::string> metrics;
  std::string space;
};

BaseSpace parse_space(const std::string& s) {
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  const int dim = colon == std::string::npos ? 1 : std::stoi(s.substr(colon + 1));
  return io::base_space_from_json({{"kind", kind}, {"dim", dim}});
}

int cmd_metrics(const Globals& g, const MetricsArgs& a) {
  json cfg = load_config(g, "metrics");
  io::Reader r(cfg, "config");
  BaseSpace space = BaseSpace::torus(1);
  if (r.has("space")) space = io::base_space_from_json(r.at("space"));
  auto files = r.get<std::vector<std::string>>("measures", {});
  auto names = r.get<std::vector<std::string>>("metrics", {});
  r.finish();
  if (!a.space.empty()) space = parse_space(a.space);
  if (!a.measures.empty()) files = a.measures;
  if (!a.metrics.empty()) names = a.metrics;
  if (names.empty()) names = {"w2_exact"};
  require(!files.empty(), ErrorKind::invalid_parameter, "no measure files given");

  std::vector<AtomicMeasure> measures;
  for (const auto& f : files) {
    std::ifstream in(f);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + f + "'");
    measures.push_back(io::read_measure_csv(in, space));
  }
  Run run(g, "metrics");
  for (const auto& name : names) {
    const Metric m = metric_from_string(name);
    const auto d = distance_matrix(measures, m, g.threads);
    std::ostringstream os;
    os << "measure";
    for (std::size_t j = 0; j < measures.size(); ++j) os << ',' << fs::path(files[j]).filename().string();
    os << '\n';
    for (std::size_t i = 0; i < measures.size(); ++i) {
      os << fs::path(files[i]).filename().string();
      for (std::size_t j = 0; j < measures.size(); ++j) os << ',' << io::format_double(d(i, j));
      os << '\n';
    }
    run.emit("distances_" + name + ".csv", os.str());
    std::cout << name << "\n" << os.str();
  }
  run.finish({{"space", io::to_json(space)}, {"measures", files}, {"metrics", names}}, 0);
  return 0;
}

// ---------------------------------------------------------------------------
// verify / report

struct VerifyArgs {
  std::string suite;
  std::size_t paths = 0;
};

int report_outcome(const std::vector<TestReport>& reports) {
  std::cout << io::summary_table(reports);
  for (const auto& t : reports)
    if (!t.ok()) return kExitFailedTest;
  return 0;
}

int cmd_verify(const Globals& g, const VerifyArgs& a) {
  json cfg = load_config(g, "verify");
  io::Reader r(cfg, "config");
  std::string suite = r.get<std::string>("suite", "free-core");
  suites::Options opt;
  opt.paths = r.get<std::size_t>("paths", opt.paths);
  opt.seed = r.get<std::uint64_t>("seed", opt.seed);
  if (r.has("ensemble") && !r.at("ensemble").is_null()) opt.ensemble = io::ensemble_from_json(r.at("ensemble"));
  r.finish();
  if (!a.suite.empty()) suite = a.suite;
  if (a.paths > 0) opt.paths = a.paths;
  if (g.seed) {
    opt.seed = *g.seed;
    if (opt.ensemble) opt.ensemble->system.seed = *g.seed;
  }
  opt.threads = g.threads;
  const auto& known = suites::names();
  if (std::find(known.begin(), known.end(), suite) == known.end()) {
    std::cerr << "unknown suite '" << suite << "'\n";
    return kExitUsage;
  }

  Run run(g, "verify");
  const auto reports = suites::run(suite, opt);
  std::ostringstream os;
  io::write_reports_jsonl(os, reports);
  run.emit("reports.jsonl", os.str());
  run.emit("summary.txt", io::summary_table(reports));
  json resolved = {{"suite", suite}, {"paths", opt.paths}, {"seed", opt.seed}};
  resolved["ensemble"] = opt.ensemble ? io::to_json(*opt.ensemble) : json(nullptr);
  run.finish(resolved, opt.seed);
  return report_outcome(reports);
}

int cmd_report(const Globals& g, const std::string& input) {
  const std::string path = input.empty() ? (fs::path(g.out) / "reports.jsonl").string() : input;
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path + "'");
  return report_outcome(io::read_reports_jsonl(in));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and statistical verification of massive particle systems"};
  app.set_version_flag("--version", MASSIVE_VERSION);
  app.require_subcommand(1);
  Globals g;
  auto add_globals = [&](CLI::App* sub) {
    sub->add_option("--config", g.config, "JSON configuration file (or a manifest of an earlier run)");
    sub->add_option("--seed", g.seed, "Master seed (overrides the configuration)");
    sub->add_option("--threads", g.threads, "Worker threads (0 = all cores; MASSIVE_THREADS overrides)");
    sub->add_option("--out", g.out, "Output directory")->capture_default_str();
  };

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample-masses", "Sample random mass sequences");
  add_globals(sample);
  sample->add_option("--law", sa.law, "poisson_dirichlet, dirichlet_symmetric or uniform")
      ->check(CLI::IsMember({"poisson_dirichlet", "dirichlet_symmetric", "uniform"}));
  sample->add_option("--beta", sa.beta, "Poisson-Dirichlet parameter");
  sample->add_option("--n", sa.n, "Number of atoms for finite laws");
  sample->add_option("--count", sa.count, "Truncate Poisson-Dirichlet to this many atoms");
  sample->add_option("--tail", sa.tail, "Tail-mass threshold for Poisson-Dirichlet");
  sample->add_option("--samples", sa.samples, "Number of sequences");

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "Simulate trajectories of a free or interacting system");
  add_globals(sim);
  sim->add_option("--paths", sim_args.paths, "Number of independent paths");
  sim->add_option("--dt", sim_args.dt, "Time step");
  sim->add_option("--horizon", sim_args.horizon, "Final time");

  MetricsArgs ma;
  auto* metrics = app.add_subcommand("metrics", "Distance matrices between atomic measures");
  add_globals(metrics);
  metrics->add_option("measures", ma.measures, "Measure CSV files (mass,x0,...)");
  metrics->add_option("--metric", ma.metrics, "Metric name (repeatable)")
      ->allow_extra_args(false)
      ->check(CLI::IsMember({"prokhorov", "weak_atomic", "w2_exact", "w2_sinkhorn", "w1", "bounded_lipschitz"}));
  metrics->add_option("--space", ma.space, "Base space as kind:dim, e.g. torus:2");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Run a statistical verification suite");
  add_globals(verify);
  verify->add_option("--suite", va.suite, "Suite name")->check(CLI::IsMember(suites::names()));
  verify->add_option("--paths", va.paths, "Paths per ensemble");

  std::string report_input;
  auto* report = app.add_subcommand("report", "Print the summary of a reports.jsonl file");
  add_globals(report);
  report->add_option("input", report_input, "reports.jsonl (default: <out>/reports.jsonl)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sample) return cmd_sample_masses(g, sa);
    if (*sim) return cmd_simulate(g, sim_args);
    if (*metrics) return cmd_metrics(g, ma);
    if (*verify) return cmd_verify(g, va);
    if (*report) return cmd_report(g, report_input);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::io ? kExitError : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
