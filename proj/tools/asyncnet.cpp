// asyncnet: command-line front end for network description files.
//
//   asyncnet simulate   FILE [--x0 ...] [--duration D] [--stride n]
//   asyncnet transition FILE [--x0 ... | --grid c=lo:hi:n ... [--random n --seed s]] [--start-times ...]
//   asyncnet factorize  FILE [--side left|right|both] [--out text|json]
//   asyncnet verify     FILE [--second FILE2] [--samples n] [--seed s]
//
// Exit codes: 0 ok, 2 chatter, 3 configuration error, 4 cyclic precedence,
// 5 verification tolerance exceeded.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "asyncnet/algebra.hpp"
#include "asyncnet/circle.hpp"
#include "asyncnet/error.hpp"
#include "asyncnet/factorize.hpp"
#include "asyncnet/functional.hpp"
#include "asyncnet/netfile.hpp"
#include "asyncnet/rendezvous.hpp"
#include "asyncnet/semiflow.hpp"

using namespace asyncnet;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "asyncnet v1";

enum Exit { kOk = 0, kChatter = 2, kConfig = 3, kCyclic = 4, kTolerance = 5 };

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

// Numeric expression over the file constants (and pi).
double value_of(const std::string& text, const Constants& constants, const std::string& what) {
  std::map<std::string, double> env(constants.begin(), constants.end());
  env.emplace("pi", circle::kPi);
  try {
    return evaluate_real(parse(text), env);
  } catch (const std::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

struct Common {
  IntegratorConfig cfg;
  unsigned threads = 1;
  std::string output;

  void add(CLI::App* app, bool with_threads) {
    app->add_option("--step", cfg.step, "RK4 step")->check(CLI::PositiveNumber);
    app->add_option("--tau-event", cfg.tau_event, "event localization tolerance")->check(CLI::PositiveNumber);
    app->add_option("--t-max", cfg.t_max, "integration budget");
    app->add_option("--min-dwell", cfg.min_dwell, "chatter window");
    app->add_option("--chatter-limit", cfg.chatter_limit, "switches allowed per window");
    app->add_option("-o,--output", output, "write here instead of stdout");
    if (with_threads) app->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }
};

class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ConfigError("cannot write '" + path + "'");
    }
  }
  std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

// Starting point: the file's initial section (or the rendezvous origin, or
// each interval at its lower bound) with --x0 assignments applied.
NetworkState base_state(const LoadedNetwork& ln, const std::string& x0) {
  const PhaseSpace& space = ln.network().space();
  std::vector<double> coords(space.dimension(), 0.0);
  if (ln.initial) {
    coords = ln.initial->coords;
  } else if (ln.rendezvous) {
    coords = rendezvous_origin(*ln.rendezvous).coords;
  } else {
    for (std::size_t s = 0; s < coords.size(); ++s)
      if (!space.component_at(s).is_circle()) coords[s] = space.component_at(s).lo;
  }
  if (!trim(x0).empty()) {
    for (const auto& item : split(x0, ",;")) {
      if (item.empty()) continue;
      auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("--x0: expected name=value, got '" + item + "'");
      std::string name = trim(item.substr(0, eq));
      auto slot = space.find_coordinate(name);
      if (!slot) throw ConfigError("--x0: unknown coordinate '" + name + "'");
      coords[*slot] = value_of(item.substr(eq + 1), ln.constants, "--x0");
    }
  }
  try {
    return make_state(space, std::move(coords));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("--x0: ") + e.what());
  }
}

std::vector<double> start_times(const LoadedNetwork& ln, const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ",;")) out.push_back(value_of(item, ln.constants, "--start-times"));
  if (out.size() != ln.network().space().node_count())
    throw ConfigError("--start-times: need one value per node");
  return out;
}

SampleAxis parse_axis(const LoadedNetwork& ln, const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("--grid: expected name=lo:hi:n, got '" + spec + "'");
  SampleAxis axis;
  axis.coordinate = trim(spec.substr(0, eq));
  auto parts = split(spec.substr(eq + 1), ":");
  if (parts.size() != 3) throw ConfigError("--grid: expected name=lo:hi:n, got '" + spec + "'");
  axis.lo = value_of(parts[0], ln.constants, "--grid");
  axis.hi = value_of(parts[1], ln.constants, "--grid");
  double n = value_of(parts[2], ln.constants, "--grid");
  if (!(n >= 0.0) || n != std::floor(n)) throw ConfigError("--grid: bin count must be a whole number");
  axis.count = static_cast<std::size_t>(n);
  if (!ln.network().space().find_coordinate(axis.coordinate))
    throw ConfigError("--grid: unknown coordinate '" + axis.coordinate + "'");
  return axis;
}

const FunctionalNetwork& need_functional(const LoadedNetwork& ln, const std::string& file) {
  if (!ln.functional) throw ConfigError(file + ": no functional section");
  return *ln.functional;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  Common common;
  std::string file, x0;
  double duration = -1.0;
  std::size_t stride = 1;
  std::string out = "csv";
};

int cmd_simulate(const SimulateArgs& a) {
  LoadedNetwork ln = load_file(a.file);
  const AsyncNetwork& net = ln.network();
  NetworkState x0 = base_state(ln, a.x0);
  IntegratorConfig cfg = a.common.cfg;
  cfg.output_stride = a.stride;
  double duration = a.duration < 0.0 ? cfg.t_max - x0.clock : a.duration;
  Trajectory tr = flow(net, x0, duration, cfg);

  Sink sink(a.common.output);
  std::ostream& os = sink.os();
  os << "# " << kVersion << " simulate\n";
  os << "t,structure";
  for (const auto& name : net.space().coordinate_names()) os << ',' << name;
  os << '\n';
  for (const auto& seg : tr.segments) {
    for (const auto& x : seg.samples) {
      os << num(x.clock) << ',' << seg.structure;
      for (double c : x.coords) os << ',' << num(c);
      os << '\n';
    }
  }
  const NetworkState& end = tr.final_state();
  bool at_budget = duration > 0.0 && end.clock >= cfg.t_max - cfg.tau_event;
  if (at_budget && ln.functional) {
    bool unfinished = false;
    for (std::size_t i = 0; i < ln.functional->node_count(); ++i)
      if (ln.functional->term_level(i, end) < -kSurfaceTolerance) unfinished = true;
    if (unfinished) os << "# deadlock: budget exhausted\n";
  }
  return kOk;
}

// -------------------------------------------------------------- transition

struct TransitionArgs {
  Common common;
  std::string file, x0, start_times;
  std::vector<std::string> grid;
  std::size_t random = 0;
  std::uint64_t seed = 1;
  std::string out = "json";
};

json coords_json(const PhaseSpace& space, const std::vector<double>& coords) {
  json j = json::object();
  auto names = space.coordinate_names();
  for (std::size_t s = 0; s < names.size(); ++s) j[names[s]] = coords[s];
  return j;
}

int cmd_transition(const TransitionArgs& a) {
  LoadedNetwork ln = load_file(a.file);
  const FunctionalNetwork& fn = need_functional(ln, a.file);
  const PhaseSpace& space = fn.space();
  NetworkState base = base_state(ln, a.x0);
  std::vector<double> T = start_times(ln, a.start_times);

  std::vector<NetworkState> samples;
  if (a.grid.empty()) {
    if (a.random > 0) throw ConfigError("--random needs at least one --grid axis for its ranges");
    samples.push_back(base);
  } else {
    std::vector<SampleAxis> axes;
    for (const auto& g : a.grid) axes.push_back(parse_axis(ln, g));
    samples = a.random > 0 ? random_samples(space, base, axes, a.random, a.seed) : grid_samples(space, base, axes);
  }
  DomainReport report = estimate_domain(fn, samples, a.common.cfg, a.common.threads, T);

  Sink sink(a.common.output);
  std::ostream& os = sink.os();
  auto names = space.coordinate_names();
  if (a.out == "csv") {
    os << "# " << kVersion << " transition\n";
    os << "index";
    for (const auto& n : names) os << ',' << n;
    os << ",status";
    for (const auto& n : space.nodes()) os << ",S_" << n.name;
    for (const auto& n : names) os << ",final_" << n;
    os << '\n';
    for (std::size_t s = 0; s < report.samples.size(); ++s) {
      const TransitionResult& r = report.results[s];
      os << s;
      for (double c : report.samples[s].coords) os << ',' << num(c);
      os << ',' << to_string(r.status);
      for (std::size_t i = 0; i < space.node_count(); ++i)
        os << ',' << (i < r.times.size() ? num(r.times[i]) : std::string("nan"));
      NetworkState g = r.terminal_state();
      for (std::size_t c = 0; c < names.size(); ++c)
        os << ',' << (c < g.coords.size() ? num(g.coords[c]) : std::string("nan"));
      os << '\n';
    }
    return kOk;
  }

  json j;
  j["version"] = kVersion;
  j["t_max"] = report.t_max;
  j["start_times"] = T;
  j["summary"] = {{"sampled", report.sampled},
                  {"completed", report.completed},
                  {"deadlocked", report.deadlocked},
                  {"errors", report.errors}};
  json deadlocked = json::array();
  json rows = json::array();
  for (std::size_t s = 0; s < report.samples.size(); ++s) {
    const TransitionResult& r = report.results[s];
    if (r.status == TransitionStatus::Deadlocked) deadlocked.push_back(s);
    json row;
    row["index"] = s;
    row["state"] = coords_json(space, report.samples[s].coords);
    row["status"] = to_string(r.status);
    json times = json::array();
    for (double t : r.times) times.push_back(std::isnan(t) ? json(nullptr) : json(t));
    row["times"] = times;
    if (!r.final_states.empty()) row["final"] = coords_json(space, r.terminal_state().coords);
    if (!r.warnings.empty()) row["warnings"] = r.warnings;
    if (!r.error.empty()) row["error"] = r.error;
    rows.push_back(std::move(row));
  }
  j["deadlocked"] = deadlocked;
  j["samples"] = rows;
  os << j.dump(2) << '\n';
  return kOk;
}

// --------------------------------------------------------------- factorize

struct FactorizeArgs {
  std::string file, output;
  std::string side = "both";
  std::string out = "text";
};

json factorization_json(const EventStructuredNetwork& esn, const Factorization& f) {
  json j;
  j["notation"] = notation(f);
  j["layers"] = f.layers;
  json b = json::array();
  for (const auto& row : f.boundaries) b.push_back(row);
  j["boundaries"] = b;
  auto problems = validate_factorization(esn, f);
  if (!problems.empty()) j["problems"] = problems;
  return j;
}

int cmd_factorize(const FactorizeArgs& a) {
  LoadedNetwork ln = load_file(a.file);
  if (!ln.events) throw ConfigError(a.file + ": no event_regions section");
  const EventStructuredNetwork& esn = *ln.events;
  std::vector<std::pair<std::string, Factorization>> sides;
  if (a.side != "right") sides.emplace_back("left", factorize_left(esn));
  if (a.side != "left") sides.emplace_back("right", factorize_right(esn));

  Sink sink(a.output);
  std::ostream& os = sink.os();
  if (a.out == "json") {
    json j;
    j["version"] = kVersion;
    for (const auto& [name, f] : sides) j[name] = factorization_json(esn, f);
    j["layers"] = layer_count_minimal(esn);
    os << j.dump(2) << '\n';
  } else {
    for (const auto& [name, f] : sides) os << name << ": " << notation(f) << '\n';
    os << "layers: " << layer_count_minimal(esn) << '\n';
  }
  return kOk;
}

// ------------------------------------------------------------------ verify

struct VerifyArgs {
  Common common;
  std::string file, second;
  std::size_t samples = 50;
  std::uint64_t seed = 1;
  double tolerance = 1e-6;
  double max_delay = 0.5;
  std::string out = "json";
};

json report_json(const CompositionReport& r) {
  json j;
  j["max_state_error"] = r.max_state_error;
  j["max_time_error"] = r.max_time_error;
  j["status_mismatches"] = r.status_mismatches;
  j["failures"] = r.failures;
  json errors = json::array();
  for (std::size_t s = 0; s < r.samples.size(); ++s)
    if (!r.samples[s].error.empty()) errors.push_back({{"sample", s}, {"error", r.samples[s].error}});
  if (!errors.empty()) j["errors"] = errors;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

// Random circle phases and start times around the file's initial state.
std::vector<CompositionSample> phase_samples(const LoadedNetwork& ln, std::size_t n, std::uint64_t seed,
                                             double max_delay) {
  const PhaseSpace& space = ln.network().space();
  NetworkState base = base_state(ln, "");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, circle::kTwoPi), delay(0.0, max_delay);
  std::vector<CompositionSample> out;
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> coords = base.coords;
    for (std::size_t c = 0; c < coords.size(); ++c)
      if (space.component_at(c).is_circle()) coords[c] = phase(rng);
    std::vector<double> T;
    for (std::size_t i = 0; i < space.node_count(); ++i) T.push_back(delay(rng));
    out.push_back({make_state(space, std::move(coords)), std::move(T)});
  }
  return out;
}

int cmd_verify(const VerifyArgs& a) {
  LoadedNetwork ln = load_file(a.file);
  json j;
  j["version"] = kVersion;
  j["samples"] = a.samples;
  j["seed"] = a.seed;
  j["tolerance"] = a.tolerance;
  json checks = json::object();
  double max_state = 0.0, max_time = 0.0;
  bool pass = true;
  auto record = [&](const std::string& name, const CompositionReport& r) {
    checks[name] = report_json(r);
    max_state = std::max(max_state, r.max_state_error);
    max_time = std::max(max_time, r.max_time_error);
    pass = pass && r.within(a.tolerance);
  };

  if (!a.second.empty()) {
    LoadedNetwork ln2 = load_file(a.second);
    const FunctionalNetwork& first = need_functional(ln, a.file);
    const FunctionalNetwork& second = need_functional(ln2, a.second);
    std::vector<std::string> warnings;
    concatenate(first, second, &warnings);  // BoundaryMismatch surfaces here
    auto samples = phase_samples(ln, a.samples, a.seed, a.max_delay);
    record("composition", verify_composition(first, second, samples, a.common.cfg, a.common.threads));
    if (!warnings.empty()) j["warnings"] = warnings;
  } else {
    if (!ln.events || !ln.rendezvous)
      throw ConfigError(a.file + ": verify needs event_regions and dynamics (or --second)");
    auto samples = rendezvous_samples(*ln.rendezvous, a.samples, a.seed, a.max_delay);
    RendezvousVerification v = verify_rendezvous(*ln.rendezvous, *ln.events, samples, a.common.cfg, a.common.threads);
    j["layers"] = v.layers;
    for (const auto& [name, r] : v.checks) record(name, r);
  }
  j["checks"] = checks;
  j["max_state_error"] = max_state;
  j["max_time_error"] = max_time;
  j["pass"] = pass;

  Sink sink(a.common.output);
  std::ostream& os = sink.os();
  if (a.out == "text") {
    for (const auto& [name, c] : checks.items())
      os << name << ": state " << num(c["max_state_error"].get<double>()) << ", time "
         << num(c["max_time_error"].get<double>()) << '\n';
    os << "max_state_error: " << num(max_state) << "\nmax_time_error: " << num(max_time) << '\n'
       << (pass ? "pass" : "FAIL") << '\n';
  } else {
    os << j.dump(2) << '\n';
  }
  return pass ? kOk : kTolerance;
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const CyclicPrecedence& e) {
    std::cerr << "asyncnet: " << e.what() << '\n';
    return kCyclic;
  } catch (const BoundaryMismatch& e) {
    std::cerr << "asyncnet: boundary mismatch: " << e.what() << '\n';
    return kConfig;
  } catch (const ConfigError& e) {
    std::cerr << "asyncnet: " << e.what() << '\n';
    return kConfig;
  } catch (const EvalError& e) {
    std::cerr << "asyncnet: " << e.what() << '\n';
    return kConfig;
  } catch (const ChatterDetected& e) {
    std::cerr << "asyncnet: " << e.what() << '\n';
    return kChatter;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate, factorize and verify asynchronous networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "integrate the network and write the trajectory as CSV");
  s->add_option("file", sim.file)->required()->check(CLI::ExistingFile);
  s->add_option("--x0", sim.x0, "initial coordinates, e.g. 'x1=-a, th1=0.5'");
  s->add_option("--duration", sim.duration, "length of the run (default: up to --t-max)");
  s->add_option("--stride", sim.stride, "write every n-th step (0: segment endpoints only)");
  s->add_option("--out", sim.out)->check(CLI::IsMember({"csv"}));
  sim.common.add(s, false);

  TransitionArgs tra;
  auto* t = app.add_subcommand("transition", "transition and timing functions, single point or grid");
  t->add_option("file", tra.file)->required()->check(CLI::ExistingFile);
  t->add_option("--x0", tra.x0, "initial coordinates");
  t->add_option("--grid", tra.grid, "swept coordinate 'name=lo:hi:n' (repeatable)");
  t->add_option("--random", tra.random, "draw this many random points in the grid ranges instead");
  t->add_option("--seed", tra.seed);
  t->add_option("--start-times", tra.start_times, "per-node start delays, comma separated");
  t->add_option("--out", tra.out)->check(CLI::IsMember({"json", "csv"}));
  tra.common.add(t, true);

  FactorizeArgs fac;
  auto* f = app.add_subcommand("factorize", "layer the events into a concatenation of amalgamations");
  f->add_option("file", fac.file)->required()->check(CLI::ExistingFile);
  f->add_option("--side", fac.side)->check(CLI::IsMember({"left", "right", "both"}));
  f->add_option("--out", fac.out)->check(CLI::IsMember({"text", "json"}));
  f->add_option("-o,--output", fac.output, "write here instead of stdout");

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "check realized factorizations or a two-stage composition");
  v->add_option("file", ver.file)->required()->check(CLI::ExistingFile);
  v->add_option("--second", ver.second, "second stage; checks the composition formula for FILE then FILE2")
      ->check(CLI::ExistingFile);
  v->add_option("--samples", ver.samples);
  v->add_option("--seed", ver.seed);
  v->add_option("--tolerance", ver.tolerance);
  v->add_option("--max-delay", ver.max_delay, "start delays are drawn from [0, max-delay)");
  v->add_option("--out", ver.out)->check(CLI::IsMember({"json", "text"}));
  ver.common.add(v, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }

  if (*s) return guarded([&] { return cmd_simulate(sim); });
  if (*t) return guarded([&] { return cmd_transition(tra); });
  if (*f) return guarded([&] { return cmd_factorize(fac); });
  return guarded([&] { return cmd_verify(ver); });
}
