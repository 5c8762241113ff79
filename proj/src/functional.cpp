#include "asyncnet/functional.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "asyncnet/circle.hpp"
#include "asyncnet/error.hpp"

namespace asyncnet {

namespace {

void check_level_functions(const AsyncNetwork& net, const std::vector<Expression>& levels, const char* what) {
  const PhaseSpace& space = net.space();
  if (levels.size() != space.node_count())
    throw ConfigError(std::string(what) + ": expected one level function per node");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const Expression& e = levels[i];
    check_type(e, false);
    for (const auto& v : free_variables(e)) {
      auto slot = space.find_coordinate(v);
      if (!slot) {
        if (v == "pi" || net.constants().count(v)) continue;
        throw ConfigError(std::string(what) + " level of node " + space.node(static_cast<int>(i + 1)).name +
                          " refers to unknown symbol '" + v + "'");
      }
      if (space.node_of_slot(*slot) != static_cast<int>(i + 1))
        throw ConfigError(std::string(what) + " level of node " + space.node(static_cast<int>(i + 1)).name +
                          " depends on foreign coordinate '" + v + "'");
    }
    CompiledExpr(e, net.symbols());
  }
}

// I_i and F_i must not meet. Sampled: from random points of the box, walk
// each coordinate of node i, bisect onto the zero set of the init level and
// look at the term level there.
void check_disjoint(const AsyncNetwork& net, const std::vector<Expression>& init,
                    const std::vector<Expression>& term) {
  const PhaseSpace& space = net.space();
  std::mt19937_64 rng(0x5eed);
  std::vector<CompiledExpr> ci, ct;
  for (std::size_t i = 0; i < init.size(); ++i) {
    ci.emplace_back(init[i], net.symbols());
    ct.emplace_back(term[i], net.symbols());
  }
  auto fail = [&](std::size_t i) {
    throw ConfigError("initialization and termination sets of node " + space.node(static_cast<int>(i + 1)).name +
                      " intersect");
  };
  for (std::size_t i = 0; i < init.size(); ++i)
    if (normalize(init[i]) == normalize(term[i])) fail(i);

  NetworkState x;
  x.coords.assign(space.dimension(), 0.0);
  std::vector<double> env;
  auto level = [&](const CompiledExpr& e, std::size_t slot, double v) {
    double keep = x.coords[slot];
    x.coords[slot] = v;
    net.fill_env(x, env);
    double r = e.real(env);
    x.coords[slot] = keep;
    return r;
  };
  constexpr int kSteps = 32;
  for (int sample = 0; sample < 64; ++sample) {
    for (std::size_t slot = 0; slot < x.coords.size(); ++slot) {
      const PhaseComponent& c = space.component_at(slot);
      double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      x.coords[slot] = c.is_circle() ? circle::wrap(u * circle::kTwoPi) : c.lo + u * (c.hi - c.lo);
    }
    for (std::size_t i = 0; i < ci.size(); ++i) {
      const int id = static_cast<int>(i + 1);
      for (std::size_t slot = space.offset(id); slot < space.offset(id) + space.width(id); ++slot) {
        const PhaseComponent& c = space.component_at(slot);
        double lo = c.is_circle() ? 0.0 : c.lo, hi = c.is_circle() ? circle::kTwoPi : c.hi;
        double prev_v = lo, prev = level(ci[i], slot, lo);
        for (int k = 1; k <= kSteps; ++k) {
          double v = lo + (hi - lo) * k / kSteps, cur = level(ci[i], slot, v);
          if (!std::isfinite(prev) || !std::isfinite(cur)) {
            prev_v = v, prev = cur;
            continue;
          }
          if (prev == 0.0 || (prev < 0.0) != (cur < 0.0)) {
            double a = prev_v, b = v, fa = prev;
            if (prev != 0.0)
              for (int it = 0; it < 60; ++it) {
                double m = 0.5 * (a + b), fm = level(ci[i], slot, m);
                if ((fm < 0.0) == (fa < 0.0)) a = m, fa = fm;
                else b = m;
              }
            if (std::fabs(level(ct[i], slot, a)) <= 1e-7) fail(i);
          }
          prev_v = v, prev = cur;
        }
      }
    }
  }
}

}  // namespace

FunctionalNetwork::FunctionalNetwork(AsyncNetwork net, std::vector<Expression> init, std::vector<Expression> term)
    : FunctionalNetwork(std::vector<FunctionalStage>{FunctionalStage{std::move(net), std::move(init), std::move(term)}}) {}

FunctionalNetwork::FunctionalNetwork(std::vector<FunctionalStage> stages) : stages_(std::move(stages)) {
  if (stages_.empty()) throw ConfigError("functional network needs at least one stage");
  for (const auto& st : stages_) {
    if (!(st.net.space() == space())) throw ConfigError("stages must share one phase space");
    check_level_functions(st.net, st.init, "init");
    check_level_functions(st.net, st.term, "term");
    check_disjoint(st.net, st.init, st.term);
  }
}

double FunctionalNetwork::init_level(std::size_t node, const NetworkState& x) const {
  const auto& st = first();
  return CompiledExpr(st.init.at(node), st.net.symbols()).real(st.net.make_env(x));
}

double FunctionalNetwork::term_level(std::size_t node, const NetworkState& x) const {
  const auto& st = last();
  return CompiledExpr(st.term.at(node), st.net.symbols()).real(st.net.make_env(x));
}

std::string to_string(TransitionStatus s) {
  switch (s) {
    case TransitionStatus::Completed: return "completed";
    case TransitionStatus::Deadlocked: return "deadlocked";
    case TransitionStatus::Error: return "error";
  }
  return "error";
}

NetworkState TransitionResult::terminal_state() const {
  NetworkState x;
  for (const auto& c : final_states) x.coords.insert(x.coords.end(), c.begin(), c.end());
  double clock = 0.0;
  for (double t : times)
    if (!std::isnan(t)) clock = std::max(clock, t);
  x.clock = clock;
  return x;
}

TransitionResult run_generalized(const FunctionalNetwork& fn, const NetworkState& x0,
                                 const std::vector<double>& start_times, const IntegratorConfig& cfg,
                                 const TransitionOptions& opts) {
  const PhaseSpace& space = fn.space();
  const std::size_t k = space.node_count();
  validate_state(space, x0);
  if (!start_times.empty() && start_times.size() != k)
    throw ConfigError("start times need one entry per node");
  for (double t : start_times)
    if (!(t >= 0.0)) throw ConfigError("start times must be nonnegative");
  for (std::size_t i = 0; i < k; ++i) {
    double level = fn.init_level(i, x0);
    if (!(std::fabs(level) <= opts.init_tolerance))
      throw ConfigError("initial state of node " + space.node(static_cast<int>(i + 1)).name +
                        " is not on its initialization set (level " + std::to_string(level) + ")");
  }

  std::vector<detail::StageSpec> specs;
  for (const auto& st : fn.stages()) specs.push_back(detail::StageSpec{&st.net, st.term});
  std::vector<double> release(k, x0.clock);
  for (std::size_t i = 0; i < start_times.size(); ++i) release[i] = x0.clock + start_times[i];

  IntegratorConfig run_cfg = cfg;
  if (!opts.keep_trajectory) run_cfg.output_stride = 0;
  detail::SimulationResult sim =
      detail::simulate(specs, x0, release, std::numeric_limits<double>::infinity(), run_cfg);

  TransitionResult out;
  out.t_max = cfg.t_max;
  out.warnings = std::move(sim.warnings);
  const NetworkState& last = sim.trajectory.final_state();
  bool all = true;
  for (std::size_t i = 0; i < k; ++i) {
    int id = static_cast<int>(i + 1);
    if (sim.finish_time[i]) {
      out.times.push_back(*sim.finish_time[i] - x0.clock);
      out.final_states.push_back(sim.finish_coords[i]);
    } else {
      all = false;
      out.times.push_back(std::numeric_limits<double>::quiet_NaN());
      auto span = node_coords(space, last, id);
      out.final_states.emplace_back(span.begin(), span.end());
    }
  }
  out.status = all ? TransitionStatus::Completed : TransitionStatus::Deadlocked;
  if (opts.keep_trajectory) out.trajectory = std::move(sim.trajectory);
  return out;
}

TransitionResult run_transition(const FunctionalNetwork& fn, const NetworkState& x0, const IntegratorConfig& cfg,
                                const TransitionOptions& opts) {
  return run_generalized(fn, x0, {}, cfg, opts);
}

std::vector<NetworkState> grid_samples(const PhaseSpace& space, const NetworkState& base,
                                       const std::vector<SampleAxis>& axes) {
  std::vector<std::size_t> slots;
  std::size_t total = 1;
  for (const auto& a : axes) {
    auto slot = space.find_coordinate(a.coordinate);
    if (!slot) throw ConfigError("unknown coordinate '" + a.coordinate + "' in sample axis");
    slots.push_back(*slot);
    total *= a.count;
  }
  std::vector<NetworkState> out;
  if (axes.empty() || total == 0) return out;
  out.reserve(total);
  std::vector<std::size_t> idx(axes.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::vector<double> coords = base.coords;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      double frac = static_cast<double>(idx[a]) / static_cast<double>(axes[a].count);
      coords[slots[a]] = axes[a].lo + (axes[a].hi - axes[a].lo) * frac;
    }
    out.push_back(make_state(space, std::move(coords), base.clock));
    for (std::size_t a = axes.size(); a-- > 0;) {
      if (++idx[a] < axes[a].count) break;
      idx[a] = 0;
    }
  }
  return out;
}

std::vector<NetworkState> random_samples(const PhaseSpace& space, const NetworkState& base,
                                         const std::vector<SampleAxis>& axes, std::size_t n,
                                         std::uint64_t seed) {
  std::vector<std::size_t> slots;
  for (const auto& a : axes) {
    auto slot = space.find_coordinate(a.coordinate);
    if (!slot) throw ConfigError("unknown coordinate '" + a.coordinate + "' in sample axis");
    slots.push_back(*slot);
  }
  std::mt19937_64 rng(seed);
  std::vector<NetworkState> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> coords = base.coords;
    for (std::size_t a = 0; a < axes.size(); ++a)
      coords[slots[a]] = std::uniform_real_distribution<double>(axes[a].lo, axes[a].hi)(rng);
    out.push_back(make_state(space, std::move(coords), base.clock));
  }
  return out;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& task) {
  unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) task(i);
      } catch (...) {
        failures[w] = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
}

DomainReport estimate_domain(const FunctionalNetwork& fn, const std::vector<NetworkState>& samples,
                             const IntegratorConfig& cfg, unsigned threads, const std::vector<double>& start_times) {
  DomainReport report;
  report.t_max = cfg.t_max;
  report.samples = samples;
  report.results.resize(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    try {
      report.results[i] = run_generalized(fn, samples[i], start_times, cfg);
    } catch (const std::exception& e) {
      TransitionResult r;
      r.status = TransitionStatus::Error;
      r.t_max = cfg.t_max;
      r.error = e.what();
      report.results[i] = std::move(r);
    }
  });
  report.sampled = samples.size();
  for (const auto& r : report.results) {
    if (r.status == TransitionStatus::Completed) ++report.completed;
    else if (r.status == TransitionStatus::Deadlocked) ++report.deadlocked;
    else ++report.errors;
  }
  return report;
}

}  // namespace asyncnet
