#include "asyncnet/semiflow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "asyncnet/circle.hpp"
#include "asyncnet/error.hpp"

namespace asyncnet {

void IntegratorConfig::validate() const {
  if (!(step > 0.0)) throw ConfigError("step must be positive");
  if (!(tau_event > 0.0)) throw ConfigError("tau_event must be positive");
  if (!(tau_event < step)) throw ConfigError("tau_event must be smaller than step");
  if (!(min_dwell >= 0.0)) throw ConfigError("min_dwell must be nonnegative");
  if (!(t_max > 0.0)) throw ConfigError("t_max must be positive");
  if (!(min_dwell < t_max)) throw ConfigError("min_dwell must be smaller than t_max");
  if (chatter_limit < 1) throw ConfigError("chatter_limit must be at least 1");
}

std::vector<std::string> Trajectory::structure_sequence() const {
  std::vector<std::string> out;
  for (const auto& s : segments) out.push_back(s.structure);
  return out;
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

using Key = std::vector<std::size_t>;

struct Stage {
  const AsyncNetwork* net;
  std::vector<CompiledExpr> term;  // per node, empty when unmonitored
  std::size_t key_offset;
};

class Engine {
 public:
  Engine(std::span<const detail::StageSpec> specs, const NetworkState& x0, std::span<const double> release,
         const IntegratorConfig& cfg)
      : cfg_(cfg), space_(specs.front().net->space()) {
    const std::size_t k = space_.node_count();
    std::size_t offset = 0;
    for (const auto& spec : specs) {
      if (!(spec.net->space() == space_)) throw ConfigError("stages disagree on the phase space");
      Stage st{spec.net, {}, offset};
      if (!spec.term.empty()) {
        if (spec.term.size() != k) throw ConfigError("termination set needs one level function per node");
        for (const auto& e : spec.term) st.term.emplace_back(e, spec.net->symbols());
      }
      offset += spec.net->blocks().size();
      stages_.push_back(std::move(st));
    }
    key_size_ = offset;
    stage_of_.assign(k, 0);
    held_.assign(k, false);
    release_.assign(k, 0.0);
    for (std::size_t i = 0; i < k && i < release.size(); ++i) release_[i] = release[i];
    ghost_.assign(stages_.size(), std::vector<double>(space_.dimension(), 0.0));
    envs_.resize(stages_.size());
    finish_time_.assign(k, std::nullopt);
    finish_coords_.assign(k, {});
    for (std::size_t i = 0; i < k; ++i) held_[i] = release_[i] > x0.clock;
    refresh_membership();
  }

  bool monitoring() const {
    return std::all_of(stages_.begin(), stages_.end(), [](const Stage& s) { return !s.term.empty(); });
  }

  bool all_finished() const {
    return std::all_of(finish_time_.begin(), finish_time_.end(), [](const auto& t) { return t.has_value(); });
  }

  const std::vector<std::optional<double>>& finish_time() const { return finish_time_; }
  const std::vector<std::vector<double>>& finish_coords() const { return finish_coords_; }
  std::vector<std::string>& warnings() { return warnings_; }

  double next_release(double t) const {
    double next = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < held_.size(); ++i)
      if (held_[i] && release_[i] > t) next = std::min(next, release_[i]);
    return next;
  }

  void apply_releases(double t) {
    for (std::size_t i = 0; i < held_.size(); ++i)
      if (held_[i] && release_[i] <= t) held_[i] = false;
  }

  const std::vector<double>& env(std::size_t s, const NetworkState& y) {
    std::vector<double>& env = envs_[s];
    stages_[s].net->fill_env(y, env);
    for (std::size_t i = 0; i < stage_of_.size(); ++i) {
      if (stage_of_[i] <= s) continue;
      int id = static_cast<int>(i + 1);
      std::size_t off = space_.offset(id);
      for (std::size_t c = 0; c < space_.width(id); ++c) env[off + c] = ghost_[s][off + c];
    }
    return env;
  }

  Key key_at(const NetworkState& y) {
    Key key(key_size_, kNone);
    for (std::size_t s = 0; s < stages_.size(); ++s) {
      if (!stage_has_member_[s]) continue;
      const auto& blocks = stages_[s].net->compiled().blocks;
      const std::vector<double>* e = nullptr;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (!block_has_member_[stages_[s].key_offset + b]) continue;
        if (!e) e = &env(s, y);
        key[stages_[s].key_offset + b] = blocks[b].select(*e);
      }
    }
    return key;
  }

  // Truth values of the guard comparisons of the blocks that have members.
  std::vector<bool> atoms_at(const NetworkState& y) {
    std::vector<bool> out;
    for (std::size_t s = 0; s < stages_.size(); ++s) {
      if (!stage_has_member_[s]) continue;
      const auto& blocks = stages_[s].net->compiled().blocks;
      const std::vector<double>* e = nullptr;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (!block_has_member_[stages_[s].key_offset + b]) continue;
        if (!e) e = &env(s, y);
        for (const auto& a : blocks[b].atoms) out.push_back(a.truth(*e));
      }
    }
    return out;
  }

  // Outward rates are zeroed for coordinates that sit on an interval bound
  // in `base`, the state the step starts from.
  void derivative(const NetworkState& y, const NetworkState& base, const Key& key, std::vector<double>& out) {
    out.assign(space_.dimension(), 0.0);
    for (std::size_t s = 0; s < stages_.size(); ++s) {
      if (!stage_has_member_[s]) continue;
      const auto& blocks = stages_[s].net->compiled().blocks;
      const std::vector<double>* e = nullptr;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        std::size_t choice = key[stages_[s].key_offset + b];
        if (choice == kNone) continue;
        const auto& cs = blocks[b].structures[choice];
        for (std::size_t r = 0; r < cs.slots.size(); ++r) {
          std::size_t slot = cs.slots[r];
          std::size_t node = static_cast<std::size_t>(space_.node_of_slot(slot) - 1);
          if (stage_of_[node] != s || held_[node] || cs.zero[r]) continue;
          if (!e) e = &env(s, y);
          double rate = cs.rates[r].real(*e);
          const PhaseComponent& comp = space_.component_at(slot);
          if (!comp.is_circle()) {
            if (base.coords[slot] >= comp.hi && rate > 0.0) rate = 0.0;
            if (base.coords[slot] <= comp.lo && rate < 0.0) rate = 0.0;
          }
          out[slot] = rate;
        }
      }
    }
  }

  // y = x + a * k, coordinate-wise, keeping circles on the lattice. Interval
  // coordinates are clamped only for the final result of a step.
  void offset_state(const NetworkState& x, double a, const std::vector<double>& k, NetworkState& y,
                    bool clamp) const {
    y.coords.resize(x.coords.size());
    for (std::size_t slot = 0; slot < x.coords.size(); ++slot) {
      const PhaseComponent& comp = space_.component_at(slot);
      double inc = a * k[slot];
      if (comp.is_circle()) {
        y.coords[slot] = inc == 0.0 ? x.coords[slot] : circle::wrap(x.coords[slot] + circle::quantize(inc));
      } else {
        double v = x.coords[slot] + inc;
        y.coords[slot] = clamp ? std::clamp(v, comp.lo, comp.hi) : v;
      }
    }
  }

  NetworkState advance(const NetworkState& x, const Key& key, double h) {
    NetworkState y2, y3, y4, out;
    derivative(x, x, key, k1_);
    y2.clock = x.clock + 0.5 * h;
    offset_state(x, 0.5 * h, k1_, y2, false);
    derivative(y2, x, key, k2_);
    y3.clock = y2.clock;
    offset_state(x, 0.5 * h, k2_, y3, false);
    derivative(y3, x, key, k3_);
    y4.clock = x.clock + h;
    offset_state(x, h, k3_, y4, false);
    derivative(y4, x, key, k4_);
    for (std::size_t i = 0; i < k1_.size(); ++i)
      mix_[i] = (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]) / 6.0;
    out.clock = x.clock + h;
    offset_state(x, h, mix_, out, true);
    return out;
  }

  double level(std::size_t node, const NetworkState& y) {
    std::size_t s = stage_of_[node];
    return stages_[s].term[node].real(env(s, y));
  }

  bool crossing_at(const NetworkState& y) {
    if (!monitoring()) return false;
    for (std::size_t i = 0; i < stage_of_.size(); ++i) {
      if (stage_of_[i] >= stages_.size() || held_[i]) continue;
      if (level(i, y) >= 0.0) return true;
    }
    return false;
  }

  /// Processes every termination crossing at `y`; returns true if any node
  /// changed stage. `prev` is the state just before the crossing (for the
  /// transversality estimate), `dt` the time between them.
  bool process_crossings(const NetworkState& y, const NetworkState* prev, double dt) {
    if (!monitoring()) return false;
    bool changed = false;
    for (std::size_t i = 0; i < stage_of_.size(); ++i) {
      std::size_t guard = 0;
      while (stage_of_[i] < stages_.size() && !held_[i] && guard++ <= stages_.size()) {
        double now = level(i, y);
        if (now < 0.0) break;
        std::size_t s = stage_of_[i];
        if (prev && dt > 0.0) {
          double slope = (now - level(i, *prev)) / dt;
          if (std::fabs(slope) < 1e-6) {
            warnings_.push_back("node " + space_.node(static_cast<int>(i + 1)).name +
                                " meets its termination set nearly tangentially at t=" +
                                std::to_string(y.clock));
          }
        }
        int id = static_cast<int>(i + 1);
        std::size_t off = space_.offset(id);
        for (std::size_t c = 0; c < space_.width(id); ++c) ghost_[s][off + c] = y.coords[off + c];
        ++stage_of_[i];
        changed = true;
        if (stage_of_[i] == stages_.size()) {
          finish_time_[i] = y.clock;
          auto span = node_coords(space_, y, id);
          finish_coords_[i].assign(span.begin(), span.end());
        }
      }
    }
    if (changed) refresh_membership();
    return changed;
  }

  std::string describe(const Key& key) const {
    std::vector<const ConnectionStructure*> parts;
    std::vector<bool> trivial;
    for (const auto& st : stages_) {
      const auto& blocks = st.net->blocks();
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        std::size_t choice = key[st.key_offset + b];
        if (choice == kNone) continue;
        parts.push_back(&blocks[b].structures[choice]);
        trivial.push_back(blocks[b].structures.size() == 1 && blocks[b].structures[0].edge_free());
      }
    }
    if (parts.empty()) return "frozen";
    std::string name;
    bool all_trivial = std::all_of(trivial.begin(), trivial.end(), [](bool t) { return t; });
    for (std::size_t p = 0; p < parts.size(); ++p) {
      if (parts.size() > 1 && trivial[p] && !all_trivial) continue;
      if (!name.empty()) name += " v ";
      name += parts[p]->name;
      if (all_trivial) break;
    }
    return name;
  }

  Selection selection_of(const Key& key) const {
    Selection s;
    s.choice.assign(key.begin(), key.end());
    return s;
  }

  // Smallest tau in (0, h] (to tau_event) at which `hit` holds after
  // integrating from x under `key`.
  template <class Hit>
  std::pair<double, NetworkState> bisect(const NetworkState& x, const Key& key, double h, Hit&& hit,
                                         NetworkState* before = nullptr, double* before_tau = nullptr) {
    double lo = 0.0;
    double hi = h;
    while (hi - lo > cfg_.tau_event) {
      double mid = 0.5 * (lo + hi);
      if (hit(advance(x, key, mid))) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    if (before) *before = lo > 0.0 ? advance(x, key, lo) : x;
    if (before_tau) *before_tau = lo;
    return {hi, advance(x, key, hi)};
  }

  const IntegratorConfig& cfg() const { return cfg_; }

 private:
  void refresh_membership() {
    stage_has_member_.assign(stages_.size(), false);
    block_has_member_.assign(key_size_, false);
    for (std::size_t i = 0; i < stage_of_.size(); ++i) {
      std::size_t s = stage_of_[i];
      if (s >= stages_.size()) continue;
      stage_has_member_[s] = true;
      int owner = stages_[s].net->owner_block(static_cast<int>(i + 1));
      block_has_member_[stages_[s].key_offset + static_cast<std::size_t>(owner)] = true;
    }
  }

  IntegratorConfig cfg_;
  const PhaseSpace& space_;
  std::vector<Stage> stages_;
  std::size_t key_size_ = 0;
  std::vector<std::size_t> stage_of_;
  std::vector<bool> held_;
  std::vector<double> release_;
  std::vector<std::vector<double>> ghost_;
  std::vector<std::vector<double>> envs_;
  std::vector<bool> stage_has_member_;
  std::vector<bool> block_has_member_;
  std::vector<std::optional<double>> finish_time_;
  std::vector<std::vector<double>> finish_coords_;
  std::vector<std::string> warnings_;
  std::vector<double> k1_, k2_, k3_, k4_;
  std::vector<double> mix_ = std::vector<double>(space_.dimension(), 0.0);
};

class Recorder {
 public:
  Recorder(Trajectory& traj, std::size_t stride) : traj_(traj), stride_(stride) {}

  void open(const std::string& name, const Selection& sel, const NetworkState& x) {
    traj_.segments.push_back(Segment{name, sel, x.clock, x.clock, {x}});
    since_sample_ = 0;
  }

  void step(const NetworkState& x, bool force) {
    Segment& seg = traj_.segments.back();
    seg.t_end = x.clock;
    ++since_sample_;
    if (force || (stride_ > 0 && since_sample_ >= stride_)) {
      seg.samples.push_back(x);
      since_sample_ = 0;
    } else {
      pending_ = x;
      has_pending_ = true;
    }
    if (force) has_pending_ = false;
  }

  void close(const NetworkState& x) {
    Segment& seg = traj_.segments.back();
    seg.t_end = x.clock;
    if (seg.samples.back().clock != x.clock || seg.samples.size() == 1) {
      if (!(seg.samples.size() == 1 && seg.samples.back().clock == x.clock)) seg.samples.push_back(x);
    }
    has_pending_ = false;
  }

 private:
  Trajectory& traj_;
  std::size_t stride_;
  std::size_t since_sample_ = 0;
  NetworkState pending_;
  bool has_pending_ = false;
};

}  // namespace

NetworkState step_smooth(const AsyncNetwork& net, const NetworkState& state, const Selection& selection,
                         double h) {
  if (!(h > 0.0)) throw ConfigError("step must be positive");
  detail::StageSpec spec{&net, {}};
  IntegratorConfig cfg;
  Engine engine(std::span(&spec, 1), state, {}, cfg);
  return engine.advance(state, selection.choice, h);
}

std::pair<double, NetworkState> locate_event(const AsyncNetwork& net, const NetworkState& state_a,
                                             const NetworkState& state_b, const IntegratorConfig& cfg) {
  detail::StageSpec spec{&net, {}};
  Engine engine(std::span(&spec, 1), state_a, {}, cfg);
  Key key = engine.key_at(state_a);
  double h = state_b.clock - state_a.clock;
  if (!(h > 0.0)) throw ConfigError("event bracket must have positive length");
  if (engine.key_at(state_b) == key) throw PreconditionFailed("event bracket contains no structure switch");
  auto [tau, y] = engine.bisect(state_a, key, h, [&](const NetworkState& s) { return engine.key_at(s) != key; });
  return {state_a.clock + tau, y};
}

namespace detail {

SimulationResult simulate(std::span<const StageSpec> stages, const NetworkState& x0,
                          std::span<const double> release, double t_end, const IntegratorConfig& cfg) {
  cfg.validate();
  if (stages.empty()) throw ConfigError("nothing to simulate");
  validate_state(stages.front().net->space(), x0);

  SimulationResult result;
  Engine engine(stages, x0, release, cfg);
  Recorder rec(result.trajectory, cfg.output_stride);

  NetworkState x = x0;
  double lock_until = -std::numeric_limits<double>::infinity();
  std::deque<double> recent_switches;
  const double window = std::max(cfg.min_dwell, cfg.step);

  engine.process_crossings(x, nullptr, 0.0);
  Key key = engine.key_at(x);
  rec.open(engine.describe(key), engine.selection_of(key), x);

  auto switch_to = [&](Key next) {
    rec.close(x);
    key = std::move(next);
    result.trajectory.switch_times.push_back(x.clock);
    rec.open(engine.describe(key), engine.selection_of(key), x);
    recent_switches.push_back(x.clock);
    while (!recent_switches.empty() && recent_switches.front() < x.clock - window) recent_switches.pop_front();
    if (static_cast<int>(recent_switches.size()) > cfg.chatter_limit)
      throw ChatterDetected(x.clock, static_cast<int>(recent_switches.size()));
    if (cfg.min_dwell > 0.0) lock_until = x.clock + cfg.min_dwell;
  };

  const bool monitoring = engine.monitoring();
  for (;;) {
    if (monitoring && engine.all_finished()) break;
    if (x.clock >= t_end) break;
    if (x.clock >= cfg.t_max) {
      result.budget_exhausted = true;
      break;
    }
    double t_next = std::min({x.clock + cfg.step, t_end, cfg.t_max, engine.next_release(x.clock)});
    if (lock_until > x.clock) t_next = std::min(t_next, lock_until);
    double h = t_next - x.clock;
    if (!(h > 0.0)) break;

    const bool locked = lock_until > x.clock;
    // A guard comparison flipping also stops the step, even when the key at
    // the far end is unchanged: the step may have jumped a thin region.
    const std::vector<bool> atoms = locked ? std::vector<bool>{} : engine.atoms_at(x);
    auto hit = [&](const NetworkState& y) {
      return (!locked && (engine.key_at(y) != key || engine.atoms_at(y) != atoms)) || engine.crossing_at(y);
    };

    NetworkState y = engine.advance(x, key, h);
    y.clock = t_next;
    bool event = false;
    if (hit(y)) {
      NetworkState before;
      double before_tau = 0.0;
      auto [tau, located] = engine.bisect(x, key, h, hit, &before, &before_tau);
      if (tau == h) located.clock = t_next;
      x = std::move(located);
      rec.step(x, true);
      bool stage_change = engine.process_crossings(x, &before, tau - before_tau);
      event = true;
      if (stage_change) {
        if (monitoring && engine.all_finished()) break;
        Key next = engine.key_at(x);
        if (next != key) switch_to(std::move(next));
        event = false;
      }
    } else {
      x = std::move(y);
      rec.step(x, false);
    }

    engine.apply_releases(x.clock);
    if (event || !(lock_until > x.clock)) {
      if (lock_until > x.clock) continue;
      Key next = engine.key_at(x);
      if (next != key) switch_to(std::move(next));
    }
  }
  rec.close(x);
  result.trajectory.budget_exhausted = result.budget_exhausted;
  result.finish_time = engine.finish_time();
  result.finish_coords = engine.finish_coords();
  result.warnings = std::move(engine.warnings());
  result.end_time = x.clock;
  return result;
}

}  // namespace detail

Trajectory flow(const AsyncNetwork& net, const NetworkState& state0, double duration, const IntegratorConfig& cfg) {
  if (!(duration >= 0.0)) throw ConfigError("duration must be nonnegative (forward time only)");
  if (state0.clock + duration > cfg.t_max)
    throw ConfigError("duration exceeds the forward-time budget t_max");
  detail::StageSpec spec{&net, {}};
  return detail::simulate(std::span(&spec, 1), state0, {}, state0.clock + duration, cfg).trajectory;
}

}  // namespace asyncnet
