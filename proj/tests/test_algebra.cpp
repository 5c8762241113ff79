#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "asyncnet/algebra.hpp"
#include "asyncnet/circle.hpp"
#include "asyncnet/error.hpp"
#include "asyncnet/netfile.hpp"
#include "asyncnet/rendezvous.hpp"
#include "support.hpp"

using namespace asyncnet;
using testing::decoupled;

namespace {

FunctionalNetwork load_fn(const char* name) { return *load_file(testing::fixture(name)).functional; }

double max_gap(const TransitionResult& a, const TransitionResult& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    worst = std::max(worst, std::fabs(a.times[i] - b.times[i]));
    for (std::size_t c = 0; c < a.final_states[i].size(); ++c)
      worst = std::max(worst, std::fabs(a.final_states[i][c] - b.final_states[i][c]));
  }
  return worst;
}

// Random phases on both trains, random start delays.
std::vector<CompositionSample> phase_samples(const PhaseSpace& space, const NetworkState& base, std::size_t n,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2 * circle::kPi), delay(0.0, 0.5);
  std::vector<CompositionSample> out;
  for (std::size_t s = 0; s < n; ++s) {
    CompositionSample c{base, {}};
    c.state.coords[*space.find_coordinate("th1")] = phase(rng);
    c.state.coords[*space.find_coordinate("th2")] = phase(rng);
    for (std::size_t i = 0; i < space.node_count(); ++i) c.start_times.push_back(delay(rng));
    out.push_back(std::move(c));
  }
  return out;
}

const char* kHold = R"(asyncnet v1
nodes
  A: x in [0, 1]
structures
  hold: 0 -> A
fields
  hold: x' = 0
events
  default hold
functional
  A: init x; term x - 1
)";

// Continues stage 1 of the railway with no interaction at all.
const char* kCoast = R"(asyncnet v1
constants
  a = 2
  b = 2
  omega = 1
nodes
  T1: x1 in [-3, 3], th1 circle
  T2: x2 in [-3, 3], th2 circle
structures
  free:
fields
  free: x1' = 1; th1' = omega; x2' = -1; th2' = omega
events
  default free
functional
  T1: init x1 - b; term x1 - 2.5
  T2: init -a - x2; term -2.5 - x2
)";

}  // namespace

TEST_CASE("product of two nodes runs both independently") {
  FunctionalNetwork a = decoupled({0.5}), b = decoupled({2.0}, 2);
  FunctionalNetwork ab = product({a, b});
  REQUIRE(ab.node_count() == 2);
  CHECK(ab.space().node(2).components[0].name == "p2");
  CHECK_THROWS_AS(product({a, decoupled({1.0})}), ConfigError);  // clashing node names
  IntegratorConfig cfg;
  TransitionResult r = run_generalized(ab, make_state(ab.space(), {0, 0}), {0.2, 0.1}, cfg);
  REQUIRE(r.completed());
  CHECK(std::fabs(r.times[0] - 2.2) <= cfg.tau_event);
  CHECK(std::fabs(r.times[1] - 0.6) <= cfg.tau_event);
  CHECK(is_trivial(ab));

  // reversed embedding
  FunctionalNetwork ba = product({a, b}, NodeEmbedding{{{2}, {1}}});
  TransitionResult q = run_transition(ba, make_state(ba.space(), {0, 0}), cfg);
  CHECK(std::fabs(q.times[0] - 0.5) <= cfg.tau_event);
  CHECK(std::fabs(q.times[1] - 2.0) <= cfg.tau_event);
  CHECK_THROWS_AS(product({a, b}, NodeEmbedding{{{1}, {1}}}), ConfigError);
}

TEST_CASE("product with one factor is the factor") {
  FunctionalNetwork rail = load_fn("railway.net");
  FunctionalNetwork p = product({rail});
  IntegratorConfig cfg;
  for (double phi : {0.0, 1.0, 2.5}) {
    NetworkState x = make_state(rail.space(), {-1, phi, 1, 0});
    CHECK(max_gap(run_transition(rail, x, cfg), run_transition(p, x, cfg)) == 0.0);
  }
}

TEST_CASE("railway inside a product is unaffected by a bystander") {
  FunctionalNetwork rail = load_fn("railway.net");
  FunctionalNetwork both = product({rail, decoupled({0.3}, 3)});
  REQUIRE(both.node_count() == 3);
  CHECK_FALSE(is_trivial(both));
  IntegratorConfig cfg;
  for (double phi : {0.0, 1.0, 2.5}) {
    TransitionResult alone = run_transition(rail, make_state(rail.space(), {-1, phi, 1, 0}), cfg);
    TransitionResult r = run_transition(both, make_state(both.space(), {-1, phi, 1, 0, 0}), cfg);
    REQUIRE(r.completed());
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(std::fabs(r.times[i] - alone.times[i]) <= 1e-9);
      CHECK(std::fabs(r.final_states[i][1] - alone.final_states[i][1]) <= 1e-9);
    }
    CHECK(std::fabs(r.times[2] - 1.0 / 0.3) <= cfg.tau_event);
  }
}

TEST_CASE("triviality") {
  CHECK_FALSE(is_trivial(load_fn("railway.net")));
  CHECK(is_trivial(decoupled({1.0, 1.0})));
  CHECK(is_trivial(*load_text(kCoast).functional));
  CHECK_FALSE(is_trivial(*load_text(kHold).functional));  // constraint edge only
}

TEST_CASE("amalgamation of two rendezvous on eleven nodes") {
  // Events X on N7..N10 and Y on N2..N5; N1, N6 and N11 run free.
  std::vector<double> speeds{1.0, 0.8, 1.2, 0.9, 1.1, 0.7, 1.3, 0.6, 1.0, 1.25, 0.95};
  RendezvousModel model = RendezvousModel::standard(11, speeds);
  std::vector<EventRegion> events(2);
  events[0].name = "X";
  for (int i = 7; i <= 10; ++i) events[0].intervals.push_back({i, 0.4, 0.5});
  events[1].name = "Y";
  for (int i = 2; i <= 5; ++i) events[1].intervals.push_back({i, 0.3, 0.6});
  EventStructuredNetwork esn(11, events);
  FragmentBuilder fragment = rendezvous_fragments(model, esn);
  FreeBuilder free_run = rendezvous_free_run(model);
  std::vector<double> lo(11, 0.0), hi(11, 1.0);

  std::vector<int> sx{7, 8, 9, 10}, sy{2, 3, 4, 5}, rest_x{1, 2, 3, 4, 5, 6, 11}, rest_y{1, 6, 7, 8, 9, 10, 11};
  FunctionalNetwork fx = fragment(events[0], lo, hi), fy = fragment(events[1], lo, hi);
  FunctionalNetwork px = product({fx, free_run(rest_x, lo, hi)}, NodeEmbedding{{sx, rest_x}});
  FunctionalNetwork py = product({fy, free_run(rest_y, lo, hi)}, NodeEmbedding{{sy, rest_y}});
  FunctionalNetwork amalgam = amalgamate({px, py}, {sx, sy});
  REQUIRE(amalgam.node_count() == 11);

  // Hitting times are only located to tau_event; keep that well under the
  // comparison tolerance.
  IntegratorConfig cfg;
  cfg.tau_event = 1e-12;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> delay(0.0, 0.5);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> T(11);
    for (auto& t : T) t = delay(rng);
    TransitionResult whole = run_generalized(amalgam, rendezvous_origin(model), T, cfg);
    REQUIRE(whole.completed());

    auto check_piece = [&](const FunctionalNetwork& piece, const std::vector<int>& ids) {
      std::vector<double> Tp;
      for (int id : ids) Tp.push_back(T[static_cast<std::size_t>(id - 1)]);
      NetworkState x0 = make_state(piece.space(), std::vector<double>(ids.size(), 0.0));
      TransitionResult r = run_generalized(piece, x0, Tp, cfg);
      REQUIRE(r.completed());
      for (std::size_t j = 0; j < ids.size(); ++j) {
        std::size_t i = static_cast<std::size_t>(ids[j] - 1);
        CHECK(std::fabs(r.times[j] - whole.times[i]) <= 1e-9);
        CHECK(std::fabs(r.final_states[j][0] - whole.final_states[i][0]) <= 1e-9);
      }
    };
    check_piece(fx, sx);
    check_piece(fy, sy);
    check_piece(decoupled({speeds[0], speeds[5], speeds[10]}), {1, 6, 11});

    // Closed form: every participant waits at the entry until the last one
    // arrives, then runs out at its own speed.
    for (const auto* ids : {&sx, &sy}) {
      double entry = ids == &sx ? 0.4 : 0.3, last = 0.0;
      for (int id : *ids) {
        std::size_t i = static_cast<std::size_t>(id - 1);
        last = std::max(last, T[i] + entry / speeds[i]);
      }
      for (int id : *ids) {
        std::size_t i = static_cast<std::size_t>(id - 1);
        CHECK(std::fabs(whole.times[i] - (last + (1.0 - entry) / speeds[i])) <= 1e-6);
      }
    }
  }

  // A single part is the part itself.
  FunctionalNetwork lone = amalgamate({px}, {sx});
  std::vector<double> T(11, 0.1);
  CHECK(max_gap(run_generalized(lone, rendezvous_origin(model), T, cfg),
                run_generalized(px, rendezvous_origin(model), T, cfg)) <= 1e-12);

  CHECK_THROWS_AS(amalgamate({px, py}, {sx, {5, 6, 7}}), PreconditionFailed);
  CHECK_THROWS_AS(amalgamate({px, py}, {sx}), PreconditionFailed);
  // Y's edges reach outside a node set that leaves out N5
  CHECK_THROWS_AS(amalgamate({px, py}, {sx, {2, 3, 4}}), PreconditionFailed);
}

TEST_CASE("concatenation needs matching boundaries") {
  FunctionalNetwork s1 = load_fn("railway_stage1.net");
  CHECK_THROWS_AS(concatenate(s1, load_fn("railway_stage2_mismatch.net")), BoundaryMismatch);
  CHECK_NOTHROW(concatenate(s1, load_fn("railway_stage2.net")));
  CHECK_THROWS_AS(concatenate(s1, decoupled({1.0, 1.0})), std::exception);
}

TEST_CASE("two-stage railway satisfies the composition formula") {
  FunctionalNetwork s1 = load_fn("railway_stage1.net"), s2 = load_fn("railway_stage2.net");
  LoadedNetwork first = load_file(testing::fixture("railway_stage1.net"));
  auto samples = phase_samples(s1.space(), *first.initial, 30, 17);
  IntegratorConfig cfg;
  CompositionReport rep = verify_composition(s1, s2, samples, cfg);
  CHECK(rep.failures == 0);
  CHECK(rep.status_mismatches == 0);
  CHECK(rep.max_state_error <= 1e-6);
  CHECK(rep.max_time_error <= 1e-6);

  // The second loop really engages on some sample.
  FunctionalNetwork both = concatenate(s1, s2);
  CHECK(both.stage_count() == 2);
  TransitionOptions opts;
  opts.keep_trajectory = true;
  std::size_t coupled = 0;
  for (const auto& s : samples) {
    TransitionResult r = run_generalized(both, s.state, s.start_times, cfg, opts);
    bool seen_late = false;
    for (const auto& seg : r.trajectory->segments)
      if (seg.structure == "beta" && seg.t_start > 2.5) seen_late = true;
    coupled += seen_late;
  }
  CHECK(coupled > 0);
}

TEST_CASE("trivial second stage") {
  FunctionalNetwork s1 = load_fn("railway_stage1.net"), coast = *load_text(kCoast).functional;
  LoadedNetwork first = load_file(testing::fixture("railway_stage1.net"));
  auto samples = phase_samples(s1.space(), *first.initial, 20, 5);
  IntegratorConfig cfg;
  CompositionReport rep = verify_composition(s1, coast, samples, cfg);
  CHECK(rep.within(1e-9));

  // and the hitting times are stage 1's plus the coast of 0.5
  FunctionalNetwork both = concatenate(s1, coast);
  for (const auto& s : samples) {
    TransitionResult a = run_generalized(s1, s.state, s.start_times, cfg);
    TransitionResult b = run_generalized(both, s.state, s.start_times, cfg);
    REQUIRE(a.completed());
    REQUIRE(b.completed());
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::fabs(b.times[i] - (a.times[i] + 0.5)) <= 1e-6);
  }
}

TEST_CASE("concatenation is associative") {
  LoadedNetwork fig = load_file(testing::fixture("figure3.net"));
  REQUIRE(fig.rendezvous);
  REQUIRE(fig.events);
  const RendezvousModel& model = *fig.rendezvous;
  const EventStructuredNetwork& esn = *fig.events;
  auto layers = realize_layers(esn, factorize_left(esn), rendezvous_fragments(model, esn), rendezvous_free_run(model));
  REQUIRE(layers.size() >= 3);
  FunctionalNetwork left = concatenate(concatenate(layers[0], layers[1]), layers[2]);
  FunctionalNetwork right = concatenate(layers[0], concatenate(layers[1], layers[2]));
  IntegratorConfig cfg;
  auto samples = rendezvous_samples(model, 10, 8);
  CompositionReport rep = compare_with_chain(left, {right}, samples, cfg);
  CHECK(rep.within(1e-6));
  CompositionReport chain = compare_with_chain(left, {layers[0], layers[1], layers[2]}, samples, cfg);
  CHECK(chain.within(1e-6));
}
