#include "doctest.h"

#include <cmath>
#include <cstring>

#include "asyncnet/circle.hpp"
#include "asyncnet/error.hpp"
#include "asyncnet/netfile.hpp"
#include "asyncnet/semiflow.hpp"
#include "support.hpp"

using namespace asyncnet;

namespace {

const LoadedNetwork& railway() {
  static const LoadedNetwork ln = load_file(testing::fixture("railway.net"));
  return ln;
}

NetworkState at(double x1, double th1, double x2, double th2) {
  return make_state(railway().network().space(), {x1, th1, x2, th2});
}

Selection select(const AsyncNetwork& net, const std::string& name) {
  const Block& b = net.blocks().front();
  return Selection{{*b.structure_index(name)}};
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// Signed phase increment b - a, taken in (-pi, pi].
double phase_delta(double a, double b) {
  double d = std::fmod(b - a, 2 * circle::kPi);
  if (d > circle::kPi) d -= 2 * circle::kPi;
  if (d <= -circle::kPi) d += 2 * circle::kPi;
  return d;
}

// One node on [-1, 1] pushed towards 0 from both sides.
AsyncNetwork sliding() {
  PhaseSpace space({{"A", {PhaseComponent::interval("x", -1, 1)}}});
  Block b;
  b.nodes = {1};
  b.structures = {{"up", {}}, {"down", {}}};
  b.fields = {{"up", {{"x", parse("1")}}}, {"down", {{"x", parse("-1")}}}};
  b.events.guards = {{parse("x < 0"), "up"}};
  b.events.default_structure = "down";
  return AsyncNetwork(space, {}, {b});
}

}  // namespace

TEST_CASE("step_smooth on an uncoupled oscillator is exact") {
  const AsyncNetwork& net = railway().network();
  NetworkState x = at(-0.5, 6.2, -0.5, 1.0);
  NetworkState y = step_smooth(net, x, select(net, "alpha2"), 0.25);
  CHECK(std::fabs(y.coords[1] - std::fmod(6.2 + 0.25, 2 * circle::kPi)) <= 1e-15);
  CHECK(y.coords[1] >= 0.0);
  CHECK(y.coords[0] == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK(y.clock == 0.25);
}

TEST_CASE("stopped trains do not move") {
  const AsyncNetwork& net = railway().network();
  NetworkState x = at(0.0, 1.0, 0.5, 2.0);
  NetworkState y = x;
  for (int n = 0; n < 100; ++n) y = step_smooth(net, y, select(net, "alpha1"), 1e-3);
  CHECK(same_bits(y.coords[0], x.coords[0]));

  NetworkState z = at(0.0, 1.0, 0.0, 2.5);
  for (int n = 0; n < 100; ++n) z = step_smooth(net, z, select(net, "beta"), 1e-3);
  CHECK(same_bits(z.coords[0], 0.0));
  CHECK(same_bits(z.coords[2], 0.0));
}

TEST_CASE("antiphase Kuramoto pair stays antiphase") {
  const AsyncNetwork& net = railway().network();
  NetworkState x = at(0.0, 0.0, 0.0, circle::kPi);
  for (int n = 0; n < 10000; ++n) x = step_smooth(net, x, select(net, "beta"), 1e-3);
  CHECK(circle::distance(x.coords[1], x.coords[3]) == circle::kPi);
}

TEST_CASE("interval coordinates are clamped at their bounds") {
  const AsyncNetwork& net = railway().network();
  NetworkState x = at(0.9995, 0.0, -0.9995, 0.0);
  NetworkState y = step_smooth(net, x, select(net, "empty"), 1e-3);
  CHECK(y.coords[0] == 1.0);
  CHECK(y.coords[2] == -1.0);
  NetworkState z = step_smooth(net, y, select(net, "empty"), 1e-3);
  CHECK(z.coords[0] == 1.0);
  CHECK(z.coords[2] == -1.0);
}

TEST_CASE("locate_event on linear motion") {
  // x' = c from -a: the guard x >= 0 turns on at t = a / c.
  const double a = 1.0, c = 2.0;
  PhaseSpace space({{"A", {PhaseComponent::interval("x", -a, 1)}}});
  Block b;
  b.nodes = {1};
  b.structures = {{"before", {}}, {"past", {{0, 1}}}};
  b.fields = {{"before", {{"x", parse("c")}}}, {"past", {{"x", parse("c")}}}};
  b.events.guards = {{parse("x >= 0"), "past"}};
  b.events.default_structure = "before";
  AsyncNetwork net(space, {{"c", c}}, {b});
  IntegratorConfig cfg;
  Selection before{{0}};

  NetworkState s0 = make_state(space, {-a});
  for (int n = 0; n < 499; ++n) s0 = step_smooth(net, s0, before, 1e-3);
  NetworkState s1 = step_smooth(net, s0, before, 1e-3);
  REQUIRE(s1.coords[0] > 0.0);
  auto [t, y] = locate_event(net, s0, s1, cfg);
  CHECK(std::fabs(t - a / c) <= cfg.tau_event);
  CHECK(net.joined(evaluate_event_map(net, y)).name == "past");
  CHECK(y.clock == t);

  NetworkState half = step_smooth(net, s0, before, 1e-4);
  CHECK_THROWS_AS(locate_event(net, s0, half, cfg), PreconditionFailed);

  Trajectory tr = flow(net, make_state(space, {-a}), 1.0, cfg);
  REQUIRE(tr.switch_times.size() == 1);
  CHECK(std::fabs(tr.switch_times[0] - a / c) <= cfg.tau_event);
}

TEST_CASE("every recorded switch changes the structure") {
  const AsyncNetwork& net = railway().network();
  IntegratorConfig cfg;
  for (double phi : {0.3, 1.0, 2.5, 4.0}) {
    Trajectory tr = flow(net, at(-1, phi, 1, 0), 6.0, cfg);
    for (std::size_t s = 1; s < tr.segments.size(); ++s) {
      CHECK(tr.segments[s].selection != tr.segments[s - 1].selection);
      CHECK(tr.segments[s].t_start == tr.segments[s - 1].t_end);
      CHECK(tr.segments[s].t_start > tr.segments[s - 1].t_start);
    }
    CHECK(tr.segments.front().t_start == 0.0);
    CHECK(tr.switch_times.size() + 1 == tr.segments.size());
  }
}

TEST_CASE("phase guard crossing matches the closed form") {
  const AsyncNetwork& net = railway().network();
  IntegratorConfig cfg;
  for (double phi : {0.5, 1.0, 2.0, 3.0}) {
    Trajectory tr = flow(net, at(-1, phi, 1, 0), 5.0, cfg);
    auto seq = tr.structure_sequence();
    REQUIRE(seq.size() == 3);
    CHECK(seq == std::vector<std::string>{"empty", "beta", "empty"});
    CHECK(std::fabs(tr.switch_times[0] - 1.0) <= 1e-8);
    CHECK(std::fabs(tr.switch_times[1] - (1.0 + testing::railway_dwell(phi, 0.1))) <= 1e-8);
  }
}

TEST_CASE("synchronized railway run needs no coupling") {
  IntegratorConfig cfg;
  Trajectory tr = flow(railway().network(), at(-1, 0, 1, 0), 3.0, cfg);
  double coupled = 0.0;
  for (const auto& s : tr.segments)
    if (s.structure != "empty") coupled += s.t_end - s.t_start;
  CHECK(coupled <= 1e-6);
  CHECK(tr.segments.front().structure == "empty");
  CHECK(tr.segments.back().structure == "empty");
  CHECK(tr.final_state().coords[0] == 1.0);
  CHECK(tr.final_state().coords[2] == -1.0);
}

TEST_CASE("one late train waits under alpha and is then coupled") {
  IntegratorConfig cfg;
  Trajectory tr = flow(railway().network(), at(-1, 1.5, 1, 0), 4.0, cfg);
  CHECK(tr.structure_sequence() == std::vector<std::string>{"empty", "beta", "empty"});
  Trajectory late = flow(railway().network(), at(-0.5, 1.5, 1, 0), 5.0, cfg);
  CHECK(late.structure_sequence() == std::vector<std::string>{"empty", "alpha1", "beta", "empty"});
  CHECK(std::fabs(late.switch_times[0] - 0.5) <= 1e-8);
  CHECK(std::fabs(late.switch_times[1] - 1.0) <= 1e-8);
}

TEST_CASE("antiphase trains never leave the loop") {
  IntegratorConfig cfg;
  cfg.t_max = 100;
  cfg.output_stride = 100;
  Trajectory tr = flow(railway().network(), at(-1, circle::kPi, 1, 0), 100.0, cfg);
  REQUIRE(tr.segments.size() == 2);
  CHECK(tr.segments.back().structure == "beta");
  CHECK(tr.segments.back().t_end == doctest::Approx(100.0));
  for (const auto& x : tr.segments.back().samples) {
    CHECK(x.coords[0] <= 1e-6);
    CHECK(x.coords[2] >= -1e-6);
    CHECK(circle::distance(x.coords[1], x.coords[3]) == circle::kPi);
  }
}

TEST_CASE("zero fields give a single constant segment") {
  PhaseSpace space({{"A", {PhaseComponent::interval("x", 0, 1), PhaseComponent::circle("th")}}});
  Block b;
  b.nodes = {1};
  b.structures = {{"still", {}}};
  b.fields = {{"still", {{"x", parse("0")}, {"th", parse("0")}}}};
  b.events.default_structure = "still";
  AsyncNetwork net(space, {}, {b});
  NetworkState x0 = make_state(space, {0.25, 2.0});
  Trajectory tr = flow(net, x0, 3.0, IntegratorConfig{});
  REQUIRE(tr.segments.size() == 1);
  for (const auto& x : tr.segments[0].samples) CHECK(x.coords == x0.coords);
  CHECK(tr.final_state().clock == doctest::Approx(3.0));
}

TEST_CASE("zero duration") {
  Trajectory tr = flow(railway().network(), at(-1, 0, 1, 0), 0.0, IntegratorConfig{});
  REQUIRE(tr.segments.size() == 1);
  CHECK(tr.segments[0].samples.size() == 1);
}

TEST_CASE("forward time only") {
  IntegratorConfig cfg;
  cfg.t_max = 10;
  CHECK_THROWS_AS(flow(railway().network(), at(-1, 0, 1, 0), -1.0, cfg), ConfigError);
  CHECK_THROWS_AS(flow(railway().network(), at(-1, 0, 1, 0), 11.0, cfg), ConfigError);
  IntegratorConfig bad;
  bad.tau_event = bad.step;
  CHECK_THROWS_AS(flow(railway().network(), at(-1, 0, 1, 0), 1.0, bad), ConfigError);
}

TEST_CASE("semigroup property on a smooth segment") {
  const AsyncNetwork& net = railway().network();
  IntegratorConfig cfg;
  // phi0 = 2: coupled from t = 1 to about 2.72.
  NetworkState x0 = at(-1, 2.0, 1, 0);
  for (auto [s, u] : {std::pair{1.2345, 0.7}, std::pair{1.5, 0.4321}, std::pair{1.1111, 1.3}}) {
    NetworkState direct = flow(net, x0, s + u, cfg).final_state();
    NetworkState mid = flow(net, x0, s, cfg).final_state();
    NetworkState split = flow(net, mid, u, cfg).final_state();
    CHECK(split.clock == doctest::Approx(direct.clock).epsilon(1e-14));
    double err = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      double d = (c % 2 == 1) ? circle::distance(direct.coords[c], split.coords[c])
                              : std::fabs(direct.coords[c] - split.coords[c]);
      err = std::max(err, d);
    }
    CHECK(err <= 1e-8 * (s + u));
  }
  // And on the free segment after release.
  NetworkState free0 = at(-1, 0.05, 1, 0);
  NetworkState a = flow(net, free0, 1.7, cfg).final_state();
  NetworkState b = flow(net, flow(net, free0, 1.3, cfg).final_state(), 0.4, cfg).final_state();
  CHECK(std::fabs(a.coords[0] - b.coords[0]) <= 1e-8 * 1.7);
}

TEST_CASE("coupled phases conserve their sum") {
  const AsyncNetwork& net = railway().network();
  IntegratorConfig cfg;
  NetworkState x0 = at(0.0, 2.9, 0.0, 0.0);  // already in the loop: beta from the start
  Trajectory tr = flow(net, x0, 1.5, cfg);
  REQUIRE(tr.segments.front().structure == "beta");
  const auto& seg = tr.segments.front();
  double s0 = x0.coords[1] + x0.coords[3];
  for (const auto& x : seg.samples) {
    double t = x.clock;
    double drift = phase_delta(std::fmod(s0 + 2.0 * t, 2 * circle::kPi), std::fmod(x.coords[1] + x.coords[3], 2 * circle::kPi));
    CHECK(std::fabs(drift) <= 1e-8 * std::max(t, 1e-3));
  }
}

TEST_CASE("frozen coordinates are bit-identical across a segment") {
  IntegratorConfig cfg;
  Trajectory tr = flow(railway().network(), at(-0.5, 2.0, 1, 0), 5.0, cfg);
  for (const auto& seg : tr.segments) {
    if (seg.structure == "alpha1" || seg.structure == "beta")
      for (const auto& x : seg.samples) CHECK(same_bits(x.coords[0], seg.samples.front().coords[0]));
    if (seg.structure == "beta")
      for (const auto& x : seg.samples) CHECK(same_bits(x.coords[2], seg.samples.front().coords[2]));
  }
}

TEST_CASE("chatter is detected, min_dwell suppresses it") {
  AsyncNetwork net = sliding();
  NetworkState x0 = make_state(net.space(), {-0.5});
  IntegratorConfig cfg;
  cfg.t_max = 5;
  CHECK_THROWS_AS(flow(net, x0, 2.0, cfg), ChatterDetected);

  cfg.min_dwell = 0.1;
  Trajectory tr = flow(net, x0, 2.0, cfg);
  REQUIRE(tr.switch_times.size() > 5);
  for (std::size_t s = 1; s < tr.switch_times.size(); ++s)
    CHECK(tr.switch_times[s] - tr.switch_times[s - 1] >= 0.1 - 1e-9);
  for (std::size_t s = 1; s < tr.segments.size(); ++s)
    for (const auto& x : tr.segments[s].samples) CHECK(std::fabs(x.coords[0]) <= 0.1 + 1e-9);
}

TEST_CASE("flow is deterministic") {
  IntegratorConfig cfg;
  Trajectory a = flow(railway().network(), at(-1, 2.2, 1, 0.1), 4.0, cfg);
  Trajectory b = flow(railway().network(), at(-1, 2.2, 1, 0.1), 4.0, cfg);
  REQUIRE(a.segments.size() == b.segments.size());
  for (std::size_t s = 0; s < a.segments.size(); ++s) CHECK(a.segments[s].samples == b.segments[s].samples);
}
