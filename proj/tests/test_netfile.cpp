#include "doctest.h"

#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "asyncnet/circle.hpp"
#include "asyncnet/error.hpp"
#include "asyncnet/netfile.hpp"
#include "support.hpp"

using namespace asyncnet;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kFixtures[] = {"railway.net",      "railway_stage1.net", "railway_stage2.net", "railway_stage2_mismatch.net",
                           "figure3.net",      "antichain.net",      "single_event.net",   "trivial.net",
                           "cyclic.net"};

std::string error_of(const std::string& text) {
  try {
    load_text(text, "test.net");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kSmall = R"(asyncnet v1
constants
  v = 1.5
nodes
  A: x in [0, 1]
structures
  go:
fields
  go: x' = v
events
  default go
functional
  A: init x; term x - 1
)";

}  // namespace

TEST_CASE("documents round trip through the printer") {
  for (const char* name : kFixtures) {
    INFO(std::string(name));
    NetworkDocument doc = parse_document(slurp(testing::fixture(name)), name);
    std::string text = serialize(doc);
    NetworkDocument again = parse_document(text, name);
    CHECK(again == doc);
    CHECK(serialize(again) == text);
  }
}

TEST_CASE("built networks round trip with the same behaviour") {
  IntegratorConfig cfg;
  for (const char* name : kFixtures) {
    if (std::string(name) == "cyclic.net") continue;
    INFO(std::string(name));
    LoadedNetwork ln = load_file(testing::fixture(name));
    REQUIRE(ln.functional);
    // the second railway legs start at x1 = b (or 1.5 in the mismatched one)
    double x1 = std::string(name) == "railway_stage2_mismatch.net" ? 1.5 : 2.0;
    NetworkState x0 = ln.initial      ? *ln.initial
                      : ln.rendezvous ? rendezvous_origin(*ln.rendezvous)
                                      : make_state(ln.functional->space(), {x1, 0.3, -2, 0});
    const NetworkState* init = ln.initial ? &*ln.initial : nullptr;
    std::string text = serialize(to_document(*ln.functional, init));
    LoadedNetwork back = load_text(text, name);
    REQUIRE(back.functional);
    CHECK(back.functional->space() == ln.functional->space());
    if (ln.initial) CHECK(back.initial->coords == ln.initial->coords);

    TransitionResult a = run_transition(*ln.functional, x0, cfg), b = run_transition(*back.functional, x0, cfg);
    CHECK(a.status == b.status);
    for (std::size_t i = 0; i < a.times.size(); ++i)
      CHECK(std::memcmp(&a.times[i], &b.times[i], sizeof(double)) == 0);
    CHECK(a.final_states == b.final_states);

    // and once more: printing is stable
    CHECK(serialize(to_document(*back.functional, back.initial ? &*back.initial : nullptr)) == text);
  }
}

TEST_CASE("numbers print shortest and read back exactly") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int n = 0; n < 2000; ++n) {
    double v = n % 3 ? u(rng) : std::ldexp(u(rng), n % 200 - 100);
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(1e-6) == "1e-06");
  CHECK(std::stod(format_number(circle::kPi)) == circle::kPi);
}

TEST_CASE("a minimal file loads") {
  LoadedNetwork ln = load_text(kSmall);
  REQUIRE(ln.functional);
  TransitionResult r = run_transition(*ln.functional, make_state(ln.functional->space(), {0}), IntegratorConfig{});
  CHECK(r.times[0] == doctest::Approx(1 / 1.5).epsilon(1e-9));
  CHECK_FALSE(ln.initial);
  CHECK_FALSE(ln.events);
}

TEST_CASE("errors name the file and line") {
  CHECK(error_of("nodes\n  A: x in [0, 1]\n").rfind("test.net:1:", 0) == 0);
  CHECK(error_of("").find("header") != std::string::npos);

  std::string bad_expr = kSmall;
  bad_expr.replace(bad_expr.find("x' = v"), 6, "x' = v +");
  std::string msg = error_of(bad_expr);
  CHECK(msg.rfind("test.net:9:", 0) == 0);
  CHECK(msg.find("v +") != std::string::npos);

  std::string unknown = kSmall;
  unknown.replace(unknown.find("x' = v"), 6, "y' = v");
  CHECK(error_of(unknown).rfind("test.net:9:", 0) == 0);

  std::string no_default = kSmall;
  no_default.replace(no_default.find("  default go\n"), 13, "");
  CHECK(error_of(no_default).find("default") != std::string::npos);

  std::string bad_bounds = kSmall;
  bad_bounds.replace(bad_bounds.find("[0, 1]"), 6, "[0 1]");
  CHECK(error_of(bad_bounds).rfind("test.net:5:", 0) == 0);

  std::string dup = kSmall;
  dup.replace(dup.find("  go:\n"), 6, "  go:\n  go:\n");
  CHECK(error_of(dup).find("duplicate structure") != std::string::npos);

  CHECK_THROWS_AS(load_file(testing::fixture("no_such_file.net")), ConfigError);
}

TEST_CASE("cyclic event regions are reported as such") {
  CHECK_NOTHROW(parse_document(slurp(testing::fixture("cyclic.net"))));
  CHECK_THROWS_AS(load_file(testing::fixture("cyclic.net")), CyclicPrecedence);
}
