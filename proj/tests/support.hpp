#pragma once

// Helpers shared by the unit tests and the acceptance runner: fixture paths,
// the railway closed form, random expressions and random event structures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "asyncnet/circle.hpp"
#include "asyncnet/expr.hpp"
#include "asyncnet/factorize.hpp"
#include "asyncnet/functional.hpp"
#include "asyncnet/rendezvous.hpp"

#ifndef ASYNCNET_FIXTURES
#define ASYNCNET_FIXTURES "fixtures"
#endif

namespace testing {

inline std::string fixture(const std::string& name) { return std::string(ASYNCNET_FIXTURES) + "/" + name; }

// Railway with V1 = -V2 = 1, a = b = 1: both trains reach the loop at t = 1
// and the phase difference obeys phi' = -2 sin(phi) while coupled, so the
// dwell until |phi| = eps is (1/2) ln(tan(phi0/2) / tan(eps/2)).
inline double railway_dwell(double phi0, double eps) {
  double phi = asyncnet::circle::distance(phi0, 0.0);
  if (phi <= eps) return 0.0;
  return 0.5 * std::log(std::tan(phi / 2.0) / std::tan(eps / 2.0));
}

inline double railway_time(double phi0, double eps = 0.1) { return 2.0 + railway_dwell(phi0, eps); }

// Reference integration of phi' = -2 sin(phi) by RK4 with a tiny step, up
// to the first time |phi| <= eps. Independent of the library.
inline double railway_dwell_reference(double phi0, double eps, double h = 1e-6) {
  double phi = phi0 > asyncnet::circle::kPi ? 2.0 * asyncnet::circle::kPi - phi0 : phi0;
  if (phi <= eps) return 0.0;
  auto f = [](double p) { return -2.0 * std::sin(p); };
  double t = 0.0;
  for (;;) {
    double k1 = f(phi), k2 = f(phi + 0.5 * h * k1), k3 = f(phi + 0.5 * h * k2), k4 = f(phi + h * k3);
    double next = phi + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (next <= eps) {
      // linear interpolation inside the last step
      return t + h * (phi - eps) / (phi - next);
    }
    phi = next;
    t += h;
  }
}

// Random well-typed expression trees.
class ExpressionGen {
 public:
  explicit ExpressionGen(std::uint64_t seed) : rng_(seed) {}

  asyncnet::Expression real(int depth) {
    using asyncnet::Expression;
    using asyncnet::Op;
    int pick = depth <= 0 ? static_cast<int>(uniform(0, 2)) : static_cast<int>(uniform(0, 9));
    switch (pick) {
      case 0: return Expression::literal(literal());
      case 1: return Expression::variable(name());
      case 2: return Expression::variable("x[" + std::to_string(uniform(1, 4)) + "][" + std::to_string(uniform(1, 3)) + "]");
      case 3: return Expression::unary(Op::Neg, real(depth - 1));
      case 4:
      case 5:
      case 6: {
        static const Op ops[] = {Op::Add, Op::Sub, Op::Mul, Op::Div};
        return Expression::binary(ops[uniform(0, 3)], real(depth - 1), real(depth - 1));
      }
      default: {
        auto f = static_cast<asyncnet::Function>(uniform(0, 9));
        std::vector<Expression> args;
        for (int a = 0; a < asyncnet::function_arity(f); ++a) args.push_back(real(depth - 1));
        return Expression::call(f, std::move(args));
      }
    }
  }

  asyncnet::Expression predicate(int depth) {
    using asyncnet::Expression;
    using asyncnet::Op;
    int pick = depth <= 0 ? 0 : static_cast<int>(uniform(0, 3));
    switch (pick) {
      case 0: {
        static const Op ops[] = {Op::Less, Op::LessEq, Op::Greater, Op::GreaterEq, Op::Equal, Op::NotEqual};
        return Expression::binary(ops[uniform(0, 5)], real(depth - 1), real(depth - 1));
      }
      case 1: return Expression::unary(Op::Not, predicate(depth - 1));
      case 2: return Expression::binary(Op::And, predicate(depth - 1), predicate(depth - 1));
      default: return Expression::binary(Op::Or, predicate(depth - 1), predicate(depth - 1));
    }
  }

  asyncnet::Expression any(int depth) { return uniform(0, 3) == 0 ? predicate(depth) : real(depth); }

 private:
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng_);
  }

  double literal() {
    switch (uniform(0, 4)) {
      case 0: return static_cast<double>(uniform(0, 20));
      case 1: return -static_cast<double>(uniform(1, 20));
      case 2: return std::uniform_real_distribution<double>(-1e3, 1e3)(rng_);
      case 3: return std::ldexp(std::uniform_real_distribution<double>(0.5, 1.0)(rng_), static_cast<int>(uniform(0, 120)) - 60);
      default: return 0.1 * static_cast<double>(uniform(0, 99));
    }
  }

  std::string name() {
    static const char* names[] = {"x", "y", "th1", "th2", "omega", "eps", "t", "a_b", "V1"};
    return names[uniform(0, 8)];
  }

  std::mt19937_64 rng_;
};

struct RandomInstance {
  asyncnet::RendezvousModel model;
  asyncnet::EventStructuredNetwork esn;
};

// Nodes on p_i in [0, 1] moving at the given speeds, one event map each and
// no edges, numbered from `first`. Built by hand, independent of the
// rendezvous model.
inline asyncnet::FunctionalNetwork decoupled(const std::vector<double>& speeds, std::size_t first = 1) {
  using namespace asyncnet;
  std::vector<NodeSpec> nodes;
  std::vector<Block> blocks;
  std::vector<Expression> init, term;
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    std::string n = std::to_string(i + first), p = "p" + n, run = "run" + n;
    nodes.push_back({"N" + n, {PhaseComponent::interval(p, 0, 1)}});
    Block b;
    b.nodes = {static_cast<int>(i + 1)};
    b.structures = {{run, {}}};
    b.fields = {{run, {{p, Expression::literal(speeds[i])}}}};
    b.events.default_structure = run;
    blocks.push_back(b);
    init.push_back(parse(p));
    term.push_back(parse(p + " - 1"));
  }
  return FunctionalNetwork(AsyncNetwork(PhaseSpace(nodes), {}, blocks), init, term);
}

// Random rendezvous instance with k <= max_nodes nodes and at most
// max_events events. Events are drawn in a global rank order and laid out
// along each node in that order, so the precedence is acyclic. Speeds are
// uniform in [0.6, 1.4].
inline RandomInstance random_instance(std::mt19937_64& rng, std::size_t max_nodes = 6, std::size_t max_events = 8,
                                      std::size_t min_layers = 2) {
  using namespace asyncnet;
  auto uni = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  for (;;) {
    std::size_t k = uni(2, max_nodes);
    std::size_t m = uni(2, max_events);
    std::vector<std::vector<std::size_t>> on_node(k + 1);
    for (std::size_t e = 0; e < m; ++e) {
      std::size_t size = uni(1, std::min<std::size_t>(k, 3));
      std::vector<int> nodes;
      for (std::size_t i = 1; i <= k; ++i) nodes.push_back(static_cast<int>(i));
      std::shuffle(nodes.begin(), nodes.end(), rng);
      nodes.resize(size);
      std::sort(nodes.begin(), nodes.end());
      for (int i : nodes) on_node[static_cast<std::size_t>(i)].push_back(e);
    }
    std::vector<EventRegion> events(m);
    for (std::size_t e = 0; e < m; ++e) events[e].name = std::string(1, static_cast<char>('a' + e));
    std::uniform_real_distribution<double> jitter(0.1, 0.4), span(0.3, 0.6);
    for (std::size_t i = 1; i <= k; ++i) {
      const auto& list = on_node[i];
      double w = 0.9 / static_cast<double>(std::max<std::size_t>(list.size(), 1));
      for (std::size_t j = 0; j < list.size(); ++j) {
        double entry = 0.05 + static_cast<double>(j) * w + jitter(rng) * w;
        double exit = entry + span(rng) * w * 0.5;
        events[list[j]].intervals.push_back({static_cast<int>(i), entry, exit});
      }
    }
    for (auto& e : events)
      std::sort(e.intervals.begin(), e.intervals.end(), [](const auto& a, const auto& b) { return a.node < b.node; });
    EventStructuredNetwork esn(k, std::move(events));
    if (layer_count_minimal(esn) < min_layers) continue;
    std::uniform_real_distribution<double> speed(0.6, 1.4);
    std::vector<double> speeds;
    for (std::size_t i = 0; i < k; ++i) speeds.push_back(speed(rng));
    return {RendezvousModel::standard(k, speeds), std::move(esn)};
  }
}

// E before F when they share a node and E's interval there ends no later
// than F's begins. Read straight off the intervals.
inline std::vector<std::vector<bool>> raw_precedence(const std::vector<asyncnet::EventRegion>& events) {
  const std::size_t n = events.size();
  std::vector<std::vector<bool>> before(n, std::vector<bool>(n, false));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (const auto& ia : events[a].intervals)
        for (const auto& ib : events[b].intervals)
          if (a != b && ia.node == ib.node && ia.exit <= ib.entry) before[a][b] = true;
  return before;
}

// Exhaustive DFS over every path of the relation; no memoization.
inline std::size_t longest_chain_bruteforce(const std::vector<std::vector<bool>>& before) {
  const std::size_t n = before.size();
  std::size_t best = 0;
  auto dfs = [&](auto&& self, std::size_t v, std::size_t len) -> void {
    best = std::max(best, len);
    for (std::size_t w = 0; w < n; ++w)
      if (before[v][w]) self(self, w, len + 1);
  };
  for (std::size_t v = 0; v < n; ++v) dfs(dfs, v, 1);
  return best;
}

}  // namespace testing
