#include "asyncnet/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "asyncnet/circle.hpp"
#include "asyncnet/error.hpp"

namespace asyncnet {

namespace {

Constants merge_constants(const std::vector<const Constants*>& tables) {
  Constants out;
  for (const Constants* t : tables) {
    for (const auto& [name, value] : *t) {
      auto [it, inserted] = out.emplace(name, value);
      if (!inserted && it->second != value)
        throw ConfigError("constant '" + name + "' has different values in the combined networks");
    }
  }
  return out;
}

Expression bind_constants(const Expression& e, const Constants& constants) {
  switch (e.op()) {
    case Op::Literal:
      return e;
    case Op::Variable: {
      auto it = constants.find(e.name());
      if (it != constants.end()) return Expression::literal(it->second);
      if (e.name() == "pi") return Expression::literal(circle::kPi);
      return e;
    }
    case Op::Call: {
      std::vector<Expression> args;
      for (const auto& a : e.args()) args.push_back(bind_constants(a, constants));
      return Expression::call(e.function(), std::move(args));
    }
    default:
      break;
  }
  auto args = e.args();
  if (args.size() == 1) return Expression::unary(e.op(), bind_constants(args[0], constants));
  return Expression::binary(e.op(), bind_constants(args[0], constants), bind_constants(args[1], constants));
}

const FunctionalStage& single_stage(const FunctionalNetwork& fn, const char* what) {
  if (fn.stage_count() != 1)
    throw ConfigError(std::string(what) + " of a concatenated network is not supported");
  return fn.first();
}

std::set<int> coordinate_owners(const PhaseSpace& space, const Expression& e) {
  std::set<int> owners;
  for (const auto& v : free_variables(e))
    if (auto slot = space.find_coordinate(v)) owners.insert(space.node_of_slot(*slot));
  return owners;
}

}  // namespace

NodeEmbedding consecutive_embedding(const std::vector<FunctionalNetwork>& factors) {
  NodeEmbedding emb;
  int next = 1;
  for (const auto& f : factors) {
    std::vector<int> map;
    for (std::size_t i = 0; i < f.node_count(); ++i) map.push_back(next++);
    emb.maps.push_back(std::move(map));
  }
  return emb;
}

FunctionalNetwork product(const std::vector<FunctionalNetwork>& factors, const std::optional<NodeEmbedding>& embedding) {
  if (factors.empty()) throw ConfigError("product of no networks");
  NodeEmbedding emb = embedding ? *embedding : consecutive_embedding(factors);
  if (emb.maps.size() != factors.size()) throw ConfigError("embedding needs one map per factor");

  std::size_t total = 0;
  for (const auto& f : factors) total += f.node_count();
  std::vector<std::optional<NodeSpec>> slots(total);
  for (std::size_t a = 0; a < factors.size(); ++a) {
    const PhaseSpace& space = single_stage(factors[a], "product").net.space();
    if (emb.maps[a].size() != space.node_count())
      throw ConfigError("embedding map for factor " + std::to_string(a + 1) + " has the wrong size");
    for (std::size_t i = 0; i < space.node_count(); ++i) {
      int m = emb.maps[a][i];
      if (m < 1 || static_cast<std::size_t>(m) > total || slots[static_cast<std::size_t>(m - 1)])
        throw ConfigError("embedding is not a bijection onto the composite nodes");
      slots[static_cast<std::size_t>(m - 1)] = space.node(static_cast<int>(i + 1));
    }
  }
  std::vector<NodeSpec> nodes;
  for (auto& s : slots) nodes.push_back(std::move(*s));
  PhaseSpace composite(std::move(nodes));

  std::vector<const Constants*> tables;
  for (const auto& f : factors) tables.push_back(&f.first().net.constants());
  Constants constants = merge_constants(tables);

  std::vector<Block> blocks;
  std::vector<Expression> init(total), term(total);
  for (std::size_t a = 0; a < factors.size(); ++a) {
    const FunctionalStage& st = factors[a].first();
    const PhaseSpace& space = st.net.space();
    const auto& map = emb.maps[a];
    std::map<std::string, std::string> renames;
    for (std::size_t slot = 0; slot < space.dimension(); ++slot) {
      int id = space.node_of_slot(slot);
      std::size_t c = slot - space.offset(id);
      int m = map[static_cast<std::size_t>(id - 1)];
      renames[space.index_name(slot)] = composite.index_name(composite.offset(m) + c);
    }
    auto node_map = [&](int id) { return id == kConstrainingNode ? id : map[static_cast<std::size_t>(id - 1)]; };
    for (const Block& b : st.net.blocks()) {
      Block nb;
      for (int id : b.nodes) nb.nodes.push_back(node_map(id));
      for (const auto& alpha : b.structures) {
        ConnectionStructure na{alpha.name, {}};
        for (const Edge& e : alpha.edges) na.edges.insert(Edge{node_map(e.from), node_map(e.to)});
        nb.structures.push_back(std::move(na));
      }
      for (const auto& f : b.fields) {
        AdmissibleField nf{f.structure, {}};
        for (const auto& [coord, expr] : f.components) nf.components.emplace(coord, rename_variables(expr, renames));
        nb.fields.push_back(std::move(nf));
      }
      for (const auto& g : b.events.guards) nb.events.guards.push_back(Guard{rename_variables(g.predicate, renames), g.target});
      nb.events.default_structure = b.events.default_structure;
      blocks.push_back(std::move(nb));
    }
    for (std::size_t i = 0; i < space.node_count(); ++i) {
      std::size_t m = static_cast<std::size_t>(map[i] - 1);
      init[m] = rename_variables(st.init[i], renames);
      term[m] = rename_variables(st.term[i], renames);
    }
  }
  return FunctionalNetwork(AsyncNetwork(std::move(composite), std::move(constants), std::move(blocks)),
                           std::move(init), std::move(term));
}

bool is_trivial(const FunctionalNetwork& fn) {
  for (const auto& st : fn.stages())
    for (const auto& b : st.net.blocks())
      for (const auto& alpha : b.structures)
        if (!alpha.edge_free()) return false;
  return true;
}

FunctionalNetwork amalgamate(const std::vector<FunctionalNetwork>& parts, const std::vector<std::vector<int>>& sigmas) {
  if (parts.empty()) throw PreconditionFailed("amalgamation of no networks");
  if (parts.size() != sigmas.size()) throw PreconditionFailed("amalgamation needs one node set per part");
  const PhaseSpace& space = single_stage(parts[0], "amalgamation").net.space();
  const std::size_t k = space.node_count();
  auto name_of = [&](int id) { return space.node(id).name; };

  std::vector<int> part_of(k, -1);
  for (std::size_t a = 0; a < parts.size(); ++a) {
    const FunctionalStage& st = single_stage(parts[a], "amalgamation");
    if (!(st.net.space() == space)) throw PreconditionFailed("amalgamated parts must share their node set");
    for (std::size_t i = 0; i < k; ++i) {
      if (!(normalize(st.init[i]) == normalize(parts[0].first().init[i])) ||
          !(normalize(st.term[i]) == normalize(parts[0].first().term[i])))
        throw PreconditionFailed("parts disagree on the initialization or termination set of node " +
                                 name_of(static_cast<int>(i + 1)));
    }
    for (int id : sigmas[a]) {
      if (id < 1 || static_cast<std::size_t>(id) > k) throw PreconditionFailed("node set names an unknown node");
      int& owner = part_of[static_cast<std::size_t>(id - 1)];
      if (owner != -1)
        throw PreconditionFailed("node " + name_of(id) + " lies in the node sets of parts " +
                                 std::to_string(owner + 1) + " and " + std::to_string(a + 1));
      owner = static_cast<int>(a);
    }
  }

  std::vector<const Constants*> tables;
  for (const auto& p : parts) tables.push_back(&p.first().net.constants());
  Constants constants = merge_constants(tables);

  // Free-running field of every node outside the part's node set, per part.
  std::vector<std::map<int, std::map<std::string, Expression>>> free_fields(parts.size());
  std::vector<Block> blocks;

  for (std::size_t a = 0; a < parts.size(); ++a) {
    const AsyncNetwork& net = parts[a].first().net;
    auto inside = [&](int id) { return id >= 1 && part_of[static_cast<std::size_t>(id - 1)] == static_cast<int>(a); };
    for (const Block& b : net.blocks()) {
      std::vector<int> in, out;
      for (int id : b.nodes) (inside(id) ? in : out).push_back(id);
      for (const auto& alpha : b.structures) {
        for (const Edge& e : alpha.edges) {
          if (!inside(e.to))
            throw PreconditionFailed("part " + std::to_string(a + 1) + ": node " + name_of(e.to) +
                                     " outside its node set has an incoming edge in structure '" + alpha.name + "'");
          if (e.from != kConstrainingNode && !inside(e.from))
            throw PreconditionFailed("part " + std::to_string(a + 1) + ": edge " + name_of(e.from) + " -> " +
                                     name_of(e.to) + " in structure '" + alpha.name + "' leaves its node set");
        }
      }
      for (int id : out) {
        std::map<std::string, Expression> field;
        for (std::size_t c = 0; c < space.width(id); ++c) {
          const std::string& coord = space.component_at(space.offset(id) + c).name;
          const Expression& first = b.fields.front().components.at(coord);
          for (const auto& f : b.fields) {
            if (!(normalize(f.components.at(coord)) == normalize(first)))
              throw PreconditionFailed("part " + std::to_string(a + 1) + ": node " + name_of(id) +
                                       " outside its node set changes dynamics with structure '" + f.structure + "'");
          }
          for (int owner : coordinate_owners(space, first))
            if (owner != id)
              throw PreconditionFailed("part " + std::to_string(a + 1) + ": free node " + name_of(id) +
                                       " reads node " + name_of(owner));
          field.emplace(coord, first);
        }
        free_fields[a][id] = std::move(field);
      }
      if (in.empty()) continue;
      for (const auto& g : b.events.guards)
        for (int owner : coordinate_owners(space, g.predicate))
          if (!inside(owner))
            throw PreconditionFailed("part " + std::to_string(a + 1) + ": event map reads node " + name_of(owner) +
                                     " outside its node set");
      Block nb;
      nb.nodes = in;
      nb.structures = b.structures;
      for (const auto& f : b.fields) {
        AdmissibleField nf{f.structure, {}};
        for (int id : in) {
          for (std::size_t c = 0; c < space.width(id); ++c) {
            const std::string& coord = space.component_at(space.offset(id) + c).name;
            nf.components.emplace(coord, f.components.at(coord));
          }
        }
        nb.fields.push_back(std::move(nf));
      }
      nb.events = b.events;
      blocks.push_back(std::move(nb));
    }
  }

  // Trivial remainder, grouped as in the first part.
  auto remainder = [&](int id) { return part_of[static_cast<std::size_t>(id - 1)] == -1; };
  for (int id = 1; id <= static_cast<int>(k); ++id) {
    if (!remainder(id)) continue;
    const auto& ref = free_fields[0].at(id);
    for (std::size_t a = 1; a < parts.size(); ++a) {
      const auto& other = free_fields[a].at(id);
      for (const auto& [coord, expr] : ref)
        if (!(normalize(expr) == normalize(other.at(coord))))
          throw PreconditionFailed("parts disagree on the free dynamics of node " + name_of(id));
    }
  }
  for (const Block& b : parts[0].first().net.blocks()) {
    std::vector<int> rest;
    for (int id : b.nodes)
      if (remainder(id)) rest.push_back(id);
    if (rest.empty()) continue;
    if (rest.size() == b.nodes.size()) {
      blocks.push_back(b);
      continue;
    }
    Block nb;
    nb.nodes = rest;
    nb.structures.push_back(ConnectionStructure{b.events.default_structure, {}});
    AdmissibleField nf{b.events.default_structure, {}};
    for (int id : rest)
      for (const auto& [coord, expr] : free_fields[0].at(id)) nf.components.emplace(coord, expr);
    nb.fields.push_back(std::move(nf));
    nb.events.default_structure = b.events.default_structure;
    blocks.push_back(std::move(nb));
  }

  const FunctionalStage& ref = parts[0].first();
  return FunctionalNetwork(AsyncNetwork(space, std::move(constants), std::move(blocks)), ref.init, ref.term);
}

FunctionalNetwork concatenate(const FunctionalNetwork& first, const FunctionalNetwork& second,
                              std::vector<std::string>* warnings) {
  if (!(first.space() == second.space())) throw ConfigError("concatenated networks must share their node set");
  const FunctionalStage& end = first.last();
  const FunctionalStage& start = second.first();
  const PhaseSpace& space = first.space();
  for (std::size_t i = 0; i < space.node_count(); ++i) {
    Expression f = normalize(bind_constants(end.term[i], end.net.constants()));
    Expression g = normalize(bind_constants(start.init[i], start.net.constants()));
    if (f == g) continue;

    // Fallback: the two level functions must agree in sign on the node box.
    int id = static_cast<int>(i + 1);
    CompiledExpr cf(end.term[i], end.net.symbols());
    CompiledExpr cg(start.init[i], start.net.symbols());
    std::mt19937_64 rng(0xc0ffee + i);
    NetworkState x;
    x.coords.assign(space.dimension(), 0.0);
    std::vector<double> ef, eg;
    bool agree = true;
    for (int s = 0; s < 1000 && agree; ++s) {
      for (std::size_t c = 0; c < space.width(id); ++c) {
        std::size_t slot = space.offset(id) + c;
        const PhaseComponent& comp = space.component_at(slot);
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        x.coords[slot] = comp.is_circle() ? circle::wrap(u * circle::kTwoPi) : comp.lo + u * (comp.hi - comp.lo);
      }
      end.net.fill_env(x, ef);
      start.net.fill_env(x, eg);
      double a = cf.real(ef);
      double b = cg.real(eg);
      agree = (a > 0) == (b > 0) && (a < 0) == (b < 0);
    }
    if (!agree)
      throw BoundaryMismatch("termination set of the first network and initialization set of the second differ at node " +
                             space.node(id).name + ": '" + print(end.term[i]) + "' vs '" + print(start.init[i]) + "'");
    if (warnings)
      warnings->push_back("node " + space.node(id).name +
                          ": boundary level functions differ structurally; accepted by sign agreement on 1000 samples");
  }
  std::vector<FunctionalStage> stages = first.stages();
  stages.insert(stages.end(), second.stages().begin(), second.stages().end());
  return FunctionalNetwork(std::move(stages));
}

TransitionResult compose_transition(const std::vector<FunctionalNetwork>& chain, const NetworkState& x0,
                                    const std::vector<double>& start_times, const IntegratorConfig& cfg) {
  if (chain.empty()) throw ConfigError("empty composition chain");
  NetworkState x = x0;
  std::vector<double> release = start_times;
  TransitionResult r;
  for (std::size_t q = 0; q < chain.size(); ++q) {
    TransitionOptions opts;
    // Hitting points lie on F within |dl/dt| * tau_event of the surface.
    if (q > 0) opts.init_tolerance = 1e-6;
    r = run_generalized(chain[q], x, release, cfg, opts);
    if (!r.completed()) return r;
    NetworkState next = r.terminal_state();
    next.clock = x0.clock;
    x = std::move(next);
    release = r.times;
  }
  return r;
}

std::pair<double, double> result_distance(const PhaseSpace& space, const TransitionResult& a,
                                          const TransitionResult& b) {
  double ds = 0.0, dt = 0.0;
  for (std::size_t i = 0; i < space.node_count(); ++i) {
    int id = static_cast<int>(i + 1);
    for (std::size_t c = 0; c < space.width(id); ++c) {
      const PhaseComponent& comp = space.component_at(space.offset(id) + c);
      double u = a.final_states[i][c], v = b.final_states[i][c];
      ds = std::max(ds, comp.is_circle() ? circle::distance(u, v) : std::fabs(u - v));
    }
    double ta = a.times[i], tb = b.times[i];
    if (std::isnan(ta) != std::isnan(tb)) dt = std::numeric_limits<double>::infinity();
    else if (!std::isnan(ta)) dt = std::max(dt, std::fabs(ta - tb));
  }
  return {ds, dt};
}

CompositionReport compare_with_chain(const FunctionalNetwork& direct, const std::vector<FunctionalNetwork>& chain,
                                     const std::vector<CompositionSample>& samples, const IntegratorConfig& cfg,
                                     unsigned threads) {
  CompositionReport report;
  report.samples.resize(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    CompositionOutcome& out = report.samples[i];
    try {
      TransitionResult d = run_generalized(direct, samples[i].state, samples[i].start_times, cfg);
      TransitionResult c = compose_transition(chain, samples[i].state, samples[i].start_times, cfg);
      out.direct = d.status;
      out.composed = c.status;
      if (d.completed() && c.completed()) std::tie(out.state_error, out.time_error) = result_distance(direct.space(), d, c);
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });
  for (const auto& s : report.samples) {
    if (!s.error.empty()) {
      ++report.failures;
      continue;
    }
    if (s.direct != s.composed) ++report.status_mismatches;
    report.max_state_error = std::max(report.max_state_error, s.state_error);
    report.max_time_error = std::max(report.max_time_error, s.time_error);
  }
  return report;
}

CompositionReport verify_composition(const FunctionalNetwork& first, const FunctionalNetwork& second,
                                     const std::vector<CompositionSample>& samples, const IntegratorConfig& cfg,
                                     unsigned threads) {
  std::vector<std::string> warnings;
  FunctionalNetwork joined = concatenate(first, second, &warnings);
  CompositionReport report = compare_with_chain(joined, {first, second}, samples, cfg, threads);
  report.warnings = std::move(warnings);
  return report;
}

}  // namespace asyncnet
