#include "asyncnet/core.hpp"

#include <algorithm>
#include <cmath>

#include "asyncnet/circle.hpp"
#include "asyncnet/error.hpp"

namespace asyncnet {

PhaseComponent PhaseComponent::interval(std::string name, double lo, double hi) {
  return PhaseComponent{std::move(name), Kind::Interval, lo, hi};
}

PhaseComponent PhaseComponent::circle(std::string name) {
  return PhaseComponent{std::move(name), Kind::Circle, 0.0, circle::kTwoPi};
}

PhaseSpace::PhaseSpace(std::vector<NodeSpec> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ConfigError("phase space needs at least one node");
  std::set<std::string> node_names;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const NodeSpec& n = nodes_[i];
    if (!node_names.insert(n.name).second) throw ConfigError("duplicate node name '" + n.name + "'");
    if (n.components.empty()) throw ConfigError("node '" + n.name + "' has no phase components");
    offsets_.push_back(slot_node_.size());
    for (const auto& c : n.components) {
      if (c.kind == PhaseComponent::Kind::Interval && !(c.lo < c.hi))
        throw ConfigError("interval for '" + c.name + "' requires lo < hi");
      if (!by_name_.emplace(c.name, slot_node_.size()).second)
        throw ConfigError("duplicate coordinate name '" + c.name + "'");
      slot_node_.push_back(static_cast<int>(i + 1));
    }
  }
  for (std::size_t slot = 0; slot < slot_node_.size(); ++slot) by_name_.emplace(index_name(slot), slot);
}

std::optional<int> PhaseSpace::find_node(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].name == name) return static_cast<int>(i + 1);
  return std::nullopt;
}

std::optional<std::size_t> PhaseSpace::find_coordinate(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

const PhaseComponent& PhaseSpace::component_at(std::size_t slot) const {
  int id = node_of_slot(slot);
  return node(id).components.at(slot - offset(id));
}

std::string PhaseSpace::index_name(std::size_t slot) const {
  int id = node_of_slot(slot);
  return "x[" + std::to_string(id) + "][" + std::to_string(slot - offset(id) + 1) + "]";
}

std::vector<std::string> PhaseSpace::coordinate_names() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_)
    for (const auto& c : n.components) out.push_back(c.name);
  return out;
}

NetworkState make_state(const PhaseSpace& space, std::vector<double> coords, double clock) {
  if (coords.size() != space.dimension())
    throw ConfigError("state has " + std::to_string(coords.size()) + " coordinates, expected " +
                      std::to_string(space.dimension()));
  for (std::size_t s = 0; s < coords.size(); ++s)
    if (space.component_at(s).is_circle()) coords[s] = circle::wrap(coords[s]);
  NetworkState state{std::move(coords), clock};
  validate_state(space, state);
  return state;
}

void validate_state(const PhaseSpace& space, const NetworkState& state) {
  if (state.coords.size() != space.dimension()) throw ConfigError("state dimension mismatch");
  if (!(state.clock >= 0.0)) throw ConfigError("clock must be nonnegative");
  for (std::size_t s = 0; s < state.coords.size(); ++s) {
    const PhaseComponent& c = space.component_at(s);
    double v = state.coords[s];
    if (!std::isfinite(v)) throw ConfigError("coordinate '" + c.name + "' is not finite");
    if (c.is_circle()) {
      if (v < 0.0 || v >= circle::kTwoPi)
        throw ConfigError("circle coordinate '" + c.name + "' not in [0, 2pi)");
    } else if (v < c.lo || v > c.hi) {
      throw ConfigError("coordinate '" + c.name + "' outside [" + std::to_string(c.lo) + ", " +
                        std::to_string(c.hi) + "]");
    }
  }
}

std::span<const double> node_coords(const PhaseSpace& space, const NetworkState& state, int id) {
  return std::span<const double>(state.coords).subspan(space.offset(id), space.width(id));
}

ConnectionStructure join(const ConnectionStructure& a, const ConnectionStructure& b) {
  ConnectionStructure out{a.name + " v " + b.name, a.edges};
  out.edges.insert(b.edges.begin(), b.edges.end());
  return out;
}

std::vector<Violation> check_admissibility(const PhaseSpace& space, const AdmissibleField& field,
                                           const ConnectionStructure& alpha) {
  std::vector<Violation> out;
  for (const auto& [coord, expr] : field.components) {
    auto slot = space.find_coordinate(coord);
    if (!slot) {
      out.push_back({0, coord});
      continue;
    }
    int i = space.node_of_slot(*slot);
    for (const auto& var : free_variables(expr)) {
      auto vs = space.find_coordinate(var);
      if (!vs) continue;
      int j = space.node_of_slot(*vs);
      if (j == i || alpha.has_edge(j, i)) continue;
      Violation v{i, var};
      if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
  }
  return out;
}

std::optional<std::size_t> Block::structure_index(std::string_view name) const {
  for (std::size_t i = 0; i < structures.size(); ++i)
    if (structures[i].name == name) return i;
  return std::nullopt;
}

bool Block::owns(int node) const { return std::find(nodes.begin(), nodes.end(), node) != nodes.end(); }

SymbolTable make_symbols(const PhaseSpace& space, const Constants& constants) {
  SymbolTable table;
  const auto dim = static_cast<int>(space.dimension());
  for (int s = 0; s < dim; ++s) {
    table.define(space.component_at(static_cast<std::size_t>(s)).name, s);
    table.define(space.index_name(static_cast<std::size_t>(s)), s);
  }
  table.define("t", dim);
  table.define("pi", dim + 1);
  int slot = dim + 2;
  for (const auto& [name, value] : constants) {
    if (table.contains(name)) throw ConfigError("constant '" + name + "' shadows another symbol");
    table.define(name, slot++);
  }
  return table;
}

namespace {

void collect_atoms(const Expression& e, const SymbolTable& symbols, std::vector<CompiledExpr>& out) {
  switch (e.op()) {
    case Op::Not:
    case Op::And:
    case Op::Or:
      for (const auto& a : e.args()) collect_atoms(a, symbols, out);
      return;
    default:
      out.emplace_back(e, symbols);
  }
}

}  // namespace

std::size_t detail::CompiledBlock::select(std::span<const double> env) const {
  for (std::size_t g = 0; g < guards.size(); ++g)
    if (guards[g].truth(env)) return targets[g];
  return fallback;
}

AsyncNetwork::AsyncNetwork(PhaseSpace space, Constants constants, std::vector<Block> blocks)
    : space_(std::move(space)), constants_(std::move(constants)), blocks_(std::move(blocks)) {
  const int k = static_cast<int>(space_.node_count());
  if (blocks_.empty()) throw ConfigError("network needs at least one event map");
  owner_.assign(static_cast<std::size_t>(k), -1);

  auto compiled = std::make_shared<detail::CompiledNetwork>();
  compiled->symbols = make_symbols(space_, constants_);
  compiled->clock_slot = space_.dimension();
  for (const auto& [name, value] : constants_) compiled->constant_values.push_back(value);
  compiled->env_size = space_.dimension() + 2 + constants_.size();

  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    Block& block = blocks_[b];
    std::sort(block.nodes.begin(), block.nodes.end());
    if (block.nodes.empty()) throw ConfigError("event map owns no nodes");
    for (int id : block.nodes) {
      if (id < 1 || id > k) throw ConfigError("event map owns unknown node " + std::to_string(id));
      if (owner_[static_cast<std::size_t>(id - 1)] != -1)
        throw ConfigError("node '" + space_.node(id).name + "' is owned by two event maps");
      owner_[static_cast<std::size_t>(id - 1)] = static_cast<int>(b);
    }
    if (block.structures.empty()) throw ConfigError("generalized connection structure is empty");
    if (block.fields.size() != block.structures.size())
      throw ConfigError("every connection structure needs exactly one admissible field");

    detail::CompiledBlock cb;
    std::set<std::string> names;
    for (std::size_t s = 0; s < block.structures.size(); ++s) {
      const ConnectionStructure& alpha = block.structures[s];
      if (!names.insert(alpha.name).second)
        throw ConfigError("duplicate connection structure '" + alpha.name + "'");
      for (const Edge& e : alpha.edges) {
        if (e.from == e.to) throw ConfigError("self-loop in structure '" + alpha.name + "'");
        if (e.to < 1 || e.to > k || e.from < 0 || e.from > k)
          throw ConfigError("edge references unknown node in '" + alpha.name + "'");
        if (!block.owns(e.to))
          throw ConfigError("structure '" + alpha.name + "' has an edge into node '" +
                            space_.node(e.to).name + "' it does not own");
      }
      const AdmissibleField& field = block.fields[s];
      if (field.structure != alpha.name)
        throw ConfigError("field '" + field.structure + "' does not match structure '" + alpha.name + "'");

      detail::CompiledStructure cs;
      std::size_t expected = 0;
      for (int id : block.nodes) {
        for (std::size_t c = 0; c < space_.width(id); ++c) {
          std::size_t slot = space_.offset(id) + c;
          const std::string& coord = space_.component_at(slot).name;
          auto it = field.components.find(coord);
          if (it == field.components.end())
            throw ConfigError("field '" + alpha.name + "' has no component for '" + coord + "'");
          check_type(it->second, false);
          cs.slots.push_back(slot);
          cs.rates.emplace_back(it->second, compiled->symbols);
          cs.zero.push_back(cs.rates.back().is_zero_literal());
          ++expected;
        }
      }
      if (field.components.size() != expected)
        throw ConfigError("field '" + alpha.name + "' defines coordinates outside its event map");
      auto violations = check_admissibility(space_, field, alpha);
      if (!violations.empty()) {
        const Violation& v = violations.front();
        throw ConfigError("field '" + alpha.name + "' is not admissible: node " +
                          std::to_string(v.node) + " depends on '" + v.variable + "'");
      }
      cb.structures.push_back(std::move(cs));
    }

    for (const Guard& g : block.events.guards) {
      check_type(g.predicate, true);
      auto target = block.structure_index(g.target);
      if (!target) throw ConfigError("event map targets unknown structure '" + g.target + "'");
      cb.guards.emplace_back(g.predicate, compiled->symbols);
      cb.targets.push_back(*target);
      collect_atoms(g.predicate, compiled->symbols, cb.atoms);
    }
    auto fallback = block.structure_index(block.events.default_structure);
    if (!fallback)
      throw ConfigError("event map default '" + block.events.default_structure + "' is not a structure");
    cb.fallback = *fallback;
    compiled->blocks.push_back(std::move(cb));
  }
  for (int id = 1; id <= k; ++id)
    if (owner_[static_cast<std::size_t>(id - 1)] == -1)
      throw ConfigError("node '" + space_.node(id).name + "' is not governed by any event map");
  compiled_ = std::move(compiled);
}

std::vector<ConnectionStructure> AsyncNetwork::generalized_structure() const {
  std::vector<ConnectionStructure> out;
  for (const auto& b : blocks_) out.insert(out.end(), b.structures.begin(), b.structures.end());
  return out;
}

ConnectionStructure AsyncNetwork::joined(const Selection& s) const {
  ConnectionStructure out;
  bool first = true;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const ConnectionStructure& alpha = blocks_[b].structures.at(s.choice.at(b));
    // Single-structure edge-free maps (trivial factors) add nothing to the name.
    if (blocks_.size() > 1 && blocks_[b].structures.size() == 1 && alpha.edge_free()) continue;
    out = first ? alpha : join(out, alpha);
    first = false;
  }
  if (first) out = ConnectionStructure{blocks_.front().structures.at(s.choice.at(0)).name, {}};
  return out;
}

const SymbolTable& AsyncNetwork::symbols() const { return compiled_->symbols; }

std::size_t AsyncNetwork::env_size() const { return compiled_->env_size; }

void AsyncNetwork::fill_env(const NetworkState& state, std::vector<double>& env) const {
  env.resize(compiled_->env_size);
  std::copy(state.coords.begin(), state.coords.end(), env.begin());
  env[compiled_->clock_slot] = state.clock;
  env[compiled_->clock_slot + 1] = circle::kPi;
  std::copy(compiled_->constant_values.begin(), compiled_->constant_values.end(),
            env.begin() + static_cast<std::ptrdiff_t>(compiled_->clock_slot + 2));
}

std::vector<double> AsyncNetwork::make_env(const NetworkState& state) const {
  std::vector<double> env;
  fill_env(state, env);
  return env;
}

Selection evaluate_event_map(const AsyncNetwork& net, const NetworkState& state) {
  std::vector<double> env = net.make_env(state);
  Selection s;
  for (const auto& block : net.compiled().blocks) s.choice.push_back(block.select(env));
  return s;
}

std::vector<double> field_under(const AsyncNetwork& net, const Selection& selection,
                                const NetworkState& state) {
  std::vector<double> env = net.make_env(state);
  std::vector<double> out(net.space().dimension(), 0.0);
  const auto& blocks = net.compiled().blocks;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& cs = blocks[b].structures.at(selection.choice.at(b));
    for (std::size_t r = 0; r < cs.slots.size(); ++r) out[cs.slots[r]] = cs.rates[r].real(env);
  }
  return out;
}

std::vector<double> network_field(const AsyncNetwork& net, const NetworkState& state) {
  return field_under(net, evaluate_event_map(net, state), state);
}

}  // namespace asyncnet
