#pragma once

// Domain types for asynchronous networks: phase spaces, connection
// structures, admissible vector fields and event maps.

#include <compare>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asyncnet/expr.hpp"

namespace asyncnet {

/// Node id of the constraining node N0. Real nodes are numbered 1..k.
inline constexpr int kConstrainingNode = 0;

struct PhaseComponent {
  enum class Kind { Interval, Circle };

  std::string name;
  Kind kind = Kind::Interval;
  double lo = 0.0;
  double hi = 0.0;

  static PhaseComponent interval(std::string name, double lo, double hi);
  static PhaseComponent circle(std::string name);

  bool is_circle() const { return kind == Kind::Circle; }
  friend bool operator==(const PhaseComponent&, const PhaseComponent&) = default;
};

struct NodeSpec {
  std::string name;
  std::vector<PhaseComponent> components;
  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

/// Product of per-node phase spaces M = M_1 x ... x M_k, laid out as one flat
/// coordinate vector in node order.
class PhaseSpace {
 public:
  PhaseSpace() = default;
  explicit PhaseSpace(std::vector<NodeSpec> nodes);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t dimension() const { return slot_node_.size(); }
  std::span<const NodeSpec> nodes() const { return nodes_; }

  /// 1-based node id.
  const NodeSpec& node(int id) const { return nodes_.at(static_cast<std::size_t>(id - 1)); }
  std::size_t offset(int id) const { return offsets_.at(static_cast<std::size_t>(id - 1)); }
  std::size_t width(int id) const { return node(id).components.size(); }

  std::optional<int> find_node(std::string_view name) const;
  /// Slot of a coordinate given by alias or by index form x[i][c].
  std::optional<std::size_t> find_coordinate(std::string_view name) const;

  int node_of_slot(std::size_t slot) const { return slot_node_.at(slot); }
  const PhaseComponent& component_at(std::size_t slot) const;
  std::string index_name(std::size_t slot) const;
  std::vector<std::string> coordinate_names() const;

  friend bool operator==(const PhaseSpace& a, const PhaseSpace& b) { return a.nodes_ == b.nodes_; }

 private:
  std::vector<NodeSpec> nodes_;
  std::vector<std::size_t> offsets_;
  std::vector<int> slot_node_;
  std::map<std::string, std::size_t, std::less<>> by_name_;
};

/// A point X in M together with the global clock.
struct NetworkState {
  std::vector<double> coords;
  double clock = 0.0;
  friend bool operator==(const NetworkState&, const NetworkState&) = default;
};

/// Builds a state, normalizing circle coordinates; throws ConfigError when an
/// interval coordinate lies outside its bounds.
NetworkState make_state(const PhaseSpace& space, std::vector<double> coords, double clock = 0.0);
void validate_state(const PhaseSpace& space, const NetworkState& state);
std::span<const double> node_coords(const PhaseSpace& space, const NetworkState& state, int id);

struct Edge {
  int from = 0;
  int to = 1;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Directed graph on {N0, N1, ..., Nk}; edges from N0 are constraints.
struct ConnectionStructure {
  std::string name;
  std::set<Edge> edges;

  bool has_edge(int from, int to) const { return edges.count(Edge{from, to}) != 0; }
  bool edge_free() const { return edges.empty(); }
  friend bool operator==(const ConnectionStructure&, const ConnectionStructure&) = default;
};

/// Graph join: union of edges; names joined with " v ".
ConnectionStructure join(const ConnectionStructure& a, const ConnectionStructure& b);

/// f^alpha restricted to the nodes of one block: coordinate name -> expression.
struct AdmissibleField {
  std::string structure;
  std::map<std::string, Expression> components;
  friend bool operator==(const AdmissibleField&, const AdmissibleField&) = default;
};

struct Violation {
  int node = 0;
  std::string variable;
  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Forward admissibility: component i may read only its own coordinates and
/// those of nodes j with (j -> i) in alpha. Names that are not coordinates
/// (constants, t, pi) are always allowed.
std::vector<Violation> check_admissibility(const PhaseSpace& space, const AdmissibleField& field,
                                           const ConnectionStructure& alpha);

struct Guard {
  Expression predicate;
  std::string target;
  friend bool operator==(const Guard&, const Guard&) = default;
};

/// Ordered guard table; the first true predicate wins, else the default.
struct EventMap {
  std::vector<Guard> guards;
  std::string default_structure;
  friend bool operator==(const EventMap&, const EventMap&) = default;
};

/// One guard table together with the nodes whose dynamics it selects.
struct Block {
  std::vector<int> nodes;
  std::vector<ConnectionStructure> structures;
  std::vector<AdmissibleField> fields;  // parallel to structures
  EventMap events;

  std::optional<std::size_t> structure_index(std::string_view name) const;
  bool owns(int node) const;
  friend bool operator==(const Block&, const Block&) = default;
};

using Constants = std::map<std::string, double>;

/// Which structure each block currently selects. The active connection
/// structure is the join of the selected structures.
struct Selection {
  std::vector<std::size_t> choice;
  friend bool operator==(const Selection&, const Selection&) = default;
};

namespace detail {
struct CompiledNetwork;
}

/// The quadruple (N, A, F, E). Immutable after construction.
class AsyncNetwork {
 public:
  AsyncNetwork(PhaseSpace space, Constants constants, std::vector<Block> blocks);

  const PhaseSpace& space() const { return space_; }
  const Constants& constants() const { return constants_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  /// Every declared structure, in block order.
  std::vector<ConnectionStructure> generalized_structure() const;
  ConnectionStructure joined(const Selection& s) const;
  int owner_block(int node) const { return owner_.at(static_cast<std::size_t>(node - 1)); }

  /// Environment layout: [coordinates | t | pi | constants...].
  const SymbolTable& symbols() const;
  std::size_t env_size() const;
  void fill_env(const NetworkState& state, std::vector<double>& env) const;
  std::vector<double> make_env(const NetworkState& state) const;

  const detail::CompiledNetwork& compiled() const { return *compiled_; }

  friend bool operator==(const AsyncNetwork& a, const AsyncNetwork& b) {
    return a.space_ == b.space_ && a.constants_ == b.constants_ && a.blocks_ == b.blocks_;
  }

 private:
  PhaseSpace space_;
  Constants constants_;
  std::vector<Block> blocks_;
  std::vector<int> owner_;
  std::shared_ptr<const detail::CompiledNetwork> compiled_;
};

Selection evaluate_event_map(const AsyncNetwork& net, const NetworkState& state);

/// F(X) = f^{E(X)}(X), full tangent vector in coordinate layout.
std::vector<double> network_field(const AsyncNetwork& net, const NetworkState& state);

/// f^alpha(X) for a fixed selection.
std::vector<double> field_under(const AsyncNetwork& net, const Selection& selection,
                                const NetworkState& state);

/// Builds the symbol table for a phase space and constant table.
SymbolTable make_symbols(const PhaseSpace& space, const Constants& constants);

namespace detail {

struct CompiledStructure {
  std::vector<std::size_t> slots;     // owned coordinate slots
  std::vector<CompiledExpr> rates;    // parallel to slots
  std::vector<bool> zero;             // literal-0 components
};

struct CompiledBlock {
  std::vector<CompiledStructure> structures;
  std::vector<CompiledExpr> guards;
  std::vector<std::size_t> targets;
  /// Every comparison inside the guards. A step over which one of them
  /// flips may have crossed a thin region and is bisected.
  std::vector<CompiledExpr> atoms;
  std::size_t fallback = 0;

  std::size_t select(std::span<const double> env) const;
};

struct CompiledNetwork {
  SymbolTable symbols;
  std::size_t env_size = 0;
  std::size_t clock_slot = 0;
  std::vector<double> constant_values;  // written after the clock and pi slots
  std::vector<CompiledBlock> blocks;
};

}  // namespace detail

}  // namespace asyncnet
