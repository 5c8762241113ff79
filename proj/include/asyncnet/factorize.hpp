#pragma once

// Event-structured networks and their decomposition into a concatenation of
// amalgamations: precedence, left/right-maximal layerings, layer boundaries.

#include <functional>
#include <string>
#include <vector>

#include "asyncnet/algebra.hpp"

namespace asyncnet {

/// Progress interval of one participating node; progress 0 is on I_i and 1
/// on F_i.
struct ProgressInterval {
  int node = 1;
  double entry = 0.0;
  double exit = 0.0;
  friend bool operator==(const ProgressInterval&, const ProgressInterval&) = default;
};

struct EventRegion {
  std::string name;
  std::vector<ProgressInterval> intervals;  // sorted by node

  const ProgressInterval* on(int node) const;
  std::vector<int> nodes() const;
  friend bool operator==(const EventRegion&, const EventRegion&) = default;
};

/// Strict order as an adjacency matrix over event indices.
using Precedence = std::vector<std::vector<bool>>;

class EventStructuredNetwork {
 public:
  /// Validates the regions and builds the precedence order; throws
  /// CyclicPrecedence when the per-node orders contradict each other.
  EventStructuredNetwork(std::size_t node_count, std::vector<EventRegion> events);

  std::size_t node_count() const { return k_; }
  const std::vector<EventRegion>& events() const { return events_; }
  std::size_t index_of(const std::string& name) const;

  /// E_i before E_j on some shared node (not transitively closed).
  const Precedence& direct() const { return direct_; }
  /// Transitive closure of direct().
  const Precedence& order() const { return order_; }
  bool precedes(std::size_t a, std::size_t b) const { return order_[a][b]; }

 private:
  std::size_t k_;
  std::vector<EventRegion> events_;
  Precedence direct_;
  Precedence order_;
};

Precedence build_precedence(const EventStructuredNetwork& esn);

struct Factorization {
  /// Layers in temporal order; each a sorted list of event names.
  std::vector<std::vector<std::string>> layers;
  /// boundaries[b][i]: progress threshold on node i+1 between layer b-1 and
  /// layer b. boundaries[0] is all 0, boundaries.back() all 1.
  std::vector<std::vector<double>> boundaries;
};

Factorization factorize_left(const EventStructuredNetwork& esn);
Factorization factorize_right(const EventStructuredNetwork& esn);

/// Number of events on the longest precedence chain.
std::size_t layer_count_minimal(const EventStructuredNetwork& esn);

/// Checks a factorization against the raw event set; returns the problems
/// found (empty when valid).
std::vector<std::string> validate_factorization(const EventStructuredNetwork& esn, const Factorization& f);

/// Latest layer first, e.g. "P^h ◇ (P^e ⊔ P^g) ◇ P^a".
std::string notation(const Factorization& f);

/// Builds the fragment for one event: a functional network on the event's
/// nodes only (in increasing node order), with I and F at the given
/// per-node thresholds (indexed by node id - 1).
using FragmentBuilder = std::function<FunctionalNetwork(const EventRegion& event, const std::vector<double>& lo,
                                                        const std::vector<double>& hi)>;

/// Network on the given nodes that free-runs between the thresholds.
using FreeBuilder = std::function<FunctionalNetwork(const std::vector<int>& nodes, const std::vector<double>& lo,
                                                    const std::vector<double>& hi)>;

/// concatenate(amalgamate(layer_q), ..., amalgamate(layer_1)). Each event
/// part is fragment x free-run remainder, embedded on the full node set.
FunctionalNetwork realize(const EventStructuredNetwork& esn, const Factorization& f, const FragmentBuilder& fragment,
                          const FreeBuilder& free_run);

/// Per-layer networks of realize(), in temporal order.
std::vector<FunctionalNetwork> realize_layers(const EventStructuredNetwork& esn, const Factorization& f,
                                              const FragmentBuilder& fragment, const FreeBuilder& free_run);

/// Structural primitivity test for the fragment of `event`: the interaction
/// graph on the participants is weakly connected, and a reference run from
/// `reference` (with the given start times) shows at most one interaction
/// episode. Disagreements are reported in `warnings`.
bool check_primitive(const FunctionalNetwork& fragment, const EventRegion& event, const NetworkState& reference,
                     const std::vector<double>& start_times, const IntegratorConfig& cfg,
                     std::vector<std::string>* warnings = nullptr);

}  // namespace asyncnet
