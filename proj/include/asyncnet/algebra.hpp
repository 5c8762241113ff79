#pragma once

// Product, amalgamation and concatenation of functional networks, and the
// numerical check of the transition-function composition formula.

#include <optional>
#include <string>
#include <vector>

#include "asyncnet/functional.hpp"

namespace asyncnet {

/// For each factor, factor node id (1-based) -> composite node id (1-based).
struct NodeEmbedding {
  std::vector<std::vector<int>> maps;
};

/// Factor a's nodes follow factor a-1's.
NodeEmbedding consecutive_embedding(const std::vector<FunctionalNetwork>& factors);

/// Disjoint union. Index-form coordinate names are renumbered; constants are
/// merged (same name, same value). Factors must have a single stage.
FunctionalNetwork product(const std::vector<FunctionalNetwork>& factors,
                          const std::optional<NodeEmbedding>& embedding = std::nullopt);

/// No connection structure in any stage carries an edge (constraints count).
bool is_trivial(const FunctionalNetwork& fn);

/// Amalgamation of parts on a common node set. Part a must factor as a
/// network on sigmas[a] times a trivial network; the sigmas are disjoint and
/// the parts share I and F. Throws PreconditionFailed otherwise.
FunctionalNetwork amalgamate(const std::vector<FunctionalNetwork>& parts,
                             const std::vector<std::vector<int>>& sigmas);

/// second ◇ first. Requires F of `first` to equal I of `second` after
/// normalization; a sign-agreement check on random points is the fallback
/// (noted in `warnings`). Throws BoundaryMismatch otherwise.
FunctionalNetwork concatenate(const FunctionalNetwork& first, const FunctionalNetwork& second,
                              std::vector<std::string>* warnings = nullptr);

struct CompositionSample {
  NetworkState state;
  std::vector<double> start_times;  // empty means all zero
};

struct CompositionOutcome {
  TransitionStatus direct = TransitionStatus::Error;
  TransitionStatus composed = TransitionStatus::Error;
  double state_error = 0.0;
  double time_error = 0.0;
  std::string error;
};

struct CompositionReport {
  double max_state_error = 0.0;
  double max_time_error = 0.0;
  std::size_t status_mismatches = 0;
  std::size_t failures = 0;
  std::vector<CompositionOutcome> samples;
  std::vector<std::string> warnings;

  bool within(double tol) const {
    return failures == 0 && status_mismatches == 0 && max_state_error <= tol && max_time_error <= tol;
  }
};

/// G^q(... G^2(G^1(X, T), S^1) ...) with the matching timing: each factor
/// runs from the previous terminal states, node i released at its previous
/// hitting time.
TransitionResult compose_transition(const std::vector<FunctionalNetwork>& chain, const NetworkState& x0,
                                    const std::vector<double>& start_times, const IntegratorConfig& cfg);

/// Distance between two terminal results: max over coordinates (geodesic on
/// circles) and over hitting times.
std::pair<double, double> result_distance(const PhaseSpace& space, const TransitionResult& a,
                                          const TransitionResult& b);

/// Direct simulation of `direct` against compose_transition(chain).
CompositionReport compare_with_chain(const FunctionalNetwork& direct, const std::vector<FunctionalNetwork>& chain,
                                     const std::vector<CompositionSample>& samples, const IntegratorConfig& cfg,
                                     unsigned threads = 1);

/// Direct run of second ◇ first against G^2(G^1(X,T), S^1(X,T)).
CompositionReport verify_composition(const FunctionalNetwork& first, const FunctionalNetwork& second,
                                     const std::vector<CompositionSample>& samples, const IntegratorConfig& cfg,
                                     unsigned threads = 1);

}  // namespace asyncnet
