#pragma once

// Rendezvous dynamics for event-structured networks: every node moves along
// its progress coordinate at a constant speed, stops on entering an event
// region and waits there until all participants have arrived.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "asyncnet/factorize.hpp"

namespace asyncnet {

struct RendezvousModel {
  /// One progress coordinate per node, named after the node: "N3" -> "p3"
  /// unless given explicitly.
  PhaseSpace space;
  std::vector<double> speeds;  // per node

  /// Unit-interval progress nodes N1..Nk with coordinates p1..pk.
  static RendezvousModel standard(std::size_t k, std::vector<double> speeds = {});
};

/// The whole guard table at once: I_i = {p_i = 0}, F_i = {p_i = 1}.
FunctionalNetwork rendezvous_monolithic(const RendezvousModel& model, const EventStructuredNetwork& esn);

FragmentBuilder rendezvous_fragments(const RendezvousModel& model, const EventStructuredNetwork& esn);
FreeBuilder rendezvous_free_run(const RendezvousModel& model);

/// Initial state with every node at progress 0.
NetworkState rendezvous_origin(const RendezvousModel& model);

/// Samples at the origin with start times uniform in [0, max_delay).
std::vector<CompositionSample> rendezvous_samples(const RendezvousModel& model, std::size_t n, std::uint64_t seed,
                                                  double max_delay = 0.5);

struct RendezvousVerification {
  std::size_t layers = 0;
  /// Named comparisons: realized vs monolithic (left, right), left vs
  /// right, and the two-factor composition check for each side.
  std::vector<std::pair<std::string, CompositionReport>> checks;

  double max_state_error() const;
  double max_time_error() const;
  bool within(double tol) const;
};

/// Factorizes, realizes both layerings and compares them with the
/// monolithic network and with each other on `samples`.
RendezvousVerification verify_rendezvous(const RendezvousModel& model, const EventStructuredNetwork& esn,
                                         const std::vector<CompositionSample>& samples, const IntegratorConfig& cfg,
                                         unsigned threads = 1);

}  // namespace asyncnet
