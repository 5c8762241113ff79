#pragma once

// Functional asynchronous networks: per-node initialization and termination
// hypersurfaces, transition and timing functions, and domain estimation.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "asyncnet/core.hpp"
#include "asyncnet/semiflow.hpp"

namespace asyncnet {

/// |level| at or below this counts as lying on a hypersurface.
inline constexpr double kSurfaceTolerance = 1e-9;

/// One network with its I and F level functions (one expression per node,
/// I_i = {init_i = 0}, F_i = {term_i = 0}, term_i > 0 past F_i).
struct FunctionalStage {
  AsyncNetwork net;
  std::vector<Expression> init;
  std::vector<Expression> term;

  friend bool operator==(const FunctionalStage&, const FunctionalStage&) = default;
};

/// N = (network, I, F). A concatenation has several stages: node i follows
/// stage s until it crosses F^s_i, then stage s+1.
class FunctionalNetwork {
 public:
  FunctionalNetwork(AsyncNetwork net, std::vector<Expression> init, std::vector<Expression> term);
  explicit FunctionalNetwork(std::vector<FunctionalStage> stages);

  const std::vector<FunctionalStage>& stages() const { return stages_; }
  std::size_t stage_count() const { return stages_.size(); }
  const FunctionalStage& first() const { return stages_.front(); }
  const FunctionalStage& last() const { return stages_.back(); }
  const PhaseSpace& space() const { return stages_.front().net.space(); }
  std::size_t node_count() const { return space().node_count(); }

  const std::vector<Expression>& init() const { return first().init; }
  const std::vector<Expression>& term() const { return last().term; }

  double init_level(std::size_t node, const NetworkState& x) const;
  double term_level(std::size_t node, const NetworkState& x) const;

  friend bool operator==(const FunctionalNetwork&, const FunctionalNetwork&) = default;

 private:
  std::vector<FunctionalStage> stages_;
};

enum class TransitionStatus { Completed, Deadlocked, Error };

std::string to_string(TransitionStatus s);

struct TransitionResult {
  TransitionStatus status = TransitionStatus::Error;
  /// Per node: coordinates at the crossing of F_i, or at the end of the run
  /// for nodes that never got there.
  std::vector<std::vector<double>> final_states;
  /// Per node: hitting time of F_i measured from the initial clock; NaN if
  /// not reached.
  std::vector<double> times;
  std::vector<std::string> warnings;
  double t_max = 0.0;
  std::string error;
  std::optional<Trajectory> trajectory;

  bool completed() const { return status == TransitionStatus::Completed; }
  /// All node coordinates assembled into one state, clock set to the latest
  /// finishing time (or the end of the run).
  NetworkState terminal_state() const;
};

struct TransitionOptions {
  bool keep_trajectory = false;
  /// Tolerance for the "x0 lies on I" precondition.
  double init_tolerance = kSurfaceTolerance;
};

/// G_0 and S: integrate from x0 on I until every node has crossed its F_i.
TransitionResult run_transition(const FunctionalNetwork& fn, const NetworkState& x0,
                                const IntegratorConfig& cfg, const TransitionOptions& opts = {});

/// G and S-hat: node i is held at x0_i until start_times[i].
TransitionResult run_generalized(const FunctionalNetwork& fn, const NetworkState& x0,
                                 const std::vector<double>& start_times, const IntegratorConfig& cfg,
                                 const TransitionOptions& opts = {});

/// One swept coordinate. Grid values are lo + (hi - lo) * (j / n), j < n.
struct SampleAxis {
  std::string coordinate;
  double lo = 0.0;
  double hi = 1.0;
  std::size_t count = 1;
};

/// Cartesian grid over the axes, last axis fastest. Other coordinates keep
/// their value in `base`.
std::vector<NetworkState> grid_samples(const PhaseSpace& space, const NetworkState& base,
                                       const std::vector<SampleAxis>& axes);

/// `n` uniform samples in [lo, hi) per axis, reproducible from `seed`.
std::vector<NetworkState> random_samples(const PhaseSpace& space, const NetworkState& base,
                                         const std::vector<SampleAxis>& axes, std::size_t n,
                                         std::uint64_t seed);

struct DomainReport {
  std::size_t sampled = 0;
  std::size_t completed = 0;
  std::size_t deadlocked = 0;
  std::size_t errors = 0;
  double t_max = 0.0;
  std::vector<NetworkState> samples;
  std::vector<TransitionResult> results;  // parallel to samples
};

/// Classifies each sample by its run_generalized status. Results are in
/// sample order whatever the thread count.
DomainReport estimate_domain(const FunctionalNetwork& fn, const std::vector<NetworkState>& samples,
                             const IntegratorConfig& cfg, unsigned threads = 1,
                             const std::vector<double>& start_times = {});

/// Runs `task(i)` for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& task);

}  // namespace asyncnet
