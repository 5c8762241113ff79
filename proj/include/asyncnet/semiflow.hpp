#pragma once

// Forward integration of F(X) = f^{E(X)}(X): fixed-step RK4 under the active
// structure, with bisection localization of structure switches.

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asyncnet/core.hpp"

namespace asyncnet {

struct IntegratorConfig {
  double step = 1e-3;
  double tau_event = 1e-9;
  double min_dwell = 0.0;
  double t_max = 1e3;
  /// More switches than this inside one window of max(min_dwell, step) is chatter.
  int chatter_limit = 64;
  /// Record every n-th step in the trajectory; 0 records segment endpoints only.
  std::size_t output_stride = 1;

  void validate() const;
};

struct Segment {
  std::string structure;
  Selection selection;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<NetworkState> samples;
};

/// Piecewise-smooth integral curve, one segment per active structure.
struct Trajectory {
  std::vector<Segment> segments;
  std::vector<double> switch_times;
  bool budget_exhausted = false;

  const NetworkState& final_state() const { return segments.back().samples.back(); }
  std::vector<std::string> structure_sequence() const;
};

/// One classical RK4 step of the fixed field f^selection. Circle coordinates
/// stay on the lattice; interval coordinates are clamped, with outward rates
/// at a boundary set to zero.
NetworkState step_smooth(const AsyncNetwork& net, const NetworkState& state,
                         const Selection& selection, double h);

/// Bisection for the first switch in (t_a, t_b]; requires E(a) != E(b)
/// (PreconditionFailed otherwise). The bracket is re-integrated from
/// `state_a` under E(state_a).
std::pair<double, NetworkState> locate_event(const AsyncNetwork& net, const NetworkState& state_a,
                                             const NetworkState& state_b, const IntegratorConfig& cfg);

/// The semiflow Phi_X on [clock, clock + duration].
Trajectory flow(const AsyncNetwork& net, const NetworkState& state0, double duration,
                const IntegratorConfig& cfg);

namespace detail {

/// One stage of a (possibly concatenated) functional network. `term` holds a
/// level function per node, or is empty when there is nothing to monitor.
struct StageSpec {
  const AsyncNetwork* net = nullptr;
  std::span<const Expression> term;
};

struct SimulationResult {
  Trajectory trajectory;
  /// Time of the crossing of the last stage's termination set, per node.
  std::vector<std::optional<double>> finish_time;
  std::vector<std::vector<double>> finish_coords;
  std::vector<std::string> warnings;
  bool budget_exhausted = false;
  double end_time = 0.0;
};

/// Runs the stage machine: node i is held until release[i], then follows
/// stage s dynamics until its first crossing of term[s][i], then stage s+1.
/// Nodes past their last stage are frozen. Stops at t_end, at t_max, or once
/// every node has finished (when monitoring).
SimulationResult simulate(std::span<const StageSpec> stages, const NetworkState& x0,
                          std::span<const double> release, double t_end,
                          const IntegratorConfig& cfg);

}  // namespace detail

}  // namespace asyncnet
