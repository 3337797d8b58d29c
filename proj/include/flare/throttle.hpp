#pragma once

// Resource-denial emulation: throttle the links of selected clients and
// measure how long the federation takes to reach 90% accuracy.

#include <cstddef>
#include <span>
#include <vector>

#include "flare/flsim.hpp"

namespace flare {

/// c_A = n_c * B_uncomp / B_denied. Throws InvalidThroughput unless all
/// inputs are positive and B_denied <= B_uncomp.
double cost_of_attack(std::size_t n_c, double b_uncomp_mbps, double b_denied_mbps);

/// Surrogate global accuracy after n rounds of progress:
/// 0.99 (1 - exp(-n / tau)) with tau = rounds_to_converge / ln 11, so the
/// curve crosses 0.90 exactly at rounds_to_converge.
double accuracy_curve(double rounds, std::size_t rounds_to_converge);
inline constexpr double kTargetAccuracy = 0.90;

/// Throttle interval relative to the start of each round of the victim.
struct ThrottleWindow {
  double offset_s = 0.0;
  double length_s = 0.0;
};

struct ThrottleSchedule {
  /// Continuous: the link is throttled all the time. Gated: only inside
  /// `windows`, re-armed at every round start.
  bool gated = false;
  std::vector<ThrottleWindow> windows;

  static ThrottleSchedule continuous() { return {}; }
  /// Windows over the expected downlink and uplink transfers of a client
  /// training `assumed`, i.e. what an attacker who fingerprinted the
  /// victim as that model would arm.
  static ThrottleSchedule tuned_for(const ModelProfile& assumed, const ClientProfile& client,
                                    const LinkProfile& link, double denial_frac);
};

struct ConvergenceReport {
  double time_s = 0.0;
  /// Sync: completed rounds. Async: accumulated progress in round units.
  double rounds = 0.0;
  std::size_t updates = 0;
  double cost = 0.0;  // 0 when no client is attacked
  /// Mean share of wall-clock time attacked links spent throttled.
  double throttled_fraction = 0.0;
};

/// All clients train clients[0].model under clients[0].aggregation.
/// Per-round compute jitter is seeded per (client, round), so attacked
/// and baseline runs see the same noise. denial_frac = 0 is the baseline.
ConvergenceReport emulate_throttle(std::span<const SessionSpec> clients,
                                   std::span<const std::size_t> attacked, double denial_frac,
                                   SyncMode mode,
                                   const ThrottleSchedule& schedule = ThrottleSchedule::continuous());

/// Time (s) to move `bytes` starting at `start` over a link whose rate
/// drops to rate * (1 - denial) inside the absolute [begin, end) intervals
/// (sorted, disjoint). Exposed for testing.
double transfer_end(double start, double bytes, double bytes_per_s, double denial,
                    std::span<const std::pair<double, double>> throttled);

}  // namespace flare
