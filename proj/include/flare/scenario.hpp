#pragma once

// Scenario files: INI text describing simulator profiles and the corpus
// to generate from them.
//
//   [corpus]
//   seed = 42
//   traces_per_spec = 3
//   duration_s = 1200
//   sync_mode = Sync
//   models = resnet18, bilstm, ...      ; names of [model:*] sections
//   clients = c0, c1                    ; names of [client:*] sections
//   link = wifi                         ; name of a [link:*] section
//   aggregation = cycle                 ; cycle | FedAvg | WeightedFedAvg | FedProx
//
//   [model:resnet18]
//   family = CNN
//   dataset = cifar10
//   theta = 2800000
//   rounds_to_converge = 60
//   compute_s_per_round = 45
//   burstiness = 4
//   periodicity_s = 2                   ; optional
//
//   [client:c0]
//   compute_multiplier = 1.0
//   jitter_frac = 0.08
//   data_share = 1.0
//
//   [link:wifi]
//   throughput_mbps = 216
//   mss_bytes = 1448
//   base_latency_ms = 2

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "flare/flsim.hpp"

namespace flare {

struct Scenario {
  std::uint64_t seed = 42;
  std::size_t traces_per_spec = 3;
  double duration_s = 1200.0;
  SyncMode sync_mode = SyncMode::Sync;
  /// Empty means cycle FedAvg / WeightedFedAvg / FedProx over (model, client).
  std::optional<Aggregation> aggregation;
  std::vector<ModelProfile> models;
  std::vector<ClientProfile> clients;
  LinkProfile link;

  /// One template per (model, client) pair, models outer.
  std::vector<SessionSpec> templates() const;
  void validate() const;
};

Scenario default_scenario();

/// Throws InvalidConfig (with the offending section or key) on bad input.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::string& path);
void write_scenario(std::ostream& out, const Scenario& s);

/// FNV-1a over the canonical written form.
std::string scenario_hash(const Scenario& s);

}  // namespace flare
