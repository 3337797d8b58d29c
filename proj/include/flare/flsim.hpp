#pragma once

// Deterministic discrete-event generator of federated-learning client
// traffic as seen by a passive observer of one client <-> AP link.
//
// A round is: downlink broadcast of the global model, local compute,
// uplink of the update, then a server-side wait. Profiles with a
// periodicity add small bidirectional exchanges on a fixed cadence, and
// short control frames appear at a low Poisson rate throughout.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flare/ingest.hpp"
#include "flare/labels.hpp"

namespace flare {

enum class Aggregation { FedAvg, WeightedFedAvg, FedProx };
enum class SyncMode { Sync, Async };

std::string_view to_string(Aggregation a);
std::string_view to_string(SyncMode m);
Aggregation parse_aggregation(std::string_view s);
SyncMode parse_sync_mode(std::string_view s);

struct ModelProfile {
  ArchFamily family = ArchFamily::Other;
  std::string name;
  std::string dataset;
  std::uint64_t theta = 1;
  std::size_t rounds_to_converge = 50;
  double compute_s_per_round = 10.0;
  /// >= 1; larger values concentrate the uplink into fewer, longer bursts.
  double burstiness = 1.0;
  std::optional<double> periodicity_s;

  void validate() const;
};

struct ClientProfile {
  std::string name;
  double compute_multiplier = 1.0;
  double jitter_frac = 0.1;  // sigma of the lognormal compute noise
  /// Relative data volume; weights updates under WeightedFedAvg.
  double data_share = 1.0;

  void validate() const;
};

struct LinkProfile {
  std::string name = "default";
  double throughput_mbps = 216.0;
  std::uint32_t mss_bytes = 1448;
  double base_latency_ms = 2.0;

  void validate() const;
  double bytes_per_s() const { return throughput_mbps * 1e6 / 8.0; }
};

struct SessionSpec {
  ModelProfile model;
  ClientProfile client;
  LinkProfile link;
  Aggregation aggregation = Aggregation::FedAvg;
  SyncMode sync_mode = SyncMode::Sync;
  double duration_s = 1200.0;
  std::uint64_t seed = 0;
  std::string trace_id;
  StationId client_id = StationId::from_u64(0x10);
  StationId ap_id = StationId::from_u64(0x01);

  /// Throws InvalidSpec.
  void validate() const;
};

inline constexpr double kFedProxComputeFactor = 1.15;
inline constexpr double kControlFrameRate = 2.0;  // frames per second
inline constexpr std::uint32_t kControlFrameMin = 40;
inline constexpr std::uint32_t kControlFrameMax = 66;
inline constexpr double kServerAggregation_s = 0.2;

/// Update size in bytes: 4 bytes per parameter. Throws InvalidSpec for theta = 0.
std::uint64_t payload_bytes(std::uint64_t theta);

/// Mean local compute time of one round before jitter.
double mean_compute_s(const ModelProfile& m, const ClientProfile& c, Aggregation a);

/// Byte accounting for one round, restricted to the emitted trace.
struct RoundLedger {
  std::size_t round = 0;
  double start_s = 0.0;  // session clock, may be negative for the first round
  bool complete = false;  // the whole round lies within the trace
  std::uint64_t downlink_data = 0, uplink_data = 0;
  std::uint64_t downlink_data_packets = 0, uplink_data_packets = 0;
  std::uint64_t downlink_control = 0, uplink_control = 0;  // chatter and control frames
};

struct SessionOutput {
  ClientTrace trace;
  std::vector<RoundLedger> rounds;
};

SessionOutput simulate_session_detailed(const SessionSpec& spec);
ClientTrace simulate_session(const SessionSpec& spec);

struct Corpus {
  std::vector<SessionSpec> specs;
  std::vector<std::shared_ptr<const ClientTrace>> traces;
};

/// Expands each template into n_per_spec sessions with derived seeds and
/// ids `<model>-<client>-<template>-<replica>`. OpenMP over sessions.
Corpus make_corpus(const std::vector<SessionSpec>& templates, std::size_t n_per_spec,
                   std::uint64_t seed);
/// Serial reference; identical to make_corpus().
Corpus make_corpus_serial(const std::vector<SessionSpec>& templates, std::size_t n_per_spec,
                          std::uint64_t seed);

/// Manifest rows (trace id, labels, seed, packet count, content hash) and
/// an FNV-1a digest over them.
struct Manifest {
  std::vector<std::string> rows;
  std::string hash;
};

inline constexpr std::string_view kManifestHeader =
    "trace_id,file,family,model_name,dataset_name,client_profile,aggregation,sync_mode,seed,"
    "packets,content_hash";

std::string trace_content_hash(const ClientTrace& trace);
Manifest build_manifest(const Corpus& corpus);

/// Writes `traces/<id>.csv` and `manifest.csv` under `dir` (created when
/// missing). `provenance` lines become `# key=value` headers.
Manifest write_corpus(const Corpus& corpus, const std::string& dir,
                      const std::vector<std::pair<std::string, std::string>>& provenance = {});

/// Loads every trace listed in `dir/manifest.csv`.
std::vector<std::shared_ptr<const ClientTrace>> read_corpus(const std::string& dir);

/// Built-in profiles: three CNN, three RNN, two Other archetypes.
std::vector<ModelProfile> default_model_profiles();
std::vector<ClientProfile> default_client_profiles();
LinkProfile default_link();

/// 8 model profiles x 3 client profiles; aggregation cycles with the
/// (model, client) index so all three strategies appear.
std::vector<SessionSpec> default_templates(double duration_s = 1200.0);

}  // namespace flare
