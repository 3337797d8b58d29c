#include "flare/flsim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flare/error.hpp"
#include "flare/hash.hpp"
#include "flare/rng.hpp"

namespace flare {

std::string_view to_string(Aggregation a) {
  switch (a) {
    case Aggregation::FedAvg: return "FedAvg";
    case Aggregation::WeightedFedAvg: return "WeightedFedAvg";
    case Aggregation::FedProx: return "FedProx";
  }
  return "FedAvg";
}

std::string_view to_string(SyncMode m) { return m == SyncMode::Sync ? "Sync" : "Async"; }

Aggregation parse_aggregation(std::string_view s) {
  if (s == "FedAvg") return Aggregation::FedAvg;
  if (s == "WeightedFedAvg") return Aggregation::WeightedFedAvg;
  if (s == "FedProx") return Aggregation::FedProx;
  throw Error(ErrorKind::InvalidSpec, "unknown aggregation '" + std::string(s) + "'");
}

SyncMode parse_sync_mode(std::string_view s) {
  if (s == "Sync" || s == "sync") return SyncMode::Sync;
  if (s == "Async" || s == "async") return SyncMode::Async;
  throw Error(ErrorKind::InvalidSpec, "unknown sync mode '" + std::string(s) + "'");
}

void ModelProfile::validate() const {
  if (name.empty()) throw Error(ErrorKind::InvalidSpec, "model profile needs a name");
  if (theta == 0) throw Error(ErrorKind::InvalidSpec, name + ": theta must be >= 1");
  if (rounds_to_converge == 0) throw Error(ErrorKind::InvalidSpec, name + ": rounds_to_converge must be >= 1");
  if (!(compute_s_per_round > 0)) throw Error(ErrorKind::InvalidSpec, name + ": compute time must be positive");
  if (!(burstiness >= 1.0)) throw Error(ErrorKind::InvalidSpec, name + ": burstiness must be >= 1");
  if (periodicity_s && !(*periodicity_s > 0))
    throw Error(ErrorKind::InvalidSpec, name + ": periodicity must be positive");
}

void ClientProfile::validate() const {
  if (!(compute_multiplier > 0)) throw Error(ErrorKind::InvalidSpec, name + ": compute_multiplier must be positive");
  if (!(jitter_frac >= 0 && jitter_frac < 1)) throw Error(ErrorKind::InvalidSpec, name + ": jitter_frac must lie in [0, 1)");
  if (!(data_share > 0)) throw Error(ErrorKind::InvalidSpec, name + ": data_share must be positive");
}

void LinkProfile::validate() const {
  if (!(throughput_mbps > 0)) throw Error(ErrorKind::InvalidSpec, "link throughput must be positive");
  if (mss_bytes == 0 || mss_bytes > 1500) throw Error(ErrorKind::InvalidSpec, "mss_bytes must lie in [1, 1500]");
  if (!(base_latency_ms >= 0)) throw Error(ErrorKind::InvalidSpec, "latency must be non-negative");
}

void SessionSpec::validate() const {
  model.validate();
  client.validate();
  link.validate();
  if (!(duration_s > 0)) throw Error(ErrorKind::InvalidSpec, "duration_s must be positive");
}

std::uint64_t payload_bytes(std::uint64_t theta) {
  if (theta == 0) throw Error(ErrorKind::InvalidSpec, "theta must be >= 1");
  return 4 * theta;
}

double mean_compute_s(const ModelProfile& m, const ClientProfile& c, Aggregation a) {
  return m.compute_s_per_round * c.compute_multiplier *
         (a == Aggregation::FedProx ? kFedProxComputeFactor : 1.0);
}

namespace {

enum class Kind : std::uint8_t { Data, Control };

struct Event {
  double t;
  std::uint32_t size;
  Direction dir;
  Kind kind;
};

double lognormal_factor(Rng& rng, double sigma) {
  if (sigma <= 0) return 1.0;
  std::normal_distribution<double> n(-0.5 * sigma * sigma, sigma);
  return std::exp(n(rng));
}

// Emits a paced transfer of `bytes` starting at t; returns the end time.
double emit_transfer(std::vector<Event>& out, double t, std::uint64_t bytes, Direction dir,
                     const LinkProfile& link, std::size_t burst_len, double burst_gap_mean,
                     Rng& rng) {
  const double rate = link.bytes_per_s();
  std::uniform_real_distribution<double> contention(0.0, 10e-6);
  std::exponential_distribution<double> gap(1.0 / std::max(burst_gap_mean, 1e-9));
  std::size_t in_burst = 0;
  while (bytes > 0) {
    const auto size = static_cast<std::uint32_t>(std::min<std::uint64_t>(bytes, link.mss_bytes));
    out.push_back({t, size, dir, Kind::Data});
    bytes -= size;
    t += size / rate + contention(rng);
    if (burst_len > 0 && ++in_burst == burst_len && bytes > 0) {
      in_burst = 0;
      t += gap(rng);
    }
  }
  return t;
}

}  // namespace

SessionOutput simulate_session_detailed(const SessionSpec& spec) {
  spec.validate();
  const auto& m = spec.model;
  const auto& link = spec.link;
  const std::uint64_t S = payload_bytes(m.theta);
  const double latency = link.base_latency_ms / 1000.0;
  const double compute_mean = mean_compute_s(m, spec.client, spec.aggregation);
  const double transfer_s = static_cast<double>(S) / link.bytes_per_s();
  const double round_mean = compute_mean + 2 * transfer_s + kServerAggregation_s +
                            (spec.sync_mode == SyncMode::Sync ? 0.25 * compute_mean : 0.0);

  Rng phase_rng(derive_seed(spec.seed, {0}));
  Rng round_rng(derive_seed(spec.seed, {1}));
  Rng chatter_rng(derive_seed(spec.seed, {2}));
  Rng control_rng(derive_seed(spec.seed, {3}));

  const double t_begin = -std::uniform_real_distribution<double>(0.0, round_mean)(phase_rng);
  const double t_end = spec.duration_s;

  std::vector<Event> events;
  std::vector<double> round_starts;
  const auto burst_len = static_cast<std::size_t>(std::max(1.0, std::round(16.0 * m.burstiness)));
  const double burst_gap = 0.002 * m.burstiness;

  double t = t_begin;
  while (t < t_end) {
    round_starts.push_back(t);
    double at = emit_transfer(events, t + latency, S, Direction::Downlink, link, 0, 0.0, round_rng);
    at += compute_mean * lognormal_factor(round_rng, spec.client.jitter_frac);
    at = emit_transfer(events, at + latency, S, Direction::Uplink, link, burst_len, burst_gap, round_rng);
    double wait = kServerAggregation_s;
    if (spec.sync_mode == SyncMode::Sync)
      wait += std::uniform_real_distribution<double>(0.1, 0.4)(round_rng) * compute_mean;
    t = at + wait;
  }
  round_starts.push_back(t);  // end of the last round

  if (m.periodicity_s) {
    const double p = *m.periodicity_s;
    std::uniform_real_distribution<double> jitter(-0.02 * p, 0.02 * p);
    std::uniform_int_distribution<std::uint32_t> up_size(90, 250), down_size(70, 150);
    std::uniform_real_distribution<double> reply(0.001, 0.005);
    for (auto k = static_cast<long>(std::ceil(t_begin / p)); k * p < t_end; ++k) {
      const double at = static_cast<double>(k) * p + jitter(chatter_rng);
      events.push_back({at, up_size(chatter_rng), Direction::Uplink, Kind::Control});
      events.push_back({at + 2 * latency + reply(chatter_rng), down_size(chatter_rng),
                        Direction::Downlink, Kind::Control});
    }
  }

  {
    std::exponential_distribution<double> gap(kControlFrameRate);
    std::uniform_int_distribution<std::uint32_t> size(kControlFrameMin, kControlFrameMax);
    std::bernoulli_distribution up(0.5);
    for (double at = t_begin + gap(control_rng); at < t_end; at += gap(control_rng))
      events.push_back({at, size(control_rng), up(control_rng) ? Direction::Uplink : Direction::Downlink,
                        Kind::Control});
  }

  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });

  SessionOutput out;
  for (std::size_t r = 0; r + 1 < round_starts.size(); ++r) {
    RoundLedger l;
    l.round = r;
    l.start_s = round_starts[r];
    l.complete = round_starts[r] >= 0.0 && round_starts[r + 1] <= t_end;
    out.rounds.push_back(l);
  }

  auto& trace = out.trace;
  trace.trace_id = spec.trace_id;
  trace.client_id = spec.client_id;
  trace.ap_id = spec.ap_id;
  std::size_t r = 0;
  for (const auto& e : events) {
    if (e.t < 0.0 || e.t >= t_end) continue;
    while (r + 1 < out.rounds.size() && e.t >= round_starts[r + 1]) ++r;
    auto& l = out.rounds[r];
    const bool up = e.dir == Direction::Uplink;
    if (e.kind == Kind::Data) {
      (up ? l.uplink_data : l.downlink_data) += e.size;
      (up ? l.uplink_data_packets : l.downlink_data_packets) += 1;
    } else {
      (up ? l.uplink_control : l.downlink_control) += e.size;
    }
    trace.packets.push_back({e.t, e.size, e.dir, spec.client_id});
  }
  if (!trace.packets.empty()) {
    const double t0 = trace.packets.front().timestamp_s;
    for (auto& p : trace.packets) p.timestamp_s = quantize_us(p.timestamp_s - t0);
  }

  ArchLabel label;
  label.family = m.family;
  label.model_name = m.name;
  label.dataset_name = m.dataset;
  label.aggregation = std::string(to_string(spec.aggregation));
  label.client_profile = spec.client.name;
  label.validate();
  trace.label = std::move(label);
  return out;
}

ClientTrace simulate_session(const SessionSpec& spec) {
  return std::move(simulate_session_detailed(spec).trace);
}

namespace {

std::vector<SessionSpec> expand(const std::vector<SessionSpec>& templates, std::size_t n_per_spec,
                                std::uint64_t seed) {
  if (n_per_spec == 0) throw Error(ErrorKind::InvalidSpec, "n_per_spec must be >= 1");
  if (templates.empty()) throw Error(ErrorKind::InvalidSpec, "no session templates");
  std::vector<SessionSpec> specs;
  for (std::size_t i = 0; i < templates.size(); ++i)
    for (std::size_t j = 0; j < n_per_spec; ++j) {
      SessionSpec s = templates[i];
      s.seed = derive_seed(seed, {i, j});
      char id[32];
      std::snprintf(id, sizeof id, "-t%02zu-r%zu", i, j);
      s.trace_id = s.model.name + "-" + s.client.name + id;
      s.client_id = StationId::from_u64(0x100000 + i * 0x100 + j);
      s.ap_id = StationId::from_u64(0x01);
      s.validate();
      specs.push_back(std::move(s));
    }
  return specs;
}

}  // namespace

Corpus make_corpus_serial(const std::vector<SessionSpec>& templates, std::size_t n_per_spec,
                          std::uint64_t seed) {
  Corpus c;
  c.specs = expand(templates, n_per_spec, seed);
  for (const auto& s : c.specs) c.traces.push_back(std::make_shared<const ClientTrace>(simulate_session(s)));
  return c;
}

Corpus make_corpus(const std::vector<SessionSpec>& templates, std::size_t n_per_spec,
                   std::uint64_t seed) {
  Corpus c;
  c.specs = expand(templates, n_per_spec, seed);
  c.traces.resize(c.specs.size());
  const auto n = static_cast<std::ptrdiff_t>(c.specs.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto k = static_cast<std::size_t>(i);
      c.traces[k] = std::make_shared<const ClientTrace>(simulate_session(c.specs[k]));
    } catch (...) {
#pragma omp critical(flare_corpus_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return c;
}

std::string trace_content_hash(const ClientTrace& trace) {
  std::ostringstream s;
  write_trace(s, trace);
  return fnv1a_hex(s.str());
}

Manifest build_manifest(const Corpus& corpus) {
  Manifest m;
  Fnv1a h;
  h.update(kManifestHeader);
  for (std::size_t i = 0; i < corpus.traces.size(); ++i) {
    const auto& t = *corpus.traces[i];
    const auto& s = corpus.specs[i];
    const auto& l = *t.label;
    std::ostringstream row;
    row << t.trace_id << ",traces/" << t.trace_id << ".csv," << to_string(l.family) << ','
        << l.model_name << ',' << l.dataset_name << ',' << l.client_profile << ',' << l.aggregation
        << ',' << to_string(s.sync_mode) << ',' << s.seed << ',' << t.packets.size() << ','
        << trace_content_hash(t);
    m.rows.push_back(row.str());
    h.update("\n");
    h.update(m.rows.back());
  }
  m.hash = h.hex();
  return m;
}

Manifest write_corpus(const Corpus& corpus, const std::string& dir,
                      const std::vector<std::pair<std::string, std::string>>& provenance) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "traces", ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create '" + dir + "': " + ec.message());
  for (const auto& t : corpus.traces) save_trace((fs::path(dir) / "traces" / (t->trace_id + ".csv")).string(), *t);
  Manifest m = build_manifest(corpus);
  const auto path = (fs::path(dir) / "manifest.csv").string();
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << "# flare-corpus v1\n";
  for (const auto& [k, v] : provenance) out << "# " << k << '=' << v << '\n';
  out << "# manifest_hash=" << m.hash << '\n';
  out << kManifestHeader << '\n';
  for (const auto& r : m.rows) out << r << '\n';
  if (!out) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
  return m;
}

std::vector<std::shared_ptr<const ClientTrace>> read_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto path = (fs::path(dir) / "manifest.csv").string();
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  std::vector<std::shared_ptr<const ClientTrace>> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kManifestHeader) throw Error(ErrorKind::MissingHeader, "manifest header expected", line_no);
      header = true;
      continue;
    }
    const auto a = line.find(',');
    const auto b = a == std::string::npos ? a : line.find(',', a + 1);
    if (b == std::string::npos) throw Error(ErrorKind::MalformedTraceFile, "short manifest row", line_no);
    const std::string file = line.substr(a + 1, b - a - 1);
    out.push_back(std::make_shared<const ClientTrace>(load_trace((fs::path(dir) / file).string())));
  }
  if (!header) throw Error(ErrorKind::MissingHeader, "manifest has no header");
  return out;
}

std::vector<ModelProfile> default_model_profiles() {
  using F = ArchFamily;
  return {
      {F::Cnn, "resnet18", "cifar10", 2'800'000, 60, 45.0, 4.0, std::nullopt},
      {F::Cnn, "mobilenetv2", "fashion_mnist", 1'100'000, 80, 30.0, 3.0, std::nullopt},
      {F::Cnn, "densenet", "svhn", 1'900'000, 70, 55.0, 3.5, std::nullopt},
      {F::Rnn, "bilstm", "uci_har", 300'000, 30, 12.0, 1.2, 2.0},
      {F::Rnn, "gru", "sunspots", 160'000, 25, 9.0, 1.1, 1.5},
      {F::Rnn, "lstm_gru", "ecg", 220'000, 35, 14.0, 1.3, 2.5},
      {F::Other, "mlp", "mnist", 500'000, 40, 18.0, 1.5, std::nullopt},
      {F::Other, "autoencoder", "mnist", 250'000, 50, 6.0, 1.0, std::nullopt},
  };
}

std::vector<ClientProfile> default_client_profiles() {
  return {{"c0", 1.0, 0.08, 1.0}, {"c1", 0.7, 0.10, 1.5}, {"c2", 1.5, 0.15, 0.75}};
}

LinkProfile default_link() { return LinkProfile{"wifi", 216.0, 1448, 2.0}; }

std::vector<SessionSpec> default_templates(double duration_s) {
  static constexpr Aggregation kCycle[] = {Aggregation::FedAvg, Aggregation::WeightedFedAvg,
                                           Aggregation::FedProx};
  const auto models = default_model_profiles();
  const auto clients = default_client_profiles();
  std::vector<SessionSpec> out;
  for (std::size_t m = 0; m < models.size(); ++m)
    for (std::size_t c = 0; c < clients.size(); ++c) {
      SessionSpec s;
      s.model = models[m];
      s.client = clients[c];
      s.link = default_link();
      s.aggregation = kCycle[(m + c) % 3];
      s.sync_mode = SyncMode::Sync;
      s.duration_s = duration_s;
      out.push_back(std::move(s));
    }
  return out;
}

}  // namespace flare
