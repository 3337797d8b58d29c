#pragma once

// Separability analytics: Fisher scores, histogram KL divergence, per-trace
// KL between architecture families, and traffic-shape signatures.

#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "flare/ingest.hpp"
#include "flare/learners/matrix.hpp"

namespace flare {

/// Per feature: between-class over within-class variance,
///   (n1 (mu1 - mu)^2 + n0 (mu0 - mu)^2) / (n1 var1 + n0 var0),
/// with population variances. Zero within-class variance gives +inf when
/// the class means differ and 0 otherwise. Throws SingleClass.
std::vector<double> fisher_score(const Matrix& X, std::span<const int> y);

inline bool perfectly_separating(double score) {
  return score == std::numeric_limits<double>::infinity();
}

/// Feature indices ordered by descending score (stable on ties).
std::vector<std::size_t> rank_features(std::span<const double> scores);

/// sum p ln(p/q) after adding `epsilon` to every bin and renormalising.
/// Throws BinMismatch on unequal lengths, EmptyInput on zero bins.
double kl_divergence(std::span<const double> p, std::span<const double> q, double epsilon = 1e-10);

enum class KlFeature { MeanFrame, MeanIat, StdIat };

std::string_view to_string(KlFeature f);
KlFeature parse_kl_feature(std::string_view s);
inline constexpr KlFeature kKlFeatures[] = {KlFeature::MeanFrame, KlFeature::MeanIat, KlFeature::StdIat};

struct KlConfig {
  std::size_t bins = 30;
  double epsilon = 1e-10;
  /// Traces are cut into slices of this length; each slice contributes one
  /// sample of the chosen feature.
  double slice_s = 10.0;
  /// Packets at or below this size are ignored (0 keeps everything).
  std::uint32_t tau_bytes = 66;

  void validate() const;
};

/// Feature samples of one trace, one per slice holding enough packets
/// (1 for mean frame size, 2 for mean IAT, 3 for std IAT).
std::vector<double> trace_feature_samples(const ClientTrace& trace, KlFeature feature,
                                          const KlConfig& cfg = {});

/// Normalised histogram over [lo, hi] with `bins` equal-width bins; the
/// top edge is closed. A degenerate range puts all mass in bin 0.
std::vector<double> histogram(std::span<const double> samples, double lo, double hi, std::size_t bins);

struct KlStats {
  double mean = 0.0;
  double std = 0.0;  // sample std over P traces, 0 for a single trace
  std::vector<double> scores;
};

/// One KL score per P trace: that trace's histogram against the pooled Q
/// histogram, both binned over the min-max range of all samples.
KlStats per_trace_kl_samples(std::span<const std::vector<double>> p_traces,
                             std::span<const std::vector<double>> q_traces, const KlConfig& cfg = {});

KlStats per_trace_kl(std::span<const std::shared_ptr<const ClientTrace>> p_traces,
                     std::span<const std::shared_ptr<const ClientTrace>> q_traces, KlFeature feature,
                     const KlConfig& cfg = {});

struct KlRow {
  std::string client;
  ArchFamily reference = ArchFamily::Cnn;  // the P side
  KlFeature feature = KlFeature::MeanFrame;
  std::size_t p_traces = 0;
  std::size_t q_traces = 0;
  KlStats stats;
};

struct KlReport {
  KlConfig config;
  std::vector<KlRow> rows;
};

/// For every client profile and feature: CNN traces against RNN traces and
/// the reverse. Clients lacking either family are skipped.
KlReport kl_report(std::span<const std::shared_ptr<const ClientTrace>> corpus, const KlConfig& cfg = {});

/// Mean byte size of uplink bursts: runs of uplink packets above `tau_bytes`
/// separated by less than `gap_s`. 0 when the trace has no such packet.
double mean_uplink_burst_bytes(const ClientTrace& trace, double gap_s = 0.05,
                               std::uint32_t tau_bytes = 66);

/// Spectral power of the packet-occupancy series (bins of `bin_s`, packets
/// above tau) at `freq_hz`, normalised by the series length.
double occupancy_power(const ClientTrace& trace, double freq_hz, double bin_s = 0.05,
                       std::uint32_t tau_bytes = 66);

/// True when the strongest line within period_s +- 10% stands at least
/// `min_ratio` times above the median power of the neighbouring band.
bool has_periodic_peak(const ClientTrace& trace, double period_s, double min_ratio = 20.0,
                       double bin_s = 0.05, std::uint32_t tau_bytes = 66);

}  // namespace flare
