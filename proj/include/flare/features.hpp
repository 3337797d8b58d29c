#pragma once

// Per-window feature views.
//
// Flow view (39 values): packet-rate statistics over one-second bins, then
// a StatBlock over uplink sizes and one over downlink sizes.
// Packet view (29 values by default): normalised packet-length histogram
// (direction-agnostic), then first/last packet size and IAT.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "flare/learners/matrix.hpp"
#include "flare/segmentation.hpp"

namespace flare {

struct StatBlock {
  double mean = 0, max = 0, min = 0, variance = 0, std = 0, median = 0, mad = 0;
  double skewness = 0, kurtosis = 0;
  std::array<double, 9> deciles{};  // 10th..90th percentile

  /// Serialized order: mean max min var std median mad skew kurt, then the
  /// deciles without p50, which is the median already emitted.
  static constexpr std::size_t kSize = 17;
  std::array<double, kSize> to_array() const;
  static std::vector<std::string> names(const std::string& prefix);
};

/// Population moments; Pearson kurtosis m4/m2^2; percentiles by linear
/// interpolation at q*(n-1). Constant input gives skewness = kurtosis = 0.
StatBlock summary_stats(std::span<const double> values);

/// Linear-interpolation percentile of an ascending-sorted sequence, q in [0,1].
double percentile_sorted(std::span<const double> sorted, double q);

struct FlowFeatures {
  std::array<double, 5> rate_stats{};  // mean, max, min, median, std of per-second counts
  StatBlock up_size;
  StatBlock down_size;

  static constexpr std::size_t kSize = 5 + 2 * StatBlock::kSize;
  std::vector<double> to_vector() const;
  static std::vector<std::string> names();
};

struct FeatureConfig {
  std::uint32_t hist_bin_width = 64;
  std::size_t hist_bins = 25;  // last bin is open-ended
  /// When false, first_iat is the gap between the first two packets.
  bool first_iat_from_window_start = true;

  std::size_t packet_dims() const { return hist_bins + 4; }
  void validate() const;
};

struct PacketFeatures {
  std::vector<double> length_histogram;
  double first_size = 0, last_size = 0, first_iat = 0, last_iat = 0;

  std::vector<double> to_vector() const;
  static std::vector<std::string> names(const FeatureConfig& cfg = {});
};

FlowFeatures flow_features(const TrafficWindow& window);
PacketFeatures packet_features(const TrafficWindow& window, const FeatureConfig& cfg = {});

/// Both views for a window list, one row per window, same order.
struct FeatureSet {
  Matrix flow;
  Matrix pkt;
  std::size_t size() const { return flow.rows(); }
};

/// OpenMP kernel over windows.
FeatureSet featurize(std::span<const TrafficWindow> windows, const FeatureConfig& cfg = {});
/// Serial reference; bit-identical to featurize().
FeatureSet featurize_serial(std::span<const TrafficWindow> windows, const FeatureConfig& cfg = {});

}  // namespace flare
