#include "flare/features.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "flare/error.hpp"

namespace flare {

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorKind::EmptyInput, "percentile of empty sequence");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

StatBlock summary_stats(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "summary_stats of empty sequence");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  StatBlock s;
  s.min = sorted.front();
  s.max = sorted.back();
  double sum = 0;
  for (double v : sorted) sum += v;
  s.mean = sum / n;

  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : sorted) {
    const double d = v - s.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  s.variance = m2;
  s.std = std::sqrt(m2);
  if (s.max > s.min && m2 > 0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2);
  }

  s.median = percentile_sorted(sorted, 0.5);
  for (std::size_t i = 0; i < 9; ++i)
    s.deciles[i] = percentile_sorted(sorted, static_cast<double>(i + 1) / 10.0);

  std::vector<double> dev(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) dev[i] = std::abs(sorted[i] - s.median);
  std::sort(dev.begin(), dev.end());
  s.mad = percentile_sorted(dev, 0.5);
  return s;
}

std::array<double, StatBlock::kSize> StatBlock::to_array() const {
  std::array<double, kSize> a{mean, max, min, variance, std, median, mad, skewness, kurtosis};
  std::size_t at = 9;
  for (std::size_t d = 0; d < deciles.size(); ++d)
    if (d != 4) a[at++] = deciles[d];
  return a;
}

std::vector<std::string> StatBlock::names(const std::string& prefix) {
  std::vector<std::string> out;
  for (const char* n : {"mean", "max", "min", "var", "std", "median", "mad", "skew", "kurt"})
    out.push_back(prefix + n);
  for (int d = 10; d <= 90; d += 10)
    if (d != 50) out.push_back(prefix + "p" + std::to_string(d));
  return out;
}

std::vector<double> FlowFeatures::to_vector() const {
  std::vector<double> v(rate_stats.begin(), rate_stats.end());
  auto up = up_size.to_array();
  auto down = down_size.to_array();
  v.insert(v.end(), up.begin(), up.end());
  v.insert(v.end(), down.begin(), down.end());
  return v;
}

std::vector<std::string> FlowFeatures::names() {
  std::vector<std::string> out{"rate_mean", "rate_max", "rate_min", "rate_median", "rate_std"};
  for (auto& n : StatBlock::names("up_size_")) out.push_back(n);
  for (auto& n : StatBlock::names("down_size_")) out.push_back(n);
  return out;
}

void FeatureConfig::validate() const {
  if (hist_bin_width == 0 || hist_bins == 0)
    throw Error(ErrorKind::InvalidConfig, "histogram needs positive bin width and count");
}

std::vector<double> PacketFeatures::to_vector() const {
  std::vector<double> v = length_histogram;
  v.push_back(first_size);
  v.push_back(last_size);
  v.push_back(first_iat);
  v.push_back(last_iat);
  return v;
}

std::vector<std::string> PacketFeatures::names(const FeatureConfig& cfg) {
  std::vector<std::string> out;
  for (std::size_t b = 0; b < cfg.hist_bins; ++b)
    out.push_back("hist_" + std::to_string(b * cfg.hist_bin_width));
  for (const char* n : {"first_size", "last_size", "first_iat", "last_iat"}) out.push_back(n);
  return out;
}

FlowFeatures flow_features(const TrafficWindow& window) {
  auto pkts = window.packets();
  if (pkts.empty()) throw Error(ErrorKind::EmptyWindow, "flow_features of empty window");

  const auto n_bins = static_cast<std::size_t>(std::max(1.0, std::ceil(window.duration_s())));
  std::vector<double> per_second(n_bins, 0.0);
  std::vector<double> up, down;
  for (const auto& p : pkts) {
    const double offset = p.timestamp_s - window.start_s();
    auto bin = static_cast<std::size_t>(std::max(0.0, std::floor(offset)));
    per_second[std::min(bin, n_bins - 1)] += 1.0;
    (p.direction == Direction::Uplink ? up : down).push_back(static_cast<double>(p.size_bytes));
  }

  FlowFeatures f;
  const StatBlock rate = summary_stats(per_second);
  f.rate_stats = {rate.mean, rate.max, rate.min, rate.median, rate.std};
  if (!up.empty()) f.up_size = summary_stats(up);
  if (!down.empty()) f.down_size = summary_stats(down);
  return f;
}

PacketFeatures packet_features(const TrafficWindow& window, const FeatureConfig& cfg) {
  cfg.validate();
  auto pkts = window.packets();
  if (pkts.empty()) throw Error(ErrorKind::EmptyWindow, "packet_features of empty window");

  PacketFeatures f;
  f.length_histogram.assign(cfg.hist_bins, 0.0);
  for (const auto& p : pkts) {
    const std::size_t bin = std::min<std::size_t>(p.size_bytes / cfg.hist_bin_width, cfg.hist_bins - 1);
    f.length_histogram[bin] += 1.0;
  }
  const double n = static_cast<double>(pkts.size());
  for (auto& h : f.length_histogram) h /= n;

  f.first_size = pkts.front().size_bytes;
  f.last_size = pkts.back().size_bytes;
  if (cfg.first_iat_from_window_start)
    f.first_iat = pkts.front().timestamp_s - window.start_s();
  else
    f.first_iat = pkts.size() > 1 ? pkts[1].timestamp_s - pkts[0].timestamp_s : 0.0;
  f.last_iat = pkts.size() > 1 ? pkts.back().timestamp_s - pkts[pkts.size() - 2].timestamp_s : 0.0;
  return f;
}

namespace {

FeatureSet allocate(std::size_t n, const FeatureConfig& cfg) {
  cfg.validate();
  return FeatureSet{Matrix(n, FlowFeatures::kSize), Matrix(n, cfg.packet_dims())};
}

void featurize_one(const TrafficWindow& w, const FeatureConfig& cfg, FeatureSet& out,
                   std::size_t row) {
  auto flow = flow_features(w).to_vector();
  auto pkt = packet_features(w, cfg).to_vector();
  std::copy(flow.begin(), flow.end(), out.flow.row(row).begin());
  std::copy(pkt.begin(), pkt.end(), out.pkt.row(row).begin());
}

}  // namespace

FeatureSet featurize_serial(std::span<const TrafficWindow> windows, const FeatureConfig& cfg) {
  FeatureSet out = allocate(windows.size(), cfg);
  for (std::size_t i = 0; i < windows.size(); ++i) featurize_one(windows[i], cfg, out, i);
  return out;
}

FeatureSet featurize(std::span<const TrafficWindow> windows, const FeatureConfig& cfg) {
  FeatureSet out = allocate(windows.size(), cfg);
  const auto n = static_cast<std::ptrdiff_t>(windows.size());
  // Rows are disjoint; exceptions cannot cross the parallel region, so the
  // first failure is captured and rethrown.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      featurize_one(windows[static_cast<std::size_t>(i)], cfg, out, static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(flare_featurize_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace flare
