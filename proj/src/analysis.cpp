#include "flare/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "flare/error.hpp"
#include "flare/metrics.hpp"

namespace flare {

std::vector<double> fisher_score(const Matrix& X, std::span<const int> y) {
  if (y.size() != X.rows()) throw Error(ErrorKind::LengthMismatch, "labels do not match rows");
  const auto n1 = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  const std::size_t n0 = y.size() - n1;
  if (n1 == 0 || n0 == 0) throw Error(ErrorKind::SingleClass, "fisher_score needs both classes");

  std::vector<double> out(X.cols());
  for (std::size_t j = 0; j < X.cols(); ++j) {
    double s0 = 0, s1 = 0;
    for (std::size_t i = 0; i < X.rows(); ++i) (y[i] ? s1 : s0) += X(i, j);
    const double mu1 = s1 / static_cast<double>(n1);
    const double mu0 = s0 / static_cast<double>(n0);
    const double mu = (s0 + s1) / static_cast<double>(y.size());
    double v0 = 0, v1 = 0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
      const double d = X(i, j) - (y[i] ? mu1 : mu0);
      (y[i] ? v1 : v0) += d * d;
    }
    // n * var = sum of squared deviations
    const double within = v0 + v1;
    const double between = static_cast<double>(n1) * (mu1 - mu) * (mu1 - mu) +
                           static_cast<double>(n0) * (mu0 - mu) * (mu0 - mu);
    if (within == 0.0)
      out[j] = mu1 != mu0 ? std::numeric_limits<double>::infinity() : 0.0;
    else
      out[j] = between / within;
  }
  return out;
}

std::vector<std::size_t> rank_features(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

double kl_divergence(std::span<const double> p, std::span<const double> q, double epsilon) {
  if (p.size() != q.size())
    throw Error(ErrorKind::BinMismatch,
                std::to_string(p.size()) + " bins vs " + std::to_string(q.size()));
  if (p.empty()) throw Error(ErrorKind::EmptyInput, "kl_divergence of empty histograms");
  double sp = 0, sq = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i] + epsilon;
    sq += q[i] + epsilon;
  }
  double kl = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = (p[i] + epsilon) / sp;
    const double qi = (q[i] + epsilon) / sq;
    kl += pi * std::log(pi / qi);
  }
  return kl;
}

std::string_view to_string(KlFeature f) {
  switch (f) {
    case KlFeature::MeanFrame: return "mean_frame";
    case KlFeature::MeanIat: return "mean_iat";
    case KlFeature::StdIat: return "std_iat";
  }
  return "mean_frame";
}

KlFeature parse_kl_feature(std::string_view s) {
  for (auto f : kKlFeatures)
    if (to_string(f) == s) return f;
  throw Error(ErrorKind::InvalidConfig, "unknown KL feature '" + std::string(s) + "'");
}

void KlConfig::validate() const {
  if (bins == 0) throw Error(ErrorKind::InvalidConfig, "KL histogram needs at least one bin");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidConfig, "KL smoothing must be positive");
  if (!(slice_s > 0.0)) throw Error(ErrorKind::InvalidConfig, "KL slice length must be positive");
}

namespace {

std::optional<double> slice_value(std::span<const double> times, std::span<const double> sizes,
                                  KlFeature feature) {
  switch (feature) {
    case KlFeature::MeanFrame:
      if (sizes.empty()) return std::nullopt;
      return mean_of(sizes);
    case KlFeature::MeanIat:
    case KlFeature::StdIat: {
      const std::size_t need = feature == KlFeature::MeanIat ? 2 : 3;
      if (times.size() < need) return std::nullopt;
      std::vector<double> iat(times.size() - 1);
      for (std::size_t i = 1; i < times.size(); ++i) iat[i - 1] = times[i] - times[i - 1];
      if (feature == KlFeature::MeanIat) return mean_of(iat);
      const double m = mean_of(iat);
      double ss = 0;
      for (double v : iat) ss += (v - m) * (v - m);
      return std::sqrt(ss / static_cast<double>(iat.size()));
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<double> trace_feature_samples(const ClientTrace& trace, KlFeature feature,
                                          const KlConfig& cfg) {
  cfg.validate();
  std::vector<double> out;
  std::vector<double> times, sizes;
  long current = -1;
  auto flush = [&] {
    if (auto v = slice_value(times, sizes, feature)) out.push_back(*v);
    times.clear();
    sizes.clear();
  };
  for (const auto& p : trace.packets) {
    if (p.size_bytes <= cfg.tau_bytes) continue;
    const auto slice = static_cast<long>(std::floor(p.timestamp_s / cfg.slice_s));
    if (slice != current) {
      flush();
      current = slice;
    }
    times.push_back(p.timestamp_s);
    sizes.push_back(static_cast<double>(p.size_bytes));
  }
  flush();
  return out;
}

std::vector<double> histogram(std::span<const double> samples, double lo, double hi, std::size_t bins) {
  if (bins == 0) throw Error(ErrorKind::InvalidConfig, "histogram needs at least one bin");
  std::vector<double> h(bins, 0.0);
  if (samples.empty()) return h;
  const double width = hi - lo;
  for (double v : samples) {
    std::size_t b = 0;
    if (width > 0) {
      const double pos = (v - lo) / width * static_cast<double>(bins);
      b = pos <= 0 ? 0 : std::min(bins - 1, static_cast<std::size_t>(pos));
    }
    h[b] += 1.0;
  }
  for (auto& x : h) x /= static_cast<double>(samples.size());
  return h;
}

KlStats per_trace_kl_samples(std::span<const std::vector<double>> p_traces,
                             std::span<const std::vector<double>> q_traces, const KlConfig& cfg) {
  cfg.validate();
  if (p_traces.empty() || q_traces.empty())
    throw Error(ErrorKind::EmptyInput, "per_trace_kl needs at least one trace per side");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::vector<double> pooled_q;
  auto widen = [&](const std::vector<double>& s) {
    for (double v : s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  };
  for (const auto& s : p_traces) widen(s);
  for (const auto& s : q_traces) {
    widen(s);
    pooled_q.insert(pooled_q.end(), s.begin(), s.end());
  }
  if (pooled_q.empty()) throw Error(ErrorKind::EmptyInput, "reference side has no samples");
  if (lo > hi) lo = hi = 0.0;

  const auto q_hist = histogram(pooled_q, lo, hi, cfg.bins);
  KlStats st;
  for (const auto& s : p_traces) {
    if (s.empty()) continue;
    st.scores.push_back(kl_divergence(histogram(s, lo, hi, cfg.bins), q_hist, cfg.epsilon));
  }
  if (st.scores.empty()) throw Error(ErrorKind::EmptyInput, "no P trace produced samples");
  st.mean = mean_of(st.scores);
  st.std = st.scores.size() > 1 ? sample_std(st.scores) : 0.0;
  return st;
}

KlStats per_trace_kl(std::span<const std::shared_ptr<const ClientTrace>> p_traces,
                     std::span<const std::shared_ptr<const ClientTrace>> q_traces, KlFeature feature,
                     const KlConfig& cfg) {
  std::vector<std::vector<double>> p, q;
  for (const auto& t : p_traces) p.push_back(trace_feature_samples(*t, feature, cfg));
  for (const auto& t : q_traces) q.push_back(trace_feature_samples(*t, feature, cfg));
  return per_trace_kl_samples(p, q, cfg);
}

KlReport kl_report(std::span<const std::shared_ptr<const ClientTrace>> corpus, const KlConfig& cfg) {
  cfg.validate();
  using Group = std::vector<std::shared_ptr<const ClientTrace>>;
  std::map<std::string, std::pair<Group, Group>> by_client;  // (cnn, rnn)
  for (const auto& t : corpus) {
    if (!t->label) throw Error(ErrorKind::UnlabeledWindow, "trace " + t->trace_id + " has no label");
    auto& slot = by_client[t->label->client_profile];
    if (t->label->family == ArchFamily::Cnn) slot.first.push_back(t);
    if (t->label->family == ArchFamily::Rnn) slot.second.push_back(t);
  }
  KlReport report{cfg, {}};
  for (const auto& [client, groups] : by_client) {
    const auto& [cnn, rnn] = groups;
    if (cnn.empty() || rnn.empty()) continue;
    for (KlFeature f : kKlFeatures) {
      report.rows.push_back({client, ArchFamily::Cnn, f, cnn.size(), rnn.size(),
                             per_trace_kl(cnn, rnn, f, cfg)});
      report.rows.push_back({client, ArchFamily::Rnn, f, rnn.size(), cnn.size(),
                             per_trace_kl(rnn, cnn, f, cfg)});
    }
  }
  return report;
}

double mean_uplink_burst_bytes(const ClientTrace& trace, double gap_s, std::uint32_t tau_bytes) {
  std::vector<double> bursts;
  double current = 0, last_t = 0;
  bool open = false;
  for (const auto& p : trace.packets) {
    if (p.direction != Direction::Uplink || p.size_bytes <= tau_bytes) continue;
    if (open && p.timestamp_s - last_t >= gap_s) {
      bursts.push_back(current);
      current = 0;
    }
    current += p.size_bytes;
    last_t = p.timestamp_s;
    open = true;
  }
  if (open) bursts.push_back(current);
  return bursts.empty() ? 0.0 : mean_of(bursts);
}

namespace {

std::vector<double> occupancy_series(const ClientTrace& trace, double bin_s, std::uint32_t tau_bytes) {
  if (!(bin_s > 0)) throw Error(ErrorKind::InvalidConfig, "bin width must be positive");
  if (trace.packets.empty()) throw Error(ErrorKind::EmptyTrace, "trace has no packets");
  const auto n = static_cast<std::size_t>(trace.packets.back().timestamp_s / bin_s) + 1;
  std::vector<double> occ(n, 0.0);
  for (const auto& p : trace.packets)
    if (p.size_bytes > tau_bytes) occ[static_cast<std::size_t>(p.timestamp_s / bin_s)] = 1.0;
  const double m = mean_of(occ);
  for (auto& v : occ) v -= m;
  return occ;
}

double power_at(std::span<const double> series, double freq_hz, double bin_s) {
  const double w = 2.0 * std::numbers::pi * freq_hz * bin_s;
  double re = 0, im = 0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (series[k] == 0.0) continue;
    re += series[k] * std::cos(w * static_cast<double>(k));
    im -= series[k] * std::sin(w * static_cast<double>(k));
  }
  return (re * re + im * im) / static_cast<double>(series.size());
}

}  // namespace

double occupancy_power(const ClientTrace& trace, double freq_hz, double bin_s, std::uint32_t tau_bytes) {
  return power_at(occupancy_series(trace, bin_s, tau_bytes), freq_hz, bin_s);
}

bool has_periodic_peak(const ClientTrace& trace, double period_s, double min_ratio, double bin_s,
                       std::uint32_t tau_bytes) {
  if (!(period_s > 0)) throw Error(ErrorKind::InvalidConfig, "period must be positive");
  const auto series = occupancy_series(trace, bin_s, tau_bytes);
  const double duration = static_cast<double>(series.size()) * bin_s;
  const double df = 1.0 / duration;  // frequency resolution

  double peak = 0;
  for (double f = 1.0 / (1.1 * period_s); f <= 1.0 / (0.9 * period_s); f += df / 4)
    peak = std::max(peak, power_at(series, f, bin_s));

  // Baseline: median power in the flanks 0.6-0.85 and 1.15-1.6 times the
  // nominal frequency, clear of the search band.
  const double f0 = 1.0 / period_s;
  std::vector<double> band;
  for (double f = 0.6 * f0; f <= 1.6 * f0; f += df / 2)
    if (f <= 0.85 * f0 || f >= 1.15 * f0) band.push_back(power_at(series, f, bin_s));
  std::nth_element(band.begin(), band.begin() + static_cast<std::ptrdiff_t>(band.size() / 2), band.end());
  const double median = band[band.size() / 2];
  return peak >= min_ratio * std::max(median, 1e-12);
}

}  // namespace flare
