#include "flare/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "flare/error.hpp"

namespace flare {

void WindowConfig::validate() const {
  if (!(window_s > 0.0) || !std::isfinite(window_s))
    throw Error(ErrorKind::InvalidConfig, "window_s must be positive");
  if (!(stride_s > 0.0) || !std::isfinite(stride_s))
    throw Error(ErrorKind::InvalidConfig, "stride_s must be positive");
  if (stride_s > window_s)
    throw Error(ErrorKind::InvalidConfig, "stride_s > window_s would drop packets");
  if (tau_bytes == 0) throw Error(ErrorKind::InvalidConfig, "tau_bytes must be positive");
}

TrafficWindow::TrafficWindow(std::shared_ptr<const ClientTrace> parent, double start_s,
                             double duration_s, std::size_t begin, std::size_t end)
    : parent_(std::move(parent)), start_s_(start_s), duration_s_(duration_s), begin_(begin), end_(end) {}

std::span<const PacketRecord> TrafficWindow::packets() const {
  return std::span<const PacketRecord>(parent_->packets).subspan(begin_, end_ - begin_);
}

std::string TrafficWindow::window_id() const {
  char buf[48];
  std::snprintf(buf, sizeof buf, "@%.3f", start_s_);
  return parent_->trace_id + buf;
}

std::vector<TrafficWindow> segment(std::shared_ptr<const ClientTrace> trace,
                                   const WindowConfig& cfg) {
  cfg.validate();
  if (!trace || trace->packets.empty())
    throw Error(ErrorKind::EmptyTrace, "cannot segment an empty trace");

  const auto& pkts = trace->packets;
  const double t0 = pkts.front().timestamp_s;
  const double t_last = pkts.back().timestamp_s;
  auto by_time = [](const PacketRecord& p, double t) { return p.timestamp_s < t; };

  std::vector<TrafficWindow> out;
  for (std::size_t k = 0;; ++k) {
    const double start = t0 + static_cast<double>(k) * cfg.stride_s;
    if (start > t_last) break;
    const double end = start + cfg.window_s;
    auto lo = std::lower_bound(pkts.begin(), pkts.end(), start, by_time);
    auto hi = std::lower_bound(lo, pkts.end(), end, by_time);
    if (lo == hi) continue;
    out.emplace_back(trace, start, cfg.window_s, static_cast<std::size_t>(lo - pkts.begin()),
                     static_cast<std::size_t>(hi - pkts.begin()));
  }
  return out;
}

bool is_active(std::span<const PacketRecord> packets, std::uint32_t tau_bytes) {
  return std::any_of(packets.begin(), packets.end(),
                     [&](const PacketRecord& p) { return p.size_bytes > tau_bytes; });
}

std::vector<TrafficWindow> filter_active(std::span<const TrafficWindow> windows,
                                         std::uint32_t tau_bytes) {
  std::vector<TrafficWindow> out;
  for (const auto& w : windows)
    if (is_active(w.packets(), tau_bytes)) out.push_back(w);
  return out;
}

bool trace_is_active(const ClientTrace& trace, std::uint32_t tau_bytes) {
  return is_active(trace.packets, tau_bytes);
}

std::vector<TrafficWindow> prepare_windows(
    std::span<const std::shared_ptr<const ClientTrace>> traces, const WindowConfig& cfg) {
  std::vector<TrafficWindow> out;
  for (const auto& t : traces) {
    if (!t || t->packets.empty() || !trace_is_active(*t, cfg.tau_bytes)) continue;
    auto windows = segment(t, cfg);
    auto active = filter_active(windows, cfg.tau_bytes);
    out.insert(out.end(), active.begin(), active.end());
  }
  return out;
}

}  // namespace flare
