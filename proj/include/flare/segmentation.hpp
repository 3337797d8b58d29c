#pragma once

// Fixed-duration observation windows and the tau activity filter.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "flare/ingest.hpp"

namespace flare {

struct WindowConfig {
  double window_s = 300.0;
  double stride_s = 300.0;
  std::uint32_t tau_bytes = 66;

  /// Non-overlapping windows of the given length.
  static WindowConfig tumbling(double window_s, std::uint32_t tau_bytes = 66) {
    return WindowConfig{window_s, window_s, tau_bytes};
  }
  /// Throws InvalidConfig unless 0 < stride_s <= window_s and tau_bytes > 0.
  void validate() const;
};

/// A view onto a contiguous packet range of a shared parent trace.
class TrafficWindow {
 public:
  TrafficWindow(std::shared_ptr<const ClientTrace> parent, double start_s, double duration_s,
                std::size_t begin, std::size_t end);

  double start_s() const { return start_s_; }
  double duration_s() const { return duration_s_; }
  std::span<const PacketRecord> packets() const;
  std::size_t size() const { return end_ - begin_; }
  bool empty() const { return begin_ == end_; }

  const ClientTrace& parent() const { return *parent_; }
  const std::shared_ptr<const ClientTrace>& parent_ptr() const { return parent_; }
  const std::optional<ArchLabel>& label() const { return parent_->label; }
  /// `<trace_id>@<start>`; unique within a corpus.
  std::string window_id() const;

 private:
  std::shared_ptr<const ClientTrace> parent_;
  double start_s_;
  double duration_s_;
  std::size_t begin_;
  std::size_t end_;
};

/// Windows start at trace start + k * stride; empty windows are not emitted.
std::vector<TrafficWindow> segment(std::shared_ptr<const ClientTrace> trace,
                                   const WindowConfig& cfg);

/// Windows with at least one packet strictly larger than tau_bytes.
std::vector<TrafficWindow> filter_active(std::span<const TrafficWindow> windows,
                                         std::uint32_t tau_bytes);

bool is_active(std::span<const PacketRecord> packets, std::uint32_t tau_bytes);

/// Trace-level filter applied before training.
bool trace_is_active(const ClientTrace& trace, std::uint32_t tau_bytes);

/// Segments every trace that passes the trace-level filter and drops
/// inactive windows; the common preprocessing path for training and scoring.
std::vector<TrafficWindow> prepare_windows(
    std::span<const std::shared_ptr<const ClientTrace>> traces, const WindowConfig& cfg);

}  // namespace flare
