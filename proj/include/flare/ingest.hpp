#pragma once

// Capture ingestion: CSV parsing, per-client MAC filtering, direction
// tagging and inter-arrival times. Also the canonical trace file format
// shared with the simulator.

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flare/labels.hpp"

namespace flare {

struct StationId {
  std::array<std::uint8_t, 6> bytes{};

  /// Parses colon-separated hex ("aa:bb:cc:dd:ee:ff"); nullopt if malformed.
  static std::optional<StationId> parse(std::string_view text);
  /// Derives a locally-administered unicast address from a 40-bit value.
  static StationId from_u64(std::uint64_t value);
  std::string to_string() const;  // lowercase

  auto operator<=>(const StationId&) const = default;
};

enum class Direction : std::uint8_t { Uplink, Downlink };

std::string_view to_string(Direction d);

struct PacketRecord {
  double timestamp_s = 0.0;
  std::uint32_t size_bytes = 1;
  Direction direction = Direction::Uplink;
  StationId station_id;  // the client station

  bool operator==(const PacketRecord&) const = default;
};

struct RawRow {
  double timestamp_s = 0.0;
  std::uint32_t size_bytes = 1;
  StationId src;
  StationId dst;
};

struct RawCapture {
  std::vector<RawRow> rows;
};

struct ClientTrace {
  std::string trace_id;
  StationId client_id;
  StationId ap_id;
  std::vector<PacketRecord> packets;  // sorted by timestamp, first at 0
  std::optional<ArchLabel> label;

  bool operator==(const ClientTrace&) const = default;
};

inline constexpr std::string_view kCaptureHeader = "timestamp,size,src_mac,dst_mac";

/// Rounds seconds to the microsecond grid used by the trace format.
double quantize_us(double seconds);
std::string format_timestamp(double seconds);

/// Parses `timestamp,size,src_mac,dst_mac` CSV. Leading '#' lines are
/// skipped. Errors carry 1-based line numbers counted from `first_line`.
RawCapture parse_capture_csv(std::istream& in, std::size_t first_line = 1);
RawCapture parse_capture_csv(std::string_view text);

/// Keeps rows exchanged between `client` and `ap`, tags direction (Uplink iff
/// the client sent it), stable-sorts by time and rebases the first packet to 0.
ClientTrace extract_client_trace(const RawCapture& raw, const StationId& ap,
                                 const StationId& client);

std::vector<double> inter_arrival_times(std::span<const PacketRecord> packets);
std::vector<double> inter_arrival_times(const ClientTrace& trace);

struct DirectionCounts {
  std::size_t uplink = 0;
  std::size_t downlink = 0;
};
DirectionCounts direction_counts(std::span<const PacketRecord> packets);

/// Canonical trace file: a `# key=value` metadata block, then capture CSV.
void write_trace(std::ostream& out, const ClientTrace& trace);
ClientTrace read_trace(std::istream& in);
void save_trace(const std::string& path, const ClientTrace& trace);
ClientTrace load_trace(const std::string& path);

}  // namespace flare
