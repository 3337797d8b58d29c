#include "flare/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "flare/error.hpp"

namespace flare {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

}  // namespace

std::optional<StationId> StationId::parse(std::string_view text) {
  text = trim(text);
  if (text.size() != 17) return std::nullopt;
  StationId id;
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t at = i * 3;
    if (i > 0 && text[at - 1] != ':') return std::nullopt;
    int hi = hex_value(text[at]);
    int lo = hex_value(text[at + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    id.bytes[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return id;
}

StationId StationId::from_u64(std::uint64_t value) {
  StationId id;
  id.bytes[0] = 0x02;
  for (int i = 5; i >= 1; --i) {
    id.bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(value & 0xff);
    value >>= 8;
  }
  return id;
}

std::string StationId::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", bytes[0], bytes[1], bytes[2],
                bytes[3], bytes[4], bytes[5]);
  return buf;
}

std::string_view to_string(Direction d) { return d == Direction::Uplink ? "up" : "down"; }

double quantize_us(double seconds) { return std::round(seconds * 1e6) / 1e6; }

std::string format_timestamp(double seconds) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", seconds);
  return buf;
}

RawCapture parse_capture_csv(std::istream& in, std::size_t first_line) {
  RawCapture capture;
  std::string line;
  std::size_t line_no = first_line - 1;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (!have_header) {
      if (view.empty() || view.front() == '#') continue;
      if (view != kCaptureHeader)
        throw Error(ErrorKind::MissingHeader,
                    "expected header '" + std::string(kCaptureHeader) + "'", line_no);
      have_header = true;
      continue;
    }
    if (view.empty()) continue;

    auto fields = split_commas(view);
    if (fields.size() != 4)
      throw Error(ErrorKind::NonNumericField,
                  "expected 4 fields, got " + std::to_string(fields.size()), line_no);

    RawRow row;
    {
      auto f = fields[0];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row.timestamp_s);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(row.timestamp_s))
        throw Error(ErrorKind::NonNumericField, "timestamp '" + std::string(f) + "'", line_no);
      if (row.timestamp_s < 0.0)
        throw Error(ErrorKind::NegativeTimestamp, "timestamp " + std::string(f), line_no);
    }
    {
      auto f = fields[1];
      std::uint64_t size = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), size);
      if (ec != std::errc() || ptr != f.data() + f.size() || size > UINT32_MAX)
        throw Error(ErrorKind::NonNumericField, "size '" + std::string(f) + "'", line_no);
      if (size == 0) throw Error(ErrorKind::ZeroSize, "frame size 0", line_no);
      row.size_bytes = static_cast<std::uint32_t>(size);
    }
    auto src = StationId::parse(fields[2]);
    auto dst = StationId::parse(fields[3]);
    if (!src || !dst)
      throw Error(ErrorKind::MalformedStation, "bad MAC address", line_no);
    row.src = *src;
    row.dst = *dst;
    capture.rows.push_back(row);
  }
  if (!have_header) throw Error(ErrorKind::MissingHeader, "input has no header row");
  return capture;
}

RawCapture parse_capture_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_capture_csv(in);
}

ClientTrace extract_client_trace(const RawCapture& raw, const StationId& ap,
                                 const StationId& client) {
  bool client_seen = false;
  bool ap_seen = false;
  ClientTrace trace;
  trace.client_id = client;
  trace.ap_id = ap;

  for (const auto& row : raw.rows) {
    client_seen = client_seen || row.src == client || row.dst == client;
    ap_seen = ap_seen || row.src == ap || row.dst == ap;
    const bool up = row.src == client && row.dst == ap;
    const bool down = row.src == ap && row.dst == client;
    if (!up && !down) continue;
    trace.packets.push_back(PacketRecord{row.timestamp_s, row.size_bytes,
                                         up ? Direction::Uplink : Direction::Downlink, client});
  }
  if (!client_seen)
    throw Error(ErrorKind::UnknownStation, "client " + client.to_string() + " not in capture");
  if (!ap_seen) throw Error(ErrorKind::UnknownStation, "AP " + ap.to_string() + " not in capture");

  std::stable_sort(trace.packets.begin(), trace.packets.end(),
                   [](const PacketRecord& a, const PacketRecord& b) {
                     return a.timestamp_s < b.timestamp_s;
                   });
  if (!trace.packets.empty()) {
    const double t0 = trace.packets.front().timestamp_s;
    for (auto& p : trace.packets) p.timestamp_s = quantize_us(p.timestamp_s - t0);
  }
  return trace;
}

std::vector<double> inter_arrival_times(std::span<const PacketRecord> packets) {
  std::vector<double> out;
  if (packets.size() < 2) return out;
  out.reserve(packets.size() - 1);
  for (std::size_t i = 1; i < packets.size(); ++i)
    out.push_back(packets[i].timestamp_s - packets[i - 1].timestamp_s);
  return out;
}

std::vector<double> inter_arrival_times(const ClientTrace& trace) {
  return inter_arrival_times(std::span<const PacketRecord>(trace.packets));
}

DirectionCounts direction_counts(std::span<const PacketRecord> packets) {
  DirectionCounts c;
  for (const auto& p : packets) (p.direction == Direction::Uplink ? c.uplink : c.downlink)++;
  return c;
}

void write_trace(std::ostream& out, const ClientTrace& trace) {
  out << "# flare-trace v1\n";
  out << "# trace_id=" << trace.trace_id << '\n';
  out << "# client_id=" << trace.client_id.to_string() << '\n';
  out << "# ap_id=" << trace.ap_id.to_string() << '\n';
  if (trace.label) {
    const auto& l = *trace.label;
    out << "# family=" << to_string(l.family) << '\n';
    out << "# model_name=" << l.model_name << '\n';
    out << "# dataset_name=" << l.dataset_name << '\n';
    out << "# aggregation=" << l.aggregation << '\n';
    out << "# client_profile=" << l.client_profile << '\n';
  }
  out << kCaptureHeader << '\n';
  const std::string client = trace.client_id.to_string();
  const std::string ap = trace.ap_id.to_string();
  for (const auto& p : trace.packets) {
    const bool up = p.direction == Direction::Uplink;
    out << format_timestamp(p.timestamp_s) << ',' << p.size_bytes << ','
        << (up ? client : ap) << ',' << (up ? ap : client) << '\n';
  }
}

ClientTrace read_trace(std::istream& in) {
  std::map<std::string, std::string, std::less<>> meta;
  std::string line;
  std::size_t line_no = 0;
  std::string header;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() != '#') {
      header = line;
      break;
    }
    view.remove_prefix(1);
    view = trim(view);
    auto eq = view.find('=');
    if (eq == std::string_view::npos) continue;  // format banner
    meta.emplace(std::string(trim(view.substr(0, eq))), std::string(trim(view.substr(eq + 1))));
  }

  auto get = [&](std::string_view key) -> std::optional<std::string> {
    auto it = meta.find(key);
    if (it == meta.end()) return std::nullopt;
    return it->second;
  };
  auto client_text = get("client_id");
  auto ap_text = get("ap_id");
  if (!client_text || !ap_text)
    throw Error(ErrorKind::MalformedTraceFile, "trace file lacks client_id/ap_id metadata");
  auto client = StationId::parse(*client_text);
  auto ap = StationId::parse(*ap_text);
  if (!client || !ap) throw Error(ErrorKind::MalformedStation, "bad station id in trace metadata");

  // Header line already consumed: hand the remainder to the CSV parser.
  std::stringstream rest;
  rest << header << '\n' << in.rdbuf();
  RawCapture raw = parse_capture_csv(rest, line_no);

  ClientTrace trace;
  if (raw.rows.empty()) {
    trace.client_id = *client;
    trace.ap_id = *ap;
  } else {
    trace = extract_client_trace(raw, *ap, *client);
  }
  trace.trace_id = get("trace_id").value_or("");
  if (auto fam = get("family")) {
    ArchLabel label;
    label.family = parse_family(*fam);
    label.model_name = get("model_name").value_or("");
    label.dataset_name = get("dataset_name").value_or("");
    label.aggregation = get("aggregation").value_or("");
    label.client_profile = get("client_profile").value_or("");
    label.validate();
    trace.label = std::move(label);
  }
  return trace;
}

void save_trace(const std::string& path, const ClientTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  write_trace(out, trace);
  if (!out) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

ClientTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return read_trace(in);
}

}  // namespace flare
