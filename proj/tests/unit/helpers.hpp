#pragma once

#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "flare/ingest.hpp"
#include "flare/labels.hpp"

namespace flare::test {

inline const StationId kAp = StationId::from_u64(1);
inline const StationId kClient = StationId::from_u64(0x10);

// (timestamp, size, direction)
using Pkt = std::tuple<double, std::uint32_t, Direction>;

inline std::shared_ptr<const ClientTrace> make_trace(const std::vector<Pkt>& pkts,
                                                     const std::string& id = "t",
                                                     std::optional<ArchLabel> label = std::nullopt) {
  auto t = std::make_shared<ClientTrace>();
  t->trace_id = id;
  t->client_id = kClient;
  t->ap_id = kAp;
  for (const auto& [ts, size, dir] : pkts) t->packets.push_back({ts, size, dir, kClient});
  t->label = std::move(label);
  return t;
}

inline ArchLabel label_for(ArchFamily f, const std::string& model) {
  ArchLabel l;
  l.family = f;
  l.model_name = model;
  return l;
}

}  // namespace flare::test
