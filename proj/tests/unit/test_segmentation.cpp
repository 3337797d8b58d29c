#include <doctest.h>

#include <random>
#include <set>

#include "flare/error.hpp"
#include "flare/rng.hpp"
#include "flare/segmentation.hpp"
#include "helpers.hpp"

using namespace flare;
using test::make_trace;
using test::Pkt;

namespace {

std::vector<Pkt> evenly(double span, std::size_t n, std::uint32_t size = 1000) {
  std::vector<Pkt> out;
  for (std::size_t i = 0; i < n; ++i)
    out.emplace_back(span * static_cast<double>(i) / static_cast<double>(n), size, Direction::Uplink);
  return out;
}

}  // namespace

TEST_SUITE("segmentation") {
  TEST_CASE("window count arithmetic") {
    const auto t = make_trace(evenly(600, 600));
    CHECK(segment(t, WindowConfig::tumbling(300)).size() == 2);
    const auto short_trace = make_trace(evenly(10, 20));
    const auto w = segment(short_trace, WindowConfig::tumbling(300));
    REQUIRE(w.size() == 1);
    CHECK(w[0].size() == 20);
  }

  TEST_CASE("empty trace is rejected") {
    CHECK_THROWS_AS(segment(make_trace({}), WindowConfig{}), Error);
  }

  TEST_CASE("config validation") {
    CHECK_THROWS_AS((WindowConfig{300, 301, 66}.validate()), Error);
    CHECK_THROWS_AS((WindowConfig{0, 0, 66}.validate()), Error);
    CHECK_THROWS_AS((WindowConfig{300, 300, 0}.validate()), Error);
    CHECK_NOTHROW((WindowConfig{300, 150, 66}.validate()));
  }

  TEST_CASE("overlapping windows match interval membership") {
    Rng rng(9);
    std::uniform_real_distribution<double> u(0, 1500);
    std::vector<double> ts(5000);
    for (auto& v : ts) v = u(rng);
    std::sort(ts.begin(), ts.end());
    ts[0] = 0.0;
    std::vector<Pkt> pk;
    for (double v : ts) pk.emplace_back(v, 500, Direction::Downlink);
    const auto trace = make_trace(pk);
    const auto windows = segment(trace, WindowConfig{300, 150, 66});

    // oracle: for every window start k*150, the packets in [start, start+300)
    std::size_t k = 0;
    for (const auto& w : windows) {
      while (true) {
        const double s = 150.0 * static_cast<double>(k);
        const auto n = std::count_if(ts.begin(), ts.end(), [&](double v) { return v >= s && v < s + 300; });
        if (n > 0) break;
        ++k;
      }
      const double start = 150.0 * static_cast<double>(k);
      CHECK(w.start_s() == doctest::Approx(start));
      std::vector<double> expect;
      for (double v : ts)
        if (v >= start && v < start + 300) expect.push_back(v);
      REQUIRE(w.size() == expect.size());
      for (std::size_t i = 0; i < expect.size(); ++i) CHECK(w.packets()[i].timestamp_s == expect[i]);
      ++k;
    }
    CHECK(windows.size() == 10);
  }

  TEST_CASE("tumbling windows partition the packets") {
    const auto trace = make_trace(evenly(900, 1800));
    std::size_t total = 0;
    for (const auto& w : segment(trace, WindowConfig::tumbling(300))) {
      total += w.size();
      for (const auto& p : w.packets()) {
        CHECK(p.timestamp_s >= w.start_s());
        CHECK(p.timestamp_s < w.start_s() + w.duration_s());
      }
    }
    CHECK(total == 1800);
  }

  TEST_CASE("windows without packets are not emitted") {
    const auto trace = make_trace({{0, 100, Direction::Uplink}, {950, 100, Direction::Uplink}});
    const auto w = segment(trace, WindowConfig::tumbling(300));
    REQUIRE(w.size() == 2);
    CHECK(w[1].start_s() == 900);
  }

  TEST_CASE("activity filter is strict and idempotent") {
    const auto quiet = make_trace({{0, 60, Direction::Uplink}, {1, 66, Direction::Downlink}}, "q");
    const auto busy = make_trace({{0, 60, Direction::Uplink}, {1, 1500, Direction::Downlink}}, "b");
    std::vector<TrafficWindow> ws;
    for (auto& t : {quiet, busy})
      for (auto& w : segment(t, WindowConfig::tumbling(300))) ws.push_back(w);
    const auto kept = filter_active(ws, 66);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].parent().trace_id == "b");
    CHECK(filter_active(kept, 66).size() == kept.size());
  }

  TEST_CASE("filter matches a predicate scan over 20 windows") {
    Rng rng(21);
    std::vector<TrafficWindow> ws;
    std::vector<bool> expect;
    for (int i = 0; i < 20; ++i) {
      std::vector<Pkt> pk;
      std::uint32_t mx = 0;
      for (int j = 0; j < 5; ++j) {
        const auto sz = static_cast<std::uint32_t>(40 + rng() % 40);
        mx = std::max(mx, sz);
        pk.emplace_back(j, sz, Direction::Uplink);
      }
      auto t = make_trace(pk, "w" + std::to_string(i));
      ws.push_back(segment(t, WindowConfig::tumbling(300)).front());
      expect.push_back(mx > 66);
    }
    const auto kept = filter_active(ws, 66);
    std::size_t j = 0;
    for (std::size_t i = 0; i < ws.size(); ++i)
      if (expect[i]) {
        REQUIRE(j < kept.size());
        CHECK(kept[j++].window_id() == ws[i].window_id());
      }
    CHECK(j == kept.size());
  }

  TEST_CASE("segmentation is shift invariant") {
    std::vector<Pkt> pk = evenly(700, 350);
    std::vector<Pkt> shifted;
    for (auto [t, s, d] : pk) shifted.emplace_back(t + 1000, s, d);
    const auto a = segment(make_trace(pk), WindowConfig::tumbling(300));
    auto trace_b = std::make_shared<ClientTrace>(*make_trace(shifted));
    // A trace starting at 1000 windows from its first packet.
    const auto b = segment(trace_b, WindowConfig::tumbling(300));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(b[i].start_s() == doctest::Approx(a[i].start_s() + 1000));
      CHECK(a[i].size() == b[i].size());
    }
  }

  TEST_CASE("trace-level filter and prepare_windows") {
    const auto quiet = make_trace({{0, 60, Direction::Uplink}}, "q");
    const auto busy = make_trace(evenly(600, 100), "b");
    CHECK_FALSE(trace_is_active(*quiet, 66));
    CHECK(trace_is_active(*busy, 66));
    std::vector<std::shared_ptr<const ClientTrace>> all{quiet, busy};
    const auto ws = prepare_windows(all, WindowConfig::tumbling(300));
    CHECK(ws.size() == 2);
    for (const auto& w : ws) CHECK(w.parent().trace_id == "b");
  }

  TEST_CASE("window ids are unique") {
    const auto ws = segment(make_trace(evenly(1200, 400), "x"), WindowConfig{300, 100, 66});
    std::set<std::string> ids;
    for (const auto& w : ws) ids.insert(w.window_id());
    CHECK(ids.size() == ws.size());
  }
}
