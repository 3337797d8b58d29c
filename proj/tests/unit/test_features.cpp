#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "flare/error.hpp"
#include "flare/features.hpp"
#include "flare/rng.hpp"
#include "helpers.hpp"

using namespace flare;
using test::make_trace;
using test::Pkt;

namespace {

// Independent oracle: long double accumulation, explicit order statistics.
struct Oracle {
  long double mean, var, skew, kurt;
  std::vector<double> sorted;
  double pct(double q) const {
    const double h = (static_cast<double>(sorted.size()) - 1) * q;
    const double fl = std::floor(h);
    const auto i = static_cast<std::size_t>(fl);
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] + (h - fl) * (sorted[i + 1] - sorted[i]);
  }
};

Oracle oracle(std::vector<double> v) {
  Oracle o{};
  const long double n = static_cast<long double>(v.size());
  long double s = 0;
  for (double x : v) s += x;
  o.mean = s / n;
  long double c2 = 0, c3 = 0, c4 = 0;
  for (double x : v) {
    const long double d = x - o.mean;
    c2 += d * d;
    c3 += d * d * d;
    c4 += d * d * d * d;
  }
  o.var = c2 / n;
  o.skew = o.var > 0 ? (c3 / n) / std::pow(o.var, 1.5L) : 0;
  o.kurt = o.var > 0 ? (c4 / n) / (o.var * o.var) : 0;
  std::sort(v.begin(), v.end());
  o.sorted = v;
  return o;
}

void check_block(const StatBlock& b, const std::vector<double>& values) {
  const Oracle o = oracle(values);
  const double scale = std::max(1.0, std::abs(static_cast<double>(o.mean)));
  CHECK(b.mean == doctest::Approx(static_cast<double>(o.mean)).epsilon(1e-12));
  CHECK(std::abs(b.variance - static_cast<double>(o.var)) <= 1e-9 * std::max(1.0, static_cast<double>(o.var)));
  CHECK(std::abs(b.skewness - static_cast<double>(o.skew)) <= 1e-9 * std::max(1.0, std::abs(static_cast<double>(o.skew))));
  CHECK(std::abs(b.kurtosis - static_cast<double>(o.kurt)) <= 1e-9 * std::max(1.0, static_cast<double>(o.kurt)));
  CHECK(b.min == o.sorted.front());
  CHECK(b.max == o.sorted.back());
  CHECK(std::abs(b.median - o.pct(0.5)) <= 1e-9 * scale);
  for (int i = 0; i < 9; ++i) CHECK(std::abs(b.deciles[i] - o.pct((i + 1) / 10.0)) <= 1e-9 * scale);
  std::vector<double> dev;
  for (double x : values) dev.push_back(std::abs(x - o.pct(0.5)));
  CHECK(std::abs(b.mad - oracle(dev).pct(0.5)) <= 1e-9 * scale);
}

TrafficWindow single_window(const std::vector<Pkt>& pk, double window_s = 300) {
  return segment(make_trace(pk), WindowConfig::tumbling(window_s)).front();
}

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("constant input convention") {
    const std::vector<double> v{5, 5, 5, 5};
    const auto s = summary_stats(v);
    CHECK(s.mean == 5);
    CHECK(s.std == 0);
    CHECK(s.skewness == 0);
    CHECK(s.kurtosis == 0);
    for (double d : s.deciles) CHECK(d == 5);
  }

  TEST_CASE("symmetric input has zero skew") {
    const std::vector<double> v{1, 2, 3, 4, 5};
    CHECK(summary_stats(v).skewness == doctest::Approx(0.0));
  }

  TEST_CASE("skewed input matches the moment oracle") {
    const std::vector<double> v{1, 2, 3, 4, 100};
    check_block(summary_stats(v), v);
  }

  TEST_CASE("random inputs match the brute-force oracle") {
    Rng rng(17);
    std::lognormal_distribution<double> ln(5, 1.2);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> v(1 + rng() % 400);
      for (auto& x : v) x = std::round(ln(rng));
      check_block(summary_stats(v), v);
    }
  }

  TEST_CASE("empty input") { CHECK_THROWS_AS(summary_stats(std::vector<double>{}), Error); }

  TEST_CASE("stat block invariants") {
    Rng rng(2);
    std::normal_distribution<double> nd(0, 10);
    std::vector<double> v(333);
    for (auto& x : v) x = nd(rng);
    const auto s = summary_stats(v);
    CHECK(s.variance >= 0);
    CHECK(s.std == doctest::Approx(std::sqrt(s.variance)));
    for (int i = 0; i < 9; ++i) {
      CHECK(s.deciles[i] >= s.min);
      CHECK(s.deciles[i] <= s.max);
      if (i) CHECK(s.deciles[i] >= s.deciles[i - 1]);
    }
  }

  TEST_CASE("serialized block layout") {
    StatBlock s;
    s.mean = 1;
    s.max = 2;
    s.min = 3;
    s.variance = 4;
    s.std = 5;
    s.median = 6;
    s.mad = 7;
    s.skewness = 8;
    s.kurtosis = 9;
    for (int i = 0; i < 9; ++i) s.deciles[i] = 10 + i;
    const auto a = s.to_array();
    const std::array<double, 17> expect{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 15, 16, 17, 18};
    CHECK(a == expect);
    const auto names = StatBlock::names("x_");
    REQUIRE(names.size() == 17);
    CHECK(names[13] == "x_p60");
    CHECK(std::find(names.begin(), names.end(), "x_p50") == names.end());
  }

  TEST_CASE("uniform rate") {
    std::vector<Pkt> pk;
    for (int i = 0; i < 300; ++i) pk.emplace_back(i + 0.5, 100, Direction::Uplink);
    pk.front() = {0.0, 100, Direction::Uplink};
    const auto f = flow_features(single_window(pk));
    CHECK(f.rate_stats[0] == doctest::Approx(1.0));
    CHECK(f.rate_stats[4] == doctest::Approx(0.0));
  }

  TEST_CASE("missing direction gives the zero sentinel") {
    std::vector<Pkt> pk{{0, 100, Direction::Uplink}, {1, 1500, Direction::Uplink}};
    const auto f = flow_features(single_window(pk));
    for (double v : f.down_size.to_array()) CHECK(v == 0.0);
    CHECK(f.up_size.max == 1500);
  }

  TEST_CASE("flow vector matches a binning oracle") {
    Rng rng(33);
    std::uniform_real_distribution<double> u(0, 300);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> ts(200 + rng() % 2000);
      for (auto& t : ts) t = quantize_us(u(rng));
      std::sort(ts.begin(), ts.end());
      ts[0] = 0;
      std::vector<Pkt> pk;
      std::vector<double> up, down;
      std::vector<double> counts(300, 0.0);
      for (double t : ts) {
        const auto sz = static_cast<std::uint32_t>(40 + rng() % 1460);
        const auto d = rng() % 2 ? Direction::Uplink : Direction::Downlink;
        pk.emplace_back(t, sz, d);
        (d == Direction::Uplink ? up : down).push_back(sz);
        counts[static_cast<std::size_t>(std::floor(t))] += 1;
      }
      const auto v = flow_features(single_window(pk)).to_vector();
      REQUIRE(v.size() == 39);
      const Oracle rc = oracle(counts);
      CHECK(v[0] == doctest::Approx(static_cast<double>(rc.mean)));
      CHECK(v[1] == rc.sorted.back());
      CHECK(v[2] == rc.sorted.front());
      CHECK(v[3] == doctest::Approx(rc.pct(0.5)));
      CHECK(v[4] == doctest::Approx(std::sqrt(static_cast<double>(rc.var))));
      check_block(summary_stats(up), up);
      const auto uarr = summary_stats(up).to_array();
      const auto darr = summary_stats(down).to_array();
      for (std::size_t i = 0; i < 17; ++i) {
        CHECK(v[5 + i] == uarr[i]);
        CHECK(v[22 + i] == darr[i]);
      }
    }
  }

  TEST_CASE("packet features of a singleton") {
    const auto f = packet_features(single_window({{0.0, 100, Direction::Uplink}}));
    REQUIRE(f.length_histogram.size() == 25);
    for (std::size_t i = 0; i < 25; ++i) CHECK(f.length_histogram[i] == (i == 1 ? 1.0 : 0.0));
    CHECK(f.first_iat == 0);
    CHECK(f.last_iat == 0);
    CHECK(f.first_size == 100);
    CHECK(f.last_size == 100);
  }

  TEST_CASE("hand-binned sizes") {
    const auto f = packet_features(single_window(
        {{0.0, 70, Direction::Uplink}, {1.0, 130, Direction::Downlink}, {3.0, 1500, Direction::Uplink}}));
    CHECK(f.length_histogram[1] == doctest::Approx(1.0 / 3));
    CHECK(f.length_histogram[2] == doctest::Approx(1.0 / 3));
    CHECK(f.length_histogram[23] == doctest::Approx(1.0 / 3));
    CHECK(f.last_iat == doctest::Approx(2.0));
    CHECK(f.last_size == 1500);
  }

  TEST_CASE("open last bin and histogram normalisation") {
    Rng rng(44);
    std::vector<Pkt> pk;
    for (int i = 0; i < 777; ++i) pk.emplace_back(i * 0.1, 1 + static_cast<std::uint32_t>(rng() % 4000), Direction::Uplink);
    const auto f = packet_features(single_window(pk));
    std::vector<double> h(25, 0.0);
    for (auto& [t, s, d] : pk) h[std::min<std::size_t>(24, s / 64)] += 1.0 / 777;
    double sum = 0;
    for (std::size_t i = 0; i < 25; ++i) {
      CHECK(f.length_histogram[i] == doctest::Approx(h[i]).epsilon(1e-12));
      sum += f.length_histogram[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }

  TEST_CASE("first IAT measured from the window start") {
    std::vector<Pkt> pk{{0.0, 100, Direction::Uplink}, {310.0, 200, Direction::Uplink}, {312.5, 300, Direction::Uplink}};
    const auto ws = segment(make_trace(pk), WindowConfig::tumbling(300));
    REQUIRE(ws.size() == 2);
    const auto f = packet_features(ws[1]);
    CHECK(f.first_iat == doctest::Approx(10.0));
    CHECK(f.last_iat == doctest::Approx(2.5));
    FeatureConfig cfg;
    cfg.first_iat_from_window_start = false;
    CHECK(packet_features(ws[1], cfg).first_iat == doctest::Approx(2.5));
  }

  TEST_CASE("equal-timestamp permutation leaves flow features unchanged") {
    std::vector<Pkt> a{{0, 100, Direction::Uplink}, {1, 200, Direction::Downlink}, {1, 300, Direction::Uplink}, {2, 400, Direction::Downlink}};
    std::vector<Pkt> b{{0, 100, Direction::Uplink}, {1, 300, Direction::Uplink}, {1, 200, Direction::Downlink}, {2, 400, Direction::Downlink}};
    CHECK(flow_features(single_window(a)).to_vector() == flow_features(single_window(b)).to_vector());
  }

  TEST_CASE("dimensions are fixed and names line up") {
    CHECK(FlowFeatures::names().size() == 39);
    CHECK(PacketFeatures::names().size() == 29);
    Rng rng(8);
    std::vector<TrafficWindow> ws;
    for (int i = 0; i < 1000; ++i) {
      std::vector<Pkt> pk;
      const int n = 1 + static_cast<int>(rng() % 6);
      for (int j = 0; j < n; ++j)
        pk.emplace_back(j * 7.0, 1 + static_cast<std::uint32_t>(rng() % 2000), rng() % 2 ? Direction::Uplink : Direction::Downlink);
      ws.push_back(segment(make_trace(pk, "w" + std::to_string(i)), WindowConfig::tumbling(300)).front());
    }
    const auto fs = featurize(ws);
    CHECK(fs.flow.rows() == 1000);
    CHECK(fs.flow.cols() == 39);
    CHECK(fs.pkt.cols() == 29);
    for (double v : fs.flow.data()) CHECK(std::isfinite(v));
    CHECK(fs.flow == featurize_serial(ws).flow);
    CHECK(fs.pkt == featurize_serial(ws).pkt);
  }

  TEST_CASE("empty window errors") {
    auto t = make_trace({{0, 100, Direction::Uplink}});
    TrafficWindow empty(t, 0, 300, 0, 0);
    CHECK_THROWS_AS(flow_features(empty), Error);
    CHECK_THROWS_AS(packet_features(empty), Error);
  }
}
