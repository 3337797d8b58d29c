#include <doctest.h>

#include <cmath>
#include <limits>

#include "flare/error.hpp"
#include "flare/throttle.hpp"

using namespace flare;

namespace {

std::vector<SessionSpec> federation(const std::string& model_name, double mbps = 216) {
  ModelProfile model;
  for (const auto& m : default_model_profiles())
    if (m.name == model_name) model = m;
  std::vector<SessionSpec> out;
  std::uint64_t k = 0;
  for (const auto& c : default_client_profiles()) {
    SessionSpec s;
    s.model = model;
    s.client = c;
    s.link.throughput_mbps = mbps;
    s.seed = 100 + k++;
    out.push_back(s);
  }
  return out;
}

std::string first_of(ArchFamily f) {
  for (const auto& m : default_model_profiles())
    if (m.family == f) return m.name;
  return {};
}

}  // namespace

TEST_SUITE("throttle") {
  TEST_CASE("cost of attack") {
    CHECK(cost_of_attack(1, 216, 216) == 1.0);
    CHECK(cost_of_attack(1, 216, 72) == 3.0);
    CHECK(cost_of_attack(2, 384, 128) == 6.0);
    CHECK_THROWS_AS(cost_of_attack(1, 100, 200), Error);
    CHECK_THROWS_AS(cost_of_attack(1, 0, 0), Error);
    CHECK_THROWS_AS(cost_of_attack(0, 10, 5), Error);
    try {
      cost_of_attack(1, -1, 1);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidThroughput);
    }
  }

  TEST_CASE("accuracy curve reaches the target at the configured round") {
    for (std::size_t R : {5, 30, 120}) {
      const double r = static_cast<double>(R);
      CHECK(accuracy_curve(r, R) == doctest::Approx(0.9).epsilon(1e-12));
      CHECK(accuracy_curve(r - 1, R) < kTargetAccuracy);
      CHECK(accuracy_curve(0, R) == 0.0);
      CHECK(accuracy_curve(1e6, R) == doctest::Approx(0.99));
    }
  }

  TEST_CASE("transfer timing with throttled intervals") {
    CHECK(transfer_end(1.0, 100, 10, 0.5, {}) == doctest::Approx(11.0));
    const std::vector<std::pair<double, double>> all{{0, 1e9}};
    CHECK(transfer_end(0, 90, 10, 2.0 / 3.0, all) == doctest::Approx(27.0));
    // 20 bytes before the interval, 10 inside it, 70 after
    const std::vector<std::pair<double, double>> mid{{2, 4}};
    CHECK(transfer_end(0, 100, 10, 0.5, mid) == doctest::Approx(11.0));
    CHECK(transfer_end(5, 100, 10, 0.5, mid) == doctest::Approx(15.0));
  }

  TEST_CASE("zero denial reproduces the baseline") {
    const auto fed = federation(first_of(ArchFamily::Cnn));
    const std::vector<std::size_t> none, one{1};
    for (auto mode : {SyncMode::Sync, SyncMode::Async}) {
      const auto base = emulate_throttle(fed, none, 0.0, mode);
      const auto zero = emulate_throttle(fed, one, 0.0, mode);
      CHECK(zero.time_s == base.time_s);
      CHECK(zero.rounds == base.rounds);
      CHECK(base.cost == 0.0);
    }
    CHECK_THROWS_AS(emulate_throttle(fed, one, 1.0, SyncMode::Sync), Error);
    const std::vector<std::size_t> out_of_range{7};
    CHECK_THROWS_AS(emulate_throttle(fed, out_of_range, 0.5, SyncMode::Sync), Error);
  }

  TEST_CASE("one throttled client slows a synchronous federation") {
    const auto fed = federation(first_of(ArchFamily::Cnn));
    const std::vector<std::size_t> none, one{0};
    const auto base = emulate_throttle(fed, none, 0.0, SyncMode::Sync);
    const auto hit = emulate_throttle(fed, one, 2.0 / 3.0, SyncMode::Sync);
    CHECK(hit.time_s > base.time_s);
    CHECK(hit.cost == doctest::Approx(3.0));
    CHECK(hit.throttled_fraction > 0.0);
  }

  TEST_CASE("convergence time is monotone in denial and throughput") {
    for (const auto& name : {first_of(ArchFamily::Cnn), first_of(ArchFamily::Rnn)})
      for (auto mode : {SyncMode::Sync, SyncMode::Async}) {
        const std::vector<std::size_t> all{0, 1, 2};
        const auto fed = federation(name);
        double prev = 0;
        for (double d : {0.0, 0.2, 0.4, 0.6, 0.8}) {
          const double t = emulate_throttle(fed, all, d, mode).time_s;
          CHECK(t >= prev);
          prev = t;
        }
        prev = std::numeric_limits<double>::infinity();
        for (double mbps : {20.0, 50.0, 100.0, 216.0, 400.0}) {
          const double t = emulate_throttle(federation(name, mbps), all, 0.5, mode).time_s;
          CHECK(t <= prev);
          prev = t;
        }
      }
  }

  TEST_CASE("gated schedule throttles less of the time than a continuous one") {
    const auto fed = federation(first_of(ArchFamily::Cnn));
    const std::vector<std::size_t> one{0};
    const auto sched = ThrottleSchedule::tuned_for(fed[0].model, fed[0].client, fed[0].link, 2.0 / 3.0);
    CHECK(sched.gated);
    CHECK_FALSE(sched.windows.empty());
    const auto gated = emulate_throttle(fed, one, 2.0 / 3.0, SyncMode::Sync, sched);
    const auto cont = emulate_throttle(fed, one, 2.0 / 3.0, SyncMode::Sync);
    CHECK(gated.throttled_fraction < cont.throttled_fraction);
    CHECK(gated.throttled_fraction > 0.0);
  }
}
