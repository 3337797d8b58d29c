#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "flare/analysis.hpp"
#include "flare/error.hpp"
#include "flare/rng.hpp"
#include "helpers.hpp"

using namespace flare;

namespace {

// Direct between/within variance ratio in long double.
double fisher_oracle(const Matrix& X, const std::vector<int>& y, std::size_t j) {
  long double s[2] = {0, 0}, n[2] = {0, 0};
  for (std::size_t i = 0; i < X.rows(); ++i) {
    s[y[i]] += X(i, j);
    n[y[i]] += 1;
  }
  const long double mu = (s[0] + s[1]) / (n[0] + n[1]);
  const long double m0 = s[0] / n[0], m1 = s[1] / n[1];
  long double v[2] = {0, 0};
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const long double d = X(i, j) - (y[i] ? m1 : m0);
    v[y[i]] += d * d;
  }
  const long double between = n[1] * (m1 - mu) * (m1 - mu) + n[0] * (m0 - mu) * (m0 - mu);
  return static_cast<double>(between / (v[0] + v[1]));
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("fisher score matches the direct formula") {
    Rng rng(31);
    std::normal_distribution<double> g(0, 1);
    Matrix X(20, 5);
    std::vector<int> y(20);
    for (std::size_t i = 0; i < 20; ++i) {
      y[i] = i % 2;
      for (std::size_t j = 0; j < 5; ++j) X(i, j) = g(rng) + (y[i] ? 0.3 * static_cast<double>(j) : 0.0);
    }
    const auto s = fisher_score(X, y);
    REQUIRE(s.size() == 5);
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(s[j] - fisher_oracle(X, y, j)) <= 1e-9);
  }

  TEST_CASE("fisher sentinels and ordering") {
    Matrix X(6, 3);
    const std::vector<int> y{0, 0, 0, 1, 1, 1};
    for (std::size_t i = 0; i < 6; ++i) {
      X(i, 0) = 1.0;                            // identical across classes
      X(i, 1) = y[i] ? 10.0 : 0.0;              // constant within class
      X(i, 2) = (y[i] ? 5.0 : 0.0) + 0.01 * i;  // disjoint, tiny spread
    }
    const auto s = fisher_score(X, y);
    CHECK(s[0] == 0.0);
    CHECK(perfectly_separating(s[1]));
    CHECK(std::isfinite(s[2]));
    CHECK(rank_features(s) == std::vector<std::size_t>{1, 2, 0});
    CHECK_THROWS_AS(fisher_score(X, std::vector<int>(6, 1)), Error);
  }

  TEST_CASE("kl divergence examples") {
    const std::vector<double> p{0.5, 0.5}, q{0.25, 0.75};
    const double expect = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
    CHECK(kl_divergence(p, q) == doctest::Approx(expect).epsilon(1e-8));
    CHECK(kl_divergence(p, q) == doctest::Approx(0.1438).epsilon(1e-3));
    CHECK(kl_divergence(p, q) != doctest::Approx(kl_divergence(q, p)));
    CHECK(std::abs(kl_divergence(p, p)) < 1e-8);
    CHECK_THROWS_AS(kl_divergence(p, std::vector<double>{1.0}), Error);
  }

  TEST_CASE("kl matches a smoothed summation and is never negative") {
    Rng rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t bins = 2 + rng() % 30;
      std::vector<double> p(bins), q(bins);
      double sp = 0, sq = 0;
      for (std::size_t i = 0; i < bins; ++i) {
        p[i] = u(rng) < 0.2 ? 0.0 : u(rng);
        q[i] = u(rng) < 0.2 ? 0.0 : u(rng);
        sp += p[i];
        sq += q[i];
      }
      if (sp == 0 || sq == 0) continue;
      for (auto& v : p) v /= sp;
      for (auto& v : q) v /= sq;
      const double eps = 1e-10;
      long double zp = 0, zq = 0, sum = 0;
      for (std::size_t i = 0; i < bins; ++i) {
        zp += p[i] + eps;
        zq += q[i] + eps;
      }
      for (std::size_t i = 0; i < bins; ++i) {
        const long double a = (p[i] + eps) / zp, b = (q[i] + eps) / zq;
        sum += a * std::log(a / b);
      }
      const double got = kl_divergence(p, q, eps);
      CHECK(std::abs(got - static_cast<double>(sum)) <= 1e-9 * std::max(1.0, std::abs(got)));
      CHECK(got >= -1e-9);
    }
  }

  TEST_CASE("histogram binning") {
    const std::vector<double> s{0.0, 0.5, 1.0, 1.0};
    const auto h = histogram(s, 0.0, 1.0, 2);
    CHECK(h == std::vector<double>{0.25, 0.75});  // top edge closed
    const auto deg = histogram(std::vector<double>{3, 3}, 3, 3, 4);
    CHECK(deg == std::vector<double>{1, 0, 0, 0});
  }

  TEST_CASE("per-trace kl on identical distributions is small") {
    Rng rng(8);
    std::lognormal_distribution<double> d(0, 0.5);
    std::vector<std::vector<double>> P(5), Q(5);
    for (auto* side : {&P, &Q})
      for (auto& t : *side)
        for (int i = 0; i < 1000; ++i) t.push_back(d(rng));
    const auto k = per_trace_kl_samples(P, Q);
    CHECK(k.scores.size() == 5);
    CHECK(k.mean < 0.1);
    CHECK(k.mean >= 0.0);
  }

  TEST_CASE("single trace per side has zero spread") {
    const std::vector<std::vector<double>> P{{1, 2, 3, 4}}, Q{{2, 3, 5, 8}};
    const auto k = per_trace_kl_samples(P, Q);
    CHECK(k.std == 0.0);
    CHECK(k.scores.size() == 1);
    CHECK(k.mean == k.scores[0]);
  }

  TEST_CASE("slice feature samples") {
    using test::make_trace;
    // Two slices of 10 s; the second has a single packet above tau.
    const auto t = make_trace({{0, 100, Direction::Uplink},
                               {1, 300, Direction::Uplink},
                               {3, 40, Direction::Uplink},
                               {4, 200, Direction::Downlink},
                               {12, 500, Direction::Uplink}});
    KlConfig cfg;
    const auto frame = trace_feature_samples(*t, KlFeature::MeanFrame, cfg);
    REQUIRE(frame.size() == 2);
    CHECK(frame[0] == doctest::Approx(200));
    CHECK(frame[1] == doctest::Approx(500));
    const auto iat = trace_feature_samples(*t, KlFeature::MeanIat, cfg);
    REQUIRE(iat.size() == 1);
    CHECK(iat[0] == doctest::Approx(2.0));
    const auto sd = trace_feature_samples(*t, KlFeature::StdIat, cfg);
    REQUIRE(sd.size() == 1);
    CHECK(sd[0] == doctest::Approx(1.0));  // population std of {1, 3}
  }

  TEST_CASE("kl config validation") {
    KlConfig c;
    c.bins = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = KlConfig{};
    c.slice_s = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK(parse_kl_feature(to_string(KlFeature::StdIat)) == KlFeature::StdIat);
  }
}
