#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "flare/error.hpp"
#include "flare/learners/forest.hpp"
#include "flare/learners/gbt.hpp"
#include "flare/learners/logreg.hpp"
#include "flare/learners/model_io.hpp"
#include "flare/learners/tree.hpp"
#include "flare/learners/validation.hpp"
#include "flare/metrics.hpp"
#include "flare/rng.hpp"

using namespace flare;

namespace {

Dataset make_ds(const std::vector<std::vector<double>>& rows, const std::vector<int>& y) {
  Dataset ds;
  ds.X = Matrix(0, rows.empty() ? 0 : rows[0].size());
  for (const auto& r : rows) ds.X.append_row(r);
  ds.y = y;
  for (std::size_t j = 0; j < ds.X.cols(); ++j) ds.feature_names.push_back("f" + std::to_string(j));
  return ds;
}

// Two Gaussian blobs, separable up to noise.
Dataset blobs(std::size_t n, std::size_t d, double gap, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> nd(0, 1);
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    std::vector<double> r(d);
    for (auto& v : r) v = nd(rng) + (c ? gap : 0.0);
    rows.push_back(r);
    y.push_back(c);
  }
  return make_ds(rows, y);
}

double gini_direct(const std::vector<int>& labels) {
  if (labels.empty()) return 0;
  double p = 0;
  for (int l : labels) p += l;
  p /= static_cast<double>(labels.size());
  return 1 - p * p - (1 - p) * (1 - p);
}

struct Candidate {
  std::size_t feature;
  double threshold;
  double gain;
};

// Every (feature, midpoint) candidate scored by direct partitioning.
std::optional<Candidate> exhaustive_split(const Dataset& ds) {
  const double parent = gini_direct(ds.y);
  std::vector<Candidate> all;
  for (std::size_t f = 0; f < ds.dims(); ++f) {
    std::set<double> values;
    for (std::size_t i = 0; i < ds.size(); ++i) values.insert(ds.X(i, f));
    std::vector<double> v(values.begin(), values.end());
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      const double thr = v[k] + (v[k + 1] - v[k]) / 2;
      std::vector<int> l, r;
      for (std::size_t i = 0; i < ds.size(); ++i) (ds.X(i, f) <= thr ? l : r).push_back(ds.y[i]);
      const double n = static_cast<double>(ds.size());
      const double g = parent - l.size() / n * gini_direct(l) - r.size() / n * gini_direct(r);
      all.push_back({f, thr, g});
    }
  }
  double best = -1;
  for (const auto& c : all) best = std::max(best, c.gain);
  if (best <= kSplitTieEps) return std::nullopt;
  for (const auto& c : all)  // feature-major, threshold-ascending
    if (c.gain >= best - 1e-12) return c;
  return std::nullopt;
}

}  // namespace

TEST_SUITE("learners") {
  TEST_CASE("gini") {
    CHECK(gini(0, 10) == 0);
    CHECK(gini(10, 10) == 0);
    CHECK(gini(5, 10) == doctest::Approx(0.5));
  }

  TEST_CASE("pure data gives a single leaf") {
    auto ds = make_ds({{1}, {2}, {3}}, {1, 1, 1});
    Rng rng(1);
    const auto t = fit_tree(ds, {}, rng);
    REQUIRE(t.nodes().size() == 1);
    CHECK(t.predict_proba(std::vector<double>{0.0}) == 1.0);
    ds.y = {0, 0, 0};
    CHECK(fit_tree(ds, {}, rng).predict_proba(std::vector<double>{5.0}) == 0.0);
  }

  TEST_CASE("separable 1-D data takes one split") {
    const auto ds = make_ds({{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
    Rng rng(1);
    const auto t = fit_tree(ds, TreeParams{12, 1, 0}, rng);
    CHECK(t.nodes().size() == 3);
    CHECK(t.nodes()[0].threshold == 1.5);
    for (std::size_t i = 0; i < 4; ++i) CHECK(t.predict_proba(ds.X.row(i)) == ds.y[i]);
  }

  TEST_CASE("depth-1 split equals exhaustive search on 6-sample fixtures") {
    Rng rng(12345);
    int compared = 0;
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<std::vector<double>> rows;
      std::vector<int> y;
      for (int i = 0; i < 6; ++i) {
        rows.push_back({static_cast<double>(rng() % 4), static_cast<double>(rng() % 4)});
        y.push_back(static_cast<int>(rng() % 2));
      }
      const auto ds = make_ds(rows, y);
      Rng tr(1);
      const auto tree = fit_tree(ds, TreeParams{1, 1, 0}, tr);
      const auto expect = exhaustive_split(ds);
      if (!expect) {
        CHECK(tree.nodes().size() == 1);
        continue;
      }
      REQUIRE(tree.nodes().size() == 3);
      CHECK(tree.nodes()[0].feature == static_cast<int>(expect->feature));
      CHECK(tree.nodes()[0].threshold == expect->threshold);
      ++compared;
    }
    CHECK(compared > 300);
  }

  TEST_CASE("a one-tree forest reproduces its tree") {
    const auto ds = blobs(60, 3, 1.0, 4);
    ForestParams p;
    p.n_trees = 1;
    p.seed = 9;
    const auto f = fit_forest(ds, p);
    for (std::size_t i = 0; i < ds.size(); ++i)
      CHECK(f.predict_proba(ds.X.row(i)) == f.trees()[0].predict_proba(ds.X.row(i)));
  }

  TEST_CASE("forest probability is the per-tree average") {
    const auto ds = blobs(80, 4, 1.0, 5);
    ForestParams p;
    p.n_trees = 10;
    p.seed = 3;
    const auto f = fit_forest(ds, p);
    REQUIRE(f.trees().size() == 10);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      double s = 0;
      for (const auto& t : f.trees()) s += t.predict_proba(ds.X.row(i));
      CHECK(f.predict_proba(ds.X.row(i)) == doctest::Approx(s / 10).epsilon(1e-14));
    }
    p.hard_vote = true;
    const auto h = fit_forest(ds, p);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      double votes = 0;
      for (const auto& t : h.trees()) votes += t.predict_proba(ds.X.row(i)) > 0.5;
      CHECK(h.predict_proba(ds.X.row(i)) == doctest::Approx(votes / 10));
    }
  }

  TEST_CASE("forest fitting is seeded and matches the serial reference") {
    const auto ds = blobs(120, 6, 0.8, 6);
    ForestParams p;
    p.n_trees = 25;
    p.seed = 77;
    const auto a = fit_forest(ds, p);
    CHECK(a == fit_forest(ds, p));
    CHECK(a == fit_forest_serial(ds, p));
    p.seed = 78;
    CHECK_FALSE(a == fit_forest(ds, p));
  }

  TEST_CASE("more trees reduce prediction spread across seeds") {
    const auto ds = blobs(60, 4, 0.6, 7);
    const std::vector<double> probe{0.3, 0.3, 0.3, 0.3};
    auto spread = [&](std::size_t trees) {
      std::vector<double> v;
      for (std::uint64_t s = 0; s < 20; ++s) {
        ForestParams p;
        p.n_trees = trees;
        p.seed = s;
        v.push_back(fit_forest(ds, p).predict_proba(probe));
      }
      return sample_std(v);
    };
    CHECK(spread(100) < spread(5));
  }

  TEST_CASE("logistic gradient matches central differences") {
    Rng rng(10);
    std::normal_distribution<double> nd(0, 1);
    const auto ds = blobs(40, 3, 1.0, 11);
    for (int point = 0; point < 10; ++point) {
      std::vector<double> w(3);
      for (auto& v : w) v = nd(rng);
      const double b = nd(rng);
      const double l2 = 0.1;
      const auto obj = logistic_objective(ds.X, ds.y, w, b, l2);
      const double h = 1e-6;
      for (std::size_t j = 0; j <= w.size(); ++j) {
        auto wp = w, wm = w;
        double bp = b, bm = b;
        if (j < w.size()) {
          wp[j] += h;
          wm[j] -= h;
        } else {
          bp += h;
          bm -= h;
        }
        const double fd = (logistic_objective(ds.X, ds.y, wp, bp, l2).loss -
                           logistic_objective(ds.X, ds.y, wm, bm, l2).loss) /
                          (2 * h);
        const double an = j < w.size() ? obj.grad_w[j] : obj.grad_b;
        CHECK(std::abs(fd - an) <= 1e-5 * std::max(1e-3, std::abs(an)));
      }
    }
  }

  TEST_CASE("logistic regression separates a separable set") {
    const auto ds = make_ds({{0, 0}, {0, 1}, {1, 0}, {3, 3}, {3, 4}, {4, 3}}, {0, 0, 0, 1, 1, 1});
    LogRegParams p;
    p.l2 = 0.1;
    const auto m = fit_logreg(ds, p);
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK((m.predict_proba(ds.X.row(i)) >= 0.5) == (ds.y[i] == 1));
  }

  TEST_CASE("single-class training is rejected") {
    const auto ds = make_ds({{0}, {1}}, {1, 1});
    CHECK_THROWS_AS(fit_logreg(ds), Error);
    CHECK_THROWS_AS(fit_gbt(ds), Error);
    CHECK_THROWS_AS(fit_forest(ds, {}), Error);
  }

  TEST_CASE("zero boosting rounds predict the prior") {
    const auto ds = make_ds({{0}, {1}, {2}, {3}}, {0, 1, 1, 1});
    GbtParams p;
    p.n_rounds = 0;
    const auto m = fit_gbt(ds, p);
    CHECK(m.predict_proba(std::vector<double>{9.0}) == doctest::Approx(0.75));
  }

  TEST_CASE("boosting training loss never increases") {
    const auto ds = blobs(100, 3, 0.7, 13);
    GbtParams p;
    p.n_rounds = 60;
    p.learning_rate = 0.3;
    const auto fit = fit_gbt_traced(ds, p);
    REQUIRE(fit.train_loss.size() == 61);
    for (std::size_t t = 1; t < fit.train_loss.size(); ++t) CHECK(fit.train_loss[t] <= fit.train_loss[t - 1]);
  }

  TEST_CASE("one Newton stump separates threshold data") {
    const auto ds = make_ds({{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
    GbtParams p;
    p.n_rounds = 1;
    p.learning_rate = 1.0;
    p.max_depth = 1;
    const auto m = fit_gbt(ds, p);
    // prior 0.5: residuals +-0.5, hessians 0.25 -> leaf values +-2
    CHECK(m.margin(std::vector<double>{0.0}) == doctest::Approx(-2.0));
    CHECK(m.margin(std::vector<double>{3.0}) == doctest::Approx(2.0));
    for (std::size_t i = 0; i < 4; ++i) CHECK((m.predict_proba(ds.X.row(i)) >= 0.5) == (ds.y[i] == 1));
  }

  TEST_CASE("probabilities stay in [0, 1]") {
    const auto ds = blobs(80, 3, 1.5, 14);
    ForestParams fp;
    fp.n_trees = 10;
    const auto f = fit_forest(ds, fp);
    const auto l = fit_logreg(ds);
    const auto g = fit_gbt(ds);
    Rng rng(15);
    std::normal_distribution<double> nd(0, 100);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> x{nd(rng), nd(rng), nd(rng)};
      for (const Classifier* c : std::initializer_list<const Classifier*>{&f, &l, &g}) {
        const double p = c->predict_proba(x);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
      }
    }
  }

  TEST_CASE("stratified folds") {
    std::vector<int> y(10);
    for (int i = 0; i < 10; ++i) y[i] = i < 5;
    for (const auto& f : stratified_kfold(y, 5, 1)) {
      REQUIRE(f.size() == 2);
      CHECK(y[f[0]] + y[f[1]] == 1);
    }

    std::vector<int> y2(103, 0);
    for (int i = 0; i < 33; ++i) y2[i * 3] = 1;
    const auto folds = stratified_kfold(y2, 5, 7);
    std::vector<int> seen(103, 0);
    for (const auto& f : folds) {
      int pos = 0;
      for (auto i : f) {
        ++seen[i];
        pos += y2[i];
      }
      CHECK(((pos == 6) || (pos == 7)));
      const int neg = static_cast<int>(f.size()) - pos;
      CHECK(neg == 14);
    }
    for (int s : seen) CHECK(s == 1);
    CHECK_THROWS_AS(stratified_kfold(std::vector<int>{1, 1, 0, 0, 0, 0}, 3, 1), Error);
  }

  TEST_CASE("fold balance holds for random label vectors") {
    Rng rng(16);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 20 + rng() % 200;
      const std::size_t k = 2 + rng() % 6;
      std::vector<int> y(n);
      for (auto& v : y) v = static_cast<int>(rng() % 3 == 0);
      const auto npos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
      if (npos < k || n - npos < k) continue;
      for (const auto& f : stratified_kfold(y, k, trial)) {
        const double pos = static_cast<double>(std::count_if(f.begin(), f.end(), [&](auto i) { return y[i] == 1; }));
        CHECK(std::abs(pos - static_cast<double>(npos) / static_cast<double>(k)) < 1.0);
      }
    }
  }

  TEST_CASE("grid search") {
    const auto ds = blobs(100, 3, 1.0, 18);
    const auto single = grid_search(ds, ModelFamily::LogReg, std::vector<HyperParams>{{{"l2", 0.1}}}, 5, 1);
    CHECK(single.best.at("l2") == 0.1);
    REQUIRE(single.table.size() == 1);

    const std::vector<HyperParams> dup{{{"l2", 0.1}}, {{"l2", 0.1}}};
    const auto d = grid_search(ds, ModelFamily::LogReg, dup, 5, 1);
    CHECK(d.table[0].mean_f1 == d.table[1].mean_f1);
    CHECK(d.best_index == 0);

    const auto grid = expand_grid({{"n_trees", {5, 15}}, {"max_depth", {1, 4}}});
    REQUIRE(grid.size() == 4);
    const auto r = grid_search(ds, ModelFamily::Forest, grid, 4, 2);
    // recompute every grid point on the same folds
    const auto folds = stratified_kfold(ds.y, 4, 2);
    double best = -1;
    std::size_t arg = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double sum = 0;
      for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto train = ds.subset(complement(folds[f], ds.size()));
        const auto test = ds.subset(folds[f]);
        const auto m = fit_model(ModelFamily::Forest, train, grid[g], derive_seed(2, {f}));
        std::vector<int> pred;
        for (std::size_t i = 0; i < test.size(); ++i) pred.push_back(m->predict_proba(test.X.row(i)) >= 0.5);
        sum += precision_recall_f1(test.y, pred).f1;
      }
      const double mean = sum / static_cast<double>(folds.size());
      CHECK(r.table[g].mean_f1 == doctest::Approx(mean));
      if (mean > best) {
        best = mean;
        arg = g;
      }
    }
    CHECK(r.best_index == arg);
    CHECK_THROWS_AS(grid_search(ds, ModelFamily::LogReg, std::vector<HyperParams>{}, 5, 1), Error);
  }

  TEST_CASE("model text round-trip is exact") {
    const auto ds = blobs(80, 3, 1.0, 19);
    ForestParams fp;
    fp.n_trees = 7;
    const auto f = fit_forest(ds, fp);
    const auto l = fit_logreg(ds);
    const auto g = fit_gbt(ds);
    for (const Classifier* c : std::initializer_list<const Classifier*>{&f, &l, &g}) {
      std::stringstream buf;
      c->save(buf);
      TokenReader reader(buf);
      const auto back = read_classifier(reader);
      for (std::size_t i = 0; i < ds.size(); ++i)
        CHECK(back->predict_proba(ds.X.row(i)) == c->predict_proba(ds.X.row(i)));
    }
    std::stringstream bad("forest 2 x");
    TokenReader r(bad);
    CHECK_THROWS_AS(read_classifier(r), Error);
  }
}
