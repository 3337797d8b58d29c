#include "flare/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "flare/error.hpp"
#include "flare/rng.hpp"

namespace flare {

std::string_view to_string(View v) {
  switch (v) {
    case View::Flow: return "flow";
    case View::Packet: return "packet";
    case View::Fusion: return "fusion";
  }
  return "fusion";
}

const ViewClassMetrics& MetricsReport::at(View v, TargetClass t) const {
  for (const auto& r : rows)
    if (r.view == v && r.target == t) return r;
  throw Error(ErrorKind::InvalidConfig, "report has no row for this view and target");
}

void EvalConfig::validate() const {
  pipeline.validate();
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(ErrorKind::InvalidConfig, "test_fraction must lie in (0, 1)");
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_traces(
    std::span<const std::shared_ptr<const ClientTrace>> corpus, double test_fraction,
    std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_model;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& t = *corpus[i];
    if (!t.label) throw Error(ErrorKind::UnlabeledWindow, "trace " + t.trace_id + " has no label");
    by_model[t.label->model_name].push_back(i);
  }
  std::vector<std::size_t> train, test;
  std::uint64_t group = 0;
  for (auto& [name, members] : by_model) {
    // Order by trace id first so the split ignores corpus order.
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return corpus[a]->trace_id < corpus[b]->trace_id;
    });
    Rng rng(derive_seed(seed, {group++}));
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t n = members.size();
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    if (n >= 2) n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
    else n_test = 0;
    test.insert(test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.insert(train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  return {train, test};
}

MetricSummary summarize(std::vector<double> run_scores, std::vector<double> bootstrap_stds,
                        bool strict_five_runs) {
  MetricSummary s;
  s.mean = mean_of(run_scores);
  if (run_scores.size() > 1) {
    s.std_runs = sample_std(run_scores);
    s.ci95 = ci95(run_scores, strict_five_runs);
    s.std_samples = mean_of(bootstrap_stds);
  } else if (strict_five_runs) {
    ci95(run_scores, true);  // throws WrongRunCount
  }
  s.run_scores = std::move(run_scores);
  return s;
}

namespace {

using TracePtrs = std::vector<std::shared_ptr<const ClientTrace>>;

TracePtrs pick(std::span<const std::shared_ptr<const ClientTrace>> corpus,
               std::vector<std::size_t> idx) {
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return corpus[a]->trace_id < corpus[b]->trace_id;
  });
  TracePtrs out;
  for (auto i : idx) out.push_back(corpus[i]);
  return out;
}

constexpr std::size_t kCells = 6;  // 3 views x 2 targets
std::size_t cell(View v, TargetClass t) {
  return static_cast<std::size_t>(v) * 2 + static_cast<std::size_t>(t);
}

struct RunScores {
  RunInfo info;
  std::array<Prf, kCells> point;
  std::array<std::array<double, 3>, kCells> boot_std{};  // precision, recall, f1
};

int decide(const Prediction& p, View v, TargetClass t, double threshold) {
  const auto& c = p.at(t);
  switch (v) {
    case View::Flow: return c.p_flow >= threshold ? 1 : 0;
    case View::Packet: return c.p_pkt >= threshold ? 1 : 0;
    case View::Fusion: return c.fused >= threshold ? 1 : 0;
  }
  return 0;
}

RunScores run_once(const TracePtrs& train, const TracePtrs& test, const EvalConfig& cfg,
                   std::uint64_t seed) {
  PipelineConfig pc = cfg.pipeline;
  pc.seed = seed;
  const auto train_windows = prepare_windows(train, pc.window);
  const auto trained = train_flare_windows(train_windows, featurize(train_windows, pc.features), pc);

  const auto test_windows = prepare_windows(test, pc.window);
  if (test_windows.empty()) throw Error(ErrorKind::InsufficientData, "no active test windows");
  const auto preds = trained.pipeline.predict(featurize(test_windows, pc.features));

  RunScores rs;
  rs.info = {seed, train.size(), test.size(), train_windows.size(), test_windows.size()};
  const std::size_t n = test_windows.size();
  std::array<std::vector<int>, 2> truth;
  for (TargetClass t : kTargetClasses) truth[static_cast<std::size_t>(t)] = binarize_labels(test_windows, t);
  std::array<std::vector<int>, kCells> decisions;
  for (View v : kViews)
    for (TargetClass t : kTargetClasses) {
      auto& d = decisions[cell(v, t)];
      d.resize(n);
      for (std::size_t i = 0; i < n; ++i) d[i] = decide(preds[i], v, t, pc.threshold);
      rs.point[cell(v, t)] = precision_recall_f1(truth[static_cast<std::size_t>(t)], d);
    }

  if (cfg.bootstrap > 1) {
    std::array<std::array<std::vector<double>, 3>, kCells> samples;
    Rng rng(derive_seed(seed, {0xb007}));
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    std::vector<std::size_t> idx(n);
    std::vector<int> yt(n), yp(n);
    for (std::size_t b = 0; b < cfg.bootstrap; ++b) {
      for (auto& i : idx) i = draw(rng);
      for (View v : kViews)
        for (TargetClass t : kTargetClasses) {
          const auto c = cell(v, t);
          for (std::size_t i = 0; i < n; ++i) {
            yt[i] = truth[static_cast<std::size_t>(t)][idx[i]];
            yp[i] = decisions[c][idx[i]];
          }
          const Prf m = precision_recall_f1(yt, yp);
          samples[c][0].push_back(m.precision);
          samples[c][1].push_back(m.recall);
          samples[c][2].push_back(m.f1);
        }
    }
    for (std::size_t c = 0; c < kCells; ++c)
      for (std::size_t m = 0; m < 3; ++m) rs.boot_std[c][m] = sample_std(samples[c][m]);
  }
  return rs;
}

MetricsReport assemble(std::string setting, const std::vector<RunScores>& runs, bool strict) {
  MetricsReport rep;
  rep.setting = std::move(setting);
  for (const auto& r : runs) rep.runs.push_back(r.info);
  for (View v : kViews)
    for (TargetClass t : kTargetClasses) {
      const auto c = cell(v, t);
      std::array<std::vector<double>, 3> scores, stds;
      for (const auto& r : runs) {
        scores[0].push_back(r.point[c].precision);
        scores[1].push_back(r.point[c].recall);
        scores[2].push_back(r.point[c].f1);
        for (std::size_t m = 0; m < 3; ++m) stds[m].push_back(r.boot_std[c][m]);
      }
      rep.rows.push_back({v, t, summarize(scores[0], stds[0], strict),
                          summarize(scores[1], stds[1], strict), summarize(scores[2], stds[2], strict)});
    }
  return rep;
}

void check_seeds(std::span<const std::uint64_t> seeds, const EvalConfig& cfg) {
  cfg.validate();
  if (seeds.empty()) throw Error(ErrorKind::InvalidConfig, "at least one seed is required");
  if (cfg.strict_five_runs && seeds.size() != 5)
    throw Error(ErrorKind::WrongRunCount, "strict protocol needs exactly 5 runs, got " +
                                              std::to_string(seeds.size()));
}

}  // namespace

MetricsReport evaluate_closed_world(std::span<const std::shared_ptr<const ClientTrace>> corpus,
                                    const EvalConfig& cfg, std::span<const std::uint64_t> seeds) {
  check_seeds(seeds, cfg);
  std::vector<RunScores> runs;
  for (auto seed : seeds) {
    auto [train, test] = split_traces(corpus, cfg.test_fraction, derive_seed(seed, {0x5b1}));
    runs.push_back(run_once(pick(corpus, train), pick(corpus, test), cfg, seed));
  }
  return assemble("closed", runs, cfg.strict_five_runs);
}

MetricsReport evaluate_open_world(std::span<const std::shared_ptr<const ClientTrace>> corpus,
                                  std::span<const std::string> holdout_models, const EvalConfig& cfg,
                                  std::span<const std::uint64_t> seeds) {
  check_seeds(seeds, cfg);
  if (holdout_models.empty()) throw Error(ErrorKind::InvalidConfig, "open world needs a holdout model");
  const std::set<std::string> holdout(holdout_models.begin(), holdout_models.end());
  std::set<std::string> present;
  std::vector<std::size_t> held_idx;
  TracePtrs known;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& t = *corpus[i];
    if (!t.label) throw Error(ErrorKind::UnlabeledWindow, "trace " + t.trace_id + " has no label");
    present.insert(t.label->model_name);
    if (holdout.count(t.label->model_name)) held_idx.push_back(i);
    else known.push_back(corpus[i]);
  }
  for (const auto& name : holdout)
    if (!present.count(name))
      throw Error(ErrorKind::UnknownModelName, "holdout model '" + name + "' is not in the corpus");

  std::vector<RunScores> runs;
  for (auto seed : seeds) {
    auto [train, test] = split_traces(known, cfg.test_fraction, derive_seed(seed, {0x5b1}));
    TracePtrs test_traces = pick(known, test);
    for (auto i : held_idx) test_traces.push_back(corpus[i]);
    std::sort(test_traces.begin(), test_traces.end(),
              [](const auto& a, const auto& b) { return a->trace_id < b->trace_id; });
    runs.push_back(run_once(pick(known, train), test_traces, cfg, seed));
  }
  auto rep = assemble("open", runs, cfg.strict_five_runs);
  rep.holdout_models.assign(holdout.begin(), holdout.end());
  return rep;
}

std::vector<SweepRow> window_sweep(std::span<const std::shared_ptr<const ClientTrace>> corpus,
                                   std::span<const double> window_lengths, const EvalConfig& cfg,
                                   std::span<const std::uint64_t> seeds) {
  if (window_lengths.empty()) throw Error(ErrorKind::InvalidConfig, "no window lengths given");
  for (double len : window_lengths)
    if (!(len >= 60.0 && len <= 900.0))
      throw Error(ErrorKind::InvalidConfig, "window length " + std::to_string(len) +
                                                " s outside [60, 900]");
  std::vector<SweepRow> out;
  for (double len : window_lengths) {
    EvalConfig c = cfg;
    c.pipeline.window = WindowConfig::tumbling(len, cfg.pipeline.window.tau_bytes);
    const auto rep = evaluate_closed_world(corpus, c, seeds);
    std::size_t test_windows = 0;
    for (const auto& r : rep.runs) test_windows += r.test_windows;
    for (const auto& row : rep.rows) out.push_back({len, row.view, row.target, row.f1, test_windows});
  }
  return out;
}

}  // namespace flare
