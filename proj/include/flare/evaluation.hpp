#pragma once

// Closed-world, open-world and window-length evaluation harnesses.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flare/fusion.hpp"
#include "flare/metrics.hpp"

namespace flare {

enum class View { Flow, Packet, Fusion };
inline constexpr View kViews[] = {View::Flow, View::Packet, View::Fusion};
std::string_view to_string(View v);

struct MetricSummary {
  std::vector<double> run_scores;
  double mean = 0.0;
  /// Absent in single-run mode.
  std::optional<double> std_runs;
  std::optional<Interval> ci95;
  /// Mean over runs of the bootstrap std across test windows.
  std::optional<double> std_samples;
};

struct ViewClassMetrics {
  View view = View::Fusion;
  TargetClass target = TargetClass::Cnn;
  MetricSummary precision, recall, f1;
};

struct RunInfo {
  std::uint64_t seed = 0;
  std::size_t train_traces = 0;
  std::size_t test_traces = 0;
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
};

struct MetricsReport {
  std::string setting;  // closed | open
  std::vector<std::string> holdout_models;
  std::vector<RunInfo> runs;
  std::vector<ViewClassMetrics> rows;  // 3 views x 2 targets

  const ViewClassMetrics& at(View v, TargetClass t) const;
};

struct EvalConfig {
  PipelineConfig pipeline;
  /// Share of each model's traces held out for testing.
  double test_fraction = 0.3;
  /// Bootstrap resamples of the test windows per run.
  std::size_t bootstrap = 200;
  /// Strict protocol: exactly five runs.
  bool strict_five_runs = false;

  void validate() const;
};

/// Trace-level split stratified by model name: every model contributes
/// round(test_fraction * n) traces to the test side, clamped to [1, n - 1]
/// when it has at least two traces. Returns (train, test) index lists.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_traces(
    std::span<const std::shared_ptr<const ClientTrace>> corpus, double test_fraction,
    std::uint64_t seed);

/// One run per seed: split, train with pipeline.seed = run seed, score the
/// test windows per view and target.
MetricsReport evaluate_closed_world(std::span<const std::shared_ptr<const ClientTrace>> corpus,
                                    const EvalConfig& cfg, std::span<const std::uint64_t> seeds);

/// As the closed world, but every trace of a held-out model is removed
/// from training and added to each run's test side. Throws
/// UnknownModelName for a holdout name absent from the corpus.
MetricsReport evaluate_open_world(std::span<const std::shared_ptr<const ClientTrace>> corpus,
                                  std::span<const std::string> holdout_models, const EvalConfig& cfg,
                                  std::span<const std::uint64_t> seeds);

struct SweepRow {
  double window_s = 0.0;
  View view = View::Fusion;
  TargetClass target = TargetClass::Cnn;
  MetricSummary f1;
  std::size_t test_windows = 0;  // summed over runs
};

/// Tumbling windows of each length in [60, 900] s (InvalidConfig otherwise),
/// retrained and evaluated closed-world.
std::vector<SweepRow> window_sweep(std::span<const std::shared_ptr<const ClientTrace>> corpus,
                                   std::span<const double> window_lengths, const EvalConfig& cfg,
                                   std::span<const std::uint64_t> seeds);

/// Aggregates per-run scores into mean, std, CI.
MetricSummary summarize(std::vector<double> run_scores, std::vector<double> bootstrap_stds,
                        bool strict_five_runs);

}  // namespace flare
