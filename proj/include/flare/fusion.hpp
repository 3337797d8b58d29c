#pragma once

// One-vs-rest late-fusion pipeline.
//
// For each target class (cnn, rnn) a flow-view forest and a packet-view
// forest produce P(target | view); the pair is the meta-feature that a
// fusion classifier (logistic regression or boosted trees) maps to the
// final probability. The fusion model is trained on out-of-fold base
// predictions so it never sees base outputs on the base models' own
// training rows.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "flare/features.hpp"
#include "flare/labels.hpp"
#include "flare/learners/forest.hpp"
#include "flare/learners/validation.hpp"
#include "flare/segmentation.hpp"

namespace flare {

enum class FusionKind { MetaLR, MetaXGB };

std::string_view to_string(FusionKind k);
FusionKind parse_fusion_kind(std::string_view s);

struct PipelineConfig {
  WindowConfig window;
  FeatureConfig features;
  ForestParams forest;  // base learners; seed is overridden per unit
  FusionKind fusion = FusionKind::MetaLR;
  /// Grid-search the base forests and the fusion model with stratified CV.
  bool tune_base = false;
  bool tune_fusion = true;
  HyperParams fusion_params;  // used when tune_fusion is off
  std::size_t k_folds = 5;
  double threshold = 0.5;
  std::uint64_t seed = 7;

  void validate() const;
};

struct MetaFeature {
  double p_flow = 0.0;
  double p_pkt = 0.0;
  TargetClass target = TargetClass::Cnn;
};

/// y_i = 1 iff window i's family equals `target`. Throws UnlabeledWindow.
std::vector<int> binarize_labels(std::span<const TrafficWindow> windows, TargetClass target);

/// Per window [h_flow(flow row), h_pkt(packet row)]; DimensionMismatch if a
/// model's width differs from its view.
std::vector<MetaFeature> build_meta_features(const Classifier& h_flow, const Classifier& h_pkt,
                                             const FeatureSet& features, TargetClass target);

Matrix meta_matrix(std::span<const MetaFeature> meta);

/// Mean binary cross-entropy with probabilities clipped to [1e-12, 1 - 1e-12].
double fusion_loss(std::span<const double> predictions, std::span<const int> labels);

/// Trained models for one target class.
struct ClassHead {
  std::unique_ptr<Classifier> h_flow;
  std::unique_ptr<Classifier> h_pkt;
  std::unique_ptr<Classifier> g;

  ClassHead() = default;
  ClassHead(const ClassHead& o);
  ClassHead& operator=(const ClassHead& o);
  ClassHead(ClassHead&&) noexcept = default;
  ClassHead& operator=(ClassHead&&) noexcept = default;
};

enum class Verdict { Cnn, Rnn, Unknown, Conflict };
std::string_view to_string(Verdict v);
/// Combines the two one-vs-rest decisions into a single report verdict.
Verdict combine_verdict(bool cnn_positive, bool rnn_positive);

struct ClassPrediction {
  double p_flow = 0.0;
  double p_pkt = 0.0;
  double fused = 0.0;
  bool positive = false;
};

struct Prediction {
  std::array<ClassPrediction, 2> by_class;  // indexed by TargetClass
  Verdict verdict = Verdict::Unknown;
  const ClassPrediction& at(TargetClass t) const { return by_class[static_cast<std::size_t>(t)]; }
};

class FlarePipeline {
 public:
  FlarePipeline() = default;
  FlarePipeline(PipelineConfig config, std::array<ClassHead, 2> heads)
      : config_(std::move(config)), heads_(std::move(heads)) {}

  const PipelineConfig& config() const { return config_; }
  const ClassHead& head(TargetClass t) const { return heads_[static_cast<std::size_t>(t)]; }
  void set_threshold(double threshold) { config_.threshold = threshold; }

  /// Throws FilteredWindow when no packet exceeds tau.
  Prediction predict(const TrafficWindow& window) const;
  /// Row-wise predictions over precomputed features.
  std::vector<Prediction> predict(const FeatureSet& features) const;

  void save(std::ostream& out) const;
  static FlarePipeline load(std::istream& in);
  void save_file(const std::string& path) const;
  static FlarePipeline load_file(const std::string& path);

 private:
  PipelineConfig config_;
  std::array<ClassHead, 2> heads_;
};

/// Out-of-fold and final cross-validated numbers for one target class.
struct ClassTrainingReport {
  TargetClass target = TargetClass::Cnn;
  std::size_t n_windows = 0;
  std::size_t n_positive = 0;
  double oof_flow_f1 = 0.0;
  double oof_pkt_f1 = 0.0;
  double oof_fusion_f1 = 0.0;
  double oof_fusion_loss = 0.0;
  double train_fusion_loss = 0.0;  // final g on the out-of-fold meta-features
  HyperParams flow_params, pkt_params, fusion_params;
};

struct TrainResult {
  FlarePipeline pipeline;
  std::vector<ClassTrainingReport> report;
};

/// Base-model out-of-fold predictions for `target` (k stratified folds).
Matrix out_of_fold_meta(const FeatureSet& features, std::span<const int> y,
                        const HyperParams& flow_params, const HyperParams& pkt_params,
                        std::size_t k, std::uint64_t seed);

/// Trains on already segmented, filtered and featurized windows.
TrainResult train_flare_windows(std::span<const TrafficWindow> windows,
                                const FeatureSet& features, const PipelineConfig& cfg);

/// Full training path: tau-filter traces, segment, featurize, then
/// train_flare_windows. Throws InsufficientData(target) when a class has
/// fewer positives or negatives than k_folds.
TrainResult train_flare(std::span<const std::shared_ptr<const ClientTrace>> corpus,
                        const PipelineConfig& cfg);

HyperParams forest_hyperparams(const ForestParams& p);

}  // namespace flare
