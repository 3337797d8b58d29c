#include "flare/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "flare/error.hpp"
#include "flare/learners/gbt.hpp"
#include "flare/learners/logreg.hpp"
#include "flare/learners/model_io.hpp"
#include "flare/metrics.hpp"
#include "flare/rng.hpp"

namespace flare {

std::string_view to_string(FusionKind k) { return k == FusionKind::MetaLR ? "MetaLR" : "MetaXGB"; }

FusionKind parse_fusion_kind(std::string_view s) {
  if (s == "MetaLR" || s == "metalr" || s == "logreg") return FusionKind::MetaLR;
  if (s == "MetaXGB" || s == "metaxgb" || s == "gbt") return FusionKind::MetaXGB;
  throw Error(ErrorKind::InvalidConfig, "unknown fusion kind '" + std::string(s) + "'");
}

namespace {

ModelFamily fusion_family(FusionKind k) {
  return k == FusionKind::MetaLR ? ModelFamily::LogReg : ModelFamily::Gbt;
}

std::size_t index_of(TargetClass t) { return static_cast<std::size_t>(t); }

}  // namespace

void PipelineConfig::validate() const {
  window.validate();
  features.validate();
  if (k_folds < 2) throw Error(ErrorKind::InvalidConfig, "k_folds must be at least 2");
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw Error(ErrorKind::InvalidConfig, "threshold must lie in [0, 1]");
  if (forest.n_trees == 0) throw Error(ErrorKind::InvalidConfig, "forest needs at least one tree");
}

HyperParams forest_hyperparams(const ForestParams& p) {
  return {{"n_trees", static_cast<double>(p.n_trees)},
          {"max_depth", static_cast<double>(p.max_depth)},
          {"min_leaf", static_cast<double>(p.min_leaf)},
          {"features_per_split", static_cast<double>(p.features_per_split)},
          {"bootstrap", p.bootstrap ? 1.0 : 0.0},
          {"hard_vote", p.hard_vote ? 1.0 : 0.0}};
}

std::vector<int> binarize_labels(std::span<const TrafficWindow> windows, TargetClass target) {
  std::vector<int> y;
  y.reserve(windows.size());
  for (const auto& w : windows) {
    if (!w.label()) throw Error(ErrorKind::UnlabeledWindow, "window " + w.window_id() + " has no label");
    y.push_back(matches(w.label()->family, target) ? 1 : 0);
  }
  return y;
}

std::vector<MetaFeature> build_meta_features(const Classifier& h_flow, const Classifier& h_pkt,
                                             const FeatureSet& features, TargetClass target) {
  if (h_flow.n_features() != features.flow.cols())
    throw Error(ErrorKind::DimensionMismatch, "flow model expects " +
                                                  std::to_string(h_flow.n_features()) +
                                                  " features, view has " +
                                                  std::to_string(features.flow.cols()));
  if (h_pkt.n_features() != features.pkt.cols())
    throw Error(ErrorKind::DimensionMismatch, "packet model expects " +
                                                  std::to_string(h_pkt.n_features()) +
                                                  " features, view has " +
                                                  std::to_string(features.pkt.cols()));
  if (features.flow.rows() != features.pkt.rows())
    throw Error(ErrorKind::LengthMismatch, "views have different row counts");
  const auto pf = h_flow.predict_proba(features.flow);
  const auto pp = h_pkt.predict_proba(features.pkt);
  std::vector<MetaFeature> out(pf.size());
  for (std::size_t i = 0; i < pf.size(); ++i) out[i] = MetaFeature{pf[i], pp[i], target};
  return out;
}

Matrix meta_matrix(std::span<const MetaFeature> meta) {
  Matrix m(meta.size(), 2);
  for (std::size_t i = 0; i < meta.size(); ++i) {
    m(i, 0) = meta[i].p_flow;
    m(i, 1) = meta[i].p_pkt;
  }
  return m;
}

double fusion_loss(std::span<const double> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw Error(ErrorKind::LengthMismatch, "predictions and labels differ in length");
  if (predictions.empty()) throw Error(ErrorKind::EmptyInput, "fusion_loss of empty input");
  constexpr double lo = 1e-12, hi = 1.0 - 1e-12;
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double p = std::clamp(predictions[i], lo, hi);
    sum += labels[i] ? -std::log(p) : -std::log1p(-p);
  }
  return sum / static_cast<double>(predictions.size());
}

ClassHead::ClassHead(const ClassHead& o)
    : h_flow(o.h_flow ? o.h_flow->clone() : nullptr),
      h_pkt(o.h_pkt ? o.h_pkt->clone() : nullptr),
      g(o.g ? o.g->clone() : nullptr) {}

ClassHead& ClassHead::operator=(const ClassHead& o) {
  if (this != &o) {
    ClassHead copy(o);
    *this = std::move(copy);
  }
  return *this;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Cnn: return "CNN";
    case Verdict::Rnn: return "RNN";
    case Verdict::Unknown: return "Unknown";
    case Verdict::Conflict: return "Conflict";
  }
  return "Unknown";
}

Verdict combine_verdict(bool cnn_positive, bool rnn_positive) {
  if (cnn_positive && rnn_positive) return Verdict::Conflict;
  if (cnn_positive) return Verdict::Cnn;
  if (rnn_positive) return Verdict::Rnn;
  return Verdict::Unknown;
}

namespace {

Prediction assemble(const std::array<ClassHead, 2>& heads, std::span<const double> flow,
                    std::span<const double> pkt, double threshold) {
  Prediction out;
  for (TargetClass t : kTargetClasses) {
    const auto& h = heads[index_of(t)];
    auto& cp = out.by_class[index_of(t)];
    cp.p_flow = h.h_flow->predict_proba(flow);
    cp.p_pkt = h.h_pkt->predict_proba(pkt);
    const double meta[2] = {cp.p_flow, cp.p_pkt};
    cp.fused = h.g->predict_proba(std::span<const double>(meta, 2));
    cp.positive = cp.fused >= threshold;
  }
  out.verdict = combine_verdict(out.by_class[0].positive, out.by_class[1].positive);
  return out;
}

}  // namespace

Prediction FlarePipeline::predict(const TrafficWindow& window) const {
  if (window.empty()) throw Error(ErrorKind::EmptyWindow, "cannot score an empty window");
  if (!is_active(window.packets(), config_.window.tau_bytes))
    throw Error(ErrorKind::FilteredWindow, "no packet in window " + window.window_id() +
                                               " exceeds " +
                                               std::to_string(config_.window.tau_bytes) + " bytes");
  const auto flow = flow_features(window).to_vector();
  const auto pkt = packet_features(window, config_.features).to_vector();
  return assemble(heads_, flow, pkt, config_.threshold);
}

std::vector<Prediction> FlarePipeline::predict(const FeatureSet& features) const {
  for (TargetClass t : kTargetClasses) {
    const auto& h = head(t);
    if (h.h_flow->n_features() != features.flow.cols() || h.h_pkt->n_features() != features.pkt.cols())
      throw Error(ErrorKind::DimensionMismatch, "feature widths do not match the pipeline");
  }
  std::vector<Prediction> out(features.size());
  for (std::size_t i = 0; i < features.size(); ++i)
    out[i] = assemble(heads_, features.flow.row(i), features.pkt.row(i), config_.threshold);
  return out;
}

// Artifact layout (whitespace-separated tokens):
//   flare-pipeline 1
//   config <key> <value> ... end-config
//   head <target> then three classifier records (flow, packet, fusion)
//   end
void FlarePipeline::save(std::ostream& out) const {
  const auto& c = config_;
  out << "flare-pipeline " << kModelFormatVersion << '\n';
  out << "config\n";
  out << "fusion " << to_string(c.fusion) << '\n';
  out << "threshold " << hexfloat(c.threshold) << '\n';
  out << "window_s " << hexfloat(c.window.window_s) << '\n';
  out << "stride_s " << hexfloat(c.window.stride_s) << '\n';
  out << "tau_bytes " << c.window.tau_bytes << '\n';
  out << "hist_bin_width " << c.features.hist_bin_width << '\n';
  out << "hist_bins " << c.features.hist_bins << '\n';
  out << "first_iat_from_window_start " << (c.features.first_iat_from_window_start ? 1 : 0) << '\n';
  out << "k_folds " << c.k_folds << '\n';
  out << "seed " << c.seed << '\n';
  out << "tune_base " << (c.tune_base ? 1 : 0) << '\n';
  out << "tune_fusion " << (c.tune_fusion ? 1 : 0) << '\n';
  for (const auto& [k, v] : forest_hyperparams(c.forest)) out << "forest." << k << ' ' << hexfloat(v) << '\n';
  for (const auto& [k, v] : c.fusion_params) out << "fusion." << k << ' ' << hexfloat(v) << '\n';
  out << "end-config\n";
  for (TargetClass t : kTargetClasses) {
    const auto& h = head(t);
    if (!h.h_flow || !h.h_pkt || !h.g)
      throw Error(ErrorKind::InvalidConfig, "pipeline head " + std::string(to_string(t)) + " incomplete");
    out << "head " << to_string(t) << '\n';
    h.h_flow->save(out);
    h.h_pkt->save(out);
    h.g->save(out);
  }
  out << "end\n";
}

FlarePipeline FlarePipeline::load(std::istream& in) {
  TokenReader r(in);
  r.expect("flare-pipeline");
  if (r.integer() != kModelFormatVersion)
    throw Error(ErrorKind::MalformedModel, "unsupported pipeline format version");
  r.expect("config");
  PipelineConfig c;
  HyperParams forest_hp;
  for (std::string key = r.word(); key != "end-config"; key = r.word()) {
    if (key == "fusion") c.fusion = parse_fusion_kind(r.word());
    else if (key == "threshold") c.threshold = r.real();
    else if (key == "window_s") c.window.window_s = r.real();
    else if (key == "stride_s") c.window.stride_s = r.real();
    else if (key == "tau_bytes") c.window.tau_bytes = static_cast<std::uint32_t>(r.count());
    else if (key == "hist_bin_width") c.features.hist_bin_width = static_cast<std::uint32_t>(r.count());
    else if (key == "hist_bins") c.features.hist_bins = r.count();
    else if (key == "first_iat_from_window_start") c.features.first_iat_from_window_start = r.count() != 0;
    else if (key == "k_folds") c.k_folds = r.count();
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(std::stoull(r.word()));
    else if (key == "tune_base") c.tune_base = r.count() != 0;
    else if (key == "tune_fusion") c.tune_fusion = r.count() != 0;
    else if (key.rfind("forest.", 0) == 0) forest_hp[key.substr(7)] = r.real();
    else if (key.rfind("fusion.", 0) == 0) c.fusion_params[key.substr(7)] = r.real();
    else throw Error(ErrorKind::MalformedModel, "unknown pipeline config key '" + key + "'");
  }
  if (auto it = forest_hp.find("n_trees"); it != forest_hp.end()) c.forest.n_trees = static_cast<std::size_t>(it->second);
  if (auto it = forest_hp.find("max_depth"); it != forest_hp.end()) c.forest.max_depth = static_cast<int>(it->second);
  if (auto it = forest_hp.find("min_leaf"); it != forest_hp.end()) c.forest.min_leaf = static_cast<std::size_t>(it->second);
  if (auto it = forest_hp.find("features_per_split"); it != forest_hp.end())
    c.forest.features_per_split = static_cast<std::size_t>(it->second);
  if (auto it = forest_hp.find("bootstrap"); it != forest_hp.end()) c.forest.bootstrap = it->second != 0.0;
  if (auto it = forest_hp.find("hard_vote"); it != forest_hp.end()) c.forest.hard_vote = it->second != 0.0;

  std::array<ClassHead, 2> heads;
  for (TargetClass expected : kTargetClasses) {
    r.expect("head");
    if (parse_target(r.word()) != expected)
      throw Error(ErrorKind::MalformedModel, "pipeline heads out of order");
    auto& h = heads[index_of(expected)];
    h.h_flow = read_classifier(r);
    h.h_pkt = read_classifier(r);
    h.g = read_classifier(r);
    if (h.h_flow->n_features() != FlowFeatures::kSize || h.h_pkt->n_features() != c.features.packet_dims())
      throw Error(ErrorKind::MalformedModel, "base model width does not match its feature view");
    if (h.g->n_features() != 2)
      throw Error(ErrorKind::MalformedModel, "fusion model must take 2 inputs");
    const bool is_lr = dynamic_cast<const LogisticModel*>(h.g.get()) != nullptr;
    if (is_lr != (c.fusion == FusionKind::MetaLR))
      throw Error(ErrorKind::MalformedModel, "stored fusion model does not match fusion kind");
  }
  r.expect("end");
  return FlarePipeline(std::move(c), std::move(heads));
}

void FlarePipeline::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  save(out);
  if (!out) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

FlarePipeline FlarePipeline::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return load(in);
}

Matrix out_of_fold_meta(const FeatureSet& features, std::span<const int> y,
                        const HyperParams& flow_params, const HyperParams& pkt_params,
                        std::size_t k, std::uint64_t seed) {
  std::vector<int> labels(y.begin(), y.end());
  const Dataset flow{features.flow, labels, {}};
  const Dataset pkt{features.pkt, labels, {}};
  const auto folds = stratified_kfold(labels, k, derive_seed(seed, {0}));
  Matrix meta(labels.size(), 2);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto train = complement(folds[f], labels.size());
    const auto hf = fit_model(ModelFamily::Forest, flow.subset(train), flow_params, derive_seed(seed, {1, f}));
    const auto hp = fit_model(ModelFamily::Forest, pkt.subset(train), pkt_params, derive_seed(seed, {2, f}));
    for (auto i : folds[f]) {
      meta(i, 0) = hf->predict_proba(features.flow.row(i));
      meta(i, 1) = hp->predict_proba(features.pkt.row(i));
    }
  }
  return meta;
}

namespace {

double f1_at(std::span<const double> p, std::span<const int> y, double threshold) {
  std::vector<int> pred(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) pred[i] = p[i] >= threshold ? 1 : 0;
  return precision_recall_f1(y, pred).f1;
}

HyperParams pick_base_params(const Dataset& ds, const PipelineConfig& cfg, std::uint64_t seed) {
  if (!cfg.tune_base) return forest_hyperparams(cfg.forest);
  const auto grid = default_grid(ModelFamily::Forest);
  return grid_search(ds, ModelFamily::Forest, grid, cfg.k_folds, seed).best;
}

}  // namespace

TrainResult train_flare_windows(std::span<const TrafficWindow> windows, const FeatureSet& features,
                                const PipelineConfig& cfg) {
  cfg.validate();
  if (features.size() != windows.size())
    throw Error(ErrorKind::LengthMismatch, "feature rows do not match window count");

  TrainResult result;
  std::array<ClassHead, 2> heads;
  const auto flow_names = FlowFeatures::names();
  const auto pkt_names = PacketFeatures::names(cfg.features);

  for (TargetClass t : kTargetClasses) {
    const auto ti = static_cast<std::uint64_t>(index_of(t));
    const auto y = binarize_labels(windows, t);
    const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    if (pos < cfg.k_folds || y.size() - pos < cfg.k_folds)
      throw Error(ErrorKind::InsufficientData,
                  std::string(to_string(t)) + ": " + std::to_string(pos) + " positive and " +
                      std::to_string(y.size() - pos) + " negative windows, need " +
                      std::to_string(cfg.k_folds) + " of each");

    const Dataset flow{features.flow, y, flow_names};
    const Dataset pkt{features.pkt, y, pkt_names};
    ClassTrainingReport rep;
    rep.target = t;
    rep.n_windows = y.size();
    rep.n_positive = pos;
    rep.flow_params = pick_base_params(flow, cfg, derive_seed(cfg.seed, {ti, 10}));
    rep.pkt_params = pick_base_params(pkt, cfg, derive_seed(cfg.seed, {ti, 11}));

    const Matrix meta = out_of_fold_meta(features, y, rep.flow_params, rep.pkt_params, cfg.k_folds,
                                         derive_seed(cfg.seed, {ti, 20}));
    rep.oof_flow_f1 = f1_at(meta.column(0), y, cfg.threshold);
    rep.oof_pkt_f1 = f1_at(meta.column(1), y, cfg.threshold);

    const Dataset meta_ds{meta, y, {"p_flow", "p_pkt"}};
    const ModelFamily gf = fusion_family(cfg.fusion);
    if (cfg.tune_fusion) {
      const auto grid = default_grid(gf);
      rep.fusion_params = grid_search(meta_ds, gf, grid, cfg.k_folds, derive_seed(cfg.seed, {ti, 30})).best;
    } else {
      rep.fusion_params = cfg.fusion_params;
    }

    // Fusion-level out-of-fold scores over the same meta-features.
    const auto folds = stratified_kfold(y, cfg.k_folds, derive_seed(cfg.seed, {ti, 40}));
    std::vector<double> fused(y.size());
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const auto train = complement(folds[f], y.size());
      const auto g = fit_model(gf, meta_ds.subset(train), rep.fusion_params, derive_seed(cfg.seed, {ti, 41, f}));
      for (auto i : folds[f]) fused[i] = g->predict_proba(meta.row(i));
    }
    rep.oof_fusion_f1 = f1_at(fused, y, cfg.threshold);
    rep.oof_fusion_loss = fusion_loss(fused, y);

    auto& head = heads[index_of(t)];
    head.g = fit_model(gf, meta_ds, rep.fusion_params, derive_seed(cfg.seed, {ti, 50}));
    rep.train_fusion_loss = fusion_loss(head.g->predict_proba(meta), y);
    head.h_flow = fit_model(ModelFamily::Forest, flow, rep.flow_params, derive_seed(cfg.seed, {ti, 51}));
    head.h_pkt = fit_model(ModelFamily::Forest, pkt, rep.pkt_params, derive_seed(cfg.seed, {ti, 52}));
    result.report.push_back(std::move(rep));
  }
  result.pipeline = FlarePipeline(cfg, std::move(heads));
  return result;
}

TrainResult train_flare(std::span<const std::shared_ptr<const ClientTrace>> corpus,
                        const PipelineConfig& cfg) {
  cfg.validate();
  const auto windows = prepare_windows(corpus, cfg.window);
  const auto features = featurize(windows, cfg.features);
  return train_flare_windows(windows, features, cfg);
}

}  // namespace flare
