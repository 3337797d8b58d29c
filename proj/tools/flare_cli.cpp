// flare: command-line driver for the fingerprinting toolkit.
//
// Reports are CSV files that open with `# key=value` provenance lines
// (the resolved configuration, never a timestamp) followed by a header
// row. Record streams are JSON lines. On success each command prints one
// JSON line on stdout listing its outputs with their FNV-1a hashes; on
// failure it prints a JSON error record on stderr and exits nonzero.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "flare/analysis.hpp"
#include "flare/error.hpp"
#include "flare/evaluation.hpp"
#include "flare/features.hpp"
#include "flare/flsim.hpp"
#include "flare/fusion.hpp"
#include "flare/hash.hpp"
#include "flare/ingest.hpp"
#include "flare/rng.hpp"
#include "flare/scenario.hpp"
#include "flare/segmentation.hpp"
#include "flare/throttle.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace flare;

namespace {

using Provenance = std::vector<std::pair<std::string, std::string>>;
using Traces = std::vector<std::shared_ptr<const ClientTrace>>;

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& items, const char* sep = ",") {
  std::ostringstream out;
  for (std::size_t i = 0; i < items.size(); ++i) out << (i ? sep : "") << items[i];
  return out.str();
}

std::string join_num(const std::vector<double>& v, const char* sep = ";") {
  std::string r;
  for (std::size_t i = 0; i < v.size(); ++i) r += (i ? sep : "") + num(v[i]);
  return r;
}

// ---------------------------------------------------------------- outputs

struct Output {
  std::string path;
  std::string hash;
};

class Outputs {
 public:
  void add(const std::string& path, const std::string& content) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    f << content;
    if (!f) throw Error(ErrorKind::Io, "write failed for '" + path + "'");
    list_.push_back({path, fnv1a_hex(content)});
  }
  void add_existing(const std::string& path, const std::string& hash) { list_.push_back({path, hash}); }

  void announce(const std::string& command) const {
    json j;
    j["command"] = command;
    j["outputs"] = json::array();
    for (const auto& o : list_) j["outputs"].push_back({{"path", o.path}, {"fnv1a", o.hash}});
    std::cout << j.dump() << '\n';
  }

 private:
  std::vector<Output> list_;
};

class CsvReport {
 public:
  CsvReport(const Provenance& prov, const std::vector<std::string>& header) {
    for (const auto& [k, v] : prov) out_ << "# " << k << '=' << v << '\n';
    out_ << join(header) << '\n';
  }
  void row(const std::vector<std::string>& cells) { out_ << join(cells) << '\n'; }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

std::string in_dir(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// ---------------------------------------------------------------- config

struct ExperimentConfig {
  std::string corpus_dir;
  std::vector<std::string> trace_files;
  std::string out;
  std::string model_path;
  PipelineConfig pipeline;
  std::string fusion = "MetaLR";
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> holdout{"densenet", "autoencoder"};
  double test_fraction = 0.3;
  std::size_t bootstrap = 200;
  bool strict_five_runs = false;
};

void add_input_opts(CLI::App* cmd, ExperimentConfig& cfg, bool allow_traces) {
  auto* c = cmd->add_option("--corpus", cfg.corpus_dir, "Corpus directory (manifest.csv + traces/)")
                ->check(CLI::ExistingDirectory);
  if (allow_traces) {
    auto* t = cmd->add_option("--trace", cfg.trace_files, "Trace file(s) in the canonical format")
                  ->check(CLI::ExistingFile);
    c->excludes(t);
  } else {
    c->required();
  }
}

void add_window_opts(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--window-s", cfg.pipeline.window.window_s, "Window length in seconds")
      ->capture_default_str();
  cmd->add_option("--stride-s", cfg.pipeline.window.stride_s, "Window stride in seconds (default: window)");
  cmd->add_option("--tau-bytes", cfg.pipeline.window.tau_bytes, "Activity filter threshold")
      ->capture_default_str();
  cmd->add_option("--hist-bin-width", cfg.pipeline.features.hist_bin_width)->capture_default_str();
  cmd->add_option("--hist-bins", cfg.pipeline.features.hist_bins)->capture_default_str();
}

void add_pipeline_opts(CLI::App* cmd, ExperimentConfig& cfg) {
  add_window_opts(cmd, cfg);
  cmd->add_option("--fusion", cfg.fusion, "Fusion classifier")
      ->check(CLI::IsMember({"MetaLR", "MetaXGB"}))
      ->capture_default_str();
  cmd->add_option("--trees", cfg.pipeline.forest.n_trees, "Trees per base forest")->capture_default_str();
  cmd->add_option("--max-depth", cfg.pipeline.forest.max_depth)->capture_default_str();
  cmd->add_option("--min-leaf", cfg.pipeline.forest.min_leaf)->capture_default_str();
  cmd->add_flag("--tune-base", cfg.pipeline.tune_base, "Grid-search the base forests");
  cmd->add_flag("!--no-tune-fusion", cfg.pipeline.tune_fusion, "Use fixed fusion hyperparameters");
  cmd->add_option("--k-folds", cfg.pipeline.k_folds)->capture_default_str();
  cmd->add_option("--threshold", cfg.pipeline.threshold)->capture_default_str();
  cmd->add_option("--seed", cfg.pipeline.seed, "Training seed")->capture_default_str();
}

void add_eval_opts(CLI::App* cmd, ExperimentConfig& cfg) {
  add_pipeline_opts(cmd, cfg);
  cmd->add_option("--seeds", cfg.seeds, "Run seeds")->delimiter(',')->capture_default_str();
  cmd->add_option("--test-fraction", cfg.test_fraction)->capture_default_str();
  cmd->add_option("--bootstrap", cfg.bootstrap, "Bootstrap resamples per run")->capture_default_str();
  cmd->add_flag("--strict-five-runs", cfg.strict_five_runs, "Require exactly five seeds");
}

// Called after parsing: fill in dependent defaults and validate.
void resolve(ExperimentConfig& cfg, bool stride_given) {
  if (!stride_given) cfg.pipeline.window.stride_s = cfg.pipeline.window.window_s;
  cfg.pipeline.fusion = parse_fusion_kind(cfg.fusion);
  cfg.pipeline.validate();
}

Provenance window_provenance(const PipelineConfig& p) {
  return {{"window_s", num(p.window.window_s)},
          {"stride_s", num(p.window.stride_s)},
          {"tau_bytes", std::to_string(p.window.tau_bytes)},
          {"hist_bin_width", std::to_string(p.features.hist_bin_width)},
          {"hist_bins", std::to_string(p.features.hist_bins)}};
}

Provenance pipeline_provenance(const PipelineConfig& p) {
  auto prov = window_provenance(p);
  prov.insert(prov.end(), {{"fusion", std::string(to_string(p.fusion))},
                           {"trees", std::to_string(p.forest.n_trees)},
                           {"max_depth", std::to_string(p.forest.max_depth)},
                           {"min_leaf", std::to_string(p.forest.min_leaf)},
                           {"tune_base", p.tune_base ? "1" : "0"},
                           {"tune_fusion", p.tune_fusion ? "1" : "0"},
                           {"k_folds", std::to_string(p.k_folds)},
                           {"threshold", num(p.threshold)},
                           {"seed", std::to_string(p.seed)}});
  return prov;
}

Provenance eval_provenance(const ExperimentConfig& cfg) {
  auto prov = pipeline_provenance(cfg.pipeline);
  prov.insert(prov.end(), {{"seeds", join(cfg.seeds)},
                           {"test_fraction", num(cfg.test_fraction)},
                           {"bootstrap", std::to_string(cfg.bootstrap)},
                           {"strict_five_runs", cfg.strict_five_runs ? "1" : "0"}});
  return prov;
}

EvalConfig eval_config(const ExperimentConfig& cfg) {
  EvalConfig ec;
  ec.pipeline = cfg.pipeline;
  ec.test_fraction = cfg.test_fraction;
  ec.bootstrap = cfg.bootstrap;
  ec.strict_five_runs = cfg.strict_five_runs;
  ec.validate();
  return ec;
}

// Loads the requested traces and records where they came from.
Traces load_inputs(const ExperimentConfig& cfg, Provenance& prov) {
  Traces traces;
  if (!cfg.corpus_dir.empty()) {
    traces = read_corpus(cfg.corpus_dir);
    Fnv1a h;
    std::ifstream m(in_dir(cfg.corpus_dir, "manifest.csv"), std::ios::binary);
    std::stringstream buf;
    buf << m.rdbuf();
    h.update(buf.str());
    prov.insert(prov.begin(), {"corpus_manifest_fnv1a", h.hex()});
  } else if (!cfg.trace_files.empty()) {
    Fnv1a h;
    for (const auto& f : cfg.trace_files) {
      auto t = std::make_shared<ClientTrace>(load_trace(f));
      h.update(trace_content_hash(*t));
      traces.push_back(std::move(t));
    }
    prov.insert(prov.begin(), {"traces_fnv1a", h.hex()});
  } else {
    throw Error(ErrorKind::InvalidConfig, "one of --corpus or --trace is required");
  }
  std::cerr << "loaded " << traces.size() << " traces\n";
  return traces;
}

std::string label_family(const ClientTrace& t) {
  return t.label ? std::string(to_string(t.label->family)) : "";
}
std::string label_model(const ClientTrace& t) { return t.label ? t.label->model_name : ""; }

json class_json(const ClassPrediction& c) {
  return {{"p_flow", c.p_flow}, {"p_pkt", c.p_pkt}, {"fused", c.fused}, {"positive", c.positive}};
}

// ---------------------------------------------------------------- commands

struct SimulateArgs {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> traces_per_spec;
  std::optional<double> duration_s;
  bool dump = false;
};

void cmd_simulate(const SimulateArgs& a) {
  Scenario s = a.scenario.empty() ? default_scenario() : load_scenario(a.scenario);
  if (a.seed) s.seed = *a.seed;
  if (a.traces_per_spec) s.traces_per_spec = *a.traces_per_spec;
  if (a.duration_s) s.duration_s = *a.duration_s;
  s.validate();
  if (a.dump) {
    write_scenario(std::cout, s);
    return;
  }
  if (a.out.empty()) throw Error(ErrorKind::InvalidConfig, "--out is required");

  std::cerr << "simulating " << s.models.size() * s.clients.size() * s.traces_per_spec << " sessions\n";
  const Corpus corpus = make_corpus(s.templates(), s.traces_per_spec, s.seed);
  const Provenance prov{{"scenario_fnv1a", scenario_hash(s)},
                        {"seed", std::to_string(s.seed)},
                        {"traces_per_spec", std::to_string(s.traces_per_spec)},
                        {"duration_s", num(s.duration_s)}};
  const Manifest m = write_corpus(corpus, a.out, prov);
  Outputs outs;
  std::ostringstream ini;
  write_scenario(ini, s);
  outs.add(in_dir(a.out, "scenario.ini"), ini.str());
  outs.add_existing(in_dir(a.out, "manifest.csv"), m.hash);
  outs.announce("simulate");
}

struct IngestArgs {
  std::string capture, ap, client, out, trace_id, model, dataset, client_profile, aggregation;
};

void cmd_ingest(const IngestArgs& a) {
  const auto ap = StationId::parse(a.ap);
  const auto client = StationId::parse(a.client);
  if (!ap) throw Error(ErrorKind::MalformedStation, "bad --ap '" + a.ap + "'");
  if (!client) throw Error(ErrorKind::MalformedStation, "bad --client '" + a.client + "'");
  std::ifstream in(a.capture);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + a.capture + "'");
  ClientTrace t = extract_client_trace(parse_capture_csv(in), *ap, *client);
  t.trace_id = a.trace_id.empty() ? fs::path(a.capture).stem().string() : a.trace_id;
  if (!a.model.empty()) {
    ArchLabel l = make_label(a.model, a.dataset);
    l.client_profile = a.client_profile;
    l.aggregation = a.aggregation;
    t.label = l;
  }
  const auto counts = direction_counts(t.packets);
  std::cerr << t.packets.size() << " packets (" << counts.uplink << " up, " << counts.downlink
            << " down)\n";
  std::ostringstream body;
  write_trace(body, t);
  Outputs outs;
  outs.add(a.out, body.str());
  outs.announce("ingest");
}

void cmd_segment(const ExperimentConfig& cfg) {
  Provenance prov = window_provenance(cfg.pipeline);
  const Traces traces = load_inputs(cfg, prov);
  CsvReport csv(prov, {"window_id", "trace_id", "start_s", "duration_s", "packets", "uplink", "downlink",
                       "active"});
  std::size_t total = 0, active = 0;
  for (const auto& t : traces) {
    for (const auto& w : segment(t, cfg.pipeline.window)) {
      const auto c = direction_counts(w.packets());
      const bool a = is_active(w.packets(), cfg.pipeline.window.tau_bytes);
      csv.row({w.window_id(), t->trace_id, num(w.start_s()), num(w.duration_s()), std::to_string(w.size()),
               std::to_string(c.uplink), std::to_string(c.downlink), a ? "1" : "0"});
      ++total;
      active += a;
    }
  }
  std::cerr << total << " windows, " << active << " active\n";
  Outputs outs;
  outs.add(cfg.out, csv.str());
  outs.announce("segment");
}

void cmd_featurize(const ExperimentConfig& cfg) {
  Provenance prov = window_provenance(cfg.pipeline);
  const Traces traces = load_inputs(cfg, prov);
  const auto windows = prepare_windows(traces, cfg.pipeline.window);
  const FeatureSet fs = featurize(windows, cfg.pipeline.features);

  std::vector<std::string> header{"window_id", "trace_id", "family", "model_name"};
  for (auto& n : FlowFeatures::names()) header.push_back("flow_" + n);
  for (auto& n : PacketFeatures::names(cfg.pipeline.features)) header.push_back("pkt_" + n);
  CsvReport csv(prov, header);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    std::vector<std::string> row{w.window_id(), w.parent().trace_id, label_family(w.parent()),
                                 label_model(w.parent())};
    for (double v : fs.flow.row(i)) row.push_back(num(v));
    for (double v : fs.pkt.row(i)) row.push_back(num(v));
    csv.row(row);
  }
  std::cerr << windows.size() << " active windows featurized\n";
  Outputs outs;
  outs.add(cfg.out, csv.str());
  outs.announce("featurize");
}

void cmd_train(const ExperimentConfig& cfg) {
  Provenance prov = pipeline_provenance(cfg.pipeline);
  const Traces traces = load_inputs(cfg, prov);
  const TrainResult r = train_flare(traces, cfg.pipeline);

  CsvReport csv(prov, {"target", "windows", "positives", "oof_flow_f1", "oof_pkt_f1", "oof_fusion_f1",
                       "oof_fusion_loss", "train_fusion_loss", "flow_params", "pkt_params",
                       "fusion_params"});
  for (const auto& c : r.report)
    csv.row({std::string(to_string(c.target)), std::to_string(c.n_windows), std::to_string(c.n_positive),
             num(c.oof_flow_f1), num(c.oof_pkt_f1), num(c.oof_fusion_f1), num(c.oof_fusion_loss),
             num(c.train_fusion_loss), describe(c.flow_params), describe(c.pkt_params),
             describe(c.fusion_params)});
  std::ostringstream model;
  r.pipeline.save(model);
  Outputs outs;
  outs.add(in_dir(cfg.out, "pipeline.flare"), model.str());
  outs.add(in_dir(cfg.out, "train_report.csv"), csv.str());
  outs.announce("train");
}

void cmd_predict(ExperimentConfig cfg, std::optional<double> threshold) {
  FlarePipeline pipe = FlarePipeline::load_file(cfg.model_path);
  if (threshold) pipe.set_threshold(*threshold);
  Provenance prov = pipeline_provenance(pipe.config());
  prov.insert(prov.begin(), {"pipeline", cfg.model_path});
  const Traces traces = load_inputs(cfg, prov);

  std::ostringstream out;
  std::size_t scored = 0, filtered = 0;
  for (const auto& t : traces) {
    for (const auto& w : segment(t, pipe.config().window)) {
      if (!is_active(w.packets(), pipe.config().window.tau_bytes)) {
        ++filtered;
        continue;
      }
      const Prediction p = pipe.predict(w);
      json j;
      j["window_id"] = w.window_id();
      j["trace_id"] = t->trace_id;
      j["start_s"] = w.start_s();
      j["cnn"] = class_json(p.at(TargetClass::Cnn));
      j["rnn"] = class_json(p.at(TargetClass::Rnn));
      j["verdict"] = std::string(to_string(p.verdict));
      if (t->label) j["label_family"] = std::string(to_string(t->label->family));
      out << j.dump() << '\n';
      ++scored;
    }
  }
  if (scored == 0)
    throw Error(ErrorKind::FilteredWindow, "no window has a packet above tau=" +
                                               std::to_string(pipe.config().window.tau_bytes) + " bytes");
  std::cerr << scored << " windows scored, " << filtered << " filtered\n";
  json head;
  for (const auto& [k, v] : prov) head["provenance"][k] = v;
  Outputs outs;
  outs.add(cfg.out, head.dump() + "\n" + out.str());
  outs.announce("predict");
}

const char* kMetricNames[] = {"precision", "recall", "f1"};

void write_metrics(const MetricsReport& rep, const Provenance& prov, const std::string& dir,
                   Outputs& outs) {
  std::vector<std::string> header{"setting", "view", "target", "metric", "mean", "std_samples",
                                  "std_runs", "ci95_half", "ci95_low", "ci95_high", "run_scores"};
  CsvReport csv(prov, header);
  std::ostringstream jl;
  for (const auto& row : rep.rows) {
    const MetricSummary* ms[] = {&row.precision, &row.recall, &row.f1};
    for (int k = 0; k < 3; ++k) {
      const auto& m = *ms[k];
      auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
      csv.row({rep.setting, std::string(to_string(row.view)), std::string(to_string(row.target)),
               kMetricNames[k], num(m.mean), opt(m.std_samples), opt(m.std_runs),
               m.ci95 ? num(m.ci95->half_width) : "", m.ci95 ? num(m.ci95->low()) : "",
               m.ci95 ? num(m.ci95->high()) : "", join_num(m.run_scores)});
      for (std::size_t r = 0; r < m.run_scores.size(); ++r)
        jl << json{{"setting", rep.setting},
                   {"view", to_string(row.view)},
                   {"target", to_string(row.target)},
                   {"metric", kMetricNames[k]},
                   {"seed", rep.runs[r].seed},
                   {"value", m.run_scores[r]}}
                  .dump()
           << '\n';
    }
  }
  CsvReport runs(prov, {"seed", "train_traces", "test_traces", "train_windows", "test_windows"});
  for (const auto& r : rep.runs)
    runs.row({std::to_string(r.seed), std::to_string(r.train_traces), std::to_string(r.test_traces),
              std::to_string(r.train_windows), std::to_string(r.test_windows)});
  outs.add(in_dir(dir, "metrics.csv"), csv.str());
  outs.add(in_dir(dir, "metrics.jsonl"), jl.str());
  outs.add(in_dir(dir, "runs.csv"), runs.str());
}

void cmd_eval(const ExperimentConfig& cfg, bool open) {
  Provenance prov = eval_provenance(cfg);
  if (open) prov.push_back({"holdout", join(cfg.holdout)});
  const Traces traces = load_inputs(cfg, prov);
  const EvalConfig ec = eval_config(cfg);
  const MetricsReport rep = open ? evaluate_open_world(traces, cfg.holdout, ec, cfg.seeds)
                                 : evaluate_closed_world(traces, ec, cfg.seeds);
  Outputs outs;
  write_metrics(rep, prov, cfg.out, outs);
  outs.announce(open ? "eval-open" : "eval-closed");
}

void cmd_sweep(const ExperimentConfig& cfg, const std::vector<double>& lengths) {
  Provenance prov = eval_provenance(cfg);
  prov.push_back({"windows", join_num(lengths, ",")});
  const Traces traces = load_inputs(cfg, prov);
  const auto rows = window_sweep(traces, lengths, eval_config(cfg), cfg.seeds);
  CsvReport csv(prov, {"window_s", "view", "target", "f1_mean", "f1_std_samples", "f1_std_runs",
                       "ci95_half", "test_windows", "run_scores"});
  std::ostringstream jl;
  for (const auto& r : rows) {
    auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
    csv.row({num(r.window_s), std::string(to_string(r.view)), std::string(to_string(r.target)),
             num(r.f1.mean), opt(r.f1.std_samples), opt(r.f1.std_runs),
             r.f1.ci95 ? num(r.f1.ci95->half_width) : "", std::to_string(r.test_windows),
             join_num(r.f1.run_scores)});
    jl << json{{"window_s", r.window_s},
               {"view", to_string(r.view)},
               {"target", to_string(r.target)},
               {"f1", r.f1.mean}}
              .dump()
       << '\n';
  }
  Outputs outs;
  outs.add(in_dir(cfg.out, "sweep.csv"), csv.str());
  outs.add(in_dir(cfg.out, "sweep.jsonl"), jl.str());
  outs.announce("sweep");
}

void cmd_analyze(const ExperimentConfig& cfg, const KlConfig& kl) {
  Provenance prov = window_provenance(cfg.pipeline);
  prov.insert(prov.end(), {{"kl_bins", std::to_string(kl.bins)},
                           {"kl_epsilon", num(kl.epsilon)},
                           {"kl_slice_s", num(kl.slice_s)},
                           {"kl_tau_bytes", std::to_string(kl.tau_bytes)}});
  const Traces traces = load_inputs(cfg, prov);
  Outputs outs;

  const KlReport rep = kl_report(traces, kl);
  CsvReport kcsv(prov, {"client", "reference", "feature", "p_traces", "q_traces", "kl_mean", "kl_std",
                        "scores"});
  for (const auto& r : rep.rows)
    kcsv.row({r.client, std::string(to_string(r.reference)), std::string(to_string(r.feature)),
              std::to_string(r.p_traces), std::to_string(r.q_traces), num(r.stats.mean), num(r.stats.std),
              join_num(r.stats.scores)});
  outs.add(in_dir(cfg.out, "kl.csv"), kcsv.str());

  const auto windows = prepare_windows(traces, cfg.pipeline.window);
  const FeatureSet fs = featurize(windows, cfg.pipeline.features);
  CsvReport fcsv(prov, {"view", "target", "rank", "feature", "score", "separating"});
  const std::vector<std::string> names[] = {FlowFeatures::names(),
                                            PacketFeatures::names(cfg.pipeline.features)};
  for (TargetClass t : kTargetClasses) {
    const auto y = binarize_labels(windows, t);
    const Matrix* views[] = {&fs.flow, &fs.pkt};
    for (int v = 0; v < 2; ++v) {
      const auto scores = fisher_score(*views[v], y);
      const auto order = rank_features(scores);
      for (std::size_t r = 0; r < order.size(); ++r)
        fcsv.row({v == 0 ? "flow" : "packet", std::string(to_string(t)), std::to_string(r + 1),
                  names[v][order[r]], num(scores[order[r]]), perfectly_separating(scores[order[r]]) ? "1" : "0"});
    }
  }
  outs.add(in_dir(cfg.out, "fisher.csv"), fcsv.str());

  CsvReport scsv(prov, {"trace_id", "family", "model_name", "mean_uplink_burst_bytes"});
  for (const auto& t : traces)
    scsv.row({t->trace_id, label_family(*t), label_model(*t), num(mean_uplink_burst_bytes(*t))});
  outs.add(in_dir(cfg.out, "signatures.csv"), scsv.str());
  outs.announce("analyze");
}

struct AttackArgs {
  std::string scenario;
  std::string model;
  std::vector<std::string> clients;
  std::vector<std::size_t> attacked{2};
  double denial = 2.0 / 3.0;
  std::string mode = "both";
  std::string schedule = "continuous";
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out;
};

template <typename T>
const T& find_named(const std::vector<T>& items, const std::string& name, const char* what) {
  for (const auto& i : items)
    if (i.name == name) return i;
  throw Error(ErrorKind::InvalidConfig, std::string("unknown ") + what + " '" + name + "'");
}

void cmd_attack(const AttackArgs& a) {
  const Scenario s = a.scenario.empty() ? default_scenario() : load_scenario(a.scenario);
  const ModelProfile& victim = find_named(s.models, a.model, "model");
  std::vector<ClientProfile> clients;
  if (a.clients.empty())
    clients = s.clients;
  else
    for (const auto& c : a.clients) clients.push_back(find_named(s.clients, c, "client"));

  std::vector<SyncMode> modes;
  if (a.mode == "both")
    modes = {SyncMode::Sync, SyncMode::Async};
  else
    modes = {parse_sync_mode(a.mode)};

  // Schedules are tuned against the first attacked client.
  if (a.attacked.empty()) throw Error(ErrorKind::InvalidSpec, "--attacked lists no client");
  for (auto k : a.attacked)
    if (k >= clients.size()) throw Error(ErrorKind::InvalidSpec, "attacked client index out of range");
  const ClientProfile& target = clients[a.attacked.front()];
  ThrottleSchedule schedule;
  if (a.schedule == "continuous")
    schedule = ThrottleSchedule::continuous();
  else if (a.schedule == "matched")
    schedule = ThrottleSchedule::tuned_for(victim, target, s.link, a.denial);
  else
    schedule = ThrottleSchedule::tuned_for(find_named(s.models, a.schedule, "model"), target, s.link, a.denial);

  std::vector<std::string> client_names;
  for (const auto& c : clients) client_names.push_back(c.name);
  const Provenance prov{{"scenario_fnv1a", scenario_hash(s)},
                        {"model", a.model},
                        {"clients", join(client_names)},
                        {"attacked", join(a.attacked)},
                        {"denial", num(a.denial)},
                        {"mode", a.mode},
                        {"schedule", a.schedule},
                        {"seeds", join(a.seeds)}};
  CsvReport csv(prov, {"seed", "mode", "baseline_s", "attacked_s", "relative_delay", "rounds", "updates",
                       "cost", "throttled_fraction", "delay_per_cost"});
  for (SyncMode mode : modes)
    for (auto seed : a.seeds) {
      std::vector<SessionSpec> fed;
      for (std::size_t k = 0; k < clients.size(); ++k) {
        SessionSpec sp;
        sp.model = victim;
        sp.client = clients[k];
        sp.link = s.link;
        sp.aggregation = s.aggregation.value_or(Aggregation::FedAvg);
        sp.sync_mode = mode;
        sp.seed = derive_seed(seed, {k});
        fed.push_back(sp);
      }
      const auto base = emulate_throttle(fed, {}, 0.0, mode);
      const auto hit = emulate_throttle(fed, a.attacked, a.denial, mode, schedule);
      const double rel = (hit.time_s - base.time_s) / base.time_s;
      csv.row({std::to_string(seed), std::string(to_string(mode)), num(base.time_s), num(hit.time_s), num(rel),
               num(hit.rounds), std::to_string(hit.updates), num(hit.cost), num(hit.throttled_fraction),
               num(hit.cost > 0 ? rel / hit.cost : 0.0)});
    }
  Outputs outs;
  outs.add(a.out, csv.str());
  outs.announce("attack-sim");
}

void print_error(const std::string& kind, const std::string& message, std::optional<std::size_t> line) {
  json j{{"error", kind}, {"message", message}};
  if (line) j["line"] = *line;
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Architecture fingerprinting of federated-learning clients from traffic metadata"};
  app.set_config("--config", "", "INI/TOML file with option values; flags override it");
  app.require_subcommand(1);

  ExperimentConfig cfg;

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic labeled corpus");
  simulate->add_option("--scenario", sim.scenario, "Scenario INI file (default profiles if omitted)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Output corpus directory");
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("--traces-per-spec", sim.traces_per_spec);
  simulate->add_option("--duration-s", sim.duration_s);
  simulate->add_flag("--dump-scenario", sim.dump, "Print the resolved scenario and exit");

  IngestArgs ing;
  auto* ingest = app.add_subcommand("ingest", "Extract one client's trace from a capture CSV");
  ingest->add_option("--capture", ing.capture, "timestamp,size,src_mac,dst_mac CSV")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--ap", ing.ap, "Access point MAC")->required();
  ingest->add_option("--client", ing.client, "Client station MAC")->required();
  ingest->add_option("--out", ing.out, "Trace file to write")->required();
  ingest->add_option("--trace-id", ing.trace_id);
  ingest->add_option("--model", ing.model, "Ground-truth model name (labels the trace)");
  ingest->add_option("--dataset", ing.dataset);
  ingest->add_option("--client-profile", ing.client_profile);
  ingest->add_option("--aggregation", ing.aggregation);

  auto* seg = app.add_subcommand("segment", "List observation windows");
  add_input_opts(seg, cfg, true);
  add_window_opts(seg, cfg);
  seg->add_option("--out", cfg.out, "CSV to write")->required();

  auto* feat = app.add_subcommand("featurize", "Flow and packet feature vectors per active window");
  add_input_opts(feat, cfg, true);
  add_window_opts(feat, cfg);
  feat->add_option("--out", cfg.out, "CSV to write")->required();

  auto* train = app.add_subcommand("train", "Train the fusion pipeline");
  add_input_opts(train, cfg, false);
  add_pipeline_opts(train, cfg);
  train->add_option("--out", cfg.out, "Output directory")->required();

  std::optional<double> predict_threshold;
  auto* predict = app.add_subcommand("predict", "Score windows with a trained pipeline");
  predict->add_option("--model", cfg.model_path, "pipeline.flare")->required()->check(CLI::ExistingFile);
  add_input_opts(predict, cfg, true);
  predict->add_option("--threshold", predict_threshold, "Override the stored decision threshold");
  predict->add_option("--out", cfg.out, "JSONL to write")->required();

  auto* closed = app.add_subcommand("eval-closed", "Closed-world multi-run evaluation");
  add_input_opts(closed, cfg, false);
  add_eval_opts(closed, cfg);
  closed->add_option("--out", cfg.out, "Output directory")->required();

  auto* open = app.add_subcommand("eval-open", "Open-world evaluation with held-out models");
  add_input_opts(open, cfg, false);
  add_eval_opts(open, cfg);
  open->add_option("--holdout", cfg.holdout, "Model names withheld from training")
      ->delimiter(',')
      ->capture_default_str();
  open->add_option("--out", cfg.out, "Output directory")->required();

  std::vector<double> lengths{60, 120, 180, 240, 300, 420, 600, 900};
  auto* sweep = app.add_subcommand("sweep", "Window-length sweep");
  add_input_opts(sweep, cfg, false);
  add_eval_opts(sweep, cfg);
  sweep->add_option("--windows", lengths, "Window lengths in seconds")->delimiter(',')->capture_default_str();
  sweep->add_option("--out", cfg.out, "Output directory")->required();

  KlConfig kl;
  auto* analyze = app.add_subcommand("analyze", "KL divergence table, Fisher ranking, signatures");
  add_input_opts(analyze, cfg, false);
  add_window_opts(analyze, cfg);
  analyze->add_option("--bins", kl.bins)->capture_default_str();
  analyze->add_option("--epsilon", kl.epsilon)->capture_default_str();
  analyze->add_option("--slice-s", kl.slice_s, "KL sample slice length")->capture_default_str();
  analyze->add_option("--kl-tau-bytes", kl.tau_bytes)->capture_default_str();
  analyze->add_option("--out", cfg.out, "Output directory")->required();

  AttackArgs atk;
  auto* attack = app.add_subcommand("attack-sim", "Resource-denial convergence experiment");
  attack->add_option("--scenario", atk.scenario)->check(CLI::ExistingFile);
  attack->add_option("--model", atk.model, "Model the federation trains")->required();
  attack->add_option("--clients", atk.clients, "Client profile names (default: all)")->delimiter(',');
  attack->add_option("--attacked", atk.attacked, "Indices of throttled clients")
      ->delimiter(',')
      ->capture_default_str();
  attack->add_option("--denial", atk.denial, "Fraction of throughput denied")->capture_default_str();
  attack->add_option("--mode", atk.mode)->check(CLI::IsMember({"Sync", "Async", "both"}))->capture_default_str();
  attack->add_option("--schedule", atk.schedule, "continuous | matched | <model name to tune for>")
      ->capture_default_str();
  attack->add_option("--seeds", atk.seeds)->delimiter(',')->capture_default_str();
  attack->add_option("--out", atk.out, "CSV to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    CLI::App* used = app.get_subcommands().front();
    if (used == simulate) return cmd_simulate(sim), 0;
    if (used == ingest) return cmd_ingest(ing), 0;
    if (used == attack) return cmd_attack(atk), 0;

    const bool stride_given = used->get_option_no_throw("--stride-s") &&
                              used->get_option("--stride-s")->count() > 0;
    resolve(cfg, stride_given);
    if (used == seg) cmd_segment(cfg);
    else if (used == feat) cmd_featurize(cfg);
    else if (used == train) cmd_train(cfg);
    else if (used == predict) cmd_predict(cfg, predict_threshold);
    else if (used == closed) cmd_eval(cfg, false);
    else if (used == open) cmd_eval(cfg, true);
    else if (used == sweep) cmd_sweep(cfg, lengths);
    else if (used == analyze) cmd_analyze(cfg, kl);
    return 0;
  } catch (const Error& e) {
    print_error(std::string(to_string(e.kind())), e.what(), e.line());
    return 2;
  } catch (const fs::filesystem_error& e) {
    print_error("Io", e.what(), std::nullopt);
    return 2;
  } catch (const std::exception& e) {
    print_error("Internal", e.what(), std::nullopt);
    return 3;
  }
}
