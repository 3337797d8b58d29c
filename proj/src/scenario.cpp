#include "flare/scenario.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "flare/error.hpp"
#include "flare/hash.hpp"

namespace flare {

namespace pt = boost::property_tree;

std::vector<SessionSpec> Scenario::templates() const {
  static constexpr Aggregation kCycle[] = {Aggregation::FedAvg, Aggregation::WeightedFedAvg,
                                           Aggregation::FedProx};
  std::vector<SessionSpec> out;
  for (std::size_t m = 0; m < models.size(); ++m)
    for (std::size_t c = 0; c < clients.size(); ++c) {
      SessionSpec s;
      s.model = models[m];
      s.client = clients[c];
      s.link = link;
      s.aggregation = aggregation.value_or(kCycle[(m + c) % 3]);
      s.sync_mode = sync_mode;
      s.duration_s = duration_s;
      out.push_back(std::move(s));
    }
  return out;
}

void Scenario::validate() const {
  if (models.empty()) throw Error(ErrorKind::InvalidConfig, "scenario lists no models");
  if (clients.empty()) throw Error(ErrorKind::InvalidConfig, "scenario lists no clients");
  if (traces_per_spec == 0) throw Error(ErrorKind::InvalidConfig, "traces_per_spec must be >= 1");
  if (!(duration_s > 0)) throw Error(ErrorKind::InvalidConfig, "duration_s must be positive");
  try {
    for (const auto& m : models) m.validate();
    for (const auto& c : clients) c.validate();
    link.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
}

Scenario default_scenario() {
  Scenario s;
  s.models = default_model_profiles();
  s.clients = default_client_profiles();
  s.link = default_link();
  return s;
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <typename T>
T get(const pt::ptree& section, const std::string& where, const std::string& key) {
  auto v = section.get_optional<T>(pt::ptree::path_type(key, '\0'));
  if (!v) throw Error(ErrorKind::InvalidConfig, "[" + where + "] missing or malformed '" + key + "'");
  return *v;
}

template <typename T>
T get_or(const pt::ptree& section, const std::string& where, const std::string& key, T fallback) {
  if (!section.get_child_optional(pt::ptree::path_type(key, '\0'))) return fallback;
  return get<T>(section, where, key);
}

const pt::ptree& section(const pt::ptree& root, const std::string& name) {
  // Section names contain ':' and are looked up literally.
  for (const auto& [key, child] : root)
    if (key == name) return child;
  throw Error(ErrorKind::InvalidConfig, "missing section [" + name + "]");
}

// A misspelt key would otherwise fall back to its default unnoticed.
void check_keys(const pt::ptree& sec, const std::string& where,
                std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, child] : sec)
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw Error(ErrorKind::InvalidConfig, "[" + where + "] unknown key '" + key + "'");
}

template <typename F>
auto wrap(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
}

}  // namespace

Scenario parse_scenario(std::istream& in) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("scenario: ") + e.message(), e.line());
  }
  Scenario s;
  const auto& corpus = section(root, "corpus");
  check_keys(corpus, "corpus",
             {"seed", "traces_per_spec", "duration_s", "sync_mode", "aggregation", "models", "clients", "link"});
  s.seed = get_or<std::uint64_t>(corpus, "corpus", "seed", s.seed);
  s.traces_per_spec = get_or<std::size_t>(corpus, "corpus", "traces_per_spec", s.traces_per_spec);
  s.duration_s = get_or<double>(corpus, "corpus", "duration_s", s.duration_s);
  const auto sync = get_or<std::string>(corpus, "corpus", "sync_mode", "Sync");
  s.sync_mode = wrap([&] { return parse_sync_mode(sync); });
  const auto agg = get_or<std::string>(corpus, "corpus", "aggregation", "cycle");
  if (agg != "cycle") s.aggregation = wrap([&] { return parse_aggregation(agg); });

  for (const auto& name : split_list(get<std::string>(corpus, "corpus", "models"))) {
    const std::string where = "model:" + name;
    const auto& sec = section(root, where);
    check_keys(sec, where,
               {"family", "dataset", "theta", "rounds_to_converge", "compute_s_per_round", "burstiness",
                "periodicity_s"});
    ModelProfile m;
    m.name = name;
    m.family = wrap([&] { return parse_family(get<std::string>(sec, where, "family")); });
    m.dataset = get_or<std::string>(sec, where, "dataset", "");
    m.theta = get<std::uint64_t>(sec, where, "theta");
    m.rounds_to_converge = get<std::size_t>(sec, where, "rounds_to_converge");
    m.compute_s_per_round = get<double>(sec, where, "compute_s_per_round");
    m.burstiness = get_or<double>(sec, where, "burstiness", 1.0);
    if (sec.get_child_optional("periodicity_s")) m.periodicity_s = get<double>(sec, where, "periodicity_s");
    s.models.push_back(std::move(m));
  }
  for (const auto& name : split_list(get<std::string>(corpus, "corpus", "clients"))) {
    const std::string where = "client:" + name;
    const auto& sec = section(root, where);
    check_keys(sec, where, {"compute_multiplier", "jitter_frac", "data_share"});
    ClientProfile c;
    c.name = name;
    c.compute_multiplier = get_or<double>(sec, where, "compute_multiplier", 1.0);
    c.jitter_frac = get_or<double>(sec, where, "jitter_frac", 0.1);
    c.data_share = get_or<double>(sec, where, "data_share", 1.0);
    s.clients.push_back(std::move(c));
  }
  {
    const auto name = get_or<std::string>(corpus, "corpus", "link", "");
    if (!name.empty()) {
      const std::string where = "link:" + name;
      const auto& sec = section(root, where);
      check_keys(sec, where, {"throughput_mbps", "mss_bytes", "base_latency_ms"});
      s.link.name = name;
      s.link.throughput_mbps = get_or<double>(sec, where, "throughput_mbps", s.link.throughput_mbps);
      s.link.mss_bytes = get_or<std::uint32_t>(sec, where, "mss_bytes", s.link.mss_bytes);
      s.link.base_latency_ms = get_or<double>(sec, where, "base_latency_ms", s.link.base_latency_ms);
    }
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return parse_scenario(in);
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_scenario(std::ostream& out, const Scenario& s) {
  auto join = [](const auto& items) {
    std::string r;
    for (const auto& i : items) r += (r.empty() ? "" : ", ") + i.name;
    return r;
  };
  out << "[corpus]\n"
      << "seed = " << s.seed << '\n'
      << "traces_per_spec = " << s.traces_per_spec << '\n'
      << "duration_s = " << num(s.duration_s) << '\n'
      << "sync_mode = " << to_string(s.sync_mode) << '\n'
      << "aggregation = " << (s.aggregation ? std::string(to_string(*s.aggregation)) : "cycle") << '\n'
      << "models = " << join(s.models) << '\n'
      << "clients = " << join(s.clients) << '\n'
      << "link = " << s.link.name << "\n\n";
  for (const auto& m : s.models) {
    out << "[model:" << m.name << "]\n"
        << "family = " << to_string(m.family) << '\n'
        << "dataset = " << m.dataset << '\n'
        << "theta = " << m.theta << '\n'
        << "rounds_to_converge = " << m.rounds_to_converge << '\n'
        << "compute_s_per_round = " << num(m.compute_s_per_round) << '\n'
        << "burstiness = " << num(m.burstiness) << '\n';
    if (m.periodicity_s) out << "periodicity_s = " << num(*m.periodicity_s) << '\n';
    out << '\n';
  }
  for (const auto& c : s.clients)
    out << "[client:" << c.name << "]\n"
        << "compute_multiplier = " << num(c.compute_multiplier) << '\n'
        << "jitter_frac = " << num(c.jitter_frac) << '\n'
        << "data_share = " << num(c.data_share) << "\n\n";
  out << "[link:" << s.link.name << "]\n"
      << "throughput_mbps = " << num(s.link.throughput_mbps) << '\n'
      << "mss_bytes = " << s.link.mss_bytes << '\n'
      << "base_latency_ms = " << num(s.link.base_latency_ms) << '\n';
}

std::string scenario_hash(const Scenario& s) {
  std::ostringstream out;
  write_scenario(out, s);
  return fnv1a_hex(out.str());
}

}  // namespace flare
