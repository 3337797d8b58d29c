#include "flare/learners/model_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "flare/error.hpp"
#include "flare/learners/forest.hpp"
#include "flare/learners/gbt.hpp"
#include "flare/learners/logreg.hpp"

namespace flare {

std::string hexfloat(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::string TokenReader::word() {
  std::string w;
  if (!(in_ >> w)) throw Error(ErrorKind::MalformedModel, "unexpected end of model data");
  return w;
}

void TokenReader::expect(std::string_view tag) {
  auto w = word();
  if (w != tag)
    throw Error(ErrorKind::MalformedModel, "expected '" + std::string(tag) + "', got '" + w + "'");
}

double TokenReader::real() {
  auto w = word();
  char* end = nullptr;
  const double v = std::strtod(w.c_str(), &end);
  if (end != w.c_str() + w.size()) throw Error(ErrorKind::MalformedModel, "bad real '" + w + "'");
  return v;
}

long long TokenReader::integer() {
  auto w = word();
  char* end = nullptr;
  const long long v = std::strtoll(w.c_str(), &end, 10);
  if (end != w.c_str() + w.size()) throw Error(ErrorKind::MalformedModel, "bad integer '" + w + "'");
  return v;
}

std::size_t TokenReader::count() {
  const long long v = integer();
  if (v < 0) throw Error(ErrorKind::MalformedModel, "negative count");
  return static_cast<std::size_t>(v);
}

namespace {

DecisionTree read_tree_body(TokenReader& r) {
  const std::size_t n_nodes = r.count();
  const std::size_t n_features = r.count();
  std::vector<TreeNode> nodes(n_nodes);
  for (auto& node : nodes) {
    r.expect("node");
    node.feature = static_cast<int>(r.integer());
    node.threshold = r.real();
    node.left = static_cast<int>(r.integer());
    node.right = static_cast<int>(r.integer());
    node.value = r.real();
    node.n_samples = static_cast<std::uint32_t>(r.count());
    const auto limit = static_cast<int>(n_nodes);
    if (!node.is_leaf() && (node.left <= 0 || node.right <= 0 || node.left >= limit ||
                            node.right >= limit || node.feature >= static_cast<int>(n_features)))
      throw Error(ErrorKind::MalformedModel, "tree node references out of range");
  }
  if (nodes.empty()) throw Error(ErrorKind::MalformedModel, "tree without nodes");
  return DecisionTree(std::move(nodes), n_features);
}

std::vector<double> read_row(TokenReader& r, std::string_view tag, std::size_t d) {
  r.expect(tag);
  std::vector<double> v(d);
  for (auto& x : v) x = r.real();
  return v;
}

}  // namespace

std::unique_ptr<Classifier> read_classifier(TokenReader& r) {
  const std::string tag = r.word();
  if (tag == "tree") return std::make_unique<DecisionTree>(read_tree_body(r));
  if (tag == "forest") {
    const std::size_t n_trees = r.count();
    const std::size_t n_features = r.count();
    const bool hard = r.integer() != 0;
    std::vector<DecisionTree> trees;
    for (std::size_t t = 0; t < n_trees; ++t) {
      r.expect("tree");
      trees.push_back(read_tree_body(r));
    }
    return std::make_unique<RandomForest>(std::move(trees), n_features, hard);
  }
  if (tag == "logreg") {
    const std::size_t d = r.count();
    const double bias = r.real();
    const double l2 = r.real();
    auto w = read_row(r, "weights", d);
    auto mean = read_row(r, "mean", d);
    auto scale = read_row(r, "scale", d);
    return std::make_unique<LogisticModel>(std::move(w), bias, l2, std::move(mean), std::move(scale));
  }
  if (tag == "gbt") {
    const std::size_t n_trees = r.count();
    const std::size_t n_features = r.count();
    const double base = r.real();
    const double lr = r.real();
    std::vector<DecisionTree> trees;
    for (std::size_t t = 0; t < n_trees; ++t) {
      r.expect("tree");
      trees.push_back(read_tree_body(r));
    }
    return std::make_unique<GbtModel>(std::move(trees), base, lr, n_features);
  }
  throw Error(ErrorKind::MalformedModel, "unknown model tag '" + tag + "'");
}

void save_model_file(const std::string& path, const Classifier& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << "flare-model " << kModelFormatVersion << '\n';
  model.save(out);
}

std::unique_ptr<Classifier> load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  TokenReader r(in);
  r.expect("flare-model");
  if (r.integer() != kModelFormatVersion)
    throw Error(ErrorKind::MalformedModel, "unsupported model format version");
  return read_classifier(r);
}

}  // namespace flare
