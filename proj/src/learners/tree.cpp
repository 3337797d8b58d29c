#include "flare/learners/tree.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "flare/error.hpp"
#include "flare/learners/model_io.hpp"

namespace flare {

std::vector<double> Classifier::predict_proba(const Matrix& X) const {
  if (X.cols() != n_features())
    throw Error(ErrorKind::DimensionMismatch, "model expects " + std::to_string(n_features()) +
                                                  " features, got " + std::to_string(X.cols()));
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict_proba(X.row(r));
  return out;
}

double gini(std::size_t positives, std::size_t total) {
  if (total == 0) return 0.0;
  const double p = static_cast<double>(positives) / static_cast<double>(total);
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

namespace {

double midpoint(double a, double b) {
  const double m = a + (b - a) * 0.5;
  return m < b ? m : a;
}

struct ValueLabel {
  double value;
  int label;
};

}  // namespace

std::optional<Split> best_gini_split(const Dataset& ds, std::span<const std::size_t> samples,
                                     std::span<const std::size_t> features, std::size_t min_leaf) {
  const std::size_t n = samples.size();
  if (n < 2) return std::nullopt;
  std::size_t total_pos = 0;
  for (auto s : samples) total_pos += static_cast<std::size_t>(ds.y[s]);
  const double parent = gini(total_pos, n);
  const double nd = static_cast<double>(n);

  std::vector<std::size_t> order(features.begin(), features.end());
  std::sort(order.begin(), order.end());

  std::optional<Split> best;
  double best_gain = kSplitTieEps;
  std::vector<ValueLabel> vals(n);
  for (std::size_t f : order) {
    for (std::size_t i = 0; i < n; ++i) vals[i] = {ds.X(samples[i], f), ds.y[samples[i]]};
    std::sort(vals.begin(), vals.end(),
              [](const ValueLabel& a, const ValueLabel& b) { return a.value < b.value; });
    std::size_t left_n = 0, left_pos = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      ++left_n;
      left_pos += static_cast<std::size_t>(vals[i].label);
      if (vals[i].value == vals[i + 1].value) continue;
      const std::size_t right_n = n - left_n;
      if (left_n < min_leaf || right_n < min_leaf) continue;
      const double gain = parent -
                          static_cast<double>(left_n) / nd * gini(left_pos, left_n) -
                          static_cast<double>(right_n) / nd * gini(total_pos - left_pos, right_n);
      if (gain > best_gain + kSplitTieEps || (!best && gain > best_gain)) {
        best_gain = gain;
        best = Split{f, midpoint(vals[i].value, vals[i + 1].value), gain};
      }
    }
  }
  return best;
}

namespace {

class ClassificationBuilder {
 public:
  ClassificationBuilder(const Dataset& ds, const TreeParams& p, Rng& rng)
      : ds_(ds), params_(p), rng_(rng), all_features_(ds.dims()) {
    std::iota(all_features_.begin(), all_features_.end(), std::size_t{0});
    k_ = params_.features_per_split == 0 ? ds.dims()
                                         : std::min(params_.features_per_split, ds.dims());
  }

  std::vector<TreeNode> build(std::vector<std::size_t> samples) {
    grow(std::move(samples), 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::size_t> samples, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    std::size_t pos = 0;
    for (auto s : samples) pos += static_cast<std::size_t>(ds_.y[s]);
    const std::size_t n = samples.size();
    nodes_[static_cast<std::size_t>(id)].value =
        n == 0 ? 0.0 : static_cast<double>(pos) / static_cast<double>(n);
    nodes_[static_cast<std::size_t>(id)].n_samples = static_cast<std::uint32_t>(n);

    if (depth >= params_.max_depth || n < 2 * params_.min_leaf || pos == 0 || pos == n) return id;

    auto split = best_gini_split(ds_, samples, sample_features(), params_.min_leaf);
    if (!split) return id;

    std::vector<std::size_t> left, right;
    for (auto s : samples)
      (ds_.X(s, split->feature) <= split->threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();

    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  std::span<const std::size_t> sample_features() {
    if (k_ == all_features_.size()) return all_features_;
    // Partial Fisher-Yates: the first k_ entries become the sampled subset.
    for (std::size_t i = 0; i < k_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, all_features_.size() - 1);
      std::swap(all_features_[i], all_features_[pick(rng_)]);
    }
    return std::span<const std::size_t>(all_features_).first(k_);
  }

  const Dataset& ds_;
  const TreeParams& params_;
  Rng& rng_;
  std::vector<std::size_t> all_features_;
  std::size_t k_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

DecisionTree fit_tree(const Dataset& ds, const TreeParams& params, Rng& rng,
                      std::span<const std::size_t> samples) {
  ds.validate(false);
  if (params.max_depth < 0 || params.min_leaf == 0)
    throw Error(ErrorKind::InvalidConfig, "tree needs max_depth >= 0 and min_leaf >= 1");
  std::vector<std::size_t> idx;
  if (samples.empty()) {
    idx.resize(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  } else {
    idx.assign(samples.begin(), samples.end());
  }
  ClassificationBuilder builder(ds, params, rng);
  return DecisionTree(builder.build(std::move(idx)), ds.dims());
}

namespace {

void grow_regression(const Matrix& X, std::span<const double> t, std::vector<std::size_t> samples,
                     int depth, int max_depth, std::size_t min_leaf, std::vector<TreeNode>& nodes) {
  const auto id = nodes.size();
  nodes.emplace_back();
  const std::size_t n = samples.size();
  double sum = 0;
  for (auto s : samples) sum += t[s];
  nodes[id].value = n ? sum / static_cast<double>(n) : 0.0;
  nodes[id].n_samples = static_cast<std::uint32_t>(n);
  if (depth >= max_depth || n < 2 * min_leaf) return;

  const double parent_score = sum * sum / static_cast<double>(n);
  double best_gain = kSplitTieEps;
  std::optional<Split> best;
  std::vector<std::pair<double, double>> vals(n);
  for (std::size_t f = 0; f < X.cols(); ++f) {
    for (std::size_t i = 0; i < n; ++i) vals[i] = {X(samples[i], f), t[samples[i]]};
    std::sort(vals.begin(), vals.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double left_sum = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += vals[i].second;
      if (vals[i].first == vals[i + 1].first) continue;
      const std::size_t ln = i + 1, rn = n - ln;
      if (ln < min_leaf || rn < min_leaf) continue;
      const double right_sum = sum - left_sum;
      const double gain = left_sum * left_sum / static_cast<double>(ln) +
                          right_sum * right_sum / static_cast<double>(rn) - parent_score;
      if (gain > best_gain + kSplitTieEps || (!best && gain > best_gain)) {
        best_gain = gain;
        best = Split{f, midpoint(vals[i].first, vals[i + 1].first), gain};
      }
    }
  }
  if (!best) return;

  std::vector<std::size_t> left, right;
  for (auto s : samples) (X(s, best->feature) <= best->threshold ? left : right).push_back(s);
  nodes[id].feature = static_cast<int>(best->feature);
  nodes[id].threshold = best->threshold;
  nodes[id].left = static_cast<int>(nodes.size());
  grow_regression(X, t, std::move(left), depth + 1, max_depth, min_leaf, nodes);
  nodes[id].right = static_cast<int>(nodes.size());
  grow_regression(X, t, std::move(right), depth + 1, max_depth, min_leaf, nodes);
}

}  // namespace

DecisionTree fit_regression_tree(const Matrix& X, std::span<const double> targets, int max_depth,
                                 std::size_t min_leaf) {
  if (targets.size() != X.rows())
    throw Error(ErrorKind::LengthMismatch, "targets do not match X rows");
  std::vector<std::size_t> idx(X.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<TreeNode> nodes;
  grow_regression(X, targets, std::move(idx), 0, max_depth, std::max<std::size_t>(1, min_leaf), nodes);
  return DecisionTree(std::move(nodes), X.cols());
}

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return i;
}

double DecisionTree::predict_proba(std::span<const double> x) const {
  if (x.size() != n_features_)
    throw Error(ErrorKind::DimensionMismatch, "tree expects " + std::to_string(n_features_) +
                                                  " features, got " + std::to_string(x.size()));
  return std::clamp(leaf_value(x), 0.0, 1.0);
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

void DecisionTree::save(std::ostream& out) const {
  out << "tree " << nodes_.size() << ' ' << n_features_ << '\n';
  for (const auto& n : nodes_)
    out << "node " << n.feature << ' ' << hexfloat(n.threshold) << ' ' << n.left << ' ' << n.right
        << ' ' << hexfloat(n.value) << ' ' << n.n_samples << '\n';
}

std::unique_ptr<Classifier> DecisionTree::clone() const {
  return std::make_unique<DecisionTree>(*this);
}

}  // namespace flare
