#include "wbsc/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "wbsc/rng.hpp"

namespace wbsc {

void Dataset::push_row(std::span<const double> features, int label) {
  if (dim == 0) dim = features.size();
  if (features.size() != dim) {
    throw std::invalid_argument("Dataset: row dimension mismatch");
  }
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(label);
}

double entropy_bits_counts(std::span<const std::size_t> counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) {
    throw std::invalid_argument("entropy: empty label multiset");
  }
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

namespace {

std::vector<std::size_t> count_labels(std::span<const int> labels,
                                      int n_classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
  for (int label : labels) {
    if (label < 0 || label >= n_classes) {
      throw std::invalid_argument("label outside [0, n_classes)");
    }
    ++counts[static_cast<std::size_t>(label)];
  }
  return counts;
}

int argmax_lowest(std::span<const std::size_t> counts) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < counts.size(); ++k) {
    if (counts[k] > counts[best]) best = k;
  }
  return static_cast<int>(best);
}

}  // namespace

double entropy_bits(std::span<const int> labels, int n_classes) {
  return entropy_bits_counts(count_labels(labels, n_classes));
}

double information_gain(std::span<const int> parent,
                        const std::vector<std::vector<int>>& partition,
                        int n_classes) {
  const auto parent_counts = count_labels(parent, n_classes);
  std::vector<std::size_t> sum(static_cast<std::size_t>(n_classes), 0);
  double children = 0.0;
  const double total = static_cast<double>(parent.size());
  for (const auto& cell : partition) {
    if (cell.empty()) continue;
    const auto cell_counts = count_labels(cell, n_classes);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += cell_counts[k];
    children += (static_cast<double>(cell.size()) / total) *
                entropy_bits_counts(cell_counts);
  }
  if (sum != parent_counts) {
    throw std::invalid_argument(
        "information_gain: partition is not a partition of the parent");
  }
  return entropy_bits_counts(parent_counts) - children;
}

int DecisionTree::predict(std::span<const double> x) const {
  return argmax_lowest(leaf_counts(x));
}

const std::vector<std::size_t>& DecisionTree::leaf_counts(
    std::span<const double> x) const {
  int node = 0;
  while (!nodes[static_cast<std::size_t>(node)].is_leaf) {
    const TreeNode& d = nodes[static_cast<std::size_t>(node)];
    node = (x[static_cast<std::size_t>(d.feature)] <= d.threshold) ? d.left
                                                                   : d.right;
  }
  return nodes[static_cast<std::size_t>(node)].class_counts;
}

int DecisionTree::depth() const {
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [node, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const TreeNode& t = nodes[static_cast<std::size_t>(node)];
    if (!t.is_leaf) {
      stack.emplace_back(t.left, d + 1);
      stack.emplace_back(t.right, d + 1);
    }
  }
  return deepest;
}

namespace {

struct TreeBuilder {
  const Dataset& data;
  const TreeConfig& cfg;
  int n_classes;
  std::mt19937_64 engine;
  std::vector<TreeNode> nodes;

  int features_per_split() const {
    if (cfg.features_per_split > 0) {
      return std::min<int>(cfg.features_per_split,
                           static_cast<int>(data.dim));
    }
    return static_cast<int>(
        std::ceil(std::sqrt(static_cast<double>(data.dim))));
  }

  int make_leaf(const std::vector<std::size_t>& counts) {
    TreeNode node;
    node.is_leaf = true;
    node.class_counts = counts;
    nodes.push_back(std::move(node));
    return static_cast<int>(nodes.size() - 1);
  }

  int build(std::vector<std::size_t>& idx, int depth) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (auto i : idx) ++counts[static_cast<std::size_t>(data.y[i])];
    const bool pure =
        std::count_if(counts.begin(), counts.end(),
                      [](std::size_t c) { return c > 0; }) <= 1;
    if (pure || depth >= cfg.max_depth ||
        idx.size() < 2 * static_cast<std::size_t>(cfg.min_leaf)) {
      return make_leaf(counts);
    }

    // candidate features, sampled without replacement, kept in ascending
    // order so tie-breaking is deterministic
    std::vector<int> dims(data.dim);
    std::iota(dims.begin(), dims.end(), 0);
    const int k = features_per_split();
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<int> pick(i,
                                              static_cast<int>(data.dim) - 1);
      std::swap(dims[static_cast<std::size_t>(i)],
                dims[static_cast<std::size_t>(pick(engine))]);
    }
    dims.resize(static_cast<std::size_t>(k));
    std::sort(dims.begin(), dims.end());

    // Splits with zero gain remain admissible (an impure node may need a
    // gain-free cut before a separating one becomes visible, e.g. XOR), so
    // the best candidate starts below zero and purity is the real stop.
    const double parent_h = entropy_bits_counts(counts);
    const double total = static_cast<double>(idx.size());
    double best_gain = -1.0;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::pair<double, int>> vals(idx.size());
    for (int f : dims) {
      for (std::size_t i = 0; i < idx.size(); ++i) {
        vals[i] = {data.row(idx[i])[static_cast<std::size_t>(f)],
                   data.y[idx[i]]};
      }
      std::sort(vals.begin(), vals.end());
      std::vector<std::size_t> left(static_cast<std::size_t>(n_classes), 0);
      std::vector<std::size_t> right = counts;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        const auto label = static_cast<std::size_t>(vals[i].second);
        ++left[label];
        --right[label];
        if (vals[i].first == vals[i + 1].first) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = vals.size() - nl;
        if (nl < static_cast<std::size_t>(cfg.min_leaf) ||
            nr < static_cast<std::size_t>(cfg.min_leaf)) {
          continue;
        }
        const double gain =
            parent_h -
            (static_cast<double>(nl) / total) * entropy_bits_counts(left) -
            (static_cast<double>(nr) / total) * entropy_bits_counts(right);
        if (gain > best_gain + 1e-12 && gain >= -1e-12) {
          best_gain = gain;
          best_feature = f;
          best_threshold = (cfg.threshold_mode == ThresholdMode::kMidpoint)
                               ? 0.5 * (vals[i].first + vals[i + 1].first)
                               : vals[i].first;
        }
      }
    }
    if (best_feature < 0) {
      return make_leaf(counts);
    }

    std::vector<std::size_t> left_idx;
    std::vector<std::size_t> right_idx;
    for (auto i : idx) {
      const double v = data.row(i)[static_cast<std::size_t>(best_feature)];
      (v <= best_threshold ? left_idx : right_idx).push_back(i);
    }
    TreeNode node;
    node.is_leaf = false;
    node.feature = best_feature;
    node.threshold = best_threshold;
    nodes.push_back(std::move(node));
    const int self = static_cast<int>(nodes.size() - 1);
    const int left_child = build(left_idx, depth + 1);
    const int right_child = build(right_idx, depth + 1);
    nodes[static_cast<std::size_t>(self)].left = left_child;
    nodes[static_cast<std::size_t>(self)].right = right_child;
    return self;
  }
};

DecisionTree train_tree_on(const Dataset& data, std::vector<std::size_t> idx,
                           const TreeConfig& config, std::uint64_t seed) {
  if (idx.empty()) {
    throw std::invalid_argument("train_tree: empty dataset");
  }
  int n_classes = static_cast<int>(data.classes.size());
  if (n_classes == 0) {
    n_classes = *std::max_element(data.y.begin(), data.y.end()) + 1;
  }
  TreeBuilder builder{data, config, n_classes, make_engine(seed), {}};
  // Nodes are appended parent-first, so the root lands at index 0.
  builder.build(idx, 0);
  DecisionTree tree;
  tree.nodes = std::move(builder.nodes);
  tree.n_classes = n_classes;
  return tree;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n,
                                           std::uint64_t seed) {
  auto engine = make_engine(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(engine);
  return idx;
}

}  // namespace

DecisionTree train_tree(const Dataset& data, const TreeConfig& config,
                        std::uint64_t seed) {
  std::vector<std::size_t> idx(data.n());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return train_tree_on(data, std::move(idx), config, seed);
}

ForestModel train_forest(const Dataset& data, const ForestConfig& config,
                         std::uint64_t seed) {
  if (data.n() == 0) {
    throw std::invalid_argument("train_forest: empty dataset");
  }
  if (config.n_trees < 1) {
    throw std::invalid_argument("train_forest: need at least one tree");
  }
  ForestModel model;
  model.config = config;
  model.config.seed = seed;
  model.classes = data.classes;
  model.trees.reserve(static_cast<std::size_t>(config.n_trees));
  for (int j = 0; j < config.n_trees; ++j) {
    const std::uint64_t tree_seed = mix_seed(seed, static_cast<std::uint64_t>(j));
    std::vector<std::size_t> idx;
    if (config.bootstrap) {
      idx = bootstrap_indices(data.n(), mix_seed(tree_seed, 0xb005ULL));
    } else {
      idx.resize(data.n());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
    }
    model.trees.push_back(
        train_tree_on(data, std::move(idx), config.tree, tree_seed));
  }
  return model;
}

std::vector<std::size_t> ForestModel::vote_counts(
    std::span<const double> x) const {
  const std::size_t n_classes =
      trees.empty() ? 0 : static_cast<std::size_t>(trees.front().n_classes);
  std::vector<std::size_t> votes(n_classes, 0);
  for (const auto& tree : trees) {
    ++votes[static_cast<std::size_t>(tree.predict(x))];
  }
  return votes;
}

int ForestModel::predict(std::span<const double> x) const {
  return argmax_lowest(vote_counts(x));
}

double oob_accuracy(const ForestModel& model, const Dataset& data) {
  if (!model.config.bootstrap) {
    throw std::invalid_argument("oob_accuracy: forest was not bootstrapped");
  }
  const std::size_t n = data.n();
  const auto n_classes = static_cast<std::size_t>(model.trees.front().n_classes);
  std::vector<std::vector<std::size_t>> votes(n,
                                              std::vector<std::size_t>(
                                                  n_classes, 0));
  for (int j = 0; j < model.config.n_trees; ++j) {
    const std::uint64_t tree_seed =
        mix_seed(model.config.seed, static_cast<std::uint64_t>(j));
    const auto idx = bootstrap_indices(n, mix_seed(tree_seed, 0xb005ULL));
    std::vector<char> in_bag(n, 0);
    for (auto i : idx) in_bag[i] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_bag[i]) continue;
      ++votes[i][static_cast<std::size_t>(model.trees[static_cast<std::size_t>(j)]
                                              .predict(data.row(i)))];
    }
  }
  std::size_t evaluated = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t total = 0;
    for (auto v : votes[i]) total += v;
    if (total == 0) continue;
    ++evaluated;
    if (argmax_lowest(votes[i]) == data.y[i]) ++correct;
  }
  if (evaluated == 0) return 0.0;
  return static_cast<double>(correct) / static_cast<double>(evaluated);
}

NaiveBayesModel train_nbc(const Dataset& data) {
  if (data.n() == 0 || data.dim == 0) {
    throw std::invalid_argument("train_nbc: empty dataset");
  }
  int n_classes = static_cast<int>(data.classes.size());
  if (n_classes == 0) {
    n_classes = *std::max_element(data.y.begin(), data.y.end()) + 1;
  }
  const auto nc = static_cast<std::size_t>(n_classes);
  NaiveBayesModel model;
  model.dim = data.dim;
  model.classes = data.classes;
  model.log_prior.assign(nc, 0.0);
  model.mean.assign(nc * data.dim, 0.0);
  model.variance.assign(nc * data.dim, 0.0);

  std::vector<std::size_t> counts(nc, 0);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto c = static_cast<std::size_t>(data.y[i]);
    ++counts[c];
    for (std::size_t d = 0; d < data.dim; ++d) {
      model.mean[c * data.dim + d] += data.row(i)[d];
    }
  }
  for (std::size_t c = 0; c < nc; ++c) {
    if (counts[c] < 2) {
      throw std::invalid_argument(
          "train_nbc: every class needs at least two samples");
    }
    for (std::size_t d = 0; d < data.dim; ++d) {
      model.mean[c * data.dim + d] /= static_cast<double>(counts[c]);
    }
    model.log_prior[c] = std::log(static_cast<double>(counts[c]) /
                                  static_cast<double>(data.n()));
  }
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto c = static_cast<std::size_t>(data.y[i]);
    for (std::size_t d = 0; d < data.dim; ++d) {
      const double delta = data.row(i)[d] - model.mean[c * data.dim + d];
      model.variance[c * data.dim + d] += delta * delta;
    }
  }
  double max_var = 0.0;
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t d = 0; d < data.dim; ++d) {
      model.variance[c * data.dim + d] /= static_cast<double>(counts[c]);
      max_var = std::max(max_var, model.variance[c * data.dim + d]);
    }
  }
  const double floor = std::max(1e-9 * max_var, 1e-12);
  for (auto& v : model.variance) v = std::max(v, floor);
  return model;
}

std::vector<double> NaiveBayesModel::log_scores(
    std::span<const double> x) const {
  if (x.size() != dim) {
    throw std::invalid_argument("NaiveBayesModel: dimension mismatch");
  }
  const std::size_t nc = log_prior.size();
  std::vector<double> scores(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    double s = log_prior[c];
    for (std::size_t d = 0; d < dim; ++d) {
      const double var = variance[c * dim + d];
      const double delta = x[d] - mean[c * dim + d];
      s += -0.5 * (std::log(2.0 * std::numbers::pi * var) +
                   delta * delta / var);
    }
    scores[c] = s;
  }
  return scores;
}

int NaiveBayesModel::predict(std::span<const double> x) const {
  const auto scores = log_scores(x);
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return static_cast<int>(best);
}

std::size_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::size_t total = 0;
  for (std::size_t c = 0; c < n_classes; ++c) total += at(truth, c);
  return total;
}

double ConfusionMatrix::per_class_rate(std::size_t truth) const {
  const std::size_t total = row_total(truth);
  if (total == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(at(truth, truth)) / static_cast<double>(total);
}

double ConfusionMatrix::overall_accuracy() const {
  std::size_t total = 0;
  std::size_t diag = 0;
  for (std::size_t t = 0; t < n_classes; ++t) {
    total += row_total(t);
    diag += at(t, t);
  }
  if (total == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(diag) / static_cast<double>(total);
}

ConfusionMatrix confusion_matrix(std::span<const int> truth,
                                 std::span<const int> pred, int n_classes) {
  if (truth.size() != pred.size()) {
    throw std::invalid_argument("confusion_matrix: length mismatch");
  }
  ConfusionMatrix cm;
  cm.n_classes = static_cast<std::size_t>(n_classes);
  cm.counts.assign(cm.n_classes * cm.n_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= n_classes || pred[i] < 0 ||
        pred[i] >= n_classes) {
      throw std::invalid_argument("confusion_matrix: unknown label");
    }
    ++cm.counts[static_cast<std::size_t>(truth[i]) * cm.n_classes +
                static_cast<std::size_t>(pred[i])];
  }
  return cm;
}

RateInterval wilson_interval(std::size_t successes, std::size_t trials) {
  RateInterval out;
  if (trials == 0) {
    out.rate = std::numeric_limits<double>::quiet_NaN();
    out.lo = 0.0;
    out.hi = 1.0;
    return out;
  }
  const double z = 1.959963984540054;  // 97.5th normal percentile
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  out.rate = p;
  out.lo = std::max(0.0, center - half);
  out.hi = std::min(1.0, center + half);
  return out;
}

FeatureScaler FeatureScaler::fit(const Dataset& data) {
  if (data.n() == 0) {
    throw std::invalid_argument("FeatureScaler: empty dataset");
  }
  FeatureScaler scaler;
  scaler.mean.assign(data.dim, 0.0);
  scaler.scale.assign(data.dim, 0.0);
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t d = 0; d < data.dim; ++d) {
      scaler.mean[d] += data.row(i)[d];
    }
  }
  for (auto& m : scaler.mean) m /= static_cast<double>(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t d = 0; d < data.dim; ++d) {
      const double delta = data.row(i)[d] - scaler.mean[d];
      scaler.scale[d] += delta * delta;
    }
  }
  for (auto& s : scaler.scale) {
    s = std::sqrt(s / static_cast<double>(data.n()));
    if (s < 1e-12) s = 1.0;
  }
  return scaler;
}

std::vector<double> FeatureScaler::apply(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    out[d] = (x[d] - mean[d]) / scale[d];
  }
  return out;
}

Dataset FeatureScaler::apply(const Dataset& data) const {
  Dataset out;
  out.dim = data.dim;
  out.y = data.y;
  out.classes = data.classes;
  out.x.resize(data.x.size());
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t d = 0; d < data.dim; ++d) {
      out.x[i * data.dim + d] = (data.row(i)[d] - mean[d]) / scale[d];
    }
  }
  return out;
}

}  // namespace wbsc
