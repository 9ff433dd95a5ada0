#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wbsc {

// Row-major labeled feature matrix. Class indices follow a fixed declared
// ordering (for the modulation set: BASK < BPSK < QPSK < QAM32); all tie
// breaks resolve to the lowest class index.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> x;  // n * dim, row major
  std::vector<int> y;     // class indices in [0, n_classes)
  std::vector<std::string> classes;

  std::size_t n() const { return y.size(); }
  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * dim, dim};
  }
  void push_row(std::span<const double> features, int label);
};

// Shannon entropy in bits of a label multiset; throws on empty input.
double entropy_bits(std::span<const int> labels, int n_classes);
double entropy_bits_counts(std::span<const std::size_t> counts);

// Parent entropy minus size-weighted child entropies. The partition must
// be disjoint with union equal to the parent (validated by class counts).
double information_gain(std::span<const int> parent,
                        const std::vector<std::vector<int>>& partition,
                        int n_classes);

enum class ThresholdMode {
  kMidpoint,   // threshold between consecutive values at their midpoint
  kLeftValue,  // threshold at the left data value; split decisions are then
               // invariant under strictly monotone feature transforms
};

struct TreeConfig {
  int max_depth = 12;
  int min_leaf = 2;
  int features_per_split = 0;  // 0 -> ceil(sqrt(dim))
  ThresholdMode threshold_mode = ThresholdMode::kMidpoint;
};

// Flattened binary decision tree; node 0 is the root. Routing goes left
// when x[feature] <= threshold.
struct TreeNode {
  bool is_leaf = true;
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<std::size_t> class_counts;  // leaves only
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  int n_classes = 0;

  int predict(std::span<const double> x) const;
  const std::vector<std::size_t>& leaf_counts(std::span<const double> x) const;
  int depth() const;
};

DecisionTree train_tree(const Dataset& data, const TreeConfig& config,
                        std::uint64_t seed);

struct ForestConfig {
  int n_trees = 100;
  bool bootstrap = true;
  TreeConfig tree;
  std::uint64_t seed = 0;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  ForestConfig config;
  std::vector<std::string> classes;

  // Majority vote over per-tree leaf predictions; ties break to the
  // lowest class index.
  int predict(std::span<const double> x) const;
  std::vector<std::size_t> vote_counts(std::span<const double> x) const;
};

ForestModel train_forest(const Dataset& data, const ForestConfig& config,
                         std::uint64_t seed);

// Out-of-bag accuracy (samples never bootstrapped into a tree vote on it).
// Requires config.bootstrap; returns the fraction of rows with an OOB vote
// that are predicted correctly.
double oob_accuracy(const ForestModel& model, const Dataset& data);

struct NaiveBayesModel {
  std::vector<double> log_prior;          // per class
  std::vector<double> mean;               // class * dim
  std::vector<double> variance;           // class * dim, floored
  std::size_t dim = 0;
  std::vector<std::string> classes;

  int predict(std::span<const double> x) const;
  std::vector<double> log_scores(std::span<const double> x) const;
};

// Gaussian naive Bayes; every class needs at least two samples.
NaiveBayesModel train_nbc(const Dataset& data);

struct ConfusionMatrix {
  std::size_t n_classes = 0;
  std::vector<std::size_t> counts;  // row = truth, col = prediction

  std::size_t at(std::size_t truth, std::size_t pred) const {
    return counts[truth * n_classes + pred];
  }
  std::size_t row_total(std::size_t truth) const;
  // diagonal / row total; 0/0 -> NaN
  double per_class_rate(std::size_t truth) const;
  double overall_accuracy() const;
};

ConfusionMatrix confusion_matrix(std::span<const int> truth,
                                 std::span<const int> pred, int n_classes);

// 95% Wilson score interval for a binomial proportion.
struct RateInterval {
  double rate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};
RateInterval wilson_interval(std::size_t successes, std::size_t trials);

// Z-score normalization fit on training data and applied before both
// classifiers so the comparison stays fair.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;  // standard deviation, floored

  static FeatureScaler fit(const Dataset& data);
  std::vector<double> apply(std::span<const double> x) const;
  Dataset apply(const Dataset& data) const;
};

}  // namespace wbsc
