#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "fit_common.hpp"
#include "hypercol/classifiers.hpp"
#include "hypercol/error.hpp"
#include "hypercol/parallel.hpp"
#include "hypercol/random.hpp"

namespace hypercol {
namespace {

struct Split {
  std::int32_t feature = TreeNode::kLeaf;
  double threshold = 0.0;
  double impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const PixelMatrix& X, std::span<const std::uint8_t> y, std::size_t mtry,
              std::uint64_t seed)
      : X_(X), y_(y), mtry_(mtry), rng_(seed), features_(X.cols) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  DecisionTree build() {
    const std::size_t n = X_.rows;
    samples_.resize(n);
    for (auto& s : samples_) s = rng_.uniform_index(n);

    DecisionTree tree;
    tree.nodes.emplace_back();
    struct Task {
      std::size_t node, begin, end;
    };
    std::vector<Task> stack{{0, 0, n}};
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      const std::size_t count = task.end - task.begin;
      std::size_t positives = 0;
      for (std::size_t k = task.begin; k < task.end; ++k) positives += y_[samples_[k]];
      tree.nodes[task.node].value =
          static_cast<double>(positives) / static_cast<double>(count);
      if (count < 2 || positives == 0 || positives == count) continue;

      const Split split = best_split(task.begin, task.end);
      if (split.feature == TreeNode::kLeaf) continue;

      const auto feature = static_cast<std::size_t>(split.feature);
      const auto mid = std::stable_partition(
          samples_.begin() + static_cast<std::ptrdiff_t>(task.begin),
          samples_.begin() + static_cast<std::ptrdiff_t>(task.end),
          [&](std::size_t row) { return X_(row, feature) <= split.threshold; });
      const auto middle = static_cast<std::size_t>(mid - samples_.begin());

      const auto left = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& node = tree.nodes[task.node];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left;
      node.right = left + 1;
      // Right first so the left subtree is expanded first (depth-first order).
      stack.push_back({static_cast<std::size_t>(left + 1), middle, task.end});
      stack.push_back({static_cast<std::size_t>(left), task.begin, middle});
    }
    return tree;
  }

 private:
  // Draws features without replacement until mtry non-constant ones have
  // been evaluated or all features are exhausted.
  Split best_split(std::size_t begin, std::size_t end) {
    Split best;
    double best_impurity = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
    const std::size_t d = features_.size();
    for (std::size_t k = 0; k < d && evaluated < mtry_; ++k) {
      std::swap(features_[k], features_[k + rng_.uniform_index(d - k)]);
      const std::size_t f = features_[k];

      values_.clear();
      for (std::size_t s = begin; s < end; ++s) {
        const std::size_t row = samples_[s];
        values_.emplace_back(X_(row, f), y_[row]);
      }
      std::sort(values_.begin(), values_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (values_.front().first == values_.back().first) continue;
      ++evaluated;

      const double total = static_cast<double>(values_.size());
      double total_pos = 0.0;
      for (const auto& v : values_) total_pos += v.second;
      double left_pos = 0.0;
      for (std::size_t i = 1; i < values_.size(); ++i) {
        left_pos += values_[i - 1].second;
        if (values_[i - 1].first == values_[i].first) continue;
        const double nl = static_cast<double>(i);
        const double nr = total - nl;
        const double right_pos = total_pos - left_pos;
        // Size-weighted Gini impurity of the children, up to a factor of 2.
        const double impurity =
            left_pos * (nl - left_pos) / nl + right_pos * (nr - right_pos) / nr;
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best.feature = static_cast<std::int32_t>(f);
          best.threshold = 0.5 * (static_cast<double>(values_[i - 1].first) + values_[i].first);
          best.impurity = impurity;
        }
      }
    }
    return best;
  }

  const PixelMatrix& X_;
  std::span<const std::uint8_t> y_;
  std::size_t mtry_;
  Rng rng_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> samples_;
  std::vector<std::pair<float, std::uint8_t>> values_;
};

}  // namespace

double DecisionTree::predict(std::span<const float> x) const {
  std::size_t k = 0;
  while (!nodes[k].is_leaf()) {
    const TreeNode& n = nodes[k];
    k = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                        : n.right);
  }
  return nodes[k].value;
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::size_t best = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [k, level] = stack.back();
    stack.pop_back();
    best = std::max(best, level);
    if (!nodes[k].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes[k].left), level + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[k].right), level + 1);
    }
  }
  return best;
}

std::size_t DecisionTree::internal_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

ForestModel::ForestModel(std::size_t dimension, std::vector<DecisionTree> trees)
    : Classifier(ClassifierKind::RandomForest, dimension), trees_(std::move(trees)) {
  if (trees_.empty()) throw InvalidArgument("ForestModel needs at least one tree");
}

void ForestModel::score_rows(std::span<const float> rows, std::span<double> out) const {
  const std::size_t d = dimension();
  const double inv = 1.0 / static_cast<double>(trees_.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto x = rows.subspan(i * d, d);
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict(x);
    out[i] = sum * inv;
  }
}

std::size_t ForestModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& t : trees_) total += 2 * t.internal_count() + t.leaf_count();
  return total;
}

std::shared_ptr<const ForestModel> fit_random_forest(const PixelMatrix& X,
                                                     std::span<const std::uint8_t> y,
                                                     const ClassifierConfig& cfg) {
  cfg.check();
  check_training_inputs(X, y);
  return detail::fit_with_scaling<ForestModel>(X, cfg, [&](const PixelMatrix& Xf) {
    const auto mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(Xf.cols))));
    std::vector<DecisionTree> trees(cfg.n_estimators);
    parallel_for(cfg.n_estimators, [&](std::size_t t) {
      TreeBuilder builder(Xf, y, mtry, derive_seed({cfg.seed, tag_hash("tree"), t}));
      trees[t] = builder.build();
    });
    auto model = std::make_shared<ForestModel>(Xf.cols, std::move(trees));
    model->set_training({cfg.seed, cfg.n_estimators});
    return model;
  });
}

}  // namespace hypercol
