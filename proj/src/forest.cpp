#include <algorithm>
#include <numeric>
#include <random>

#include "comeback/errors.hpp"
#include "comeback/parallel.hpp"
#include "comeback/predict.hpp"

namespace comeback::predict {

namespace {

struct TreeBuilder {
  const Matrix& X;
  std::span<const int> y;
  std::span<const double> weight;
  const ForestOptions& options;
  std::size_t mtry;
  std::mt19937_64 rng;
  DecisionTree tree;

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  static double gini(double w1, double w) {
    if (w <= 0.0) return 0.0;
    const double p = w1 / w;
    return 2.0 * p * (1.0 - p);
  }

  Split best_split(std::vector<std::size_t>& idx, double w_total, double w1_total) {
    std::vector<std::size_t> features(X.cols);
    std::iota(features.begin(), features.end(), 0);
    for (std::size_t k = 0; k < mtry; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, features.size() - 1);
      std::swap(features[k], features[pick(rng)]);
    }
    const double parent = gini(w1_total, w_total);
    const auto min_leaf = static_cast<std::size_t>(std::max(1, options.min_leaf));
    Split best;
    for (std::size_t k = 0; k < mtry; ++k) {
      const std::size_t f = features[k];
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return X(a, f) < X(b, f) || (X(a, f) == X(b, f) && a < b);
      });
      double wl = 0.0, wl1 = 0.0;
      for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
        wl += weight[idx[i]];
        if (y[idx[i]] == 1) wl1 += weight[idx[i]];
        const double here = X(idx[i], f), next = X(idx[i + 1], f);
        if (here == next) continue;
        if (i + 1 < min_leaf || idx.size() - (i + 1) < min_leaf) continue;
        const double wr = w_total - wl, wr1 = w1_total - wl1;
        const double child = (wl * gini(wl1, wl) + wr * gini(wr1, wr)) / w_total;
        const double gain = parent - child;
        if (gain > best.gain + 1e-12) {
          best.feature = static_cast<int>(f);
          best.threshold = here + (next - here) / 2.0;
          best.gain = gain;
        }
      }
    }
    return best;
  }

  int grow(std::vector<std::size_t> idx, int depth) {
    double w = 0.0, w1 = 0.0;
    for (std::size_t i : idx) {
      w += weight[i];
      if (y[i] == 1) w1 += weight[i];
    }
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, w > 0.0 ? w1 / w : 0.5});
    const bool pure = w1 == 0.0 || w1 == w;
    if (pure || depth >= options.max_depth ||
        idx.size() < 2 * static_cast<std::size_t>(std::max(1, options.min_leaf))) {
      return id;
    }
    const Split split = best_split(idx, w, w1);
    if (split.feature < 0) return id;
    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (X(i, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    tree.nodes[id].feature = split.feature;
    tree.nodes[id].threshold = split.threshold;
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  }
};

}  // namespace

double DecisionTree::leaf_value(std::span<const double> x) const {
  if (nodes.empty()) throw ParameterError("empty decision tree");
  int n = 0;
  while (nodes[n].feature >= 0) {
    n = x[nodes[n].feature] <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
  }
  return nodes[n].value;
}

double RandomForest::predict_proba(std::span<const double> x) const {
  if (trees.empty()) throw ParameterError("random forest has no trees");
  double votes = 0.0;
  for (const auto& t : trees) {
    const double v = t.leaf_value(x);
    votes += v > 0.5 ? 1.0 : (v == 0.5 ? 0.5 : 0.0);
  }
  return votes / static_cast<double>(trees.size());
}

RandomForest train_random_forest(const Matrix& X, std::span<const int> y,
                                 const ForestOptions& options) {
  if (X.rows != y.size()) throw ParameterError("design matrix and labels differ in length");
  if (X.rows == 0) throw DataError("random forest on an empty training set");
  if (options.n_trees < 1) throw ParameterError("n_trees must be >= 1");
  if (options.max_depth < 0) throw ParameterError("max_depth must be >= 0");
  if (options.mtry < 0 || static_cast<std::size_t>(options.mtry) > X.cols) {
    throw ParameterError("mtry must be between 0 and the number of features");
  }
  std::size_t mtry = static_cast<std::size_t>(options.mtry);
  if (mtry == 0) {
    mtry = 1;
    while (mtry * mtry < X.cols) ++mtry;
  }
  const auto [w0, w1] = options.class_weights ? *options.class_weights : balanced_class_weights(y);

  RandomForest forest;
  forest.trees.resize(static_cast<std::size_t>(options.n_trees));
  parallel_for(forest.trees.size(), options.threads, [&](std::size_t t) {
    std::mt19937_64 rng(derive_seed(options.seed, t));
    std::uniform_int_distribution<std::size_t> draw(0, X.rows - 1);
    std::vector<double> weight(X.rows, 0.0);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < X.rows; ++i) {
      const std::size_t r = draw(rng);
      if (weight[r] == 0.0) idx.push_back(r);
      weight[r] += y[r] == 1 ? w1 : w0;
    }
    std::sort(idx.begin(), idx.end());
    TreeBuilder builder{X, y, weight, options, mtry, std::move(rng), {}};
    builder.grow(std::move(idx), 0);
    forest.trees[t] = std::move(builder.tree);
  });
  return forest;
}

}  // namespace comeback::predict
