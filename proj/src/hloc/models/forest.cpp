#include "hloc/models/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hloc/error.hpp"
#include "hloc/rng.hpp"

namespace hloc {
namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;  // weighted child impurity
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const double> x, std::size_t cols, std::span<const int> labels,
              const ForestConfig& config, RandomForest& out, Rng& rng)
      : x_(x), cols_(cols), labels_(labels), config_(config), out_(out), rng_(rng) {
    const int d = static_cast<int>(cols);
    mtry_ = config.features_per_split > 0 ? std::min(config.features_per_split, d)
                                          : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(d))));
    order_.resize(cols);
  }

  int build(std::vector<std::size_t>& rows, int depth) {
    const int node = static_cast<int>(out_.feature.size());
    out_.feature.push_back(-1);
    out_.threshold.push_back(0.0);
    out_.left.push_back(-1);
    out_.right.push_back(-1);
    double pos = 0;
    for (std::size_t r : rows) pos += labels_[r];
    const double n = static_cast<double>(rows.size());
    out_.value.push_back(pos / n);

    if (depth >= config_.max_depth || rows.size() < static_cast<std::size_t>(config_.min_samples_split) ||
        pos == 0 || pos == n) {
      return node;
    }
    const Split s = best_split(rows, pos);
    if (s.feature < 0) return node;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) (at(r, s.feature) <= s.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    out_.feature[node] = s.feature;
    out_.threshold[node] = s.threshold;
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    out_.left[node] = l;
    out_.right[node] = r;
    return node;
  }

 private:
  double at(std::size_t row, int feature) const { return x_[row * cols_ + static_cast<std::size_t>(feature)]; }

  // Draws features without replacement until mtry non-constant ones were tried.
  Split best_split(const std::vector<std::size_t>& rows, double pos) {
    std::iota(order_.begin(), order_.end(), 0);
    const double n = static_cast<double>(rows.size());
    const double parent = gini(pos, n);
    Split best;
    best.impurity = parent * n;
    int tried = 0;
    std::vector<std::pair<double, int>> column(rows.size());
    for (std::size_t k = 0; k < order_.size() && tried < mtry_; ++k) {
      std::swap(order_[k], order_[k + rng_.below(order_.size() - k)]);
      const int f = order_[k];
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {at(rows[i], f), labels_[rows[i]]};
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      ++tried;
      double left_pos = 0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        left_pos += column[i].second;
        if (column[i].first == column[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        const double impurity = gini(left_pos, nl) * nl + gini(pos - left_pos, nr) * nr;
        if (impurity < best.impurity - 1e-12) {
          best.impurity = impurity;
          best.feature = f;
          best.threshold = 0.5 * (column[i].first + column[i + 1].first);
          // Guard against the midpoint rounding onto the upper value.
          if (!(best.threshold < column[i + 1].first)) best.threshold = column[i].first;
        }
      }
    }
    return best;
  }

  static double gini(double pos, double n) {
    if (n <= 0) return 0.0;
    const double p = pos / n;
    return 2.0 * p * (1.0 - p);
  }

  std::span<const double> x_;
  std::size_t cols_;
  std::span<const int> labels_;
  const ForestConfig& config_;
  RandomForest& out_;
  Rng& rng_;
  int mtry_ = 1;
  std::vector<int> order_;
};

}  // namespace

double RandomForest::score(std::span<const double> row) const {
  if (tree_offsets.empty()) return 0.0;
  double total = 0.0;
  for (std::int32_t root : tree_offsets) {
    std::int32_t node = root;
    while (feature[node] >= 0) {
      node = row[static_cast<std::size_t>(feature[node])] <= threshold[node] ? left[node] : right[node];
    }
    total += value[node];
  }
  return total / static_cast<double>(tree_offsets.size());
}

RandomForest train_forest(std::span<const double> x, std::size_t cols, std::span<const int> labels,
                          const ForestConfig& config) {
  if (config.trees < 1 || config.max_depth < 0) throw Error(ErrorKind::Config, "forest needs at least one tree");
  const std::size_t n = labels.size();
  if (n == 0 || x.size() != n * cols) throw Error(ErrorKind::Data, "forest training data is empty or ragged");
  RandomForest forest;
  forest.features = static_cast<std::int32_t>(cols);
  Rng rng(config.seed);
  for (int t = 0; t < config.trees; ++t) {
    std::vector<std::size_t> rows(n);
    for (std::size_t& r : rows) r = rng.below(n);
    forest.tree_offsets.push_back(static_cast<std::int32_t>(forest.feature.size()));
    TreeBuilder builder(x, cols, labels, config, forest, rng);
    builder.build(rows, 0);
  }
  return forest;
}

}  // namespace hloc
