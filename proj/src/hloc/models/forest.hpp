#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hloc {

struct ForestConfig {
  int trees = 100;
  int max_depth = 12;
  int min_samples_split = 2;
  // 0 picks floor(sqrt(features)).
  int features_per_split = 0;
  std::uint64_t seed = 0;
};

/// Flattened binary trees. Node i is a leaf when feature[i] < 0; value[i] is
/// then the positive-class fraction of the bootstrap rows that reached it.
struct RandomForest {
  std::vector<std::int32_t> tree_offsets;  // first node of each tree
  std::vector<std::int32_t> feature;
  std::vector<double> threshold;  // go left when x[feature] <= threshold
  std::vector<std::int32_t> left;
  std::vector<std::int32_t> right;
  std::vector<double> value;
  std::int32_t features = 0;

  /// Mean leaf value over trees, in [0, 1].
  double score(std::span<const double> row) const;
};

/// Gini-split bagged trees on row-major x (n x cols) with 0/1 labels.
RandomForest train_forest(std::span<const double> x, std::size_t cols, std::span<const int> labels,
                          const ForestConfig& config);

}  // namespace hloc
