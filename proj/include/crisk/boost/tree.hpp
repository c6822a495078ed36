#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "crisk/boost/binning.hpp"

namespace crisk::boost {

/// Internal node. Children >= 0 are node indices; a negative child c
/// refers to leaf ~c.
struct TreeNode {
  std::uint32_t feature = 0;
  std::uint32_t threshold_bin = 0;  // bin <= threshold_bin goes left
  double threshold = 0;             // upper edge of threshold_bin; x <= threshold goes left
  bool default_left = false;        // side taken by missing cells
  std::int32_t left = -1, right = -1;
  double gain = 0;                  // unpenalised split gain
  std::size_t count = 0;            // sampled rows reaching the node

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<double> leaf_values;  // already scaled by the learning rate
  std::vector<int> leaf_depth;

  std::size_t num_leaves() const { return leaf_values.size(); }

  int depth() const {
    int d = 0;
    for (int v : leaf_depth) d = std::max(d, v);
    return d;
  }

  /// Leaf reached by a row given as raw feature values.
  std::size_t leaf_for(std::span<const double> x) const {
    if (nodes.empty()) return 0;
    std::int32_t node = 0;
    while (node >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(node)];
      const double v = x[n.feature];
      const bool go_left = is_missing(v) ? n.default_left : v <= n.threshold;
      node = go_left ? n.left : n.right;
    }
    return static_cast<std::size_t>(~node);
  }

  /// Leaf reached by row `r` of a binned dataset.
  std::size_t leaf_for(const BinnedDataset& data, std::size_t r) const {
    if (nodes.empty()) return 0;
    std::int32_t node = 0;
    while (node >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(node)];
      const auto b = data.bins[n.feature][r];
      const bool go_left = b == data.mappers[n.feature].missing_bin() ? n.default_left : b <= n.threshold_bin;
      node = go_left ? n.left : n.right;
    }
    return static_cast<std::size_t>(~node);
  }

  double predict(std::span<const double> x) const { return leaf_values[leaf_for(x)]; }
  double predict(const BinnedDataset& data, std::size_t r) const { return leaf_values[leaf_for(data, r)]; }

  friend bool operator==(const Tree&, const Tree&) = default;
};

}  // namespace crisk::boost
