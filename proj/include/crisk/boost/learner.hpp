#pragma once

// Leaf-wise tree growth over bundled histograms.
//
// Gradients and hessians are quantised to fixed point (a power-of-two scale
// chosen per training run so sums cannot overflow int64). Histogram sums
// are therefore exact: sibling subtraction reproduces direct construction
// bit for bit, and parallel construction is independent of thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "crisk/boost/bundle.hpp"
#include "crisk/boost/config.hpp"
#include "crisk/boost/gain.hpp"
#include "crisk/boost/tree.hpp"
#include "crisk/parallel.hpp"

namespace crisk::boost {

struct HistEntry {
  std::int64_t g = 0, h = 0, n = 0;

  HistEntry& operator+=(const HistEntry& o) {
    g += o.g;
    h += o.h;
    n += o.n;
    return *this;
  }
  HistEntry& operator-=(const HistEntry& o) {
    g -= o.g;
    h -= o.h;
    n -= o.n;
    return *this;
  }
  friend HistEntry operator-(HistEntry a, const HistEntry& b) { return a -= b; }
  friend HistEntry operator+(HistEntry a, const HistEntry& b) { return a += b; }
  friend bool operator==(const HistEntry&, const HistEntry&) = default;
};

using Histogram = std::vector<HistEntry>;

/// Power-of-two scale such that n rows of magnitude <= max_abs sum below 2^62.
inline double quantization_scale(std::size_t n, double max_abs) {
  const double bound = std::max(1.0, static_cast<double>(std::max<std::size_t>(n, 1)) * std::max(max_abs, 1e-300));
  int e = static_cast<int>(std::floor(62.0 - std::log2(bound))) - 1;
  e = std::clamp(e, -60, 40);
  return std::ldexp(1.0, e);
}

inline std::int64_t quantize(double v, double scale) { return std::llround(v * scale); }

/// Binned training rows in bundled layout.
class TrainingSet {
 public:
  TrainingSet(const BinnedDataset& data, std::vector<FeatureBundle> bundles)
      : data_(&data), bundles_(std::move(bundles)) {
    feature_slot_.assign(data.num_features(), {0, 0});
    std::size_t off = 0;
    for (std::size_t b = 0; b < bundles_.size(); ++b) {
      for (std::size_t m = 0; m < bundles_[b].features.size(); ++m) feature_slot_[bundles_[b].features[m]] = {b, m};
      hist_offset_.push_back(off);
      off += bundles_[b].num_bins;
      merged_.push_back(merge_column(data, bundles_[b]));
    }
    total_bins_ = off;
  }

  const BinnedDataset& data() const { return *data_; }
  const std::vector<FeatureBundle>& bundles() const { return bundles_; }
  const std::vector<BinId>& merged(std::size_t b) const { return merged_[b]; }
  std::size_t hist_offset(std::size_t b) const { return hist_offset_[b]; }
  std::size_t total_bins() const { return total_bins_; }
  std::pair<std::size_t, std::size_t> slot(std::size_t feature) const { return feature_slot_[feature]; }

 private:
  const BinnedDataset* data_;
  std::vector<FeatureBundle> bundles_;
  std::vector<std::vector<BinId>> merged_;
  std::vector<std::size_t> hist_offset_;
  std::vector<std::pair<std::size_t, std::size_t>> feature_slot_;
  std::size_t total_bins_ = 0;
};

struct SplitCandidate {
  bool valid = false;
  double gain = -std::numeric_limits<double>::infinity();  // unpenalised
  std::uint32_t feature = 0;
  std::uint32_t threshold_bin = 0;
  bool default_left = false;
  HistEntry left;  // sums of the left child
};

/// Gradient statistics handed to the learner for one tree.
struct GradientView {
  std::span<const std::size_t> rows;  // sampled rows, ascending
  std::span<const std::int64_t> g;    // indexed by row id
  std::span<const std::int64_t> h;
  double scale = 1;
};

class TreeLearner {
 public:
  TreeLearner(const TrainingSet& set, const TrainConfig& cfg) : set_(set), cfg_(cfg) {}

  /// Sums of a feature's own bins, extracted from a bundled histogram.
  /// Members of a multi-feature bundle recover their default bin as the
  /// leaf total minus every other bin.
  Histogram feature_histogram(const Histogram& hist, std::size_t feature, const HistEntry& total) const {
    const auto [b, m] = set_.slot(feature);
    const auto& bundle = set_.bundles()[b];
    const auto& mapper = set_.data().mappers[feature];
    const auto base = set_.hist_offset(b);
    Histogram fh(mapper.num_bins());
    if (bundle.singleton()) {
      std::copy(hist.begin() + static_cast<std::ptrdiff_t>(base),
                hist.begin() + static_cast<std::ptrdiff_t>(base + fh.size()), fh.begin());
      return fh;
    }
    HistEntry rest;
    for (std::uint32_t j = 0; j < fh.size(); ++j) {
      if (j == mapper.default_bin) continue;
      fh[j] = hist[base + bundle.offsets[m] + j];
      rest += fh[j];
    }
    fh[mapper.default_bin] = total - rest;
    return fh;
  }

  /// Best split of one feature; thresholds ascend and missing-right is
  /// tried before missing-left, so the first strict maximum wins.
  SplitCandidate best_split_for_feature(const Histogram& fh, std::uint32_t feature, const HistEntry& total,
                                        double scale) const {
    SplitCandidate best;
    best.feature = feature;
    const auto nv = static_cast<std::uint32_t>(fh.size() - 1);
    const HistEntry miss = fh[nv];
    const double inv = 1.0 / scale;
    const auto min_n = static_cast<std::int64_t>(cfg_.min_data_in_leaf);

    auto consider = [&](const HistEntry& l, std::uint32_t t, bool dleft) {
      const HistEntry r = total - l;
      if (l.n < std::max<std::int64_t>(min_n, 1) || r.n < std::max<std::int64_t>(min_n, 1)) return;
      const double gl = static_cast<double>(l.g) * inv, hl = static_cast<double>(l.h) * inv;
      const double gr = static_cast<double>(r.g) * inv, hr = static_cast<double>(r.h) * inv;
      if (hl < cfg_.min_sum_hessian_in_leaf || hr < cfg_.min_sum_hessian_in_leaf) return;
      const double gain = split_gain(gl, hl, gr, hr, cfg_.reg_lambda, 0.0, cfg_.reg_alpha);
      if (gain > best.gain) {
        best.valid = true;
        best.gain = gain;
        best.threshold_bin = t;
        best.default_left = dleft;
        best.left = l;
      }
    };

    HistEntry cum;
    for (std::uint32_t t = 0; t < nv; ++t) {
      cum += fh[t];
      if (t + 1 == nv) {
        if (miss.n > 0) consider(cum, t, false);  // values left, missing right
        break;
      }
      consider(cum, t, false);
      if (miss.n > 0) consider(cum + miss, t, true);
    }
    return best;
  }

  /// Grows one tree on the sampled rows, restricted to features with
  /// feature_mask[f] != 0. Leaf values are unshrunk; the caller scales.
  Tree grow(const GradientView& grad, std::span<const char> feature_mask) {
    const auto& data = set_.data();
    const std::size_t nb = set_.bundles().size();
    needed_.assign(nb, 0);
    for (std::size_t f = 0; f < data.num_features(); ++f)
      if (feature_mask[f]) needed_[set_.slot(f).first] = 1;
    features_.clear();
    for (std::size_t f = 0; f < data.num_features(); ++f)
      if (feature_mask[f]) features_.push_back(static_cast<std::uint32_t>(f));

    idx_.assign(grad.rows.begin(), grad.rows.end());
    scratch_.resize(idx_.size());
    leaves_.clear();

    Tree tree;
    Leaf root;
    root.begin = 0;
    root.count = idx_.size();
    root.depth = 0;
    for (auto r : grad.rows) root.sum += HistEntry{grad.g[r], grad.h[r], 1};
    leaves_.push_back(std::move(root));
    if (can_split(leaves_[0])) {
      leaves_[0].hist = build_histogram(leaves_[0], grad);
      leaves_[0].best = find_best(leaves_[0], grad.scale);
    }

    while (leaves_.size() < cfg_.num_leaves) {
      std::size_t pick = leaves_.size();
      double best_gain = cfg_.min_split_gain;
      for (std::size_t l = 0; l < leaves_.size(); ++l) {
        const auto& c = leaves_[l].best;
        if (c.valid && c.gain > best_gain) {
          best_gain = c.gain;
          pick = l;
        }
      }
      if (pick == leaves_.size()) break;
      split_leaf(tree, pick, grad);
    }

    tree.leaf_values.resize(leaves_.size());
    tree.leaf_depth.resize(leaves_.size());
    const double inv = 1.0 / grad.scale;
    for (std::size_t l = 0; l < leaves_.size(); ++l) {
      const auto& s = leaves_[l].sum;
      tree.leaf_values[l] = leaf_output(static_cast<double>(s.g) * inv, static_cast<double>(s.h) * inv,
                                        cfg_.reg_lambda, cfg_.reg_alpha);
      tree.leaf_depth[l] = leaves_[l].depth;
    }
    leaves_.clear();
    return tree;
  }

  /// Direct histogram of the rows in [begin, begin + count) of the
  /// current partition. Public for the subtraction consistency tests.
  Histogram histogram_of(std::span<const std::size_t> rows, const GradientView& grad) const {
    Histogram hist(set_.total_bins());
    parallel_for(set_.bundles().size(), cfg_.threads, [&](std::size_t b) {
      const auto& col = set_.merged(b);
      HistEntry* h = hist.data() + set_.hist_offset(b);
      for (auto r : rows) {
        auto& e = h[col[r]];
        e.g += grad.g[r];
        e.h += grad.h[r];
        ++e.n;
      }
    });
    return hist;
  }

 private:
  struct Leaf {
    std::size_t begin = 0, count = 0;
    int depth = 0;
    HistEntry sum;
    Histogram hist;
    SplitCandidate best;
    std::int32_t parent = -1;  // node index, -1 for the root
    bool is_left = false;
  };

  bool can_split(const Leaf& l) const {
    if (cfg_.max_depth > 0 && l.depth >= cfg_.max_depth) return false;
    return l.count >= 2 * std::max<std::size_t>(cfg_.min_data_in_leaf, 1);
  }

  Histogram build_histogram(const Leaf& leaf, const GradientView& grad) const {
    Histogram hist(set_.total_bins());
    parallel_for(set_.bundles().size(), cfg_.threads, [&](std::size_t b) {
      if (!needed_[b]) return;
      const auto& col = set_.merged(b);
      HistEntry* h = hist.data() + set_.hist_offset(b);
      for (std::size_t i = leaf.begin; i < leaf.begin + leaf.count; ++i) {
        const auto r = idx_[i];
        auto& e = h[col[r]];
        e.g += grad.g[r];
        e.h += grad.h[r];
        ++e.n;
      }
    });
    return hist;
  }

  SplitCandidate find_best(const Leaf& leaf, double scale) const {
    std::vector<SplitCandidate> per(features_.size());
    parallel_for(features_.size(), cfg_.threads, [&](std::size_t i) {
      const auto f = features_[i];
      per[i] = best_split_for_feature(feature_histogram(leaf.hist, f, leaf.sum), f, leaf.sum, scale);
    });
    SplitCandidate best;
    for (const auto& c : per)  // ascending feature id; strict > keeps the lowest on ties
      if (c.valid && c.gain > best.gain) best = c;
    return best;
  }

  bool goes_left(std::size_t row, const SplitCandidate& s) const {
    const auto& data = set_.data();
    const auto b = data.bins[s.feature][row];
    if (b == data.mappers[s.feature].missing_bin()) return s.default_left;
    return b <= s.threshold_bin;
  }

  void split_leaf(Tree& tree, std::size_t li, const GradientView& grad) {
    Leaf& leaf = leaves_[li];
    const SplitCandidate s = leaf.best;
    const auto& mapper = set_.data().mappers[s.feature];

    // Stable partition of the leaf's rows.
    std::size_t nl = 0, nr = 0;
    for (std::size_t i = leaf.begin; i < leaf.begin + leaf.count; ++i) {
      const auto r = idx_[i];
      if (goes_left(r, s)) idx_[leaf.begin + nl++] = r;
      else scratch_[nr++] = r;
    }
    std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(nr),
              idx_.begin() + static_cast<std::ptrdiff_t>(leaf.begin + nl));

    const auto node_id = static_cast<std::int32_t>(tree.nodes.size());
    TreeNode node;
    node.feature = s.feature;
    node.threshold_bin = s.threshold_bin;
    node.threshold = mapper.upper[s.threshold_bin];
    node.default_left = s.default_left;
    node.gain = s.gain;
    node.count = leaf.count;
    const auto right_id = static_cast<std::int32_t>(leaves_.size());
    node.left = ~static_cast<std::int32_t>(li);
    node.right = ~right_id;
    tree.nodes.push_back(node);
    if (leaf.parent >= 0) {
      auto& p = tree.nodes[static_cast<std::size_t>(leaf.parent)];
      (leaf.is_left ? p.left : p.right) = node_id;
    }

    Leaf right;
    right.begin = leaf.begin + nl;
    right.count = nr;
    right.depth = leaf.depth + 1;
    right.sum = leaf.sum - s.left;
    right.parent = node_id;
    right.is_left = false;

    Histogram parent_hist = std::move(leaf.hist);
    leaf.count = nl;
    leaf.depth += 1;
    leaf.sum = s.left;
    leaf.parent = node_id;
    leaf.is_left = true;
    leaf.best = {};
    leaf.hist.clear();
    leaves_.push_back(std::move(right));

    Leaf& l = leaves_[li];
    Leaf& r = leaves_.back();
    const bool want_l = can_split(l), want_r = can_split(r);
    if (cfg_.histogram_subtraction) {
      Leaf& small = l.count <= r.count ? l : r;
      Leaf& large = l.count <= r.count ? r : l;
      const bool want_small = &small == &l ? want_l : want_r;
      const bool want_large = &large == &l ? want_l : want_r;
      if (want_small || want_large) small.hist = build_histogram(small, grad);
      if (want_large) {
        large.hist = std::move(parent_hist);
        for (std::size_t i = 0; i < large.hist.size(); ++i) large.hist[i] -= small.hist[i];
      }
      if (!want_small) small.hist.clear();
    } else {
      if (want_l) l.hist = build_histogram(l, grad);
      if (want_r) r.hist = build_histogram(r, grad);
    }
    if (want_l) l.best = find_best(l, grad.scale);
    if (want_r) r.best = find_best(r, grad.scale);
    if (!want_l) l.hist.clear();
    if (!want_r) r.hist.clear();
  }

  const TrainingSet& set_;
  const TrainConfig& cfg_;
  std::vector<std::size_t> idx_, scratch_;
  std::vector<Leaf> leaves_;
  std::vector<char> needed_;
  std::vector<std::uint32_t> features_;
};

}  // namespace crisk::boost
