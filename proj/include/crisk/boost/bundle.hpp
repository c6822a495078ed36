#pragma once

// Exclusive feature bundling. Features that are (almost) never off their
// default bin on the same row share one histogram column: member m's bin b
// is stored as offsets[m] + b, and merged bin 0 means "every member at its
// default bin". A single-member bundle stores raw bin ids unchanged.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <vector>

#include "crisk/boost/binning.hpp"

namespace crisk::boost {

struct FeatureBundle {
  std::vector<std::size_t> features;
  std::vector<std::uint32_t> offsets;
  std::uint32_t num_bins = 0;
  std::size_t conflict_count = 0;  // rows where two members were both non-default

  bool singleton() const { return features.size() == 1; }
};

namespace detail {

class RowBitset {
 public:
  explicit RowBitset(std::size_t n = 0) : words_((n + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  std::size_t count_and(const RowBitset& o) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) c += static_cast<std::size_t>(std::popcount(words_[i] & o.words_[i]));
    return c;
  }
  void merge(const RowBitset& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
  }

 private:
  std::vector<std::uint64_t> words_;
};

}  // namespace detail

inline constexpr std::uint32_t kMaxBundleBins = 65535;

/// Greedy bundling: features are visited in ascending order of their total
/// pairwise conflict count (ties by index) and placed into the first bundle
/// whose accumulated conflicts stay within max_conflict_fraction * rows.
inline std::vector<FeatureBundle> bundle_features(const BinnedDataset& data, double max_conflict_fraction) {
  const std::size_t nf = data.num_features();
  const auto budget = static_cast<std::size_t>(max_conflict_fraction * static_cast<double>(data.rows));

  std::vector<detail::RowBitset> active(nf, detail::RowBitset(data.rows));
  std::vector<std::size_t> active_count(nf, 0);
  for (std::size_t f = 0; f < nf; ++f) {
    const auto def = data.mappers[f].default_bin;
    for (std::size_t r = 0; r < data.rows; ++r)
      if (data.bins[f][r] != def) {
        active[f].set(r);
        ++active_count[f];
      }
  }

  std::vector<std::size_t> degree(nf, 0);
  for (std::size_t i = 0; i < nf; ++i)
    for (std::size_t j = i + 1; j < nf; ++j) {
      const auto c = active[i].count_and(active[j]);
      degree[i] += c;
      degree[j] += c;
    }
  std::vector<std::size_t> order(nf);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return degree[a] < degree[b]; });

  struct Open {
    FeatureBundle bundle;
    detail::RowBitset used;
    std::uint32_t next_offset = 1;
  };
  std::vector<Open> open;
  for (auto f : order) {
    const auto nb = data.mappers[f].num_bins();
    bool placed = false;
    for (auto& o : open) {
      if (o.next_offset + nb > kMaxBundleBins) continue;
      const auto c = o.used.count_and(active[f]);
      if (o.bundle.conflict_count + c > budget) continue;
      o.bundle.features.push_back(f);
      o.bundle.offsets.push_back(o.next_offset);
      o.bundle.conflict_count += c;
      o.next_offset += nb;
      o.used.merge(active[f]);
      placed = true;
      break;
    }
    if (!placed) {
      Open o{{}, detail::RowBitset(data.rows), 1};
      o.bundle.features.push_back(f);
      o.bundle.offsets.push_back(o.next_offset);
      o.next_offset += nb;
      o.used.merge(active[f]);
      open.push_back(std::move(o));
    }
  }

  std::vector<FeatureBundle> out;
  for (auto& o : open) {
    auto& b = o.bundle;
    if (b.singleton()) {
      b.offsets = {0};
      b.num_bins = data.mappers[b.features[0]].num_bins();
    } else {
      b.num_bins = o.next_offset;
    }
    out.push_back(std::move(b));
  }
  // Deterministic layout: bundles ordered by their smallest member.
  std::sort(out.begin(), out.end(), [](const FeatureBundle& a, const FeatureBundle& b) {
    return *std::min_element(a.features.begin(), a.features.end()) <
           *std::min_element(b.features.begin(), b.features.end());
  });
  return out;
}

/// One singleton bundle per feature.
inline std::vector<FeatureBundle> unbundled_layout(const BinnedDataset& data) {
  std::vector<FeatureBundle> out;
  for (std::size_t f = 0; f < data.num_features(); ++f)
    out.push_back({{f}, {0}, data.mappers[f].num_bins(), 0});
  return out;
}

/// Merged bin id of `row`. On a conflicting row the first non-default
/// member wins, which is where bundling becomes lossy.
inline std::uint32_t merged_bin(const BinnedDataset& data, const FeatureBundle& b, std::size_t row) {
  if (b.singleton()) return data.bins[b.features[0]][row];
  for (std::size_t m = 0; m < b.features.size(); ++m) {
    const auto bin = data.bins[b.features[m]][row];
    if (bin != data.mappers[b.features[m]].default_bin) return b.offsets[m] + bin;
  }
  return 0;
}

inline std::vector<BinId> merge_column(const BinnedDataset& data, const FeatureBundle& b) {
  std::vector<BinId> col(data.rows);
  for (std::size_t r = 0; r < data.rows; ++r) col[r] = static_cast<BinId>(merged_bin(data, b, r));
  return col;
}

/// Recovers member `m`'s bin id from a merged id.
inline std::uint32_t member_bin(const BinnedDataset& data, const FeatureBundle& b, std::size_t m,
                                std::uint32_t merged) {
  if (b.singleton()) return merged;
  const auto nb = data.mappers[b.features[m]].num_bins();
  if (merged >= b.offsets[m] && merged < b.offsets[m] + nb) return merged - b.offsets[m];
  return data.mappers[b.features[m]].default_bin;
}

}  // namespace crisk::boost
