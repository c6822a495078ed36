#pragma once

// Per-feature quantile binning. Value bins are closed on the right: bin i
// holds (upper[i-1], upper[i]], the last upper bound is +inf, and missing
// cells go to a dedicated bin after the value bins.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "crisk/boost/config.hpp"
#include "crisk/common.hpp"
#include "crisk/parallel.hpp"
#include "crisk/tabular.hpp"

namespace crisk::boost {

using BinId = std::uint16_t;

struct BinMapper {
  std::vector<double> upper;  // strictly increasing; back() == +inf
  std::uint32_t default_bin = 0;  // most populated bin on the binning sample

  std::uint32_t num_value_bins() const { return static_cast<std::uint32_t>(upper.size()); }
  std::uint32_t missing_bin() const { return num_value_bins(); }
  std::uint32_t num_bins() const { return num_value_bins() + 1; }

  std::uint32_t value_to_bin(double x) const {
    if (is_missing(x)) return missing_bin();
    return static_cast<std::uint32_t>(std::lower_bound(upper.begin(), upper.end(), x) - upper.begin());
  }

  friend bool operator==(const BinMapper&, const BinMapper&) = default;
};

namespace detail {

// A cut strictly above `lo` and below `hi`; falls back to `lo` itself when
// the two are adjacent doubles.
inline double cut_between(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2;
  return (mid > lo && mid < hi) ? mid : lo;
}

}  // namespace detail

/// Builds bin edges from the (unsorted) sample values of one feature.
/// Columns with at most `max_bins` distinct values get one bin per value;
/// otherwise cuts sit just above the values at ranks ceil(i n / max_bins).
inline BinMapper fit_bin_mapper(std::vector<double> sample, std::size_t max_bins) {
  std::erase_if(sample, [](double v) { return is_missing(v); });
  std::sort(sample.begin(), sample.end());
  BinMapper m;
  const auto inf = std::numeric_limits<double>::infinity();

  std::vector<double> distinct;
  std::vector<std::size_t> counts;
  for (double v : sample) {
    if (distinct.empty() || v != distinct.back()) {
      distinct.push_back(v);
      counts.push_back(0);
    }
    ++counts.back();
  }

  if (distinct.size() <= max_bins) {
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
      m.upper.push_back(detail::cut_between(distinct[i], distinct[i + 1]));
  } else {
    const std::size_t n = sample.size();
    for (std::size_t i = 1; i < max_bins; ++i) {
      const std::size_t rank = (i * n + max_bins - 1) / max_bins;  // ceil(i n / B), 1-based
      const double q = sample[rank - 1];
      if (!m.upper.empty() && q <= m.upper.back()) continue;
      auto next = std::upper_bound(sample.begin(), sample.end(), q);
      if (next == sample.end()) break;
      m.upper.push_back(detail::cut_between(q, *next));
    }
  }
  m.upper.push_back(inf);

  // Default bin: the most populated one (missing cells counted separately).
  std::vector<std::size_t> per_bin(m.num_bins(), 0);
  for (std::size_t i = 0; i < distinct.size(); ++i) per_bin[m.value_to_bin(distinct[i])] += counts[i];
  per_bin[m.missing_bin()] = 0;
  m.default_bin = static_cast<std::uint32_t>(std::max_element(per_bin.begin(), per_bin.end()) - per_bin.begin());
  return m;
}

/// Bin ids of every feature for a fixed set of rows, column-major.
struct BinnedDataset {
  std::vector<std::string> feature_names;
  std::vector<BinMapper> mappers;
  std::vector<std::vector<BinId>> bins;  // [feature][row]
  std::size_t rows = 0;

  std::size_t num_features() const { return mappers.size(); }
};

inline BinnedDataset apply_bins(const Matrix& x, const std::vector<BinMapper>& mappers,
                                std::vector<std::string> names = {}, unsigned threads = 1) {
  if (x.cols() != mappers.size())
    throw DataError("binning: input has " + std::to_string(x.cols()) + " columns, model expects " +
                    std::to_string(mappers.size()));
  BinnedDataset b;
  b.feature_names = std::move(names);
  b.mappers = mappers;
  b.rows = x.rows();
  b.bins.assign(mappers.size(), std::vector<BinId>(x.rows()));
  parallel_for(mappers.size(), threads, [&](std::size_t f) {
    for (std::size_t r = 0; r < x.rows(); ++r) b.bins[f][r] = static_cast<BinId>(mappers[f].value_to_bin(x(r, f)));
  });
  return b;
}

/// Fits edges on a uniform sample of min(rows, subsample_for_bin) rows,
/// then bins every row.
inline BinnedDataset bin(const Matrix& x, const TrainConfig& cfg, std::vector<std::string> names = {}) {
  std::vector<std::size_t> sample_rows;
  if (x.rows() > cfg.subsample_for_bin) {
    Rng rng(mix_seed(cfg.seed, 0xB1));
    sample_rows = sample_without_replacement(rng, x.rows(), cfg.subsample_for_bin);
    std::sort(sample_rows.begin(), sample_rows.end());
  } else {
    sample_rows.resize(x.rows());
    std::iota(sample_rows.begin(), sample_rows.end(), std::size_t{0});
  }
  std::vector<BinMapper> mappers(x.cols());
  parallel_for(x.cols(), cfg.threads, [&](std::size_t f) {
    std::vector<double> s(sample_rows.size());
    for (std::size_t i = 0; i < sample_rows.size(); ++i) s[i] = x(sample_rows[i], f);
    mappers[f] = fit_bin_mapper(std::move(s), cfg.max_bins);
  });
  if (names.empty())
    for (std::size_t f = 0; f < x.cols(); ++f) names.push_back("f" + std::to_string(f));
  return apply_bins(x, mappers, std::move(names), cfg.threads);
}

/// All numeric non-target columns of a table.
inline BinnedDataset bin(const Table& t, const TrainConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& n : t.feature_names()) {
    if (!t.column(n).is_numeric()) throw DataError("binning needs encoded input; '" + n + "' is categorical");
    names.push_back(n);
  }
  return bin(t.to_matrix(names), cfg, names);
}

}  // namespace crisk::boost
