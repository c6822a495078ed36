#pragma once

// Gradient-based one-side sampling: keep every large-gradient row, sample
// the rest, and up-weight the sampled small-gradient rows by (1 - a) / b so
// the gradient sum stays unbiased.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "crisk/common.hpp"

namespace crisk::boost {

struct RowSample {
  std::vector<std::size_t> rows;   // ascending
  std::vector<double> multiplier;  // parallel to rows
};

inline RowSample goss_select(std::span<const double> gradients, double a, double b, Rng& rng) {
  if (!(a > 0.0) || b < 0.0 || a + b > 1.0 + 1e-12) throw ConfigError("goss: need 0 < a, 0 <= b, a + b <= 1");
  if (b == 0.0 && a < 1.0) throw ConfigError("goss: b = 0 with a < 1 drops gradient mass");
  const std::size_t n = gradients.size();
  const auto top_n = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(a * static_cast<double>(n) - 1e-9)));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto by_magnitude = [&](std::size_t i, std::size_t j) {
    const double gi = std::abs(gradients[i]), gj = std::abs(gradients[j]);
    return gi != gj ? gi > gj : i < j;
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_n), order.end(), by_magnitude);

  std::vector<char> role(n, 0);  // 1 = top, 2 = sampled
  for (std::size_t i = 0; i < top_n; ++i) role[order[i]] = 1;

  std::vector<std::size_t> rest;
  rest.reserve(n - top_n);
  for (std::size_t i = 0; i < n; ++i)
    if (!role[i]) rest.push_back(i);
  const auto other_n = std::min<std::size_t>(
      rest.size(), static_cast<std::size_t>(std::ceil(b * static_cast<double>(n) - 1e-9)));
  for (auto k : sample_without_replacement(rng, rest.size(), other_n)) role[rest[k]] = 2;

  const double amplify = b > 0 ? (1.0 - a) / b : 1.0;
  RowSample s;
  for (std::size_t i = 0; i < n; ++i) {
    if (!role[i]) continue;
    s.rows.push_back(i);
    s.multiplier.push_back(role[i] == 1 ? 1.0 : amplify);
  }
  return s;
}

/// Uniform row subsample without replacement, multiplier 1.
inline RowSample bagging_select(std::size_t n, double fraction, Rng& rng) {
  RowSample s;
  if (fraction >= 1.0) {
    s.rows.resize(n);
    std::iota(s.rows.begin(), s.rows.end(), std::size_t{0});
  } else {
    const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
    s.rows = sample_without_replacement(rng, n, k);
    std::sort(s.rows.begin(), s.rows.end());
  }
  s.multiplier.assign(s.rows.size(), 1.0);
  return s;
}

}  // namespace crisk::boost
