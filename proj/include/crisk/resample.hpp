#pragma once

// ADASYN oversampling. The plan step decides how many synthetic points each
// minority sample receives, proportional to how many majority points sit
// among its K nearest neighbours; the synthesis step interpolates between a
// minority sample and one of its K nearest minority neighbours.

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "crisk/common.hpp"
#include "crisk/parallel.hpp"

namespace crisk {

struct AdasynConfig {
  double beta = 1.0;  // fraction of the class gap to fill; 1 balances classes
  std::size_t k = 5;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct ResamplePlan {
  std::vector<std::size_t> minority;  // row index of each minority sample
  std::vector<std::size_t> delta;     // majority count among its K neighbours
  std::vector<double> r;              // delta / K
  std::vector<double> r_hat;          // r normalised to sum 1
  std::vector<std::size_t> g;         // synthetic points to generate
  double G = 0;                       // (m_l - m_s) * beta
  std::size_t m_l = 0, m_s = 0;

  std::size_t total() const { return std::accumulate(g.begin(), g.end(), std::size_t{0}); }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

/// Indices of the k nearest candidates to `query` (self excluded), nearest
/// first, ties broken by lower row index.
inline std::vector<std::size_t> nearest_neighbors(const Matrix& x, std::size_t query,
                                                  std::span<const std::size_t> candidates,
                                                  std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(candidates.size());
  const auto q = x.row(query);
  for (auto c : candidates)
    if (c != query) d.emplace_back(squared_distance(q, x.row(c)), c);
  k = std::min(k, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

/// Minority class is whichever label is rarer (label 1 on a tie).
inline int minority_label(std::span<const int> y) {
  std::size_t pos = 0;
  for (int v : y) pos += v == 1 ? 1 : 0;
  return pos <= y.size() - pos ? 1 : 0;
}

inline ResamplePlan adasyn_plan(const Matrix& x, std::span<const int> y, const AdasynConfig& cfg) {
  if (x.rows() != y.size()) throw DataError("adasyn: X/y length mismatch");
  if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) throw ConfigError("adasyn: beta must lie in [0, 1]");
  if (cfg.k < 1) throw ConfigError("adasyn: k must be >= 1");
  for (double v : x.data())
    if (!std::isfinite(v)) throw DataError("adasyn: X must be fully imputed and finite");

  const int minor = minority_label(y);
  ResamplePlan p;
  std::vector<std::size_t> all(y.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] == minor) p.minority.push_back(i);
  p.m_s = p.minority.size();
  p.m_l = y.size() - p.m_s;
  if (p.m_s == 0 || p.m_l == 0) throw DataError("adasyn: both classes must be present");
  if (p.m_s <= cfg.k)
    throw DataError("adasyn: minority count " + std::to_string(p.m_s) + " must exceed k=" +
                    std::to_string(cfg.k));

  p.G = static_cast<double>(p.m_l - p.m_s) * cfg.beta;
  p.delta.assign(p.m_s, 0);
  parallel_for(p.m_s, cfg.threads, [&](std::size_t i) {
    const auto nn = nearest_neighbors(x, p.minority[i], all, cfg.k);
    std::size_t maj = 0;
    for (auto j : nn) maj += y[j] != minor ? 1 : 0;
    p.delta[i] = maj;
  });

  p.r.resize(p.m_s);
  double sum = 0;
  for (std::size_t i = 0; i < p.m_s; ++i) {
    p.r[i] = static_cast<double>(p.delta[i]) / static_cast<double>(cfg.k);
    sum += p.r[i];
  }
  p.r_hat.resize(p.m_s);
  for (std::size_t i = 0; i < p.m_s; ++i)
    p.r_hat[i] = sum > 0 ? p.r[i] / sum : 1.0 / static_cast<double>(p.m_s);

  p.g.resize(p.m_s);
  for (std::size_t i = 0; i < p.m_s; ++i)
    p.g[i] = static_cast<std::size_t>(round_half_away(p.r_hat[i] * p.G));
  return p;
}

/// s = x_i + (x_z - x_i) * lambda
inline std::vector<double> interpolate(std::span<const double> xi, std::span<const double> xz,
                                       double lambda) {
  std::vector<double> s(xi.size());
  for (std::size_t j = 0; j < xi.size(); ++j) s[j] = xi[j] + (xz[j] - xi[j]) * lambda;
  return s;
}

struct SyntheticOrigin {
  std::size_t base = 0;      // row of x_i
  std::size_t neighbor = 0;  // row of x_zi
  double lambda = 0;
};

struct ResampleResult {
  Matrix x;                              // originals, then synthetic rows
  std::vector<int> y;
  std::vector<SyntheticOrigin> origins;  // one per synthetic row, in order
};

inline ResampleResult adasyn_synthesize(const Matrix& x, std::span<const int> y,
                                        const ResamplePlan& p, const AdasynConfig& cfg) {
  if (p.minority.size() != p.g.size()) throw DataError("adasyn: inconsistent plan");
  ResampleResult out{x, std::vector<int>(y.begin(), y.end()), {}};
  if (p.total() == 0) return out;
  const int minor = y[p.minority.front()];

  // Minority-only neighbour lists; computed up front so the random stream
  // below is consumed in a fixed order.
  std::vector<std::vector<std::size_t>> nbrs(p.m_s);
  parallel_for(p.m_s, cfg.threads, [&](std::size_t i) {
    if (p.g[i] > 0) nbrs[i] = nearest_neighbors(x, p.minority[i], p.minority, cfg.k);
  });

  Rng rng(cfg.seed);
  out.origins.reserve(p.total());
  for (std::size_t i = 0; i < p.m_s; ++i) {
    for (std::size_t n = 0; n < p.g[i]; ++n) {
      const auto z = nbrs[i][uniform_index(rng, nbrs[i].size())];
      const double lambda = uniform01(rng);
      out.x.append_row(interpolate(x.row(p.minority[i]), x.row(z), lambda));
      out.y.push_back(minor);
      out.origins.push_back({p.minority[i], z, lambda});
    }
  }
  return out;
}

inline ResampleResult adasyn(const Matrix& x, std::span<const int> y, const AdasynConfig& cfg) {
  return adasyn_synthesize(x, y, adasyn_plan(x, y, cfg), cfg);
}

}  // namespace crisk
