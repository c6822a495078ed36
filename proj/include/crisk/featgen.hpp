#pragma once

// Derived credit attributes, a k-means cluster attribute and the Pearson
// correlation matrix.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "crisk/common.hpp"
#include "crisk/tabular.hpp"

namespace crisk {

struct Ratio {
  std::string numerator, denominator;
};
struct Sum {
  std::vector<std::string> terms;
};

struct DerivedRecipe {
  std::string name;
  std::variant<Ratio, Sum> op;
};

/// The five application-level ratios and sums appended by `add_derived`.
inline const std::vector<DerivedRecipe>& credit_recipes() {
  static const std::vector<DerivedRecipe> recipes = {
      {"credit_annuity_ratio", Ratio{"AMT_CREDIT", "AMT_ANNUITY"}},
      {"prices_income_ratio", Ratio{"AMT_GOODS_PRICE", "AMT_INCOME_TOTAL"}},
      {"employed_age_ratio", Ratio{"DAYS_EMPLOYED", "DAYS_BIRTH"}},
      {"credit_goods_ratio", Ratio{"AMT_CREDIT", "AMT_GOODS_PRICE"}},
      {"ext_source_sum", Sum{{"EXT_SOURCE_1", "EXT_SOURCE_2", "EXT_SOURCE_3"}}},
  };
  return recipes;
}

/// Evaluates one recipe row-wise. A missing operand or a zero denominator
/// yields a missing cell.
inline Column derive(const Table& t, const DerivedRecipe& recipe) {
  auto need = [&](const std::string& name) -> const Column& {
    if (!t.has_column(name))
      throw DataError("derived attribute '" + recipe.name + "' needs missing column '" + name + "'");
    const auto& c = t.column(name);
    if (!c.is_numeric())
      throw DataError("derived attribute '" + recipe.name + "' needs numeric column '" + name + "'");
    return c;
  };
  std::vector<NumericCell> out(t.rows());
  if (const auto* ratio = std::get_if<Ratio>(&recipe.op)) {
    const auto& num = need(ratio->numerator).numbers();
    const auto& den = need(ratio->denominator).numbers();
    for (std::size_t r = 0; r < t.rows(); ++r)
      if (num[r] && den[r] && *den[r] != 0.0) out[r] = *num[r] / *den[r];
  } else {
    const auto& terms = std::get<Sum>(recipe.op).terms;
    std::vector<const std::vector<NumericCell>*> cols;
    for (const auto& n : terms) cols.push_back(&need(n).numbers());
    for (std::size_t r = 0; r < t.rows(); ++r) {
      double s = 0;
      bool ok = true;
      for (const auto* c : cols) {
        if (!(*c)[r]) {
          ok = false;
          break;
        }
        s += *(*c)[r];
      }
      if (ok) out[r] = s;
    }
  }
  return Column::numeric(recipe.name, std::move(out));
}

inline Table add_derived(const Table& t, const std::vector<DerivedRecipe>& recipes = credit_recipes()) {
  // Resolve every recipe before touching the table so errors leave no partial result.
  std::vector<Column> cols;
  for (const auto& r : recipes) cols.push_back(derive(t, r));
  Table out = t;
  for (auto& c : cols) out.add_column(std::move(c));
  return out;
}

// ---------------------------------------------------------------------------

struct KMeansConfig {
  std::size_t k = 10;
  std::size_t max_iterations = 300;
  double tolerance = 1e-6;  // stop when the largest centroid shift falls below
  std::uint64_t seed = 0;
};

struct KMeansModel {
  std::size_t k = 0;
  Matrix centroids;  // k x d
  std::vector<std::string> feature_names;
  std::uint64_t seed = 0;
  double inertia = 0;
  std::size_t iterations = 0;
  std::vector<double> inertia_history;  // after each assignment step
};

inline double squared_distance_to(const Matrix& centroids, std::size_t c, std::span<const double> x) {
  double d = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double t = x[j] - centroids(c, j);
    d += t * t;
  }
  return d;
}

/// Nearest centroid, lowest index on ties.
inline std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    double d = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double t = x[j] - centroids(c, j);
      d += t * t;
    }
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

inline std::vector<std::size_t> kmeans_assign(const Matrix& x, const KMeansModel& m) {
  if (x.cols() != m.centroids.cols()) throw DataError("kmeans: width mismatch");
  std::vector<std::size_t> ids(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) ids[r] = nearest_centroid(m.centroids, x.row(r));
  return ids;
}

/// k-means++ seeding followed by Lloyd iterations. A cluster that loses all
/// its points keeps its previous centroid.
inline KMeansModel kmeans_fit(const Matrix& x, const KMeansConfig& cfg,
                              std::vector<std::string> names = {}) {
  const std::size_t n = x.rows(), d = x.cols(), k = cfg.k;
  if (k == 0) throw ConfigError("kmeans: k must be positive");
  if (n < k) throw DataError("kmeans: " + std::to_string(n) + " rows < k=" + std::to_string(k));
  for (double v : x.data())
    if (!std::isfinite(v)) throw DataError("kmeans: input must be finite (impute first)");

  KMeansModel m;
  m.k = k;
  m.seed = cfg.seed;
  m.feature_names = std::move(names);
  m.centroids = Matrix(k, d);
  Rng rng(cfg.seed);

  // k-means++: first centre uniform, then proportional to squared distance.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = static_cast<std::size_t>(uniform_index(rng, n));
  for (std::size_t c = 0; c < k; ++c) {
    std::copy(x.row(pick).begin(), x.row(pick).end(), m.centroids.row(c).begin());
    double total = 0;
    for (std::size_t r = 0; r < n; ++r) {
      double dist = 0;
      for (std::size_t j = 0; j < d; ++j) {
        const double t = x(r, j) - m.centroids(c, j);
        dist += t * t;
      }
      d2[r] = std::min(d2[r], dist);
      total += d2[r];
    }
    if (c + 1 == k) break;
    if (total <= 0) {
      pick = 0;  // every point coincides with a centre already
      continue;
    }
    double u = uniform01(rng) * total;
    pick = n - 1;
    for (std::size_t r = 0; r < n; ++r) {
      if (d2[r] <= 0) continue;
      u -= d2[r];
      if (u < 0) {
        pick = r;
        break;
      }
    }
    while (d2[pick] <= 0 && pick > 0) --pick;  // never re-pick a zero-distance point
  }

  std::vector<std::size_t> assign(n);
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    double inertia = 0;
    for (std::size_t r = 0; r < n; ++r) {
      assign[r] = nearest_centroid(m.centroids, x.row(r));
      inertia += squared_distance_to(m.centroids, assign[r], x.row(r));
    }
    m.inertia_history.push_back(inertia);
    m.inertia = inertia;
    m.iterations = it + 1;

    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t r = 0; r < n; ++r) {
      ++counts[assign[r]];
      for (std::size_t j = 0; j < d; ++j) sums(assign[r], j) += x(r, j);
    }
    double shift = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      double s = 0;
      for (std::size_t j = 0; j < d; ++j) {
        const double nv = sums(c, j) / static_cast<double>(counts[c]);
        s += (nv - m.centroids(c, j)) * (nv - m.centroids(c, j));
        m.centroids(c, j) = nv;
      }
      shift = std::max(shift, std::sqrt(s));
    }
    if (shift < cfg.tolerance) break;
  }
  // Final inertia against the settled centroids.
  double inertia = 0;
  for (std::size_t r = 0; r < n; ++r)
    inertia += squared_distance_to(m.centroids, nearest_centroid(m.centroids, x.row(r)), x.row(r));
  m.inertia = inertia;
  return m;
}

// ---------------------------------------------------------------------------

struct CorrelationMatrix {
  std::vector<std::string> names;
  Matrix values;
};

/// Pearson coefficient over rows where both values are present. Returns 0
/// (and warns) when either side has zero variance.
inline double pearson(std::span<const double> a, std::span<const double> b, const std::string& label = {}) {
  double ma = 0, mb = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (is_missing(a[i]) || is_missing(b[i])) continue;
    ma += a[i];
    mb += b[i];
    ++n;
  }
  if (n == 0) {
    warn("correlation " + label + ": no complete rows; recorded as 0");
    return 0.0;
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (is_missing(a[i]) || is_missing(b[i])) continue;
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0) || !(sbb > 0)) {
    warn("correlation " + label + ": zero variance; recorded as 0");
    return 0.0;
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Correlations among all numeric columns; the target, when present, is
/// placed first. Diagonal is exactly 1 and the matrix exactly symmetric.
inline CorrelationMatrix correlations(const Table& t) {
  CorrelationMatrix cm;
  if (t.target_name()) cm.names.push_back(*t.target_name());
  for (const auto& c : t.columns())
    if (c.is_numeric() && (!t.target_name() || c.name() != *t.target_name())) cm.names.push_back(c.name());
  std::vector<std::vector<double>> cols;
  for (const auto& n : cm.names) cols.push_back(t.column(n).as_doubles());
  const auto p = cm.names.size();
  cm.values = Matrix(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    cm.values(i, i) = 1.0;
    for (std::size_t j = i + 1; j < p; ++j) {
      const double r = pearson(cols[i], cols[j], cm.names[i] + "/" + cm.names[j]);
      cm.values(i, j) = r;
      cm.values(j, i) = r;
    }
  }
  return cm;
}

inline void write_correlation_csv(const CorrelationMatrix& cm, std::ostream& out) {
  out << "column";
  for (const auto& n : cm.names) out << ',' << detail::csv_name(n);
  out << '\n';
  for (std::size_t i = 0; i < cm.names.size(); ++i) {
    out << detail::csv_name(cm.names[i]);
    for (std::size_t j = 0; j < cm.names.size(); ++j) out << ',' << detail::format_double(cm.values(i, j));
    out << '\n';
  }
}

}  // namespace crisk
