#pragma once

// Missing-value imputation, ordinal encoding of categorical columns and
// min-max / z-score scaling. Every transform is split into a fit step that
// reads only the rows it is given and an apply step that is frozen after.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "crisk/common.hpp"
#include "crisk/tabular.hpp"

namespace crisk {

enum class TextImpute { DoNothing, Mode };
enum class NumericImpute { Median, RoundMean, Mode, Zero };

/// One row of the imputation comparison: a textual rule paired with a
/// numeric rule. Methods 1..8 enumerate the pairs textual-major.
struct ImputeMethod {
  TextImpute textual = TextImpute::Mode;
  NumericImpute numeric = NumericImpute::RoundMean;

  static ImputeMethod from_id(int id) {
    if (id < 1 || id > 8) throw ConfigError("impute method id must be in 1..8, got " + std::to_string(id));
    const int k = id - 1;
    return {k < 4 ? TextImpute::DoNothing : TextImpute::Mode, static_cast<NumericImpute>(k % 4)};
  }

  int id() const {
    return (textual == TextImpute::DoNothing ? 0 : 4) + static_cast<int>(numeric) + 1;
  }

  friend bool operator==(const ImputeMethod&, const ImputeMethod&) = default;
};

inline const char* to_string(TextImpute m) {
  return m == TextImpute::DoNothing ? "do nothing" : "mode";
}

inline const char* to_string(NumericImpute m) {
  switch (m) {
    case NumericImpute::Median: return "median";
    case NumericImpute::RoundMean: return "round mean";
    case NumericImpute::Mode: return "mode";
    case NumericImpute::Zero: return "zero";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Column statistics. Ties and even lengths resolve deterministically:
// lower median, smallest numeric mode, lexicographically first text mode.

inline double lower_median(std::vector<double> v) {
  if (v.empty()) throw DataError("median of empty column");
  const auto mid = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  return v[mid];
}

inline double round_mean(std::span<const double> v) {
  if (v.empty()) throw DataError("mean of empty column");
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  return round_half_away(s / static_cast<double>(v.size()));
}

template <typename T>
T mode_of(std::vector<T> v) {
  if (v.empty()) throw DataError("mode of empty column");
  std::sort(v.begin(), v.end());
  T best = v.front();
  std::size_t best_run = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    if (j - i > best_run) {  // strict: earliest (smallest) value wins ties
      best_run = j - i;
      best = v[i];
    }
    i = j;
  }
  return best;
}

// ---------------------------------------------------------------------------

using FillValue = std::variant<std::monostate, double, std::string>;

/// Per-column fill values learned from a set of rows.
class Imputer {
 public:
  static Imputer fit(const Table& t, ImputeMethod method, std::span<const std::size_t> rows) {
    Imputer imp;
    imp.method_ = method;
    for (const auto& c : t.columns()) {
      if (t.target_name() && c.name() == *t.target_name()) continue;
      if (c.is_numeric()) {
        std::vector<double> present;
        for (auto r : rows)
          if (const auto& v = c.numbers()[r]) present.push_back(*v);
        double fill = 0.0;
        if (method.numeric != NumericImpute::Zero) {
          if (present.empty()) {
            warn("column '" + c.name() + "' has no observed values; filling with 0");
          } else if (method.numeric == NumericImpute::Median) {
            fill = lower_median(std::move(present));
          } else if (method.numeric == NumericImpute::RoundMean) {
            fill = round_mean(present);
          } else {
            fill = mode_of(std::move(present));
          }
        }
        imp.fills_[c.name()] = fill;
      } else if (method.textual == TextImpute::Mode) {
        std::vector<std::string> present;
        for (auto r : rows)
          if (const auto& v = c.texts()[r]) present.push_back(*v);
        if (present.empty()) {
          warn("column '" + c.name() + "' has no observed values; filling with '(missing)'");
          imp.fills_[c.name()] = std::string("(missing)");
        } else {
          imp.fills_[c.name()] = mode_of(std::move(present));
        }
      } else {
        imp.fills_[c.name()] = std::monostate{};
      }
    }
    return imp;
  }

  static Imputer fit(const Table& t, ImputeMethod method) {
    std::vector<std::size_t> all(t.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return fit(t, method, all);
  }

  Table apply(const Table& t) const {
    Table out = t;
    for (const auto& [name, fill] : fills_) {
      if (!t.has_column(name)) throw DataError("imputer: column '" + name + "' missing from table");
      const auto& c = t.column(name);
      if (const auto* d = std::get_if<double>(&fill)) {
        if (!c.is_numeric()) throw DataError("imputer: column '" + name + "' changed kind");
        auto vals = c.numbers();
        for (auto& v : vals)
          if (!v) v = *d;
        out.replace_column(Column::numeric(name, std::move(vals)));
      } else if (const auto* s = std::get_if<std::string>(&fill)) {
        if (c.is_numeric()) throw DataError("imputer: column '" + name + "' changed kind");
        auto vals = c.texts();
        for (auto& v : vals)
          if (!v) v = *s;
        out.replace_column(Column::categorical(name, std::move(vals)));
      }
    }
    return out;
  }

  const std::map<std::string, FillValue>& fills() const { return fills_; }
  ImputeMethod method() const { return method_; }

 private:
  ImputeMethod method_;
  std::map<std::string, FillValue> fills_;
};

/// Fits on every row and fills in one step.
inline Table impute(const Table& t, ImputeMethod m) { return Imputer::fit(t, m).apply(t); }

// ---------------------------------------------------------------------------

/// Category text -> consecutive codes in lexicographic order. Missing cells
/// and categories never seen at fit time share `missing_code`, which is one
/// past the last category code.
class OrdinalEncoder {
 public:
  struct ColumnCodes {
    std::vector<std::string> categories;  // index = code
    bool had_missing = false;
    double missing_code() const { return static_cast<double>(categories.size()); }
  };

  static OrdinalEncoder fit(const Table& t, std::span<const std::size_t> rows) {
    OrdinalEncoder e;
    for (const auto& c : t.columns()) {
      if (c.is_numeric()) continue;
      std::set<std::string> seen;
      ColumnCodes codes;
      for (auto r : rows) {
        if (const auto& v = c.texts()[r]) seen.insert(*v);
        else codes.had_missing = true;
      }
      codes.categories.assign(seen.begin(), seen.end());
      e.columns_.emplace(c.name(), std::move(codes));
    }
    return e;
  }

  static OrdinalEncoder fit(const Table& t) {
    std::vector<std::size_t> all(t.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return fit(t, all);
  }

  Table encode(const Table& t) const {
    Table out = t;
    for (const auto& c : t.columns()) {
      if (c.is_numeric()) continue;
      auto it = columns_.find(c.name());
      if (it == columns_.end())
        throw DataError("encoder was not fit on categorical column '" + c.name() + "'");
      const auto& cats = it->second.categories;
      std::vector<NumericCell> codes(c.size());
      for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& v = c.texts()[i];
        double code = it->second.missing_code();
        if (v) {
          auto pos = std::lower_bound(cats.begin(), cats.end(), *v);
          if (pos != cats.end() && *pos == *v) code = static_cast<double>(pos - cats.begin());
        }
        codes[i] = code;
      }
      out.replace_column(Column::numeric(c.name(), std::move(codes)));
    }
    return out;
  }

  /// Inverse map; nullopt for the missing/unseen code.
  std::optional<std::string> decode(const std::string& column, double code) const {
    const auto& cc = columns_.at(column);
    if (code < 0 || code >= static_cast<double>(cc.categories.size())) return std::nullopt;
    return cc.categories[static_cast<std::size_t>(code)];
  }

  const std::map<std::string, ColumnCodes>& columns() const { return columns_; }

 private:
  std::map<std::string, ColumnCodes> columns_;
};

// ---------------------------------------------------------------------------

enum class ScaleKind { None, MinMax, ZScore };

inline const char* to_string(ScaleKind k) {
  switch (k) {
    case ScaleKind::None: return "none";
    case ScaleKind::MinMax: return "minmax";
    case ScaleKind::ZScore: return "zscore";
  }
  return "?";
}

inline ScaleKind parse_scale_kind(const std::string& s) {
  if (s == "none" || s == "raw") return ScaleKind::None;
  if (s == "minmax") return ScaleKind::MinMax;
  if (s == "zscore") return ScaleKind::ZScore;
  throw ConfigError("unknown scaling '" + s + "' (expected none|minmax|zscore)");
}

/// Frozen per-column affine maps. For MinMax `offset`/`spread` are x_min and
/// x_max - x_min; for ZScore they are the mean and population std.
class Scaler {
 public:
  struct ColumnScale {
    std::string name;
    double offset = 0;
    double spread = 1;
    bool degenerate() const { return !(spread > 0); }
  };

  static Scaler fit(const Matrix& x, ScaleKind kind, std::span<const std::size_t> rows,
                    std::vector<std::string> names = {}) {
    Scaler s;
    s.kind_ = kind;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      ColumnScale cs;
      cs.name = j < names.size() ? names[j] : std::to_string(j);
      std::vector<double> v;
      v.reserve(rows.size());
      for (auto r : rows)
        if (!is_missing(x(r, j))) v.push_back(x(r, j));
      if (v.empty() || kind == ScaleKind::None) {
        cs.offset = 0;
        cs.spread = kind == ScaleKind::None ? 1 : 0;
      } else if (kind == ScaleKind::MinMax) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        cs.offset = *lo;
        cs.spread = *hi - *lo;
      } else {
        double mean = 0;
        for (double a : v) mean += a;
        mean /= static_cast<double>(v.size());
        double ss = 0;
        for (double a : v) ss += (a - mean) * (a - mean);
        cs.offset = mean;
        cs.spread = std::sqrt(ss / static_cast<double>(v.size()));
      }
      s.cols_.push_back(std::move(cs));
    }
    return s;
  }

  static Scaler fit(const Matrix& x, ScaleKind kind) {
    std::vector<std::size_t> all(x.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return fit(x, kind, all);
  }

  /// Fits on the named numeric columns of a table (defaults to every
  /// numeric non-target column).
  static Scaler fit(const Table& t, ScaleKind kind, std::span<const std::size_t> rows,
                    std::vector<std::string> names = {}) {
    if (names.empty())
      for (const auto& n : t.feature_names())
        if (t.column(n).is_numeric()) names.push_back(n);
    return fit(t.to_matrix(names), kind, rows, names);
  }

  void transform_inplace(Matrix& x) const {
    if (x.cols() != cols_.size()) throw DataError("scaler: width mismatch");
    if (kind_ == ScaleKind::None) return;
    for (std::size_t j = 0; j < cols_.size(); ++j) {
      const auto& cs = cols_[j];
      if (cs.degenerate()) warn("column '" + cs.name + "' is constant on the fitting rows; scaled to 0");
      for (std::size_t r = 0; r < x.rows(); ++r) {
        double& v = x(r, j);
        if (is_missing(v)) continue;
        v = cs.degenerate() ? 0.0 : (v - cs.offset) / cs.spread;
      }
    }
  }

  Matrix transform(Matrix x) const {
    transform_inplace(x);
    return x;
  }

  Table transform(const Table& t) const {
    std::vector<std::string> names;
    for (const auto& cs : cols_) names.push_back(cs.name);
    Matrix m = transform(t.to_matrix(names));
    Table out = t;
    for (std::size_t j = 0; j < names.size(); ++j) {
      std::vector<NumericCell> v(m.rows());
      for (std::size_t r = 0; r < m.rows(); ++r)
        if (!is_missing(m(r, j))) v[r] = m(r, j);
      out.replace_column(Column::numeric(names[j], std::move(v)));
    }
    return out;
  }

  ScaleKind kind() const { return kind_; }
  const std::vector<ColumnScale>& columns() const { return cols_; }

 private:
  ScaleKind kind_ = ScaleKind::None;
  std::vector<ColumnScale> cols_;
};

}  // namespace crisk
