#pragma once

// Columnar dataset with explicit missingness: CSV I/O, per-column summary,
// seeded train/test split and class counting.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "crisk/common.hpp"

namespace crisk {

enum class ColumnKind { Numeric, Categorical };

inline const char* to_string(ColumnKind k) {
  return k == ColumnKind::Numeric ? "numeric" : "categorical";
}

using NumericCell = std::optional<double>;
using TextCell = std::optional<std::string>;

/// One named column. Exactly one of the two value vectors is populated,
/// chosen by `kind`; an absent optional is a missing cell.
class Column {
 public:
  static Column numeric(std::string name, std::vector<NumericCell> values) {
    Column c;
    c.name_ = std::move(name);
    c.kind_ = ColumnKind::Numeric;
    c.num_ = std::move(values);
    return c;
  }

  static Column categorical(std::string name, std::vector<TextCell> values) {
    Column c;
    c.name_ = std::move(name);
    c.kind_ = ColumnKind::Categorical;
    c.text_ = std::move(values);
    return c;
  }

  const std::string& name() const { return name_; }
  ColumnKind kind() const { return kind_; }
  bool is_numeric() const { return kind_ == ColumnKind::Numeric; }

  std::size_t size() const { return is_numeric() ? num_.size() : text_.size(); }

  bool missing(std::size_t i) const {
    return is_numeric() ? !num_[i].has_value() : !text_[i].has_value();
  }

  std::size_t missing_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i) n += missing(i) ? 1 : 0;
    return n;
  }

  const std::vector<NumericCell>& numbers() const { return num_; }
  const std::vector<TextCell>& texts() const { return text_; }

  /// Numeric view with NaN for missing cells.
  std::vector<double> as_doubles() const {
    if (!is_numeric()) throw DataError("column '" + name_ + "' is not numeric");
    std::vector<double> out(num_.size());
    for (std::size_t i = 0; i < num_.size(); ++i) out[i] = num_[i].value_or(kMissing);
    return out;
  }

  Column select_rows(std::span<const std::size_t> idx) const {
    if (is_numeric()) return numeric(name_, gather<NumericCell>(num_, idx));
    return categorical(name_, gather<TextCell>(text_, idx));
  }

  friend bool operator==(const Column&, const Column&) = default;

 private:
  std::string name_;
  ColumnKind kind_ = ColumnKind::Numeric;
  std::vector<NumericCell> num_;
  std::vector<TextCell> text_;
};

/// Ordered set of equal-length, uniquely named columns with an optional
/// binary target. Treated as a value: every transform returns a new Table.
class Table {
 public:
  Table() = default;

  explicit Table(std::vector<Column> columns, std::optional<std::string> target = std::nullopt) {
    for (auto& c : columns) add_column(std::move(c));
    if (target) set_target(*target);
  }

  std::size_t rows() const { return columns_.empty() ? 0 : columns_.front().size(); }
  std::size_t cols() const { return columns_.size(); }

  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }

  const Column& column(const std::string& name) const {
    auto i = index_of(name);
    if (!i) throw DataError("no column named '" + name + "'");
    return columns_[*i];
  }

  bool has_column(const std::string& name) const { return index_.count(name) != 0; }

  std::optional<std::size_t> index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  void add_column(Column c) {
    if (!columns_.empty() && c.size() != rows())
      throw DataError("column '" + c.name() + "' has " + std::to_string(c.size()) +
                      " rows, table has " + std::to_string(rows()));
    if (index_.count(c.name())) throw DataError("duplicate column name '" + c.name() + "'");
    index_.emplace(c.name(), columns_.size());
    columns_.push_back(std::move(c));
  }

  /// Replaces a column in place, keeping its position.
  void replace_column(Column c) {
    auto i = index_of(c.name());
    if (!i) throw DataError("no column named '" + c.name() + "'");
    if (c.size() != rows()) throw DataError("replacement column '" + c.name() + "' has wrong length");
    columns_[*i] = std::move(c);
    if (target_ && *target_ == columns_[*i].name()) validate_target(*target_);
  }

  const std::optional<std::string>& target_name() const { return target_; }

  void set_target(const std::string& name) {
    validate_target(name);
    target_ = name;
  }

  /// Target values as 0/1 integers.
  std::vector<int> labels() const {
    if (!target_) throw DataError("table has no target column");
    const auto& c = column(*target_);
    std::vector<int> y(c.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(*c.numbers()[i]);
    return y;
  }

  /// Names of all non-target columns, in table order.
  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    for (const auto& c : columns_)
      if (!target_ || c.name() != *target_) out.push_back(c.name());
    return out;
  }

  /// Dense matrix of the named numeric columns; missing cells become NaN.
  Matrix to_matrix(const std::vector<std::string>& names) const {
    Matrix m(rows(), names.size());
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto& c = column(names[j]);
      if (!c.is_numeric()) throw DataError("column '" + names[j] + "' is not numeric");
      for (std::size_t r = 0; r < rows(); ++r) m(r, j) = c.numbers()[r].value_or(kMissing);
    }
    return m;
  }

  Table select_rows(std::span<const std::size_t> idx) const {
    Table out;
    for (const auto& c : columns_) out.add_column(c.select_rows(idx));
    out.target_ = target_;
    return out;
  }

  friend bool operator==(const Table& a, const Table& b) {
    return a.columns_ == b.columns_ && a.target_ == b.target_;
  }

 private:
  void validate_target(const std::string& name) const {
    const auto& c = column(name);
    if (!c.is_numeric()) throw DataError("target column '" + name + "' must be numeric");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto& v = c.numbers()[i];
      if (!v || (*v != 0.0 && *v != 1.0))
        throw DataError("target column '" + name + "' has a value outside {0,1} at row " +
                        std::to_string(i));
    }
  }

  std::vector<Column> columns_;
  std::unordered_map<std::string, std::size_t> index_;
  std::optional<std::string> target_;
};

// ---------------------------------------------------------------------------
// CSV

namespace detail {

struct CsvField {
  std::string text;
  bool quoted = false;
};

// RFC-4180 record splitter over the whole buffer; quoted fields may hold
// commas, doubled quotes and newlines.
inline std::vector<std::vector<CsvField>> parse_csv_records(const std::string& buf) {
  std::vector<std::vector<CsvField>> records;
  std::vector<CsvField> record;
  CsvField field;
  bool in_quotes = false;
  bool field_started = false;
  const std::size_t n = buf.size();

  auto end_field = [&] {
    record.push_back(std::move(field));
    field = {};
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < n; ++i) {
    const char ch = buf[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < n && buf[i + 1] == '"') {
          field.text.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.text.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field_started) {
          in_quotes = true;
          field.quoted = true;
          field_started = true;
        } else {
          field.text.push_back(ch);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < n && buf[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.text.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field at end of file");
  if (field_started || !field.text.empty() || !record.empty()) end_record();
  return records;
}

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

// Quoted cells are always present text, so "" and "NA" survive a round trip.
inline bool is_missing_marker(const CsvField& f) {
  if (f.quoted) return false;
  if (f.text.empty()) return true;
  return iequals(f.text, "NA") || iequals(f.text, "NaN");
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string quote_csv(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string csv_name(const std::string& s) {
  return s.find_first_of(",\"\r\n") == std::string::npos ? s : quote_csv(s);
}

}  // namespace detail

using SchemaHints = std::map<std::string, ColumnKind>;

/// Reads a header-first, comma-delimited file. A column is Numeric when
/// every non-missing cell is unquoted and parses as a finite float, else
/// Categorical; all-missing columns are Categorical. Hints override
/// inference.
inline Table load_csv(const std::string& path, const SchemaHints& hints = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string buf = ss.str();
  if (buf.size() >= 3 && static_cast<unsigned char>(buf[0]) == 0xEF &&
      static_cast<unsigned char>(buf[1]) == 0xBB && static_cast<unsigned char>(buf[2]) == 0xBF)
    buf.erase(0, 3);

  auto records = detail::parse_csv_records(buf);
  if (records.empty()) throw DataError("'" + path + "' has no header row");

  std::vector<std::string> header;
  for (auto& f : records.front()) header.push_back(f.text);
  {
    std::set<std::string> seen;
    for (const auto& h : header)
      if (!seen.insert(h).second) throw DataError("duplicate header name '" + h + "'");
  }
  const std::size_t width = header.size();

  // Skip blank trailing lines; anything else must match the header width.
  std::vector<const std::vector<detail::CsvField>*> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() == 1 && rec[0].text.empty() && !rec[0].quoted && width != 1) continue;
    if (rec.size() != width)
      throw DataError("row " + std::to_string(r + 1) + " has " + std::to_string(rec.size()) +
                      " cells, header has " + std::to_string(width));
    rows.push_back(&rec);
  }

  Table table;
  for (std::size_t j = 0; j < width; ++j) {
    std::vector<NumericCell> nums(rows.size());
    bool numeric = true;
    bool any_present = false;
    for (std::size_t r = 0; r < rows.size() && numeric; ++r) {
      const auto& f = (*rows[r])[j];
      if (detail::is_missing_marker(f)) continue;
      any_present = true;
      auto v = f.quoted ? std::nullopt : detail::parse_double(f.text);
      if (!v) numeric = false;
      else nums[r] = *v;
    }
    ColumnKind kind = (numeric && any_present) ? ColumnKind::Numeric : ColumnKind::Categorical;
    if (auto h = hints.find(header[j]); h != hints.end()) kind = h->second;

    if (kind == ColumnKind::Numeric) {
      if (!numeric) {
        // Hint forced numeric on a column inference rejected.
        for (std::size_t r = 0; r < rows.size(); ++r) {
          const auto& f = (*rows[r])[j];
          if (detail::is_missing_marker(f)) continue;
          auto v = detail::parse_double(f.text);
          if (!v)
            throw DataError("column '" + header[j] + "' hinted numeric but row " +
                            std::to_string(r + 2) + " holds '" + f.text + "'");
          nums[r] = *v;
        }
      }
      table.add_column(Column::numeric(header[j], std::move(nums)));
    } else {
      std::vector<TextCell> texts(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& f = (*rows[r])[j];
        if (!detail::is_missing_marker(f)) texts[r] = f.text;
      }
      table.add_column(Column::categorical(header[j], std::move(texts)));
    }
  }
  return table;
}

/// Writes the table so that `load_csv` restores identical cells: numbers in
/// shortest round-trip form, text always quoted, missing as empty.
inline void write_csv(const Table& t, std::ostream& out) {
  for (std::size_t j = 0; j < t.cols(); ++j) {
    if (j) out << ',';
    out << detail::csv_name(t.column(j).name());
  }
  out << '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t j = 0; j < t.cols(); ++j) {
      if (j) out << ',';
      const auto& c = t.column(j);
      if (c.missing(r)) continue;
      if (c.is_numeric()) out << detail::format_double(*c.numbers()[r]);
      else out << detail::quote_csv(*c.texts()[r]);
    }
    out << '\n';
  }
}

inline void write_csv(const Table& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(t, out);
}

// ---------------------------------------------------------------------------

struct ColumnSummary {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  double missing_fraction = 0;  // rounded to 6 decimals
  std::size_t distinct = 0;     // distinct non-missing values
  std::optional<double> min, max, mean;
};

inline std::vector<ColumnSummary> summarize(const Table& t) {
  std::vector<ColumnSummary> out;
  const auto n = t.rows();
  for (const auto& c : t.columns()) {
    ColumnSummary s;
    s.name = c.name();
    s.kind = c.kind();
    const auto miss = c.missing_count();
    s.missing_fraction = n == 0 ? 0.0 : std::round(static_cast<double>(miss) / n * 1e6) / 1e6;
    if (c.is_numeric()) {
      std::set<double> distinct;
      double sum = 0;
      for (const auto& v : c.numbers()) {
        if (!v) continue;
        distinct.insert(*v);
        sum += *v;
        s.min = s.min ? std::min(*s.min, *v) : *v;
        s.max = s.max ? std::max(*s.max, *v) : *v;
      }
      s.distinct = distinct.size();
      if (n > miss) s.mean = sum / static_cast<double>(n - miss);
    } else {
      std::set<std::string> distinct;
      for (const auto& v : c.texts())
        if (v) distinct.insert(*v);
      s.distinct = distinct.size();
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_summary_csv(const std::vector<ColumnSummary>& rows, std::ostream& out) {
  out << "name,kind,missing_fraction,distinct,min,max,mean\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? detail::format_double(*v) : std::string();
  };
  for (const auto& s : rows) {
    out << detail::csv_name(s.name) << ',' << to_string(s.kind) << ','
        << detail::format_double(s.missing_fraction) << ',' << s.distinct << ',' << opt(s.min)
        << ',' << opt(s.max) << ',' << opt(s.mean) << '\n';
  }
}

// ---------------------------------------------------------------------------

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

/// Size of the test side: ceil(rows * fraction), so 307,511 rows at 0.2
/// gives 61,503 test rows. The epsilon absorbs representation error in
/// products that are mathematically integral (10 * 0.2).
inline std::size_t test_size_for(std::size_t rows, double test_fraction) {
  const double x = static_cast<double>(rows) * test_fraction;
  return static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
}

inline SplitIndices split(std::size_t rows, double test_fraction, std::uint64_t seed) {
  if (rows == 0) throw DataError("split: empty table");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw DataError("split: test_fraction must lie in (0, 1)");
  Rng rng(seed);
  const auto k = test_size_for(rows, test_fraction);
  SplitIndices s;
  s.seed = seed;
  s.test = sample_without_replacement(rng, rows, k);
  std::sort(s.test.begin(), s.test.end());
  s.train.reserve(rows - s.test.size());
  std::size_t ti = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (ti < s.test.size() && s.test[ti] == r) ++ti;
    else s.train.push_back(r);
  }
  return s;
}

inline SplitIndices split(const Table& t, double test_fraction, std::uint64_t seed) {
  return split(t.rows(), test_fraction, seed);
}

struct ClassCounts {
  std::size_t negatives = 0;
  std::size_t positives = 0;
};

inline ClassCounts class_counts(std::span<const int> labels) {
  ClassCounts c;
  for (int y : labels) {
    if (y == 0) ++c.negatives;
    else if (y == 1) ++c.positives;
    else throw DataError("label outside {0,1}");
  }
  return c;
}

inline ClassCounts class_counts(const Table& t) {
  if (!t.target_name()) throw DataError("class_counts: table has no target column");
  const auto y = t.labels();
  return class_counts(y);
}

}  // namespace crisk
