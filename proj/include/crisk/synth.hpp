#pragma once

// Synthetic stand-in for a loan application table. Column names match the
// credit recipes so derived attributes apply. The label is a nonlinear
// function of three hidden ratios (term length, employment share of age,
// external score sum) plus logistic noise; the positive count is fixed at
// round(rows / (1 + imbalance_ratio)) by labelling the top latent scores.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "crisk/common.hpp"
#include "crisk/tabular.hpp"

namespace crisk {

struct SyntheticSpec {
  std::size_t rows = 10000;
  std::size_t numeric_columns = 6;      // extra noise columns beyond the credit ones
  std::size_t categorical_columns = 3;
  double missing_rate = 0.05;           // per feature cell, applied after labelling
  double imbalance_ratio = 11.4;        // negatives per positive
  std::uint64_t seed = 0;

  void validate() const {
    if (rows < 2) throw ConfigError("synthetic rows must be >= 2");
    if (!(imbalance_ratio > 1.0)) throw ConfigError("imbalance_ratio must be > 1");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw ConfigError("missing_rate must lie in [0, 1)");
  }
};

inline std::size_t synthetic_positives(const SyntheticSpec& s) {
  return static_cast<std::size_t>(round_half_away(static_cast<double>(s.rows) / (1.0 + s.imbalance_ratio)));
}

inline Table generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.rows;
  Rng rng(spec.seed);

  std::vector<double> income(n), credit(n), annuity(n), goods(n), birth(n), employed(n);
  std::vector<double> ext1(n), ext2(n), ext3(n), latent(n);
  auto clamp01 = [](double v) { return std::clamp(v, 0.001, 0.999); };
  for (std::size_t i = 0; i < n; ++i) {
    income[i] = std::round(std::exp(11.9 + 0.5 * standard_normal(rng)) / 100.0) * 100.0;
    credit[i] = std::round(income[i] * (1.0 + 5.0 * uniform01(rng)) / 500.0) * 500.0;
    const double term = 8.0 + 32.0 * uniform01(rng);
    annuity[i] = std::round(credit[i] / term * 2.0) / 2.0;
    goods[i] = std::round(credit[i] * (0.8 + 0.2 * uniform01(rng)) / 500.0) * 500.0;
    const double age_years = 21.0 + 48.0 * uniform01(rng);
    birth[i] = -std::round(age_years * 365.25);
    const double u = uniform01(rng);
    employed[i] = -std::round(u * u * (age_years - 18.0) * 365.25);
    ext1[i] = clamp01(0.5 + 0.2 * standard_normal(rng));
    ext2[i] = clamp01(0.5 + 0.2 * standard_normal(rng));
    ext3[i] = clamp01(0.5 + 0.2 * standard_normal(rng));

    const double r_term = credit[i] / annuity[i];
    const double r_emp = employed[i] / birth[i];
    const double r_ext = ext1[i] + ext2[i] + ext3[i];
    double z = -3.0 * (r_ext - 1.5);
    z += 1.5 * std::exp(-((r_term - 20.0) / 4.0) * ((r_term - 20.0) / 4.0));
    z += r_emp < 0.05 ? 1.2 : -1.5 * r_emp;
    z += (r_term > 30.0 && r_ext < 1.3) ? 1.5 : 0.0;
    const double e = std::clamp(uniform01(rng), 1e-12, 1.0 - 1e-12);
    latent[i] = z + 0.6 * std::log(e / (1.0 - e));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return latent[a] > latent[b]; });
  std::vector<NumericCell> target(n, 0.0);
  for (std::size_t i = 0; i < synthetic_positives(spec); ++i) target[order[i]] = 1.0;

  Table t;
  auto numeric = [&](const std::string& name, const std::vector<double>& v) {
    std::vector<NumericCell> cells(v.begin(), v.end());
    t.add_column(Column::numeric(name, std::move(cells)));
  };
  numeric("AMT_INCOME_TOTAL", income);
  numeric("AMT_CREDIT", credit);
  numeric("AMT_ANNUITY", annuity);
  numeric("AMT_GOODS_PRICE", goods);
  numeric("DAYS_BIRTH", birth);
  numeric("DAYS_EMPLOYED", employed);
  numeric("EXT_SOURCE_1", ext1);
  numeric("EXT_SOURCE_2", ext2);
  numeric("EXT_SOURCE_3", ext3);
  for (std::size_t j = 0; j < spec.numeric_columns; ++j) {
    std::vector<double> v(n);
    const double scale = std::pow(10.0, static_cast<double>(j % 4));
    for (auto& x : v) x = std::round(standard_normal(rng) * scale * 1000.0) / 1000.0;
    numeric("NUM_" + std::to_string(j), v);
  }
  for (std::size_t j = 0; j < spec.categorical_columns; ++j) {
    const std::size_t levels = 2 + (j * 3) % 7;
    double total = 0;
    for (std::size_t k = 0; k < levels; ++k) total += 1.0 / static_cast<double>(k + 1);
    std::vector<TextCell> v(n);
    for (auto& x : v) {
      // level k drawn with weight 1 / (k + 1)
      double u = uniform01(rng) * total;
      std::size_t k = 0;
      for (; k + 1 < levels; ++k) {
        u -= 1.0 / static_cast<double>(k + 1);
        if (u < 0) break;
      }
      x = "level_" + std::string(1, static_cast<char>('A' + k));
    }
    t.add_column(Column::categorical("CAT_" + std::to_string(j), std::move(v)));
  }

  if (spec.missing_rate > 0) {
    Table masked;
    for (const auto& c : t.columns()) {
      std::vector<std::size_t> drop;
      for (std::size_t r = 0; r < n; ++r)
        if (uniform01(rng) < spec.missing_rate) drop.push_back(r);
      if (c.is_numeric()) {
        auto v = c.numbers();
        for (auto r : drop) v[r].reset();
        masked.add_column(Column::numeric(c.name(), std::move(v)));
      } else {
        auto v = c.texts();
        for (auto r : drop) v[r].reset();
        masked.add_column(Column::categorical(c.name(), std::move(v)));
      }
    }
    t = std::move(masked);
  }
  t.add_column(Column::numeric("TARGET", std::move(target)));
  t.set_target("TARGET");
  return t;
}

}  // namespace crisk
