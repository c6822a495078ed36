#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "crisk/common.hpp"

namespace crisk::boost {

enum class BoostingType { Gbdt, Goss };

inline const char* to_string(BoostingType b) { return b == BoostingType::Goss ? "goss" : "gbdt"; }

inline BoostingType parse_boosting(const std::string& s) {
  if (s == "goss") return BoostingType::Goss;
  if (s == "gbdt" || s == "full") return BoostingType::Gbdt;
  throw ConfigError("unknown boosting type '" + s + "' (expected goss|gbdt)");
}

/// Booster hyperparameters. Defaults are the tuned credit-scoring values;
/// GOSS rates, bin cap and leaf minimums follow common histogram-GBDT
/// defaults.
struct TrainConfig {
  std::size_t n_estimators = 5000;
  double learning_rate = 0.0545;
  std::size_t num_leaves = 50;
  int max_depth = 6;  // <= 0 means unlimited
  double reg_alpha = 0.44;   // L1 on gradient sums
  double reg_lambda = 0.48;  // L2 on hessian sums
  double min_split_gain = 0.03023;
  double colsample_bytree = 0.4888;
  double subsample = 1.0;
  std::size_t subsample_for_bin = 240000;
  bool is_unbalance = true;
  BoostingType boosting = BoostingType::Goss;
  double goss_top_rate = 0.2;    // a
  double goss_other_rate = 0.1;  // b
  std::size_t max_bins = 255;
  std::size_t min_data_in_leaf = 20;
  double min_sum_hessian_in_leaf = 1e-3;
  bool enable_bundling = true;
  double max_conflict_fraction = 0.0;
  bool histogram_subtraction = true;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // runtime only; never changes the model

  void validate() const {
    if (!(learning_rate >= 0.0 && learning_rate <= 1.0))
      throw ConfigError("learning_rate must lie in [0, 1]");
    if (num_leaves < 2) throw ConfigError("num_leaves must be >= 2");
    if (!(colsample_bytree > 0.0 && colsample_bytree <= 1.0))
      throw ConfigError("colsample_bytree must lie in (0, 1]");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("subsample must lie in (0, 1]");
    if (reg_lambda < 0 || reg_alpha < 0) throw ConfigError("reg_lambda and reg_alpha must be >= 0");
    if (min_split_gain < 0) throw ConfigError("min_split_gain must be >= 0");
    if (max_bins < 2 || max_bins > 65000) throw ConfigError("max_bins must lie in [2, 65000]");
    if (subsample_for_bin == 0) throw ConfigError("subsample_for_bin must be positive");
    if (!(max_conflict_fraction >= 0.0 && max_conflict_fraction < 1.0))
      throw ConfigError("max_conflict_fraction must lie in [0, 1)");
    if (boosting == BoostingType::Goss) {
      if (!(goss_top_rate > 0.0) || goss_other_rate < 0.0 || goss_top_rate + goss_other_rate > 1.0 + 1e-12)
        throw ConfigError("GOSS rates need 0 < a, 0 <= b, a + b <= 1");
      if (goss_other_rate == 0.0 && goss_top_rate < 1.0)
        throw ConfigError("GOSS with b = 0 and a < 1 drops gradient mass");
    }
  }
};

}  // namespace crisk::boost
