#pragma once

// Versioned JSON model document. Doubles are written in shortest
// round-trip form, so save -> load -> save is byte-identical. The implicit
// +inf upper edge of each feature's last value bin is not stored.

#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "crisk/boost/booster.hpp"

namespace crisk::boost {

using nlohmann::json;

inline json config_to_json(const TrainConfig& c) {
  return json{{"n_estimators", c.n_estimators},
              {"learning_rate", c.learning_rate},
              {"num_leaves", c.num_leaves},
              {"max_depth", c.max_depth},
              {"reg_alpha", c.reg_alpha},
              {"reg_lambda", c.reg_lambda},
              {"min_split_gain", c.min_split_gain},
              {"colsample_bytree", c.colsample_bytree},
              {"subsample", c.subsample},
              {"subsample_for_bin", c.subsample_for_bin},
              {"is_unbalance", c.is_unbalance},
              {"boosting_type", to_string(c.boosting)},
              {"goss_top_rate", c.goss_top_rate},
              {"goss_other_rate", c.goss_other_rate},
              {"max_bins", c.max_bins},
              {"min_data_in_leaf", c.min_data_in_leaf},
              {"min_sum_hessian_in_leaf", c.min_sum_hessian_in_leaf},
              {"enable_bundling", c.enable_bundling},
              {"max_conflict_fraction", c.max_conflict_fraction},
              {"histogram_subtraction", c.histogram_subtraction},
              {"seed", c.seed}};
}

/// Reads any subset of the keys written by config_to_json onto `c`.
inline void config_from_json(const json& j, TrainConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("n_estimators", c.n_estimators);
  get("learning_rate", c.learning_rate);
  get("num_leaves", c.num_leaves);
  get("max_depth", c.max_depth);
  get("reg_alpha", c.reg_alpha);
  get("reg_lambda", c.reg_lambda);
  get("min_split_gain", c.min_split_gain);
  get("colsample_bytree", c.colsample_bytree);
  get("subsample", c.subsample);
  get("subsample_for_bin", c.subsample_for_bin);
  get("is_unbalance", c.is_unbalance);
  if (j.contains("boosting_type")) c.boosting = parse_boosting(j.at("boosting_type").get<std::string>());
  get("goss_top_rate", c.goss_top_rate);
  get("goss_other_rate", c.goss_other_rate);
  get("max_bins", c.max_bins);
  get("min_data_in_leaf", c.min_data_in_leaf);
  get("min_sum_hessian_in_leaf", c.min_sum_hessian_in_leaf);
  get("enable_bundling", c.enable_bundling);
  get("max_conflict_fraction", c.max_conflict_fraction);
  get("histogram_subtraction", c.histogram_subtraction);
  get("seed", c.seed);
}

inline json model_to_json(const BoostModel& m) {
  json mappers = json::array();
  for (const auto& mp : m.mappers) {
    json edges = json::array();
    for (std::size_t i = 0; i + 1 < mp.upper.size(); ++i) edges.push_back(mp.upper[i]);
    mappers.push_back({{"upper", edges}, {"default_bin", mp.default_bin}});
  }
  json trees = json::array();
  for (const auto& t : m.trees) {
    json nodes = json::array();
    for (const auto& n : t.nodes)
      nodes.push_back(json::array({n.feature, n.threshold_bin, n.default_left, n.left, n.right, n.gain, n.count}));
    trees.push_back({{"nodes", nodes}, {"leaf_values", t.leaf_values}, {"leaf_depth", t.leaf_depth}});
  }
  json auc = json::array();
  for (double v : m.test_auc) auc.push_back(std::isnan(v) ? json(nullptr) : json(v));
  return json{{"format", "crisk-gbdt"},
              {"version", BoostModel::kFormatVersion},
              {"config", config_to_json(m.config)},
              {"feature_names", m.feature_names},
              {"bin_mappers", mappers},
              {"base_score", m.base_score},
              {"best_iteration", m.best_iteration},
              {"feature_gain", m.feature_gain},
              {"test_auc", auc},
              {"train_loss", m.train_loss},
              {"trees", trees}};
}

inline BoostModel model_from_json(const json& j) {
  if (j.value("format", "") != "crisk-gbdt") throw DataError("not a crisk-gbdt model document");
  const int version = j.at("version").get<int>();
  if (version != BoostModel::kFormatVersion)
    throw DataError("unsupported model version " + std::to_string(version));
  BoostModel m;
  config_from_json(j.at("config"), m.config);
  j.at("feature_names").get_to(m.feature_names);
  for (const auto& mj : j.at("bin_mappers")) {
    BinMapper mp;
    mj.at("upper").get_to(mp.upper);
    mp.upper.push_back(std::numeric_limits<double>::infinity());
    mj.at("default_bin").get_to(mp.default_bin);
    m.mappers.push_back(std::move(mp));
  }
  m.base_score = j.at("base_score").get<double>();
  m.best_iteration = j.at("best_iteration").get<std::size_t>();
  j.at("feature_gain").get_to(m.feature_gain);
  for (const auto& v : j.at("test_auc"))
    m.test_auc.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
  j.at("train_loss").get_to(m.train_loss);
  for (const auto& tj : j.at("trees")) {
    Tree t;
    for (const auto& nj : tj.at("nodes")) {
      TreeNode n;
      nj.at(0).get_to(n.feature);
      nj.at(1).get_to(n.threshold_bin);
      nj.at(2).get_to(n.default_left);
      nj.at(3).get_to(n.left);
      nj.at(4).get_to(n.right);
      nj.at(5).get_to(n.gain);
      nj.at(6).get_to(n.count);
      if (n.feature >= m.mappers.size() || n.threshold_bin >= m.mappers[n.feature].num_value_bins())
        throw DataError("model node references an unknown feature or bin");
      n.threshold = m.mappers[n.feature].upper[n.threshold_bin];
      t.nodes.push_back(n);
    }
    tj.at("leaf_values").get_to(t.leaf_values);
    tj.at("leaf_depth").get_to(t.leaf_depth);
    m.trees.push_back(std::move(t));
  }
  return m;
}

inline std::string model_to_string(const BoostModel& m) { return model_to_json(m).dump(1) + "\n"; }

inline BoostModel model_from_string(const std::string& s) {
  try {
    return model_from_json(json::parse(s));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  }
}

inline void save_model(const BoostModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << model_to_string(m);
}

inline BoostModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return model_from_string(ss.str());
  } catch (const DataError& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

inline void write_training_log_csv(const BoostModel& m, std::ostream& out) {
  out << "iteration,test_auc\n";
  for (std::size_t i = 0; i < m.test_auc.size(); ++i) {
    out << i + 1 << ',';
    if (!std::isnan(m.test_auc[i])) out << crisk::detail::format_double(m.test_auc[i]);
    out << '\n';
  }
}

inline void write_importance_csv(const BoostModel& m, std::ostream& out, std::size_t top = 20) {
  out << "rank,feature,gain\n";
  const auto imp = importance(m);
  for (std::size_t i = 0; i < std::min(top, imp.size()); ++i)
    out << i + 1 << ',' << crisk::detail::csv_name(imp[i].feature) << ','
        << crisk::detail::format_double(imp[i].gain) << '\n';
}

}  // namespace crisk::boost
