#pragma once

// Gradient boosting driver for the binary logistic objective: per-iteration
// row sampling (GOSS or bagging), per-tree column sampling, leaf-wise trees,
// test-AUC tracking and best-iteration selection.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crisk/boost/binning.hpp"
#include "crisk/boost/bundle.hpp"
#include "crisk/boost/config.hpp"
#include "crisk/boost/goss.hpp"
#include "crisk/boost/learner.hpp"
#include "crisk/boost/objective.hpp"
#include "crisk/boost/tree.hpp"
#include "crisk/eval.hpp"

namespace crisk::boost {

struct BoostModel {
  static constexpr int kFormatVersion = 1;

  TrainConfig config;
  std::vector<std::string> feature_names;
  std::vector<BinMapper> mappers;
  double base_score = 0;
  std::vector<Tree> trees;
  std::vector<double> feature_gain;  // summed split gain per feature, all trees
  std::vector<double> test_auc;      // entry i: after i + 1 trees; NaN if undefined
  std::vector<double> train_loss;    // weighted mean log-loss after i + 1 trees
  std::size_t best_iteration = 0;    // trees used by default at prediction time

  std::size_t num_features() const { return mappers.size(); }

  double raw_score(std::span<const double> x, std::size_t n_trees) const {
    double s = base_score;
    n_trees = std::min(n_trees, trees.size());
    for (std::size_t t = 0; t < n_trees; ++t) s += trees[t].predict(x);
    return s;
  }

  friend bool operator==(const BoostModel& a, const BoostModel& b) {
    auto same_doubles = [](const std::vector<double>& x, const std::vector<double>& y) {
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] == y[i] || (std::isnan(x[i]) && std::isnan(y[i])))) return false;
      return true;
    };
    return a.feature_names == b.feature_names && a.mappers == b.mappers && a.base_score == b.base_score &&
           a.trees == b.trees && a.feature_gain == b.feature_gain && same_doubles(a.test_auc, b.test_auc) &&
           a.train_loss == b.train_loss && a.best_iteration == b.best_iteration;
  }
};

/// Called after every iteration with (iteration, test AUC or NaN).
using IterationCallback = std::function<void(std::size_t, double)>;

struct LabeledBins {
  const BinnedDataset* bins = nullptr;
  std::span<const int> labels;
};

inline BoostModel train(const BinnedDataset& train_bins, std::span<const int> train_labels,
                        std::optional<LabeledBins> test, const TrainConfig& cfg,
                        const IterationCallback& on_iteration = {}) {
  cfg.validate();
  const std::size_t n = train_bins.rows;
  const std::size_t nf = train_bins.num_features();
  if (train_labels.size() != n) throw DataError("train: label count does not match rows");
  if (nf == 0) throw DataError("train: no features");
  for (int v : train_labels)
    if (v != 0 && v != 1) throw DataError("train: labels must be 0/1");
  if (test) {
    if (test->bins->num_features() != nf) throw DataError("train: test set width differs from train set");
    if (test->labels.size() != test->bins->rows) throw DataError("train: test label count mismatch");
  }

  BoostModel model;
  model.config = cfg;
  model.feature_names = train_bins.feature_names;
  model.mappers = train_bins.mappers;
  model.feature_gain.assign(nf, 0.0);

  const auto w = class_weights(train_labels, cfg.is_unbalance);
  model.base_score = prior_log_odds(train_labels, w);  // throws on single-class labels

  std::vector<double> scores(n, model.base_score);
  const std::size_t nt = test ? test->bins->rows : 0;
  std::vector<double> test_scores(nt, model.base_score);
  bool test_usable = false;
  if (test && nt > 0) {
    std::size_t pos = 0;
    for (int v : test->labels) pos += v == 1 ? 1 : 0;
    test_usable = pos > 0 && pos < nt;
  }

  auto bundles = cfg.enable_bundling ? bundle_features(train_bins, cfg.max_conflict_fraction)
                                     : unbundled_layout(train_bins);
  TrainingSet set(train_bins, std::move(bundles));
  TreeLearner learner(set, cfg);

  const bool goss = cfg.boosting == BoostingType::Goss;
  const double max_mult = goss && cfg.goss_other_rate > 0 ? std::max(1.0, (1 - cfg.goss_top_rate) / cfg.goss_other_rate) : 1.0;
  const double max_w = *std::max_element(w.begin(), w.end());
  const double scale = quantization_scale(n, max_w * max_mult);

  Rng row_rng(mix_seed(cfg.seed, 1));
  Rng col_rng(mix_seed(cfg.seed, 2));
  std::vector<double> grad(n), hess(n);
  std::vector<std::int64_t> qg(n, 0), qh(n, 0);
  std::vector<char> mask(nf, 1);
  const auto n_cols = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.colsample_bytree * static_cast<double>(nf))), 1, nf);

  model.trees.reserve(cfg.n_estimators);
  for (std::size_t it = 0; it < cfg.n_estimators; ++it) {
    for (std::size_t r = 0; r < n; ++r) {
      const auto gh = logistic_grad_hess(scores[r], train_labels[r], w[r]);
      grad[r] = gh.g;
      hess[r] = gh.h;
    }
    const RowSample sample = goss ? goss_select(grad, cfg.goss_top_rate, cfg.goss_other_rate, row_rng)
                                  : bagging_select(n, cfg.subsample, row_rng);
    for (std::size_t i = 0; i < sample.rows.size(); ++i) {
      const auto r = sample.rows[i];
      qg[r] = quantize(grad[r] * sample.multiplier[i], scale);
      qh[r] = quantize(hess[r] * sample.multiplier[i], scale);
    }

    if (n_cols < nf) {
      std::fill(mask.begin(), mask.end(), 0);
      for (auto f : sample_without_replacement(col_rng, nf, n_cols)) mask[f] = 1;
    }

    Tree tree = learner.grow({sample.rows, qg, qh, scale}, mask);
    for (auto& v : tree.leaf_values) v *= cfg.learning_rate;
    for (const auto& node : tree.nodes) model.feature_gain[node.feature] += node.gain;

    for (std::size_t r = 0; r < n; ++r) scores[r] += tree.predict(train_bins, r);
    double test_auc = std::numeric_limits<double>::quiet_NaN();
    if (test) {
      for (std::size_t r = 0; r < nt; ++r) test_scores[r] += tree.predict(*test->bins, r);
      if (test_usable) test_auc = auc(test_scores, test->labels);
    }
    model.test_auc.push_back(test_auc);
    model.train_loss.push_back(mean_logistic_loss(scores, train_labels, w));
    model.trees.push_back(std::move(tree));
    if (on_iteration) on_iteration(it + 1, test_auc);
  }

  model.best_iteration = model.trees.size();
  if (test_usable && !model.test_auc.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < model.test_auc.size(); ++i)
      if (model.test_auc[i] > model.test_auc[best]) best = i;
    model.best_iteration = best + 1;
  }
  return model;
}

/// Bins the test matrix with the training edges and trains.
inline BoostModel train(const Matrix& x_train, std::span<const int> y_train, const Matrix* x_test,
                        std::span<const int> y_test, const TrainConfig& cfg,
                        std::vector<std::string> names = {}, const IterationCallback& on_iteration = {}) {
  const auto train_bins = bin(x_train, cfg, std::move(names));
  if (!x_test) return train(train_bins, y_train, std::nullopt, cfg, on_iteration);
  const auto test_bins = apply_bins(*x_test, train_bins.mappers, train_bins.feature_names, cfg.threads);
  return train(train_bins, y_train, LabeledBins{&test_bins, y_test}, cfg, on_iteration);
}

/// Raw log-odds of each row using the first `at_iteration` trees
/// (default: the best iteration).
inline std::vector<double> predict_raw(const BoostModel& m, const Matrix& x,
                                       std::optional<std::size_t> at_iteration = std::nullopt) {
  if (x.cols() != m.num_features())
    throw DataError("predict: input has " + std::to_string(x.cols()) + " columns, model expects " +
                    std::to_string(m.num_features()));
  const auto k = at_iteration.value_or(m.best_iteration);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = m.raw_score(x.row(r), k);
  return out;
}

inline std::vector<double> predict(const BoostModel& m, const Matrix& x,
                                   std::optional<std::size_t> at_iteration = std::nullopt) {
  auto s = predict_raw(m, x, at_iteration);
  for (auto& v : s) v = sigmoid(v);
  return s;
}

struct FeatureImportance {
  std::string feature;
  std::size_t index = 0;
  double gain = 0;
};

/// Features by total split gain, descending; ties by feature index.
inline std::vector<FeatureImportance> importance(const BoostModel& m) {
  std::vector<FeatureImportance> out;
  for (std::size_t f = 0; f < m.feature_gain.size(); ++f)
    out.push_back({f < m.feature_names.size() ? m.feature_names[f] : "f" + std::to_string(f), f, m.feature_gain[f]});
  std::stable_sort(out.begin(), out.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) { return a.gain > b.gain; });
  return out;
}

}  // namespace crisk::boost
