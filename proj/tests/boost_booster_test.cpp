#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "crisk/boost/model_io.hpp"

using namespace crisk;
using namespace crisk::boost;

namespace {

struct Data {
  Matrix x_train, x_test;
  std::vector<int> y_train, y_test;
};

// Rows split 4:1 in order; `rule` labels each row from its features.
template <typename Rule>
Data make_data(std::size_t n, std::size_t d, std::uint64_t seed, Rule rule, double missing_rate = 0.0) {
  Rng rng(seed);
  Data out{Matrix(0, d), Matrix(0, d), {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(d);
    for (auto& v : row) v = 2 * uniform01(rng) - 1;
    const int y = rule(row, rng);
    for (auto& v : row)
      if (uniform01(rng) < missing_rate) v = kMissing;
    auto& x = i % 5 == 4 ? out.x_test : out.x_train;
    auto& labels = i % 5 == 4 ? out.y_test : out.y_train;
    x.append_row(row);
    labels.push_back(y);
  }
  return out;
}

Data separable(std::size_t n, std::uint64_t seed) {
  return make_data(n, 2, seed, [](const std::vector<double>& r, Rng&) { return r[0] + r[1] > 0.3 ? 1 : 0; });
}

TrainConfig small_config(std::size_t trees) {
  TrainConfig cfg;
  cfg.n_estimators = trees;
  cfg.threads = 1;
  return cfg;
}

BoostModel fit(const Data& d, const TrainConfig& cfg) {
  return train(d.x_train, d.y_train, &d.x_test, d.y_test, cfg);
}

// Independent gain with L1 thresholding, written against the textbook form.
double oracle_gain(double gl, double hl, double gr, double hr, double lambda, double alpha) {
  auto t = [alpha](double g) { return std::copysign(std::max(std::abs(g) - alpha, 0.0), g); };
  auto score = [&](double g, double h) { return t(g) * t(g) / (h + lambda); };
  return 0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr));
}

}  // namespace

TEST(Booster, SeparableDataReachesHighAuc) {
  const auto d = separable(2000, 1);
  auto cfg = small_config(50);
  const auto goss = fit(d, cfg);
  cfg.boosting = BoostingType::Gbdt;
  const auto full = fit(d, cfg);
  const double a_goss = auc(predict(goss, d.x_test), d.y_test);
  const double a_full = auc(predict(full, d.x_test), d.y_test);
  EXPECT_GE(a_goss, 0.98);
  EXPECT_GE(a_full, 0.98);
  EXPECT_LE(std::abs(a_goss - a_full), 0.02);
}

TEST(Booster, ZeroLearningRateKeepsPrior) {
  const auto d = make_data(400, 3, 2, [](const std::vector<double>&, Rng& rng) { return static_cast<int>(uniform_index(rng, 2)); });
  auto cfg = small_config(5);
  cfg.learning_rate = 0.0;
  cfg.is_unbalance = false;
  const auto m = fit(d, cfg);
  const auto p = predict(m, d.x_test);
  for (double v : p) EXPECT_EQ(v, sigmoid(m.base_score));
  for (double a : m.test_auc) EXPECT_DOUBLE_EQ(a, 0.5);
}

TEST(Booster, ZeroTreesPredictSigmoidOfBase) {
  const auto d = separable(200, 3);
  const auto m = fit(d, small_config(0));
  EXPECT_TRUE(m.trees.empty());
  for (double v : predict(m, d.x_test)) EXPECT_EQ(v, sigmoid(m.base_score));
}

TEST(Booster, BaseScoreIsPriorLogOdds) {
  const auto d = separable(500, 4);
  auto cfg = small_config(1);
  cfg.is_unbalance = false;
  const auto m = fit(d, cfg);
  const double pos = std::accumulate(d.y_train.begin(), d.y_train.end(), 0.0);
  EXPECT_NEAR(m.base_score, std::log(pos / (d.y_train.size() - pos)), 1e-12);
  cfg.is_unbalance = true;
  EXPECT_NEAR(fit(d, cfg).base_score, 0.0, 1e-12);
}

TEST(Booster, PredictionReproducesBestLoggedAuc) {
  const auto d = make_data(1500, 5, 5, [](const std::vector<double>& r, Rng& rng) {
    return r[0] * r[1] + 0.3 * standard_normal(rng) > 0 ? 1 : 0;
  }, 0.1);
  const auto m = fit(d, small_config(60));
  ASSERT_GE(m.best_iteration, 1u);
  const double logged = m.test_auc[m.best_iteration - 1];
  for (double a : m.test_auc) EXPECT_LE(a, logged);
  EXPECT_NEAR(auc(predict(m, d.x_test), d.y_test), logged, 1e-9);
}

TEST(Booster, DuplicateRowsShareProbabilities) {
  const auto d = separable(300, 6);
  const auto m = fit(d, small_config(10));
  Matrix x(2, 2);
  x(0, 0) = x(1, 0) = 0.2;
  x(0, 1) = x(1, 1) = -0.4;
  const auto p = predict(m, x);
  EXPECT_EQ(p[0], p[1]);
}

TEST(Booster, ImportanceRanksSignalFeatureFirst) {
  const auto d = make_data(1000, 4, 7, [](const std::vector<double>& r, Rng&) { return r[0] > 0.2 ? 1 : 0; });
  Data with_constant = d;
  for (auto* x : {&with_constant.x_train, &with_constant.x_test})
    for (std::size_t r = 0; r < x->rows(); ++r) (*x)(r, 3) = 1.0;
  auto cfg = small_config(30);
  cfg.colsample_bytree = 1.0;
  const auto m = fit(with_constant, cfg);
  const auto imp = importance(m);
  EXPECT_EQ(imp.front().index, 0u);
  EXPECT_EQ(m.feature_gain[3], 0.0);
  for (std::size_t i = 1; i < imp.size(); ++i) EXPECT_GE(imp[i - 1].gain, imp[i].gain);
  double node_sum = 0;
  for (const auto& t : m.trees)
    for (const auto& n : t.nodes) node_sum += n.gain;
  EXPECT_NEAR(std::accumulate(m.feature_gain.begin(), m.feature_gain.end(), 0.0), node_sum,
              1e-9 * std::max(1.0, node_sum));
}

TEST(Booster, TreeStructuralInvariants) {
  const auto d = make_data(3000, 6, 8, [](const std::vector<double>& r, Rng& rng) {
    return std::sin(3 * r[0]) + r[1] * r[2] + 0.2 * standard_normal(rng) > 0 ? 1 : 0;
  }, 0.05);
  auto cfg = small_config(20);
  cfg.num_leaves = 12;
  cfg.max_depth = 4;
  cfg.min_data_in_leaf = 10;
  const auto m = fit(d, cfg);
  for (const auto& t : m.trees) {
    EXPECT_LE(t.num_leaves(), cfg.num_leaves);
    EXPECT_LE(t.nodes.size(), 2 * cfg.num_leaves - 1);
    EXPECT_EQ(t.nodes.size() + 1, t.num_leaves());
    EXPECT_LE(t.depth(), cfg.max_depth);
    for (const auto& n : t.nodes) EXPECT_GT(n.gain, cfg.min_split_gain);
  }
}

TEST(Booster, TrainLossNonIncreasingWithoutSampling) {
  const auto d = make_data(1000, 4, 9, [](const std::vector<double>& r, Rng& rng) {
    return r[0] - r[1] * r[1] + 0.5 * standard_normal(rng) > 0 ? 1 : 0;
  });
  auto cfg = small_config(40);
  cfg.boosting = BoostingType::Gbdt;
  cfg.subsample = 1.0;
  cfg.colsample_bytree = 1.0;
  const auto m = fit(d, cfg);
  for (std::size_t i = 1; i < m.train_loss.size(); ++i) EXPECT_LE(m.train_loss[i], m.train_loss[i - 1] + 1e-15);
}

TEST(Booster, IdenticalAcrossThreadCounts) {
  const auto d = make_data(1200, 8, 10, [](const std::vector<double>& r, Rng&) { return r[2] + r[5] > 0 ? 1 : 0; },
                           0.1);
  auto cfg = small_config(15);
  const auto a = fit(d, cfg);
  cfg.threads = 4;
  const auto b = fit(d, cfg);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(model_to_string(a), model_to_string(b));
}

TEST(Booster, HistogramSubtractionMatchesDirectConstruction) {
  const auto d = make_data(1500, 6, 11, [](const std::vector<double>& r, Rng& rng) {
    return r[0] * r[3] + 0.3 * standard_normal(rng) > 0 ? 1 : 0;
  }, 0.08);
  auto cfg = small_config(20);
  const auto with = fit(d, cfg);
  cfg.histogram_subtraction = false;
  const auto without = fit(d, cfg);
  EXPECT_TRUE(with == without);
}

TEST(Booster, BundlingDoesNotChangeModelOnExclusiveFeatures) {
  // Sparse one-hot block plus a dense signal column.
  Rng rng(12);
  Data d{Matrix(0, 5), Matrix(0, 5), {}, {}};
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> row(5, 0.0);
    const auto hot = uniform_index(rng, 8);
    if (hot < 4) row[hot] = 1.0;
    row[4] = standard_normal(rng);
    const int y = (hot == 1 || row[4] > 1.0) ? 1 : 0;
    (i % 5 == 4 ? d.x_test : d.x_train).append_row(row);
    (i % 5 == 4 ? d.y_test : d.y_train).push_back(y);
  }
  auto cfg = small_config(15);
  cfg.colsample_bytree = 1.0;
  const auto bundled = fit(d, cfg);
  cfg.enable_bundling = false;
  const auto plain = fit(d, cfg);
  EXPECT_TRUE(bundled == plain);
}

TEST(Booster, SaveLoadRoundTripIsByteExact) {
  const auto d = make_data(800, 4, 13, [](const std::vector<double>& r, Rng&) { return r[1] > 0 ? 1 : 0; }, 0.1);
  const auto m = fit(d, small_config(10));
  const auto s = model_to_string(m);
  const auto back = model_from_string(s);
  EXPECT_TRUE(back == m);
  EXPECT_EQ(model_to_string(back), s);
  EXPECT_EQ(predict(back, d.x_test), predict(m, d.x_test));
}

TEST(Booster, RejectsBadInputs) {
  const auto d = separable(200, 14);
  const auto m = fit(d, small_config(2));
  EXPECT_THROW(predict(m, Matrix(1, 3)), DataError);
  std::vector<int> one_class(d.y_train.size(), 0);
  EXPECT_THROW(train(d.x_train, one_class, nullptr, {}, small_config(1)), DataError);
  auto bad = small_config(1);
  bad.num_leaves = 1;
  EXPECT_THROW(fit(d, bad), ConfigError);
  auto doc = model_to_json(m);
  doc["version"] = 99;
  EXPECT_THROW(model_from_json(doc), DataError);
}

TEST(Booster, NoTestSetMeansLastIteration) {
  const auto d = separable(300, 15);
  const auto m = train(d.x_train, d.y_train, nullptr, {}, small_config(7));
  EXPECT_EQ(m.best_iteration, 7u);
  for (double a : m.test_auc) EXPECT_TRUE(std::isnan(a));
}

TEST(TreeLearner, RootSplitIsExhaustiveArgmax) {
  Rng rng(2025);
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 4 + uniform_index(rng, 61), nf = 1 + uniform_index(rng, 4);
    Matrix x(n, nf);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t f = 0; f < nf; ++f)
        x(r, f) = uniform01(rng) < 0.15 ? kMissing : static_cast<double>(uniform_index(rng, 6));
    TrainConfig cfg;
    cfg.min_data_in_leaf = 1;
    cfg.min_sum_hessian_in_leaf = 0;
    cfg.min_split_gain = 0;
    cfg.num_leaves = 2;
    cfg.max_depth = 0;
    cfg.reg_lambda = 0.1 + uniform01(rng);
    cfg.reg_alpha = inst % 2 ? 0.0 : uniform01(rng);
    cfg.threads = 1;
    const auto data = bin(x, cfg);

    const double scale = std::ldexp(1.0, 20);
    std::vector<std::int64_t> g(n), h(n);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    for (std::size_t r = 0; r < n; ++r) {
      g[r] = quantize(standard_normal(rng), scale);
      h[r] = quantize(0.05 + uniform01(rng), scale);
    }
    TrainingSet set(data, bundle_features(data, 0.0));
    TreeLearner learner(set, cfg);
    const std::vector<char> mask(nf, 1);
    const auto tree = learner.grow({rows, g, h, scale}, mask);

    // Enumerate every (feature, value cut, missing side) partition on raw values.
    double best = -HUGE_VAL;
    auto gain_of = [&](std::size_t f, double cut, bool missing_left) {
      double gl = 0, hl = 0, gr = 0, hr = 0;
      std::size_t nl = 0;
      for (std::size_t r = 0; r < n; ++r) {
        const double v = x(r, f);
        const bool left = std::isnan(v) ? missing_left : v <= cut;
        (left ? gl : gr) += static_cast<double>(g[r]) / scale;
        (left ? hl : hr) += static_cast<double>(h[r]) / scale;
        nl += left;
      }
      if (nl == 0 || nl == n) return -HUGE_VAL;
      return oracle_gain(gl, hl, gr, hr, cfg.reg_lambda, cfg.reg_alpha);
    };
    for (std::size_t f = 0; f < nf; ++f)
      for (double cut = 0; cut <= 5; cut += 1)
        for (bool ml : {false, true}) best = std::max(best, gain_of(f, cut, ml));

    if (!(best > 1e-9)) {
      EXPECT_TRUE(tree.nodes.empty() || tree.nodes[0].gain <= 1e-9) << "instance " << inst;
      continue;
    }
    ASSERT_FALSE(tree.nodes.empty()) << "instance " << inst;
    const auto& root = tree.nodes[0];
    EXPECT_NEAR(root.gain, best, 1e-9 * std::max(1.0, best)) << "instance " << inst;
    EXPECT_NEAR(gain_of(root.feature, root.threshold, root.default_left), best, 1e-9 * std::max(1.0, best))
        << "instance " << inst;
  }
}

TEST(TreeLearner, ChildHistogramsEqualParentMinusSibling) {
  Rng rng(3);
  Matrix x(200, 3);
  for (std::size_t r = 0; r < 200; ++r)
    for (std::size_t f = 0; f < 3; ++f) x(r, f) = uniform01(rng) < 0.1 ? kMissing : standard_normal(rng);
  TrainConfig cfg;
  cfg.threads = 1;
  const auto data = bin(x, cfg);
  TrainingSet set(data, bundle_features(data, 0.0));
  TreeLearner learner(set, cfg);
  const double scale = std::ldexp(1.0, 30);
  std::vector<std::int64_t> g(200), h(200);
  for (std::size_t r = 0; r < 200; ++r) {
    g[r] = quantize(standard_normal(rng), scale);
    h[r] = quantize(uniform01(rng), scale);
  }
  std::vector<std::size_t> all(200), left, right;
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (auto r : all) (data.bins[0][r] < 100 ? left : right).push_back(r);
  const GradientView view{all, g, h, scale};
  const auto parent = learner.histogram_of(all, view);
  const auto lh = learner.histogram_of(left, view);
  const auto rh = learner.histogram_of(right, view);
  for (std::size_t i = 0; i < parent.size(); ++i) EXPECT_EQ(parent[i] - lh[i], rh[i]);
}
