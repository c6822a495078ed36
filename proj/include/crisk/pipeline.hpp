#pragma once

// End-to-end experiment runner behind the CLI.
//
// Stage order for one run: split rows, derive ratio attributes, impute,
// encode, optional scaling, preliminary booster for importance, k-means
// cluster attribute on the top attributes, then train and evaluate. Every
// fitted statistic (fill values, category codes, scale factors, bin edges,
// centroids) comes from the train rows only. Randomness flows from the
// root seed, split into one stream per stage.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crisk/baseline.hpp"
#include "crisk/boost/model_io.hpp"
#include "crisk/eval.hpp"
#include "crisk/featgen.hpp"
#include "crisk/preprocess.hpp"
#include "crisk/resample.hpp"
#include "crisk/tabular.hpp"

namespace crisk {

using nlohmann::json;

enum class ModelKind { Gbdt, Logistic };

inline const char* to_string(ModelKind m) { return m == ModelKind::Gbdt ? "gbdt" : "logistic"; }

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "gbdt") return ModelKind::Gbdt;
  if (s == "logistic") return ModelKind::Logistic;
  throw ConfigError("unknown model '" + s + "' (expected gbdt|logistic)");
}

struct PipelineConfig {
  std::string data;
  std::string target = "TARGET";
  std::uint64_t seed = 42;
  double test_fraction = 0.2;
  int impute_method = 6;
  ScaleKind scaling = ScaleKind::None;
  bool derived_features = true;
  bool cluster_feature = true;
  std::size_t cluster_k = 10;
  std::size_t cluster_top = 5;
  std::size_t prelim_estimators = 100;
  ModelKind model = ModelKind::Gbdt;
  std::string output_dir = "crisk_out";
  double threshold = 0.5;
  boost::TrainConfig train;
  bool adasyn = true;  // logistic path only
  AdasynConfig adasyn_cfg;
  LogisticConfig logistic;
  std::size_t bench_estimators = 200;
  std::size_t cv_folds = 5;
  json tune_grid = json::object();  // key -> list of values
  unsigned threads = 0;

  void validate() const {
    if (impute_method < 1 || impute_method > 8) throw ConfigError("impute_method must be in 1..8");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
    if (cluster_k == 0 || cluster_top == 0) throw ConfigError("cluster_k and cluster_top must be positive");
    if (cv_folds < 2) throw ConfigError("cv_folds must be >= 2");
    if (adasyn_cfg.k < 1) throw ConfigError("adasyn_k must be >= 1");
    if (!(adasyn_cfg.beta >= 0.0 && adasyn_cfg.beta <= 1.0)) throw ConfigError("adasyn_beta must lie in [0, 1]");
    train.validate();
  }
};

// Seed streams derived from the root seed.
enum Stage : std::uint64_t { kSplitStage = 1, kPrelimStage, kClusterStage, kBoostStage, kAdasynStage, kFoldStage };

// ---------------------------------------------------------------------------
// Configuration: a flat JSON object whose keys mirror the fields above.

namespace detail {

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type: " + v.dump());
  }
}

}  // namespace detail

inline void apply_setting(PipelineConfig& c, std::string key, const json& v) {
  for (auto& ch : key)
    if (ch == '-') ch = '_';
  using detail::get_as;
  auto& t = c.train;
  if (key == "data") c.data = get_as<std::string>(v, key);
  else if (key == "target") c.target = get_as<std::string>(v, key);
  else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
  else if (key == "test_fraction") c.test_fraction = get_as<double>(v, key);
  else if (key == "impute_method") {
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s.rfind("method", 0) != 0 || s.size() != 7 || s[6] < '1' || s[6] > '8')
        throw ConfigError("impute_method must be method1..method8 or 1..8, got '" + s + "'");
      c.impute_method = s[6] - '0';
    } else {
      c.impute_method = get_as<int>(v, key);
    }
  } else if (key == "scaling") c.scaling = parse_scale_kind(get_as<std::string>(v, key));
  else if (key == "derived_features") c.derived_features = get_as<bool>(v, key);
  else if (key == "cluster_feature") c.cluster_feature = get_as<bool>(v, key);
  else if (key == "cluster_k") c.cluster_k = get_as<std::size_t>(v, key);
  else if (key == "cluster_top") c.cluster_top = get_as<std::size_t>(v, key);
  else if (key == "prelim_estimators") c.prelim_estimators = get_as<std::size_t>(v, key);
  else if (key == "model") c.model = parse_model_kind(get_as<std::string>(v, key));
  else if (key == "output_dir") c.output_dir = get_as<std::string>(v, key);
  else if (key == "threshold") c.threshold = get_as<double>(v, key);
  else if (key == "adasyn") c.adasyn = get_as<bool>(v, key);
  else if (key == "adasyn_beta" || key == "beta") c.adasyn_cfg.beta = get_as<double>(v, key);
  else if (key == "adasyn_k" || key == "k") c.adasyn_cfg.k = get_as<std::size_t>(v, key);
  else if (key == "logistic_learning_rate") c.logistic.learning_rate = get_as<double>(v, key);
  else if (key == "logistic_max_iterations") c.logistic.max_iterations = get_as<std::size_t>(v, key);
  else if (key == "logistic_l2") c.logistic.l2 = get_as<double>(v, key);
  else if (key == "logistic_tolerance") c.logistic.tolerance = get_as<double>(v, key);
  else if (key == "bench_estimators") c.bench_estimators = get_as<std::size_t>(v, key);
  else if (key == "cv_folds") c.cv_folds = get_as<std::size_t>(v, key);
  else if (key == "tune_grid") {
    if (!v.is_object()) throw ConfigError("tune_grid must be an object of value lists");
    c.tune_grid = v;
  } else if (key == "threads") c.threads = get_as<unsigned>(v, key);
  else if (key == "n_estimators") t.n_estimators = get_as<std::size_t>(v, key);
  else if (key == "learning_rate") t.learning_rate = get_as<double>(v, key);
  else if (key == "num_leaves") t.num_leaves = get_as<std::size_t>(v, key);
  else if (key == "max_depth") t.max_depth = get_as<int>(v, key);
  else if (key == "reg_alpha") t.reg_alpha = get_as<double>(v, key);
  else if (key == "reg_lambda") t.reg_lambda = get_as<double>(v, key);
  else if (key == "min_split_gain") t.min_split_gain = get_as<double>(v, key);
  else if (key == "colsample_bytree") t.colsample_bytree = get_as<double>(v, key);
  else if (key == "subsample") t.subsample = get_as<double>(v, key);
  else if (key == "subsample_for_bin") t.subsample_for_bin = get_as<std::size_t>(v, key);
  else if (key == "is_unbalance") t.is_unbalance = get_as<bool>(v, key);
  else if (key == "boosting_type" || key == "boosting") t.boosting = boost::parse_boosting(get_as<std::string>(v, key));
  else if (key == "goss_top_rate") t.goss_top_rate = get_as<double>(v, key);
  else if (key == "goss_other_rate") t.goss_other_rate = get_as<double>(v, key);
  else if (key == "max_bins") t.max_bins = get_as<std::size_t>(v, key);
  else if (key == "min_data_in_leaf") t.min_data_in_leaf = get_as<std::size_t>(v, key);
  else if (key == "min_sum_hessian_in_leaf") t.min_sum_hessian_in_leaf = get_as<double>(v, key);
  else if (key == "enable_bundling") t.enable_bundling = get_as<bool>(v, key);
  else if (key == "max_conflict_fraction") t.max_conflict_fraction = get_as<double>(v, key);
  else if (key == "histogram_subtraction") t.histogram_subtraction = get_as<bool>(v, key);
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Command-line values arrive as text; anything that parses as JSON is
/// taken as such (numbers, true/false, lists), the rest as a string.
inline json parse_override_value(const std::string& text) {
  if (text.empty()) return json(text);
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);
  }
}

inline void apply_json(PipelineConfig& c, const json& doc) {
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [k, v] : doc.items()) apply_setting(c, k, v);
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  PipelineConfig c;
  apply_json(c, doc);
  return c;
}

inline json config_to_json(const PipelineConfig& c) {
  json j = boost::config_to_json(c.train);
  j.erase("seed");
  j["data"] = c.data;
  j["target"] = c.target;
  j["seed"] = c.seed;
  j["test_fraction"] = c.test_fraction;
  j["impute_method"] = c.impute_method;
  j["scaling"] = to_string(c.scaling);
  j["derived_features"] = c.derived_features;
  j["cluster_feature"] = c.cluster_feature;
  j["cluster_k"] = c.cluster_k;
  j["cluster_top"] = c.cluster_top;
  j["prelim_estimators"] = c.prelim_estimators;
  j["model"] = to_string(c.model);
  j["threshold"] = c.threshold;
  j["adasyn"] = c.adasyn;
  j["adasyn_beta"] = c.adasyn_cfg.beta;
  j["adasyn_k"] = c.adasyn_cfg.k;
  j["logistic_learning_rate"] = c.logistic.learning_rate;
  j["logistic_max_iterations"] = c.logistic.max_iterations;
  j["logistic_l2"] = c.logistic.l2;
  j["logistic_tolerance"] = c.logistic.tolerance;
  j["bench_estimators"] = c.bench_estimators;
  j["cv_folds"] = c.cv_folds;
  j["tune_grid"] = c.tune_grid;
  return j;
}

// ---------------------------------------------------------------------------
// Data preparation

struct Prepared {
  SplitIndices split;
  std::vector<std::string> feature_names;
  Matrix x_train, x_test;
  std::vector<int> y_train, y_test;
  std::vector<std::string> cluster_inputs;  // empty when the cluster attribute is off
};

inline Table load_table(const PipelineConfig& c) {
  if (c.data.empty()) throw ConfigError("no data path configured (set 'data' or --data)");
  if (!std::filesystem::exists(c.data)) throw ConfigError("data file '" + c.data + "' does not exist");
  Table t = load_csv(c.data);
  if (!t.has_column(c.target)) throw DataError("data has no target column '" + c.target + "'");
  t.set_target(c.target);
  return t;
}

inline boost::TrainConfig stage_train_config(const PipelineConfig& c, std::size_t trees, Stage stage) {
  auto t = c.train;
  t.n_estimators = trees;
  t.seed = mix_seed(c.seed, stage);
  t.threads = c.threads;
  return t;
}

/// Runs every stage up to the model input matrices.
inline Prepared prepare(const Table& raw, const PipelineConfig& c, std::ostream* log = nullptr) {
  Prepared p;
  p.split = split(raw, c.test_fraction, mix_seed(c.seed, kSplitStage));
  const auto& tr = p.split.train;

  Table t = c.derived_features ? add_derived(raw) : raw;
  t = Imputer::fit(t, ImputeMethod::from_id(c.impute_method), tr).apply(t);
  t = OrdinalEncoder::fit(t, tr).encode(t);
  if (c.scaling != ScaleKind::None) t = Scaler::fit(t, c.scaling, tr).transform(t);
  p.feature_names = t.feature_names();
  const auto y = t.labels();

  if (c.cluster_feature) {
    // Rank attributes with a short booster on the train rows, then cluster
    // the z-scored top attributes.
    const Matrix x_tr = t.to_matrix(p.feature_names).select_rows(tr);
    const auto y_tr = gather<int>(y, tr);
    const auto prelim = boost::train(x_tr, y_tr, nullptr, {},
                                     stage_train_config(c, c.prelim_estimators, kPrelimStage), p.feature_names);
    for (const auto& fi : boost::importance(prelim)) {
      if (p.cluster_inputs.size() == c.cluster_top) break;
      p.cluster_inputs.push_back(fi.feature);
    }
    const Matrix all = t.to_matrix(p.cluster_inputs);
    const auto z = Scaler::fit(all, ScaleKind::ZScore, tr, p.cluster_inputs);
    Matrix zs;
    {
      WarningCapture quiet;  // constant inputs are expected on tiny data
      zs = z.transform(all);
    }
    KMeansConfig kc;
    kc.k = c.cluster_k;
    kc.seed = mix_seed(c.seed, kClusterStage);
    const auto km = kmeans_fit(zs.select_rows(tr), kc, p.cluster_inputs);
    const auto ids = kmeans_assign(zs, km);
    std::vector<NumericCell> cells(ids.begin(), ids.end());
    std::string name = "cluster_id";
    while (t.has_column(name)) name += "_";
    t.add_column(Column::numeric(name, std::move(cells)));
    p.feature_names.push_back(name);
    if (log) {
      *log << "cluster attribute from:";
      for (const auto& n : p.cluster_inputs) *log << ' ' << n;
      *log << '\n';
    }
  }

  const Matrix x = t.to_matrix(p.feature_names);
  p.x_train = x.select_rows(tr);
  p.x_test = x.select_rows(p.split.test);
  p.y_train = gather<int>(y, tr);
  p.y_test = gather<int>(y, p.split.test);
  return p;
}

// ---------------------------------------------------------------------------
// Models

struct LogisticArtifact {
  Scaler scaler;
  LogisticModel model;
  std::vector<std::string> feature_names;
  std::size_t synthetic_rows = 0;
};

inline json logistic_to_json(const LogisticArtifact& a) {
  json scale = json::array();
  for (const auto& cs : a.scaler.columns()) scale.push_back({cs.offset, cs.spread});
  return json{{"format", "crisk-logistic"},
              {"version", 1},
              {"feature_names", a.feature_names},
              {"zscore", scale},
              {"weights", a.model.weights},
              {"bias", a.model.bias},
              {"iterations", a.model.iterations},
              {"synthetic_rows", a.synthetic_rows},
              {"learning_rate", a.model.config.learning_rate},
              {"l2", a.model.config.l2}};
}

struct ModelRun {
  ModelKind kind = ModelKind::Gbdt;
  std::optional<boost::BoostModel> boost_model;
  std::optional<LogisticArtifact> logistic;
  std::vector<double> test_scores;
  EvalReport report;
};

inline LogisticArtifact fit_logistic_path(const Prepared& p, const PipelineConfig& c) {
  LogisticArtifact a;
  a.feature_names = p.feature_names;
  std::vector<std::size_t> all(p.x_train.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  {
    WarningCapture quiet;
    a.scaler = Scaler::fit(p.x_train, ScaleKind::ZScore, all, p.feature_names);
  }
  Matrix xs;
  {
    WarningCapture quiet;
    xs = a.scaler.transform(p.x_train);
  }
  auto cfg = c.logistic;
  cfg.seed = c.seed;
  if (c.adasyn) {
    auto acfg = c.adasyn_cfg;
    acfg.seed = mix_seed(c.seed, kAdasynStage);
    acfg.threads = c.threads;
    const auto r = adasyn(xs, p.y_train, acfg);
    a.synthetic_rows = r.origins.size();
    a.model = fit_logistic(r.x, r.y, {}, cfg);
  } else {
    a.model = fit_logistic(xs, p.y_train, {}, cfg);
  }
  return a;
}

inline std::vector<double> predict_logistic_path(const LogisticArtifact& a, const Matrix& x) {
  WarningCapture quiet;
  return predict_logistic(a.model, a.scaler.transform(x));
}

inline ModelRun run_model(const Prepared& p, const PipelineConfig& c, ModelKind kind, std::size_t trees) {
  ModelRun run;
  run.kind = kind;
  const auto start = std::chrono::steady_clock::now();
  if (kind == ModelKind::Gbdt) {
    run.boost_model = boost::train(p.x_train, p.y_train, &p.x_test, p.y_test,
                                   stage_train_config(c, trees, kBoostStage), p.feature_names);
    run.test_scores = boost::predict(*run.boost_model, p.x_test);
  } else {
    run.logistic = fit_logistic_path(p, c);
    run.test_scores = predict_logistic_path(*run.logistic, p.x_test);
  }
  const auto stop = std::chrono::steady_clock::now();
  run.report = evaluate(run.test_scores, p.y_test, c.threshold);
  run.report.wall_time_seconds = std::chrono::duration<double>(stop - start).count();
  return run;
}

// ---------------------------------------------------------------------------
// Report writers

inline json report_to_json(const EvalReport& r) {
  const auto& m = r.metrics;
  const auto& cm = r.confusion;
  return json{{"accuracy", m.accuracy},
              {"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1},
              {"auc", r.auc},
              {"precision_undefined", m.precision_undefined},
              {"recall_undefined", m.recall_undefined},
              {"f1_undefined", m.f1_undefined},
              {"threshold", cm.threshold},
              {"confusion", {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}}}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// `row,score,label` with the original row index of every test row.
inline void write_scores_csv(const std::filesystem::path& path, std::span<const std::size_t> rows,
                             std::span<const double> scores, std::span<const int> labels) {
  std::ostringstream out;
  out << "row,score,label\n";
  for (std::size_t i = 0; i < scores.size(); ++i)
    out << rows[i] << ',' << detail::format_double(scores[i]) << ',' << labels[i] << '\n';
  write_text(path, out.str());
}

struct ScoreFile {
  std::vector<double> scores;
  std::vector<int> labels;
};

inline ScoreFile read_scores_csv(const std::string& path) {
  const Table t = load_csv(path);
  if (!t.has_column("score") || !t.has_column("label"))
    throw DataError("'" + path + "' needs 'score' and 'label' columns");
  ScoreFile f;
  for (const auto& v : t.column("score").numbers()) {
    if (!v) throw DataError("'" + path + "' has a missing score");
    f.scores.push_back(*v);
  }
  for (const auto& v : t.column("label").numbers()) {
    if (!v || (*v != 0.0 && *v != 1.0)) throw DataError("'" + path + "' has a label outside {0,1}");
    f.labels.push_back(static_cast<int>(*v));
  }
  return f;
}

inline std::string roc_csv(std::span<const double> scores, std::span<const int> labels) {
  std::ostringstream out;
  out << "fpr,tpr\n";
  for (const auto& pt : roc_auc(scores, labels).curve.points)
    out << detail::format_double(pt.fpr) << ',' << detail::format_double(pt.tpr) << '\n';
  return out.str();
}

inline std::filesystem::path ensure_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

// ---------------------------------------------------------------------------
// Commands

struct TrainOutcome {
  ModelRun run;
  Prepared prepared;
};

/// Full pipeline for the configured model. Writes model.json,
/// eval_report.json, scores.csv, roc.csv and, for the booster,
/// importance.csv and training_log.csv. Wall time goes to timing.json so
/// the other files are reproducible byte for byte.
inline TrainOutcome cmd_train(const PipelineConfig& c, std::ostream* log = nullptr) {
  c.validate();
  const Table raw = load_table(c);
  TrainOutcome out;
  out.prepared = prepare(raw, c, log);
  const auto& p = out.prepared;
  out.run = run_model(p, c, c.model, c.train.n_estimators);
  const auto dir = ensure_dir(c.output_dir);

  json report = report_to_json(out.run.report);
  report["model"] = to_string(c.model);
  report["train_rows"] = p.x_train.rows();
  report["test_rows"] = p.x_test.rows();
  report["features"] = p.feature_names.size();
  report["cluster_inputs"] = p.cluster_inputs;
  if (out.run.boost_model) {
    const auto& m = *out.run.boost_model;
    report["best_iteration"] = m.best_iteration;
    report["trees"] = m.trees.size();
    boost::save_model(m, (dir / "model.json").string());
    std::ostringstream imp, logcsv;
    boost::write_importance_csv(m, imp);
    boost::write_training_log_csv(m, logcsv);
    write_text(dir / "importance.csv", imp.str());
    write_text(dir / "training_log.csv", logcsv.str());
  } else {
    report["synthetic_rows"] = out.run.logistic->synthetic_rows;
    write_json(dir / "model.json", logistic_to_json(*out.run.logistic));
  }
  write_json(dir / "eval_report.json", report);
  write_json(dir / "timing.json", json{{"wall_time_seconds", out.run.report.wall_time_seconds}});
  write_scores_csv(dir / "scores.csv", p.split.test, out.run.test_scores, p.y_test);
  write_text(dir / "roc.csv", roc_csv(out.run.test_scores, p.y_test));
  if (log)
    *log << to_string(c.model) << ": auc " << out.run.report.auc << ", accuracy " << out.run.report.metrics.accuracy
         << " -> " << dir.string() << '\n';
  return out;
}

/// Recomputes the report from a persisted score file.
inline EvalReport cmd_evaluate(const std::string& scores_path, double threshold) {
  const auto f = read_scores_csv(scores_path);
  return evaluate(f.scores, f.labels, threshold);
}

/// Booster and logistic baseline on one prepared dataset.
inline std::vector<ModelRun> cmd_compare(const PipelineConfig& c, std::ostream* log = nullptr) {
  c.validate();
  const Table raw = load_table(c);
  const auto p = prepare(raw, c, log);
  std::vector<ModelRun> runs;
  runs.push_back(run_model(p, c, ModelKind::Gbdt, c.train.n_estimators));
  runs.push_back(run_model(p, c, ModelKind::Logistic, c.train.n_estimators));
  const auto dir = ensure_dir(c.output_dir);
  std::ostringstream out;
  out << "model,accuracy,precision,recall,f1,auc,wall_time_seconds\n";
  for (const auto& r : runs) {
    const auto& m = r.report.metrics;
    out << to_string(r.kind) << ',' << detail::format_double(m.accuracy) << ','
        << detail::format_double(m.precision) << ',' << detail::format_double(m.recall) << ','
        << detail::format_double(m.f1) << ',' << detail::format_double(r.report.auc) << ','
        << detail::format_double(r.report.wall_time_seconds) << '\n';
    write_scores_csv(dir / (std::string("scores_") + to_string(r.kind) + ".csv"), p.split.test, r.test_scores,
                     p.y_test);
    if (log) *log << to_string(r.kind) << ": auc " << r.report.auc << '\n';
  }
  write_text(dir / "comparison.csv", out.str());
  return runs;
}

struct BenchRow {
  std::string label;
  EvalReport report;
};

/// One booster per imputation method, everything else fixed.
inline std::vector<BenchRow> cmd_impute_bench(const PipelineConfig& c, std::ostream* log = nullptr) {
  c.validate();
  const Table raw = load_table(c);
  const auto dir = ensure_dir(c.output_dir);
  std::vector<BenchRow> rows;
  std::ostringstream out;
  out << "method,textual,numeric,auc,accuracy\n";
  for (int id = 1; id <= 8; ++id) {
    auto ci = c;
    ci.impute_method = id;
    const auto p = prepare(raw, ci);
    const auto run = run_model(p, ci, ModelKind::Gbdt, c.bench_estimators);
    const auto m = ImputeMethod::from_id(id);
    rows.push_back({"method" + std::to_string(id), run.report});
    out << id << ',' << to_string(m.textual) << ',' << to_string(m.numeric) << ','
        << detail::format_double(run.report.auc) << ',' << detail::format_double(run.report.metrics.accuracy)
        << '\n';
    write_scores_csv(dir / ("scores_impute_method" + std::to_string(id) + ".csv"), p.split.test, run.test_scores,
                     p.y_test);
    if (log) *log << "method" << id << ": auc " << run.report.auc << '\n';
  }
  write_text(dir / "impute_bench.csv", out.str());
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].report.auc > rows[best].report.auc) best = i;
  write_json(dir / "impute_bench_best.json", json{{"method", best + 1}, {"auc", rows[best].report.auc}});
  if (log) *log << "best: method" << best + 1 << '\n';
  return rows;
}

/// Raw, min-max and z-score inputs to the booster.
inline std::vector<BenchRow> cmd_scale_bench(const PipelineConfig& c, std::ostream* log = nullptr) {
  c.validate();
  const Table raw = load_table(c);
  const auto dir = ensure_dir(c.output_dir);
  std::vector<BenchRow> rows;
  std::ostringstream out;
  out << "scaling,accuracy,precision,recall,f1,auc\n";
  for (auto kind : {ScaleKind::None, ScaleKind::MinMax, ScaleKind::ZScore}) {
    auto cs = c;
    cs.scaling = kind;
    const auto p = prepare(raw, cs);
    const auto run = run_model(p, cs, ModelKind::Gbdt, c.bench_estimators);
    const std::string label = kind == ScaleKind::None ? "raw" : to_string(kind);
    rows.push_back({label, run.report});
    const auto& m = run.report.metrics;
    out << label << ',' << detail::format_double(m.accuracy) << ',' << detail::format_double(m.precision) << ','
        << detail::format_double(m.recall) << ',' << detail::format_double(m.f1) << ','
        << detail::format_double(run.report.auc) << '\n';
    write_scores_csv(dir / ("scores_scale_" + label + ".csv"), p.split.test, run.test_scores, p.y_test);
    if (log) *log << label << ": auc " << run.report.auc << '\n';
  }
  write_text(dir / "scale_bench.csv", out.str());
  return rows;
}

struct TuneRow {
  json params;
  std::vector<double> fold_auc;
  double mean_auc = 0;
};

/// Exhaustive grid over `tune_grid` with k-fold cross-validation on the
/// train split; returns every row, best (first maximum) marked in the
/// written summary.
inline std::vector<TuneRow> cmd_tune(const PipelineConfig& c, std::ostream* log = nullptr) {
  c.validate();
  if (c.tune_grid.empty()) throw ConfigError("tune_grid is empty; nothing to search");
  std::vector<std::string> keys;
  std::vector<std::vector<json>> values;
  for (const auto& [k, v] : c.tune_grid.items()) {
    if (!v.is_array() || v.empty()) throw ConfigError("tune_grid['" + k + "'] must be a non-empty list");
    keys.push_back(k);
    values.emplace_back(v.begin(), v.end());
  }
  const Table raw = load_table(c);
  const auto p = prepare(raw, c, log);
  const std::size_t n = p.x_train.rows();
  if (n < c.cv_folds) throw DataError("fewer train rows than folds");

  // Shuffled fold assignment.
  Rng rng(mix_seed(c.seed, kFoldStage));
  auto perm = sample_without_replacement(rng, n, n);
  std::vector<std::size_t> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[perm[i]] = i % c.cv_folds;

  std::vector<TuneRow> rows;
  std::vector<std::size_t> pos(keys.size(), 0);
  while (true) {
    PipelineConfig trial = c;
    TuneRow row;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      apply_setting(trial, keys[i], values[i][pos[i]]);
      row.params[keys[i]] = values[i][pos[i]];
    }
    trial.train.validate();
    for (std::size_t f = 0; f < c.cv_folds; ++f) {
      std::vector<std::size_t> tr, va;
      for (std::size_t r = 0; r < n; ++r) (fold[r] == f ? va : tr).push_back(r);
      const Matrix xt = p.x_train.select_rows(tr), xv = p.x_train.select_rows(va);
      const auto yt = gather<int>(p.y_train, tr), yv = gather<int>(p.y_train, va);
      const auto m = boost::train(xt, yt, &xv, yv, stage_train_config(trial, trial.train.n_estimators, kBoostStage),
                                  p.feature_names);
      row.fold_auc.push_back(auc(boost::predict(m, xv), yv));
    }
    row.mean_auc = std::accumulate(row.fold_auc.begin(), row.fold_auc.end(), 0.0) /
                   static_cast<double>(row.fold_auc.size());
    if (log) *log << row.params.dump() << ": mean auc " << row.mean_auc << '\n';
    rows.push_back(std::move(row));

    std::size_t i = 0;
    while (i < keys.size() && ++pos[i] == values[i].size()) pos[i++] = 0;
    if (i == keys.size()) break;
  }

  const auto dir = ensure_dir(c.output_dir);
  std::ostringstream out;
  for (const auto& k : keys) out << detail::csv_name(k) << ',';
  out << "mean_auc";
  for (std::size_t f = 0; f < c.cv_folds; ++f) out << ",fold" << f + 1 << "_auc";
  out << '\n';
  std::size_t best = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& k : keys) out << detail::csv_name(rows[r].params[k].dump()) << ',';
    out << detail::format_double(rows[r].mean_auc);
    for (double a : rows[r].fold_auc) out << ',' << detail::format_double(a);
    out << '\n';
    if (rows[r].mean_auc > rows[best].mean_auc) best = r;
  }
  write_text(dir / "tune.csv", out.str());
  write_json(dir / "tune_best.json", json{{"params", rows[best].params}, {"mean_auc", rows[best].mean_auc}});
  return rows;
}

/// Column summary, class counts and correlation matrix of the raw table.
inline void cmd_inspect(const PipelineConfig& c, std::ostream* log = nullptr) {
  const Table t = load_table(c);
  const auto dir = ensure_dir(c.output_dir);
  const auto summary = summarize(t);
  std::ostringstream s;
  write_summary_csv(summary, s);
  write_text(dir / "summary.csv", s.str());
  const auto counts = class_counts(t);
  std::size_t with_missing = 0;
  for (const auto& cs : summary) with_missing += cs.missing_fraction > 0 ? 1 : 0;
  write_json(dir / "class_counts.json", json{{"negatives", counts.negatives},
                                             {"positives", counts.positives},
                                             {"rows", t.rows()},
                                             {"columns", t.cols()},
                                             {"columns_with_missing", with_missing}});
  std::ostringstream corr;
  {
    WarningCapture quiet;
    write_correlation_csv(correlations(t), corr);
  }
  write_text(dir / "correlations.csv", corr.str());
  if (log)
    *log << t.rows() << " rows, " << t.cols() << " columns, " << with_missing << " with missing values; "
         << counts.negatives << " negatives / " << counts.positives << " positives\n";
}

}  // namespace crisk
