// crisk: command-line front end for the credit-risk pipeline.
//
// Pipeline subcommands read an optional JSON config (--config) and accept
// any config key as an override: `--key value`, `--key=value`, or a bare
// `--flag` for true. Exit status: 0 success, 2 configuration error, 1 any
// other failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crisk/pipeline.hpp"
#include "crisk/synth.hpp"

namespace {

using namespace crisk;

bool looks_like_value(const std::string& s) {
  if (s.rfind("--", 0) != 0) return true;
  return parse_override_value(s).is_number();  // "--" prefix on a negative number
}

PipelineConfig build_config(const std::string& config_path, const std::vector<std::string>& extras) {
  PipelineConfig c = config_path.empty() ? PipelineConfig{} : load_config(config_path);
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const auto& tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.size() == 2) throw ConfigError("unexpected argument '" + tok + "'");
    std::string key = tok.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else if (i + 1 < extras.size() && looks_like_value(extras[i + 1])) {
      value = extras[++i];
    } else {
      value = "true";
    }
    apply_setting(c, key, parse_override_value(value));
  }
  return c;
}

void print_report(const EvalReport& r) {
  const auto& m = r.metrics;
  std::cout << "accuracy  " << m.accuracy << "\nprecision " << m.precision << "\nrecall    " << m.recall
            << "\nf1        " << m.f1 << "\nauc       " << r.auc << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Credit default scoring toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  auto pipeline_cmd = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->allow_extras();
    return sub;
  };
  auto* inspect = pipeline_cmd("inspect", "Column summary, class counts and correlations");
  auto* impute_bench = pipeline_cmd("impute-bench", "Booster AUC for each of the 8 imputation methods");
  auto* scale_bench = pipeline_cmd("scale-bench", "Booster metrics on raw, min-max and z-score inputs");
  auto* tune = pipeline_cmd("tune", "Grid search with k-fold cross-validation");
  auto* train = pipeline_cmd("train", "Run the pipeline and persist model and reports");
  auto* compare = pipeline_cmd("compare", "Booster versus logistic baseline");

  SyntheticSpec spec;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Write a synthetic loan table");
  gen->add_option("--out", gen_out, "output CSV")->required();
  gen->add_option("--rows", spec.rows);
  gen->add_option("--numeric", spec.numeric_columns, "noise numeric columns");
  gen->add_option("--categorical", spec.categorical_columns);
  gen->add_option("--missing-rate", spec.missing_rate);
  gen->add_option("--imbalance", spec.imbalance_ratio, "negatives per positive");
  gen->add_option("--seed", spec.seed);

  std::string scores_path, out_path, model_path;
  double threshold = 0.5;
  std::size_t top = 20;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Metrics from a row,score,label CSV");
  evaluate_cmd->add_option("--scores", scores_path)->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--threshold", threshold);
  evaluate_cmd->add_option("--out", out_path, "write the report as JSON");
  auto* roc = app.add_subcommand("roc", "ROC curve from a row,score,label CSV");
  roc->add_option("--scores", scores_path)->required()->check(CLI::ExistingFile);
  roc->add_option("--out", out_path, "output CSV (default stdout)");
  auto* importance = app.add_subcommand("importance", "Gain importance of a saved booster");
  importance->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  importance->add_option("--top", top);
  importance->add_option("--out", out_path, "output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto* sub = app.get_subcommands().front();
    if (sub == gen) {
      const auto t = generate_synthetic(spec);
      write_csv(t, gen_out);
      const auto counts = class_counts(t);
      std::cout << t.rows() << " rows, " << counts.positives << " positives -> " << gen_out << '\n';
    } else if (sub == evaluate_cmd) {
      const auto r = cmd_evaluate(scores_path, threshold);
      print_report(r);
      if (!out_path.empty()) write_json(out_path, report_to_json(r));
    } else if (sub == roc) {
      const auto f = read_scores_csv(scores_path);
      const auto text = roc_csv(f.scores, f.labels);
      if (out_path.empty()) std::cout << text;
      else write_text(out_path, text);
    } else if (sub == importance) {
      const auto m = boost::load_model(model_path);
      std::ostringstream s;
      boost::write_importance_csv(m, s, top);
      if (out_path.empty()) std::cout << s.str();
      else write_text(out_path, s.str());
    } else {
      const auto cfg = build_config(config_path, sub->remaining());
      if (sub == inspect) cmd_inspect(cfg, &std::cout);
      else if (sub == impute_bench) cmd_impute_bench(cfg, &std::cout);
      else if (sub == scale_bench) cmd_scale_bench(cfg, &std::cout);
      else if (sub == tune) cmd_tune(cfg, &std::cout);
      else if (sub == train) cmd_train(cfg, &std::cout);
      else if (sub == compare) cmd_compare(cfg, &std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
