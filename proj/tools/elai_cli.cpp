// Command line driver for the full detection pipeline: synthetic data
// generation, training, evaluation, per-sample explanations, latency/size
// benchmarks, and the held-out-category protocol.
//
// Exit codes: 0 success, 2 configuration error, 3 data or I/O error,
// 4 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "elai/dataset.hpp"
#include "elai/errors.hpp"
#include "elai/explain.hpp"
#include "elai/metrics.hpp"
#include "elai/pipeline.hpp"
#include "elai/training.hpp"
#include "elai/version.hpp"

namespace {

using elai::Error;
using elai::ErrorCode;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadConfig:
    case ErrorCode::BadFractions:
    case ErrorCode::BadK:
    case ErrorCode::TooManyFeatures:
      return kExitConfig;
    case ErrorCode::NonFiniteLoss:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) elai::fail(ErrorCode::IoFailure, "cannot write " + path);
  file.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!file) elai::fail(ErrorCode::IoFailure, "short write to " + path);
}

elai::PipelineConfig load_config(const std::string& path) {
  if (path.empty()) return elai::default_pipeline_config();
  std::ifstream file(path);
  if (!file) elai::fail(ErrorCode::IoFailure, "cannot open config " + path);
  json j;
  try {
    j = json::parse(file);
  } catch (const json::exception& e) {
    elai::fail(ErrorCode::BadConfig, std::string("config parse: ") + e.what());
  }
  return elai::pipeline_config_from_json(j);
}

elai::Dataset load_data(const std::string& path, const elai::PipelineConfig& cfg) {
  const auto schema =
      elai::infer_schema(path, cfg.label_column, cfg.category_column, cfg.delimiter);
  return elai::load_csv(path, schema, cfg.labels);
}

std::string sibling_path(const std::string& report_path, const std::string& suffix) {
  std::filesystem::path p(report_path);
  p.replace_extension();
  return p.string() + suffix;
}

// --- subcommand bodies ------------------------------------------------------

struct GenDataArgs {
  std::size_t n_normal = 100;
  std::size_t n_attack = 100;
  std::size_t dim = 6;
  double separation = 6.0;
  double noise_std = 1.0;
  std::size_t categories = 1;
  std::uint64_t seed = 1;
  std::string out;
};

int run_gen_data(const GenDataArgs& args) {
  elai::SyntheticSpec spec;
  spec.n_normal = args.n_normal;
  spec.n_attack = args.n_attack;
  spec.d = args.dim;
  spec.separation = args.separation;
  spec.noise_std = args.noise_std;
  spec.n_categories = args.categories;

  const elai::Dataset ds = elai::generate_synthetic(spec, args.seed);
  elai::save_csv(ds, args.out);

  json out = {{"tool", elai::tool_json()},
              {"dataset", elai::dataset_summary_json(ds)},
              {"out", args.out}};
  std::cout << out.dump() << "\n";
  return 0;
}

int run_init_config(const std::string& out_path) {
  const std::string text = elai::pipeline_config_to_json(elai::default_pipeline_config()).dump(2);
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    write_file(out_path, text + "\n");
  }
  return 0;
}

int run_train(const std::string& data_path, const std::string& config_path,
              const std::string& out_model, const std::string& out_ranking) {
  const elai::PipelineConfig cfg = load_config(config_path);
  const elai::Dataset ds = load_data(data_path, cfg);

  const elai::FittedPipeline fitted = elai::fit_pipeline(ds, cfg);
  const elai::Checkpoint ckpt = elai::to_checkpoint(fitted, cfg);
  elai::save_checkpoint(ckpt, out_model);

  if (!out_ranking.empty()) {
    write_file(out_ranking, elai::ranking_to_csv(fitted.ranking));
  }

  json out = {{"tool", elai::tool_json()},
              {"config", elai::pipeline_config_to_json(cfg)},
              {"dataset", elai::dataset_summary_json(ds)},
              {"ranking", elai::ranking_json(fitted.ranking)},
              {"history", elai::history_json(fitted.history)},
              {"checkpoint",
               {{"path", out_model},
                {"bytes", elai::checkpoint_size_bytes(ckpt)},
                {"param_count", elai::param_count(fitted.model)}}}};
  if (!fitted.history.empty()) {
    out["final"] = {{"mean_train_loss", fitted.history.back().mean_train_loss}};
    if (fitted.history.back().val_accuracy) {
      out["final"]["val_accuracy"] = *fitted.history.back().val_accuracy;
    }
  }
  std::cout << out.dump() << "\n";
  return 0;
}

int run_evaluate(const std::string& data_path, const std::string& model_path,
                 const std::string& report_path, std::optional<double> threshold) {
  const elai::Checkpoint ckpt = elai::load_checkpoint(model_path);
  elai::PipelineConfig cfg = elai::pipeline_config_from_json(ckpt.pipeline_config);
  if (threshold) cfg.threshold = *threshold;

  const elai::Dataset ds = load_data(data_path, cfg);
  const elai::FittedPipeline fitted = elai::from_checkpoint(ckpt);
  const elai::EvalReport report = elai::evaluate_pipeline(fitted, ds, cfg.threshold);

  elai::RunReport run;
  run.config = ckpt.pipeline_config;
  run.dataset_summary = elai::dataset_summary_json(ds);
  run.eval = report;
  const std::string text = elai::run_report_json(run).dump();
  std::cout << text << "\n";
  if (!report_path.empty()) {
    write_file(report_path, text + "\n");
    write_file(sibling_path(report_path, ".confusion.csv"),
               elai::confusion_to_csv(report.confusion));
  }
  return 0;
}

elai::Attribution attribute_row(const elai::FittedPipeline& fitted,
                                std::span<const double> x, const std::string& method,
                                std::size_t permutations, std::uint64_t seed) {
  const elai::ValueFunctionSpec value_spec = elai::zero_reference(x.size());
  if (method == "exact") {
    if (x.size() > elai::kExactShapCap) {
      elai::fail(ErrorCode::TooManyFeatures,
                 std::to_string(x.size()) + " features exceeds the exact cap of " +
                     std::to_string(elai::kExactShapCap) + "; use --method sampled");
    }
    return elai::shap_exact(fitted.model, x, value_spec);
  }
  if (method == "sampled") {
    return elai::shap_sampled(fitted.model, x, value_spec, permutations, seed);
  }
  elai::fail(ErrorCode::BadConfig, "--method must be exact or sampled");
}

int run_explain(const std::string& data_path, const std::string& model_path, std::size_t row,
                const std::string& method, std::size_t permutations, std::uint64_t seed,
                std::size_t aggregate, const std::string& out_prefix) {
  const elai::Checkpoint ckpt = elai::load_checkpoint(model_path);
  const elai::PipelineConfig cfg = elai::pipeline_config_from_json(ckpt.pipeline_config);
  const elai::Dataset ds = load_data(data_path, cfg);
  const elai::FittedPipeline fitted = elai::from_checkpoint(ckpt);

  if (ds.schema.feature_names != fitted.transform.input_names) {
    elai::fail(ErrorCode::DimensionMismatch,
               "dataset schema does not match the fitted pipeline's feature columns");
  }
  if (row >= ds.n()) {
    elai::fail(ErrorCode::BadIndex, "--row " + std::to_string(row) + " out of range (n=" +
                                        std::to_string(ds.n()) + ")");
  }

  const elai::Matrix model_space = fitted.transform.apply(ds.x);
  const auto& names = fitted.transform.output_names;

  json out = {{"tool", elai::tool_json()}, {"row", row}, {"method", method}};
  json files = json::object();

  // Per-sample attribution and the attention map for the requested row.
  const auto x = model_space.row(row);
  const elai::Attribution attr = attribute_row(fitted, x, method, permutations, seed);
  const elai::ForwardTrace trace = elai::forward(fitted.model, x);
  const elai::AttentionMap map = elai::attention_map(trace);

  const std::string attribution_path = out_prefix + ".attribution.csv";
  const std::string attention_path = out_prefix + ".attention.csv";
  write_file(attribution_path, elai::attribution_to_csv(attr, names));
  write_file(attention_path, elai::attention_to_csv(map));
  files["attribution"] = attribution_path;
  files["attention"] = attention_path;

  double phi_sum = attr.base;
  for (double phi : attr.phi) phi_sum += phi;
  out["base"] = attr.base;
  out["prediction"] = trace.y_hat;
  out["phi"] = attr.phi;
  out["attention"] = {{"alpha", map.alpha}, {"argmax_step", map.argmax_step}};
  if (method == "exact") {
    out["efficiency_residual"] = std::abs(phi_sum - trace.y_hat);
  } else {
    out["permutations"] = permutations;
    out["seed"] = seed;
  }

  // Dataset-level view: mean |phi| over the first `aggregate` rows, labeled
  // distinctly from the per-sample export.
  if (aggregate > 0) {
    const std::size_t n_rows = std::min(aggregate, ds.n());
    std::vector<double> mean_abs(names.size(), 0.0);
    for (std::size_t r = 0; r < n_rows; ++r) {
      const elai::Attribution row_attr =
          attribute_row(fitted, model_space.row(r), method, permutations,
                        seed + static_cast<std::uint64_t>(r));
      for (std::size_t j = 0; j < mean_abs.size(); ++j) {
        mean_abs[j] += std::abs(row_attr.phi[j]);
      }
    }
    for (double& v : mean_abs) v /= static_cast<double>(n_rows);

    std::string csv = "feature,mean_abs_phi\n";
    for (std::size_t j = 0; j < names.size(); ++j) {
      csv += names[j] + "," + json(mean_abs[j]).dump() + "\n";
    }
    const std::string importance_path = out_prefix + ".importance.csv";
    write_file(importance_path, csv);
    files["importance"] = importance_path;
    out["aggregate"] = {{"rows", n_rows}, {"mean_abs_phi", mean_abs}};
  }

  out["files"] = files;
  std::cout << out.dump() << "\n";
  return 0;
}

int run_benchmark(const std::string& data_path, const std::string& model_path,
                  std::size_t reps, std::size_t warmup) {
  const elai::Checkpoint ckpt = elai::load_checkpoint(model_path);
  const elai::PipelineConfig cfg = elai::pipeline_config_from_json(ckpt.pipeline_config);
  const elai::Dataset ds = load_data(data_path, cfg);
  const elai::FittedPipeline fitted = elai::from_checkpoint(ckpt);

  const elai::Matrix model_space = fitted.transform.apply(ds.x);
  const elai::LatencyReport latency =
      elai::latency_benchmark(fitted.model, model_space, warmup, reps);

  const std::size_t size_bytes = std::filesystem::file_size(model_path);
  elai::RunReport run;
  run.config = ckpt.pipeline_config;
  run.latency = latency;
  run.model = elai::ModelSummary{elai::param_count(fitted.model), size_bytes, model_path};
  std::cout << elai::run_report_json(run).dump() << "\n";
  std::cout << "model_size_bytes " << size_bytes << "\n";
  return 0;
}

int run_zero_day(const std::string& data_path, const std::string& config_path,
                 const std::string& category, const std::string& report_path) {
  const elai::PipelineConfig cfg = load_config(config_path);
  const elai::Dataset ds = load_data(data_path, cfg);

  const auto [train_ds, holdout_ds] = elai::holdout_category(ds, category);
  elai::ZeroDayReport report = elai::zero_day_eval(train_ds, holdout_ds, cfg);
  report.category = category;

  elai::RunReport run;
  run.config = elai::pipeline_config_to_json(cfg);
  run.dataset_summary = elai::dataset_summary_json(ds);
  run.zero_day = report;
  const std::string text = elai::run_report_json(run).dump();
  std::cout << text << "\n";
  if (!report_path.empty()) write_file(report_path, text + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lightweight explainable flow classifier pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(elai::kToolName) + " " + elai::kToolVersion);

  GenDataArgs gen_args;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic labeled flow CSV");
  gen->add_option("--normal", gen_args.n_normal, "Normal row count")->check(CLI::PositiveNumber);
  gen->add_option("--attack", gen_args.n_attack, "Attack row count")->check(CLI::PositiveNumber);
  gen->add_option("--dim", gen_args.dim, "Feature count")->check(CLI::PositiveNumber);
  gen->add_option("--separation", gen_args.separation, "Class mean distance");
  gen->add_option("--noise-std", gen_args.noise_std, "Noise standard deviation");
  gen->add_option("--categories", gen_args.categories, "Attack category count")
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_args.seed, "Generator seed");
  gen->add_option("--out", gen_args.out, "Output CSV path")->required();

  std::string init_out;
  auto* init = app.add_subcommand("init-config", "Emit the full default config JSON");
  init->add_option("--out", init_out, "Config path (stdout when omitted)");

  std::string train_data, train_config, train_out_model, train_out_ranking;
  auto* train_cmd = app.add_subcommand("train", "Fit the pipeline and write a checkpoint");
  train_cmd->add_option("--data", train_data, "Labeled CSV")->required();
  train_cmd->add_option("--config", train_config, "Pipeline config JSON");
  train_cmd->add_option("--out-model", train_out_model, "Checkpoint path")->required();
  train_cmd->add_option("--out-ranking", train_out_ranking, "Feature ranking CSV path");

  std::string eval_data, eval_model, eval_report;
  std::optional<double> eval_threshold;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a labeled CSV against a checkpoint");
  eval_cmd->add_option("--data", eval_data, "Labeled CSV")->required();
  eval_cmd->add_option("--model", eval_model, "Checkpoint path")->required();
  eval_cmd->add_option("--report", eval_report, "Report JSON path (confusion CSV alongside)");
  eval_cmd->add_option("--threshold", eval_threshold, "Decision threshold override");

  std::string explain_data, explain_model, explain_method = "exact", explain_out;
  std::size_t explain_row = 0, explain_m = 200, explain_aggregate = 0;
  std::uint64_t explain_seed = 1;
  auto* explain_cmd =
      app.add_subcommand("explain", "Per-feature attribution and attention map for one row");
  explain_cmd->add_option("--data", explain_data, "Labeled CSV")->required();
  explain_cmd->add_option("--model", explain_model, "Checkpoint path")->required();
  explain_cmd->add_option("--row", explain_row, "Row index (0-based)");
  explain_cmd->add_option("--method", explain_method, "exact | sampled");
  explain_cmd->add_option("--m", explain_m, "Permutations for the sampled method")
      ->check(CLI::PositiveNumber);
  explain_cmd->add_option("--seed", explain_seed, "Seed for the sampled method");
  explain_cmd->add_option("--aggregate", explain_aggregate,
                          "Also emit mean |phi| over the first N rows");
  explain_cmd->add_option("--out", explain_out, "Output prefix for the CSVs")->required();

  std::string bench_data, bench_model;
  std::size_t bench_reps = 1000, bench_warmup = 100;
  auto* bench_cmd = app.add_subcommand("benchmark", "Single-sample latency and model size");
  bench_cmd->add_option("--data", bench_data, "CSV providing input rows")->required();
  bench_cmd->add_option("--model", bench_model, "Checkpoint path")->required();
  bench_cmd->add_option("--reps", bench_reps, "Timed repetitions")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--warmup", bench_warmup, "Untimed passes before timing");

  std::string zd_data, zd_config, zd_category, zd_report;
  auto* zd_cmd =
      app.add_subcommand("zero-day", "Hold out one attack category, train, report detection");
  zd_cmd->add_option("--data", zd_data, "Labeled CSV with a category column")->required();
  zd_cmd->add_option("--config", zd_config, "Pipeline config JSON");
  zd_cmd->add_option("--category", zd_category, "Attack category to hold out")->required();
  zd_cmd->add_option("--report", zd_report, "Report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return run_gen_data(gen_args);
    if (init->parsed()) return run_init_config(init_out);
    if (train_cmd->parsed()) {
      return run_train(train_data, train_config, train_out_model, train_out_ranking);
    }
    if (eval_cmd->parsed()) {
      return run_evaluate(eval_data, eval_model, eval_report, eval_threshold);
    }
    if (explain_cmd->parsed()) {
      return run_explain(explain_data, explain_model, explain_row, explain_method, explain_m,
                         explain_seed, explain_aggregate, explain_out);
    }
    if (bench_cmd->parsed()) {
      return run_benchmark(bench_data, bench_model, bench_reps, bench_warmup);
    }
    if (zd_cmd->parsed()) return run_zero_day(zd_data, zd_config, zd_category, zd_report);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
