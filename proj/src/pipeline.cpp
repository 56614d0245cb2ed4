#include "elai/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "elai/errors.hpp"
#include "elai/rng.hpp"
#include "elai/version.hpp"

namespace elai {

using nlohmann::json;

void validate(const PipelineConfig& cfg) {
  if (cfg.label_column.empty()) fail(ErrorCode::BadConfig, "label_column must be set");
  if (cfg.selection.k < 1) fail(ErrorCode::BadConfig, "selection.k must be >= 1");
  if (cfg.selection.bins < 2) fail(ErrorCode::BadConfig, "selection.bins must be >= 2");
  validate(cfg.model);
  validate(cfg.train);
  if (cfg.model.input_dim != cfg.selection.k) {
    fail(ErrorCode::BadConfig,
         "model.input_dim " + std::to_string(cfg.model.input_dim) +
             " != selection.k " + std::to_string(cfg.selection.k));
  }
  if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0)) {
    fail(ErrorCode::BadConfig, "threshold must be in [0,1]");
  }
  if (!(cfg.val_frac >= 0.0 && cfg.val_frac < 1.0)) {
    fail(ErrorCode::BadConfig, "val_frac must be in [0,1)");
  }
}

PipelineConfig default_pipeline_config() { return PipelineConfig{}; }

// ---------------------------------------------------------------------------
// Config document codec. Strict about unknown keys so a typo cannot silently
// fall back to a default; missing keys take the documented defaults.

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const char* context) {
  if (!obj.is_object()) {
    fail(ErrorCode::BadConfig, std::string(context) + " must be a JSON object");
  }
  for (const auto& [key, value] : obj.items()) {
    if (allowed.count(key) == 0) {
      fail(ErrorCode::BadConfig, std::string("unknown key '") + key + "' in " + context);
    }
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const char* context) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::BadConfig, std::string("bad value for '") + key + "' in " + context);
  }
}

const char* selection_mode_name(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::pca: return "pca";
    case SelectionMode::fisher: return "fisher";
    case SelectionMode::ig_topk: return "ig-topk";
  }
  return "pca";
}

SelectionMode selection_mode_from_name(const std::string& name) {
  if (name == "pca") return SelectionMode::pca;
  if (name == "fisher") return SelectionMode::fisher;
  if (name == "ig-topk") return SelectionMode::ig_topk;
  fail(ErrorCode::BadConfig, "selection.mode must be pca, fisher, or ig-topk, got '" +
                                 name + "'");
}

}  // namespace

json pipeline_config_to_json(const PipelineConfig& cfg) {
  json j;
  j["data"] = {{"label_column", cfg.label_column},
               {"category_column", cfg.category_column},
               {"delimiter", std::string(1, cfg.delimiter)},
               {"positive_labels", cfg.labels.positive},
               {"negative_labels", cfg.labels.negative}};
  j["normalize"] = cfg.normalize;
  j["selection"] = {{"mode", selection_mode_name(cfg.selection.mode)},
                    {"k", cfg.selection.k},
                    {"bins", cfg.selection.bins}};
  j["model"] = {{"input_dim", cfg.model.input_dim},
                {"conv_filters", cfg.model.conv_filters},
                {"conv_kernel", cfg.model.conv_kernel},
                {"recurrent_mode",
                 cfg.model.recurrent_mode == RecurrentMode::simple ? "simple" : "gated"},
                {"hidden_dim", cfg.model.hidden_dim},
                {"seed", cfg.model.seed}};
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"beta1", cfg.train.beta1},
                {"beta2", cfg.train.beta2},
                {"eps", cfg.train.eps},
                {"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"shuffle_seed", cfg.train.shuffle_seed},
                {"clip_eps", cfg.train.clip_eps}};
  j["threshold"] = cfg.threshold;
  j["val_frac"] = cfg.val_frac;
  j["data_seed"] = cfg.data_seed;
  return j;
}

PipelineConfig pipeline_config_from_json(const json& j) {
  check_keys(j, {"data", "normalize", "selection", "model", "train", "threshold",
                 "val_frac", "data_seed"},
             "config");
  PipelineConfig cfg;

  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, {"label_column", "category_column", "delimiter", "positive_labels",
                   "negative_labels"},
               "config.data");
    cfg.label_column = get_or<std::string>(d, "label_column", cfg.label_column, "config.data");
    cfg.category_column =
        get_or<std::string>(d, "category_column", cfg.category_column, "config.data");
    const std::string delim =
        get_or<std::string>(d, "delimiter", std::string(1, cfg.delimiter), "config.data");
    if (delim.size() != 1) {
      fail(ErrorCode::BadConfig, "delimiter must be a single character");
    }
    cfg.delimiter = delim[0];
    cfg.labels.positive = get_or<std::vector<std::string>>(d, "positive_labels",
                                                           cfg.labels.positive, "config.data");
    cfg.labels.negative = get_or<std::vector<std::string>>(d, "negative_labels",
                                                           cfg.labels.negative, "config.data");
  }

  cfg.normalize = get_or<bool>(j, "normalize", cfg.normalize, "config");

  if (j.contains("selection")) {
    const json& s = j.at("selection");
    check_keys(s, {"mode", "k", "bins"}, "config.selection");
    cfg.selection.mode = selection_mode_from_name(get_or<std::string>(
        s, "mode", selection_mode_name(cfg.selection.mode), "config.selection"));
    cfg.selection.k = get_or<std::size_t>(s, "k", cfg.selection.k, "config.selection");
    cfg.selection.bins = get_or<std::size_t>(s, "bins", cfg.selection.bins, "config.selection");
  }

  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, {"input_dim", "conv_filters", "conv_kernel", "recurrent_mode",
                   "hidden_dim", "seed"},
               "config.model");
    cfg.model.input_dim =
        get_or<std::size_t>(m, "input_dim", cfg.selection.k, "config.model");
    cfg.model.conv_filters =
        get_or<std::size_t>(m, "conv_filters", cfg.model.conv_filters, "config.model");
    cfg.model.conv_kernel =
        get_or<std::size_t>(m, "conv_kernel", cfg.model.conv_kernel, "config.model");
    const std::string mode = get_or<std::string>(
        m, "recurrent_mode",
        cfg.model.recurrent_mode == RecurrentMode::simple ? "simple" : "gated",
        "config.model");
    if (mode == "simple") {
      cfg.model.recurrent_mode = RecurrentMode::simple;
    } else if (mode == "gated") {
      cfg.model.recurrent_mode = RecurrentMode::gated;
    } else {
      fail(ErrorCode::BadConfig, "recurrent_mode must be simple or gated, got '" + mode + "'");
    }
    cfg.model.hidden_dim =
        get_or<std::size_t>(m, "hidden_dim", cfg.model.hidden_dim, "config.model");
    cfg.model.seed = get_or<std::uint64_t>(m, "seed", cfg.model.seed, "config.model");
  } else {
    cfg.model.input_dim = cfg.selection.k;
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, {"learning_rate", "beta1", "beta2", "eps", "epochs", "batch_size",
                   "shuffle_seed", "clip_eps"},
               "config.train");
    cfg.train.learning_rate =
        get_or<double>(t, "learning_rate", cfg.train.learning_rate, "config.train");
    cfg.train.beta1 = get_or<double>(t, "beta1", cfg.train.beta1, "config.train");
    cfg.train.beta2 = get_or<double>(t, "beta2", cfg.train.beta2, "config.train");
    cfg.train.eps = get_or<double>(t, "eps", cfg.train.eps, "config.train");
    cfg.train.epochs = get_or<std::size_t>(t, "epochs", cfg.train.epochs, "config.train");
    cfg.train.batch_size =
        get_or<std::size_t>(t, "batch_size", cfg.train.batch_size, "config.train");
    cfg.train.shuffle_seed =
        get_or<std::uint64_t>(t, "shuffle_seed", cfg.train.shuffle_seed, "config.train");
    cfg.train.clip_eps = get_or<double>(t, "clip_eps", cfg.train.clip_eps, "config.train");
  }

  cfg.threshold = get_or<double>(j, "threshold", cfg.threshold, "config");
  cfg.val_frac = get_or<double>(j, "val_frac", cfg.val_frac, "config");
  cfg.data_seed = get_or<std::uint64_t>(j, "data_seed", cfg.data_seed, "config");

  validate(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------

Matrix FeatureTransform::apply(const Matrix& x) const {
  if (x.cols() != input_names.size()) {
    fail(ErrorCode::DimensionMismatch, "transform expects " +
                                           std::to_string(input_names.size()) +
                                           " features, got " + std::to_string(x.cols()));
  }
  Matrix current = x;
  if (norm) {
    if (norm->d() != current.cols()) {
      fail(ErrorCode::DimensionMismatch, "normalization stats width mismatch");
    }
    for (std::size_t j = 0; j < current.cols(); ++j) {
      if (norm->constant[j]) {
        for (std::size_t i = 0; i < current.rows(); ++i) current(i, j) = 0.0;
      } else {
        for (std::size_t i = 0; i < current.rows(); ++i) {
          current(i, j) = (current(i, j) - norm->mean[j]) / norm->std_dev[j];
        }
      }
    }
  }
  if (projection) return apply_projection(current, *projection);
  if (selected) {
    Matrix out(current.rows(), selected->size());
    for (std::size_t j = 0; j < selected->size(); ++j) {
      const std::size_t src = (*selected)[j];
      if (src >= current.cols()) fail(ErrorCode::BadIndex, "selected feature out of range");
      for (std::size_t i = 0; i < current.rows(); ++i) out(i, j) = current(i, src);
    }
    return out;
  }
  return current;
}

namespace {

Matrix take_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(rows[i], j);
  }
  return out;
}

std::vector<int> take_labels(const std::vector<int>& y, const std::vector<std::size_t>& rows) {
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = y[rows[i]];
  return out;
}

}  // namespace

FittedPipeline fit_pipeline(const Dataset& ds, const PipelineConfig& cfg) {
  validate(cfg);
  validate(ds);
  if (ds.schema.feature_names.size() != ds.d()) {
    fail(ErrorCode::BadConfig, "dataset schema must name every feature column");
  }

  const std::size_t n = ds.n();
  std::vector<std::size_t> train_rows(n);
  std::iota(train_rows.begin(), train_rows.end(), std::size_t{0});
  std::vector<std::size_t> val_rows;
  if (cfg.val_frac > 0.0) {
    Rng rng(cfg.data_seed);
    shuffle(train_rows, rng);
    const std::size_t n_val = static_cast<std::size_t>(
        std::llround(cfg.val_frac * static_cast<double>(n)));
    if (n_val >= n) fail(ErrorCode::BadConfig, "val_frac leaves no training rows");
    val_rows.assign(train_rows.begin(), train_rows.begin() + n_val);
    train_rows.erase(train_rows.begin(), train_rows.begin() + n_val);
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
  }

  Matrix train_x = take_rows(ds.x, train_rows);
  std::vector<int> train_y = take_labels(ds.y, train_rows);

  FittedPipeline fitted;
  fitted.transform.input_names = ds.schema.feature_names;

  if (cfg.normalize) {
    Dataset train_view;
    train_view.x = train_x;
    train_view.y = train_y;
    train_view.schema = ds.schema;
    fitted.transform.norm = fit_normalize(train_view);
  }

  Matrix norm_train = train_x;
  if (fitted.transform.norm) {
    const NormStats& stats = *fitted.transform.norm;
    for (std::size_t j = 0; j < norm_train.cols(); ++j) {
      if (stats.constant[j]) {
        for (std::size_t i = 0; i < norm_train.rows(); ++i) norm_train(i, j) = 0.0;
      } else {
        for (std::size_t i = 0; i < norm_train.rows(); ++i) {
          norm_train(i, j) = (norm_train(i, j) - stats.mean[j]) / stats.std_dev[j];
        }
      }
    }
  }

  Dataset ranking_view;
  ranking_view.x = norm_train;
  ranking_view.y = train_y;
  ranking_view.schema = ds.schema;
  fitted.ranking = rank_features(ranking_view, cfg.selection.bins);

  switch (cfg.selection.mode) {
    case SelectionMode::pca:
      fitted.transform.projection = fit_pca(norm_train, cfg.selection.k);
      break;
    case SelectionMode::fisher:
      fitted.transform.projection = fit_fisher(norm_train, train_y, cfg.selection.k);
      break;
    case SelectionMode::ig_topk: {
      if (cfg.selection.k > ds.d()) {
        fail(ErrorCode::BadK, "selection.k exceeds feature count");
      }
      std::vector<std::size_t> chosen;
      for (std::size_t r = 0; r < cfg.selection.k; ++r) {
        chosen.push_back(fitted.ranking.entries[r].index);
      }
      fitted.transform.selected = std::move(chosen);
      break;
    }
  }

  if (fitted.transform.projection) {
    for (std::size_t c = 0; c < cfg.selection.k; ++c) {
      fitted.transform.output_names.push_back("pc" + std::to_string(c));
    }
  } else {
    for (std::size_t idx : *fitted.transform.selected) {
      fitted.transform.output_names.push_back(ds.schema.feature_names[idx]);
    }
  }

  const Matrix model_train = fitted.transform.apply(train_x);
  fitted.model = init_model(cfg.model);

  if (!val_rows.empty()) {
    const Matrix model_val = fitted.transform.apply(take_rows(ds.x, val_rows));
    const std::vector<int> val_y = take_labels(ds.y, val_rows);
    fitted.history = train(fitted.model, model_train, train_y, &model_val, &val_y, cfg.train);
  } else {
    fitted.history = train(fitted.model, model_train, train_y, nullptr, nullptr, cfg.train);
  }
  return fitted;
}

std::vector<double> score_all(const ElaiModel& model, const Matrix& x) {
  std::vector<double> scores(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) scores[i] = forward(model, x.row(i)).y_hat;
  return scores;
}

EvalReport evaluate_pipeline(const FittedPipeline& fitted, const Dataset& ds,
                             double threshold) {
  validate(ds);
  if (ds.schema.feature_names != fitted.transform.input_names) {
    fail(ErrorCode::DimensionMismatch,
         "dataset schema does not match the fitted pipeline's feature columns");
  }
  const std::vector<double> scores = score_all(fitted.model, fitted.transform.apply(ds.x));
  return evaluate(scores, ds.y, threshold);
}

Checkpoint to_checkpoint(const FittedPipeline& fitted, const PipelineConfig& cfg) {
  Checkpoint ckpt;
  ckpt.model = fitted.model;
  ckpt.norm = fitted.transform.norm;
  ckpt.projection = fitted.transform.projection;
  ckpt.selected_features = fitted.transform.selected;
  ckpt.input_features = fitted.transform.input_names;
  ckpt.train_config = cfg.train;
  if (!fitted.history.empty()) {
    ckpt.final_metrics["mean_train_loss"] = fitted.history.back().mean_train_loss;
    if (fitted.history.back().val_accuracy) {
      ckpt.final_metrics["val_accuracy"] = *fitted.history.back().val_accuracy;
    }
  }
  ckpt.pipeline_config = pipeline_config_to_json(cfg);
  return ckpt;
}

FittedPipeline from_checkpoint(const Checkpoint& ckpt) {
  FittedPipeline fitted;
  fitted.model = ckpt.model;
  fitted.transform.norm = ckpt.norm;
  fitted.transform.projection = ckpt.projection;
  fitted.transform.selected = ckpt.selected_features;
  fitted.transform.input_names = ckpt.input_features;
  if (fitted.transform.projection) {
    for (std::size_t c = 0; c < fitted.transform.projection->output_dim(); ++c) {
      fitted.transform.output_names.push_back("pc" + std::to_string(c));
    }
  } else if (fitted.transform.selected) {
    for (std::size_t idx : *fitted.transform.selected) {
      if (idx >= fitted.transform.input_names.size()) {
        fail(ErrorCode::CorruptCheckpoint, "selected feature index out of range");
      }
      fitted.transform.output_names.push_back(fitted.transform.input_names[idx]);
    }
  } else {
    fitted.transform.output_names = fitted.transform.input_names;
  }
  return fitted;
}

ZeroDayReport zero_day_eval(const Dataset& train_ds, const Dataset& holdout_ds,
                            const PipelineConfig& cfg) {
  const FittedPipeline fitted = fit_pipeline(train_ds, cfg);
  if (holdout_ds.schema.feature_names != fitted.transform.input_names) {
    fail(ErrorCode::DimensionMismatch, "holdout schema does not match the training data");
  }
  const std::vector<double> scores =
      score_all(fitted.model, fitted.transform.apply(holdout_ds.x));

  ZeroDayReport report;
  if (holdout_ds.categories && !holdout_ds.categories->empty()) {
    report.category = (*holdout_ds.categories)[0];
  }
  report.train_rows = train_ds.n();
  report.holdout_rows = holdout_ds.n();
  report.detection_rate = detection_rate(scores, cfg.threshold);
  return report;
}

// ---------------------------------------------------------------------------

json tool_json() { return {{"name", kToolName}, {"version", kToolVersion}}; }

json run_report_json(const RunReport& report) {
  json out = {{"tool", tool_json()}, {"config", report.config}};
  if (report.dataset_summary) out["dataset"] = *report.dataset_summary;
  if (report.ranking) out["ranking"] = ranking_json(*report.ranking);
  if (report.eval) out["evaluation"] = eval_report_json(*report.eval);
  if (report.latency) out["latency"] = latency_report_json(*report.latency);
  if (report.model) {
    out["model"] = {{"param_count", report.model->param_count},
                    {"size_bytes", report.model->size_bytes},
                    {"path", report.model->path}};
  }
  if (report.zero_day) out["zero_day"] = zero_day_json(*report.zero_day);
  return out;
}

json dataset_summary_json(const Dataset& ds) {
  std::size_t attack = 0;
  for (int y : ds.y) attack += y == 1 ? 1 : 0;
  return {{"rows", ds.n()},
          {"features", ds.d()},
          {"attack", attack},
          {"normal", ds.n() - attack}};
}

json ranking_json(const FeatureRanking& ranking) {
  json entries = json::array();
  for (const auto& e : ranking.entries) {
    entries.push_back({{"index", e.index}, {"name", e.name}, {"ig_bits", e.ig_bits}});
  }
  return {{"bins", ranking.bins},
          {"label_entropy_bits", ranking.label_entropy_bits},
          {"entries", std::move(entries)}};
}

json eval_report_json(const EvalReport& report) {
  return {{"threshold", report.threshold},
          {"confusion",
           {{"tp", report.confusion.tp},
            {"tn", report.confusion.tn},
            {"fp", report.confusion.fp},
            {"fn", report.confusion.fn}}},
          {"accuracy", report.accuracy},
          {"precision", report.precision},
          {"recall", report.recall},
          {"f1", report.f1},
          {"auc_roc", report.auc_roc}};
}

json latency_report_json(const LatencyReport& report) {
  return {{"n", report.n},
          {"mean_ms", report.mean_ms},
          {"p50_ms", report.p50_ms},
          {"p95_ms", report.p95_ms},
          {"warmup", report.warmup}};
}

json zero_day_json(const ZeroDayReport& report) {
  return {{"category", report.category},
          {"train_rows", report.train_rows},
          {"holdout_rows", report.holdout_rows},
          {"detection_rate", report.detection_rate}};
}

json history_json(const TrainHistory& history) {
  json out = json::array();
  for (std::size_t e = 0; e < history.size(); ++e) {
    json entry = {{"epoch", e + 1}, {"mean_train_loss", history[e].mean_train_loss}};
    if (history[e].val_accuracy) entry["val_accuracy"] = *history[e].val_accuracy;
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace elai
