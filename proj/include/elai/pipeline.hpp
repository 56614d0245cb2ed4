#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "elai/dataset.hpp"
#include "elai/features.hpp"
#include "elai/metrics.hpp"
#include "elai/model.hpp"
#include "elai/training.hpp"

namespace elai {

enum class SelectionMode { pca, fisher, ig_topk };

struct SelectionConfig {
  SelectionMode mode = SelectionMode::pca;
  std::size_t k = 4;       // retained dimensions / features
  std::size_t bins = 10;   // information-gain discretization
};

/// One document that fixes an entire run: ingestion, preprocessing, feature
/// selection, model, training, evaluation threshold, and every seed.
struct PipelineConfig {
  std::string label_column = "label";
  std::string category_column = "category";  // picked up when the header has it
  char delimiter = ',';
  LabelMapping labels;
  bool normalize = true;
  SelectionConfig selection;
  ModelConfig model;  // model.input_dim must equal selection.k
  TrainConfig train;
  double threshold = 0.5;
  double val_frac = 0.0;      // carved from the training data when > 0
  std::uint64_t data_seed = 1;
};

void validate(const PipelineConfig& cfg);

PipelineConfig default_pipeline_config();
nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);
/// Strict: unknown keys are rejected, missing keys fall back to defaults.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

/// Raw feature rows -> model input rows: optional z-score, then either a
/// linear projection or a top-k feature subset.
struct FeatureTransform {
  std::optional<NormStats> norm;
  std::optional<Projection> projection;
  std::optional<std::vector<std::size_t>> selected;  // ig-topk, ranking order
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;  // pc0.. or the selected raw names

  Matrix apply(const Matrix& x) const;
};

struct FittedPipeline {
  FeatureTransform transform;
  ElaiModel model;
  TrainHistory history;
  FeatureRanking ranking;  // on the normalized training rows
};

FittedPipeline fit_pipeline(const Dataset& ds, const PipelineConfig& cfg);

std::vector<double> score_all(const ElaiModel& model, const Matrix& x);

/// Applies the stored transform and scores the dataset; the schema's feature
/// columns must match what the pipeline was fitted on.
EvalReport evaluate_pipeline(const FittedPipeline& fitted, const Dataset& ds,
                             double threshold);

Checkpoint to_checkpoint(const FittedPipeline& fitted, const PipelineConfig& cfg);
FittedPipeline from_checkpoint(const Checkpoint& ckpt);

struct ZeroDayReport {
  std::string category;
  std::size_t train_rows = 0;
  std::size_t holdout_rows = 0;
  double detection_rate = 0.0;
};

/// Trains on train_ds per the config, then reports the fraction of holdout
/// rows scored at or above the threshold.
ZeroDayReport zero_day_eval(const Dataset& train_ds, const Dataset& holdout_ds,
                            const PipelineConfig& cfg);

/// Aggregate run document: the config echo plus whichever sections the run
/// produced. The echo alone reproduces the run (it carries every seed).
struct ModelSummary {
  std::size_t param_count = 0;
  std::size_t size_bytes = 0;
  std::string path;
};

struct RunReport {
  nlohmann::json config;
  std::optional<nlohmann::json> dataset_summary;
  std::optional<FeatureRanking> ranking;
  std::optional<EvalReport> eval;
  std::optional<LatencyReport> latency;
  std::optional<ModelSummary> model;
  std::optional<ZeroDayReport> zero_day;
};

/// {tool, config, dataset?, ranking?, evaluation?, latency?, model?,
/// zero_day?} with sorted keys; absent sections are omitted.
nlohmann::json run_report_json(const RunReport& report);

// Report fragments shared by the CLI and tests; sorted keys, stable schema.
nlohmann::json tool_json();
nlohmann::json dataset_summary_json(const Dataset& ds);
nlohmann::json ranking_json(const FeatureRanking& ranking);
nlohmann::json eval_report_json(const EvalReport& report);
nlohmann::json latency_report_json(const LatencyReport& report);
nlohmann::json zero_day_json(const ZeroDayReport& report);
nlohmann::json history_json(const TrainHistory& history);

}  // namespace elai
