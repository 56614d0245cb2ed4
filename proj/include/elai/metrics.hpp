#pragma once

#include <span>
#include <string>
#include <vector>

#include "elai/linalg.hpp"
#include "elai/model.hpp"

namespace elai {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t total() const { return tp + tn + fp + fn; }
};

/// Predict attack iff score >= threshold.
ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels,
                          double threshold);

/// (TP+TN)/total; 0/0 raises UndefinedMetric, as for the other ratios.
double accuracy(const ConfusionMatrix& cm);
double precision(const ConfusionMatrix& cm);
double recall(const ConfusionMatrix& cm);
double f1(const ConfusionMatrix& cm);

/// Mann-Whitney rank statistic with average ranks for ties:
/// AUC = (R+ - n+(n+ + 1)/2) / (n+ n-). Exact under ties, O(n log n).
double auc_roc(std::span<const double> scores, std::span<const int> labels);

struct EvalReport {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc_roc = 0.0;
  double threshold = 0.5;
};

EvalReport evaluate(std::span<const double> scores, std::span<const int> labels,
                    double threshold);

struct LatencyReport {
  std::size_t n = 0;  // timed repetitions
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  std::size_t warmup = 0;  // untimed passes, excluded from statistics
};

/// Times single-sample forward passes on a monotonic clock, cycling through
/// the rows of x; `warmup` passes run first and are not measured. Percentiles
/// use the nearest-rank rule.
LatencyReport latency_benchmark(const ElaiModel& model, const Matrix& x, std::size_t warmup,
                                std::size_t reps);

/// Fraction of scores at or above the threshold.
double detection_rate(std::span<const double> scores, double threshold);

/// 2x2 layout: rows actual, columns predicted.
std::string confusion_to_csv(const ConfusionMatrix& cm);

}  // namespace elai
