#include "elai/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "elai/errors.hpp"

namespace elai {

ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels,
                          double threshold) {
  if (scores.size() != labels.size()) {
    fail(ErrorCode::LengthMismatch, "confusion: " + std::to_string(scores.size()) + " vs " +
                                        std::to_string(labels.size()));
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) {
      ++cm.tp;
    } else if (!predicted && !actual) {
      ++cm.tn;
    } else if (predicted && !actual) {
      ++cm.fp;
    } else {
      ++cm.fn;
    }
  }
  return cm;
}

namespace {

double ratio(std::size_t num, std::size_t den, const char* name) {
  if (den == 0) fail(ErrorCode::UndefinedMetric, name);
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double accuracy(const ConfusionMatrix& cm) { return ratio(cm.tp + cm.tn, cm.total(), "accuracy"); }
double precision(const ConfusionMatrix& cm) { return ratio(cm.tp, cm.tp + cm.fp, "precision"); }
double recall(const ConfusionMatrix& cm) { return ratio(cm.tp, cm.tp + cm.fn, "recall"); }

double f1(const ConfusionMatrix& cm) {
  const double p = precision(cm);
  const double r = recall(cm);
  if (p + r == 0.0) fail(ErrorCode::UndefinedMetric, "f1");
  return 2.0 * p * r / (p + r);
}

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    fail(ErrorCode::LengthMismatch, "auc_roc: scores vs labels");
  }
  std::size_t n_pos = 0;
  for (int label : labels) n_pos += label == 1 ? 1 : 0;
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    fail(ErrorCode::SingleClass, "auc_roc needs both classes present");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks across tie groups, then sum the positive ranks.
  double rank_pos_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>((i + 1) + (j + 1));
    for (std::size_t idx = i; idx <= j; ++idx) {
      if (labels[order[idx]] == 1) rank_pos_sum += avg_rank;
    }
    i = j + 1;
  }

  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_pos_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

EvalReport evaluate(std::span<const double> scores, std::span<const int> labels,
                    double threshold) {
  EvalReport report;
  report.threshold = threshold;
  report.confusion = confusion(scores, labels, threshold);
  report.accuracy = accuracy(report.confusion);
  report.precision = precision(report.confusion);
  report.recall = recall(report.confusion);
  report.f1 = f1(report.confusion);
  report.auc_roc = auc_roc(scores, labels);
  return report;
}

LatencyReport latency_benchmark(const ElaiModel& model, const Matrix& x, std::size_t warmup,
                                std::size_t reps) {
  if (reps < 1) fail(ErrorCode::BadConfig, "reps must be >= 1");
  if (x.rows() < 1 || x.cols() != model.config.input_dim) {
    fail(ErrorCode::DimensionMismatch, "latency_benchmark: data does not fit the model");
  }

  using clock = std::chrono::steady_clock;
  volatile double sink = 0.0;

  for (std::size_t i = 0; i < warmup; ++i) {
    sink = forward(model, x.row(i % x.rows())).y_hat;
  }

  std::vector<double> samples_ms(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    const auto start = clock::now();
    sink = forward(model, x.row(i % x.rows())).y_hat;
    const auto stop = clock::now();
    samples_ms[i] =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(stop - start)
            .count();
  }
  (void)sink;

  LatencyReport report;
  report.n = reps;
  report.warmup = warmup;
  report.mean_ms =
      std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / static_cast<double>(reps);

  std::sort(samples_ms.begin(), samples_ms.end());
  auto nearest_rank = [&](double pct) {
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(pct / 100.0 * static_cast<double>(reps)));
    return samples_ms[std::max<std::size_t>(rank, 1) - 1];
  };
  report.p50_ms = nearest_rank(50.0);
  report.p95_ms = nearest_rank(95.0);
  return report;
}

double detection_rate(std::span<const double> scores, double threshold) {
  if (scores.empty()) fail(ErrorCode::LengthMismatch, "detection_rate of empty scores");
  std::size_t hits = 0;
  for (double s : scores) hits += s >= threshold ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

std::string confusion_to_csv(const ConfusionMatrix& cm) {
  std::string out = ",pred_normal,pred_attack\n";
  out += "actual_normal," + std::to_string(cm.tn) + "," + std::to_string(cm.fp) + "\n";
  out += "actual_attack," + std::to_string(cm.fn) + "," + std::to_string(cm.tp) + "\n";
  return out;
}

}  // namespace elai
