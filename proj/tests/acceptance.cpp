// Acceptance suite: one check per release criterion, one PASS/FAIL line each.
// Returns nonzero if any criterion fails. Desk-scale and fully seeded, so a
// green run is reproducible bit for bit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "elai/dataset.hpp"
#include "elai/explain.hpp"
#include "elai/features.hpp"
#include "elai/metrics.hpp"
#include "elai/model.hpp"
#include "elai/pipeline.hpp"
#include "elai/rng.hpp"
#include "elai/training.hpp"

using namespace elai;

namespace {

struct Criterion {
  std::string name;
  bool passed = true;
  std::string detail;
  double seconds = 0.0;
};

std::vector<Criterion> g_results;

class Scope {
 public:
  explicit Scope(std::string name) : start_(std::chrono::steady_clock::now()) {
    criterion_.name = std::move(name);
  }
  ~Scope() {
    criterion_.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    g_results.push_back(criterion_);
  }
  void require(bool condition, const std::string& what) {
    if (!condition && criterion_.passed) {
      criterion_.passed = false;
      criterion_.detail = what;
    }
  }

 private:
  Criterion criterion_;
  std::chrono::steady_clock::time_point start_;
};

double sample_loss(const ElaiModel& model, std::span<const double> z, int label) {
  const ForwardTrace trace = forward(model, z);
  return bce_loss({&trace.y_hat, 1}, {&label, 1}).sum;
}

PipelineConfig desk_config() {
  PipelineConfig cfg = default_pipeline_config();
  cfg.train.learning_rate = 0.01;
  cfg.train.epochs = 200;
  return cfg;
}

// ---------------------------------------------------------------------------

void gradient_correctness() {
  Scope scope("gradient-correctness (100 models, both recurrent modes, fd step 1e-5)");
  Rng rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    ModelConfig cfg;
    cfg.input_dim = 6;
    cfg.conv_filters = 3;
    cfg.conv_kernel = 3;
    cfg.hidden_dim = 4;
    cfg.recurrent_mode = trial % 2 == 0 ? RecurrentMode::gated : RecurrentMode::simple;
    cfg.seed = 2000 + static_cast<std::uint64_t>(trial);
    ElaiModel model = init_model(cfg);

    std::vector<double> z(cfg.input_dim);
    for (double& v : z) v = rng.uniform(-2, 2);
    const int label = rng.uniform() < 0.5 ? 1 : 0;

    const ForwardTrace trace = forward(model, z);
    const Gradients analytic = backward(model, trace, label);
    const auto grad_views = param_views(analytic);
    auto views = param_views(model);

    const double step = 1e-5;
    for (std::size_t t = 0; t < views.size(); ++t) {
      for (std::size_t i = 0; i < views[t].size(); ++i) {
        const double saved = views[t][i];
        views[t][i] = saved + step;
        const double up = sample_loss(model, z, label);
        views[t][i] = saved - step;
        const double down = sample_loss(model, z, label);
        views[t][i] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double got = grad_views[t][i];
        const double denom = std::max({std::abs(numeric), std::abs(got), 1e-6});
        worst = std::max(worst, std::abs(numeric - got) / denom);
      }
    }
  }
  scope.require(worst < 1e-4, "max relative error " + std::to_string(worst));
}

void shapley_axioms() {
  Scope scope("shapley-axioms (efficiency, dummy, permutation-oracle equality, 50 models)");
  Rng rng(1002);
  double worst_efficiency = 0.0, worst_dummy = 0.0, worst_oracle = 0.0;

  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 3 + rng.index(4);  // 3..6
    ModelConfig cfg;
    cfg.input_dim = k;
    cfg.conv_filters = 2;
    cfg.conv_kernel = std::min<std::size_t>(2, k);
    cfg.hidden_dim = 3;
    cfg.recurrent_mode = trial % 2 == 0 ? RecurrentMode::gated : RecurrentMode::simple;
    cfg.seed = 3000 + static_cast<std::uint64_t>(trial);
    const ElaiModel model = init_model(cfg);
    const Scorer f = model_scorer(model);

    ValueFunctionSpec spec;
    spec.reference.resize(k);
    for (double& r : spec.reference) r = rng.uniform(-1, 1);
    std::vector<double> x(k);
    for (double& v : x) v = rng.uniform(-2, 2);
    const std::size_t dummy_idx = rng.index(k);
    x[dummy_idx] = spec.reference[dummy_idx];

    const Attribution attr = shap_exact(f, x, spec);
    double total = attr.base;
    for (double phi : attr.phi) total += phi;
    worst_efficiency = std::max(worst_efficiency, std::abs(total - f(x)));
    worst_dummy = std::max(worst_dummy, std::abs(attr.phi[dummy_idx]));

    // Independent oracle: average marginal contributions over all k!
    // insertion orders (memoized coalition values).
    const std::size_t n_masks = std::size_t{1} << k;
    std::vector<double> value(n_masks);
    std::vector<double> composite(k);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      for (std::size_t i = 0; i < k; ++i) {
        composite[i] = (mask >> i) & 1u ? x[i] : spec.reference[i];
      }
      value[mask] = f(composite);
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> oracle(k, 0.0);
    std::size_t n_perms = 0;
    do {
      std::size_t mask = 0;
      for (std::size_t idx : order) {
        const std::size_t next = mask | (std::size_t{1} << idx);
        oracle[idx] += value[next] - value[mask];
        mask = next;
      }
      ++n_perms;
    } while (std::next_permutation(order.begin(), order.end()));
    for (std::size_t i = 0; i < k; ++i) {
      worst_oracle =
          std::max(worst_oracle,
                   std::abs(attr.phi[i] - oracle[i] / static_cast<double>(n_perms)));
    }
  }
  scope.require(worst_efficiency < 1e-9, "efficiency residual " + std::to_string(worst_efficiency));
  scope.require(worst_dummy < 1e-9, "dummy attribution " + std::to_string(worst_dummy));
  scope.require(worst_oracle < 1e-9, "oracle gap " + std::to_string(worst_oracle));
}

void fidelity_self_test() {
  Scope scope("fidelity-self-test (exact surrogate < 1e-12; sampled trend over m)");
  ModelConfig cfg;
  cfg.input_dim = 5;
  cfg.conv_filters = 3;
  cfg.conv_kernel = 2;
  cfg.hidden_dim = 4;
  cfg.seed = 4001;
  const ElaiModel model = init_model(cfg);
  const Scorer f = model_scorer(model);
  const ValueFunctionSpec spec = zero_reference(5);

  Rng rng(1003);
  Matrix samples(20, 5);
  for (double& v : samples.data()) v = rng.uniform(-2, 2);

  std::vector<Attribution> exact;
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    exact.push_back(shap_exact(f, samples.row(i), spec));
  }
  const double exact_lfs = local_fidelity(f, samples, exact).lfs;
  scope.require(exact_lfs < 1e-12, "exact LFS " + std::to_string(exact_lfs));

  // 5-seed average, m in {10, 100, 1000}: the trend must not increase.
  std::vector<double> mean_lfs;
  for (std::size_t m : {std::size_t{10}, std::size_t{100}, std::size_t{1000}}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      std::vector<Attribution> sampled;
      for (std::size_t i = 0; i < samples.rows(); ++i) {
        sampled.push_back(shap_sampled(f, samples.row(i), spec, m, seed));
      }
      total += local_fidelity(f, samples, sampled).lfs;
    }
    mean_lfs.push_back(total / 5.0);
  }
  scope.require(mean_lfs[1] <= mean_lfs[0] && mean_lfs[2] <= mean_lfs[1],
                "LFS trend " + std::to_string(mean_lfs[0]) + " -> " +
                    std::to_string(mean_lfs[1]) + " -> " + std::to_string(mean_lfs[2]));
}

void classification_arithmetic() {
  Scope scope("classification-arithmetic (accuracy 0.9 exact; AUC pair oracle 0.75 exact)");
  const ConfusionMatrix cm{50, 40, 5, 5};
  scope.require(accuracy(cm) == 0.9, "accuracy(50,40,5,5) != 0.9");

  const std::vector<double> scores = {0.8, 0.6, 0.4, 0.2};
  const std::vector<int> labels = {1, 0, 1, 0};
  scope.require(auc_roc(scores, labels) == 0.75, "AUC oracle case != 0.75");
}

void information_gain_oracle() {
  Scope scope("information-gain-oracle (bounds on 1000 random vectors; worked values)");
  Rng rng(1004);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.index(50);
    std::vector<double> f(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      f[i] = rng.uniform(-4, 4);
      if (rng.uniform() < 0.25) f[i] = std::round(f[i]);
      y[i] = rng.uniform() < 0.5 ? 1 : 0;
    }
    const std::size_t bins = 2 + rng.index(8);
    const double ig = information_gain(f, y, bins);
    const double h = entropy(y);
    if (!(ig >= 0.0 && ig <= h + 1e-12)) {
      scope.require(false, "bounds violated at trial " + std::to_string(trial));
      return;
    }
  }

  const std::vector<double> ramp = {1, 2, 3, 4};
  const std::vector<int> split_labels = {0, 0, 1, 1};
  scope.require(std::abs(information_gain(ramp, split_labels, 2) - 1.0) < 1e-9,
                "two pure bins != 1 bit");

  const std::vector<double> indep = {0, 1, 0, 1};
  const std::vector<int> indep_labels = {0, 0, 1, 1};
  scope.require(std::abs(information_gain(indep, indep_labels, 2)) < 1e-9,
                "independent feature != 0 bits");

  scope.require(std::abs(entropy({0, 0, 0, 1}) - 0.8112781244591328) < 1e-9,
                "entropy(3:1) != 0.8112781 bits");
}

void end_to_end_desk_run() {
  Scope scope("end-to-end-desk-run (train acc >= 0.95, AUC >= 0.98, deterministic)");
  const SyntheticSpec spec{100, 100, 6, 6.0, 1.0, 1};
  const PipelineConfig cfg = desk_config();

  const Dataset ds = generate_synthetic(spec, 1);
  const FittedPipeline fitted = fit_pipeline(ds, cfg);
  const EvalReport report = evaluate_pipeline(fitted, ds, cfg.threshold);
  scope.require(report.accuracy >= 0.95,
                "training accuracy " + std::to_string(report.accuracy));
  scope.require(report.auc_roc >= 0.98, "AUC " + std::to_string(report.auc_roc));

  // Repeat the whole run; bytes must match.
  const Dataset ds2 = generate_synthetic(spec, 1);
  const FittedPipeline fitted2 = fit_pipeline(ds2, cfg);
  const EvalReport report2 = evaluate_pipeline(fitted2, ds2, cfg.threshold);
  scope.require(checkpoint_to_json(to_checkpoint(fitted, cfg)) ==
                    checkpoint_to_json(to_checkpoint(fitted2, cfg)),
                "checkpoints differ between consecutive runs");
  scope.require(eval_report_json(report).dump() == eval_report_json(report2).dump(),
                "evaluation reports differ between consecutive runs");
}

void zero_day_protocol() {
  Scope scope("zero-day-protocol (hold out one of three categories, detection >= 0.8)");
  const Dataset ds = generate_synthetic({100, 99, 6, 6.0, 1.0, 3}, 2);
  const auto [train_ds, holdout_ds] = holdout_category(ds, "cat2");
  scope.require(holdout_ds.n() == 33, "holdout size " + std::to_string(holdout_ds.n()));
  scope.require(train_ds.n() == ds.n() - 33, "train size " + std::to_string(train_ds.n()));

  const ZeroDayReport report = zero_day_eval(train_ds, holdout_ds, desk_config());
  scope.require(report.detection_rate >= 0.8,
                "detection rate " + std::to_string(report.detection_rate));

  const ZeroDayReport again = zero_day_eval(train_ds, holdout_ds, desk_config());
  scope.require(report.detection_rate == again.detection_rate,
                "detection rate not deterministic");
}

void latency_size_plumbing() {
  Scope scope("latency-size-plumbing (positive stats, size == file length, param count 83)");
  const Dataset ds = generate_synthetic({50, 50, 6, 6.0, 1.0, 1}, 3);
  PipelineConfig cfg = desk_config();
  cfg.train.epochs = 5;
  const FittedPipeline fitted = fit_pipeline(ds, cfg);

  const Matrix model_space = fitted.transform.apply(ds.x);
  const LatencyReport lat = latency_benchmark(fitted.model, model_space, 100, 200);
  scope.require(lat.mean_ms > 0.0 && lat.p50_ms > 0.0 && lat.p95_ms > 0.0,
                "non-positive latency statistics");
  scope.require(lat.p50_ms <= lat.p95_ms, "p50 above p95");
  scope.require(lat.n == 200 && lat.warmup == 100, "sample bookkeeping wrong");

  const LatencyReport single = latency_benchmark(fitted.model, model_space, 100, 1);
  scope.require(single.n == 1 && single.mean_ms == single.p50_ms &&
                    single.p50_ms == single.p95_ms,
                "warmup leaked into the single-rep statistics");

  const Checkpoint ckpt = to_checkpoint(fitted, cfg);
  const std::string path = "/tmp/elai_acceptance_ckpt.json";
  save_checkpoint(ckpt, path);
  const std::string text = checkpoint_to_json(ckpt);
  std::FILE* file = std::fopen(path.c_str(), "rb");
  std::fseek(file, 0, SEEK_END);
  const long file_size = std::ftell(file);
  std::fclose(file);
  std::remove(path.c_str());
  scope.require(static_cast<std::size_t>(file_size) == checkpoint_size_bytes(ckpt),
                "on-disk size != serialized size");
  scope.require(text.size() == checkpoint_size_bytes(ckpt), "size helper inconsistent");

  ModelConfig worked;
  worked.input_dim = 8;
  worked.conv_filters = 4;
  worked.conv_kernel = 3;
  worked.hidden_dim = 5;
  worked.recurrent_mode = RecurrentMode::simple;
  worked.seed = 1;
  scope.require(param_count(init_model(worked)) == 83, "shape arithmetic != 83");
}

void determinism() {
  Scope scope("determinism (seed triple fixes generated data, checkpoint, report bytes)");
  const SyntheticSpec spec{80, 80, 6, 6.0, 1.0, 2};
  PipelineConfig cfg = desk_config();
  cfg.train.epochs = 40;

  std::string first_csv, first_ckpt, first_report;
  for (int run = 0; run < 2; ++run) {
    const Dataset ds = generate_synthetic(spec, 9);
    const std::string csv = dataset_to_csv(ds);
    const FittedPipeline fitted = fit_pipeline(ds, cfg);
    const std::string ckpt = checkpoint_to_json(to_checkpoint(fitted, cfg));
    const std::string report =
        eval_report_json(evaluate_pipeline(fitted, ds, cfg.threshold)).dump();
    if (run == 0) {
      first_csv = csv;
      first_ckpt = ckpt;
      first_report = report;
    } else {
      scope.require(csv == first_csv, "generated data differs");
      scope.require(ckpt == first_ckpt, "checkpoint bytes differ");
      scope.require(report == first_report, "report bytes differ");
    }
  }
}

void checkpoint_round_trip() {
  Scope scope("checkpoint-round-trip (identical probabilities on 100 random inputs)");
  const Dataset ds = generate_synthetic({60, 60, 6, 6.0, 1.0, 1}, 4);
  PipelineConfig cfg = desk_config();
  cfg.train.epochs = 30;
  const FittedPipeline fitted = fit_pipeline(ds, cfg);

  const std::string path = "/tmp/elai_acceptance_roundtrip.json";
  save_checkpoint(to_checkpoint(fitted, cfg), path);
  const FittedPipeline back = from_checkpoint(load_checkpoint(path));
  std::remove(path.c_str());

  Rng rng(1005);
  bool identical = true;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(fitted.model.config.input_dim);
    for (double& v : z) v = rng.uniform(-4, 4);
    if (forward(fitted.model, z).y_hat != forward(back.model, z).y_hat) identical = false;
  }
  scope.require(identical, "reloaded model disagrees with the original");
}

}  // namespace

int main() {
  gradient_correctness();
  shapley_axioms();
  fidelity_self_test();
  classification_arithmetic();
  information_gain_oracle();
  end_to_end_desk_run();
  zero_day_protocol();
  latency_size_plumbing();
  determinism();
  checkpoint_round_trip();

  // Stated runtime budgets: the gradient and shapley suites under a minute,
  // the desk run under two.
  const double budgets[] = {60.0, 60.0, 0.0, 0.0, 0.0, 120.0, 0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < g_results.size(); ++i) {
    if (budgets[i] > 0.0 && g_results[i].seconds >= budgets[i] && g_results[i].passed) {
      g_results[i].passed = false;
      g_results[i].detail = "over the runtime budget of " + std::to_string(budgets[i]) + "s";
    }
  }

  int failures = 0;
  for (const Criterion& c : g_results) {
    if (c.passed) {
      std::printf("[PASS] %-82s (%.2fs)\n", c.name.c_str(), c.seconds);
    } else {
      ++failures;
      std::printf("[FAIL] %-82s (%.2fs): %s\n", c.name.c_str(), c.seconds, c.detail.c_str());
    }
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(g_results.size()) - failures,
              g_results.size());
  return failures == 0 ? 0 : 1;
}
