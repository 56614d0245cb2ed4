// Python bindings over the core pipeline: dataset handling, projections and
// feature ranking, the classifier with its training loop, attributions, and
// the evaluation metrics.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "elai/dataset.hpp"
#include "elai/errors.hpp"
#include "elai/explain.hpp"
#include "elai/features.hpp"
#include "elai/metrics.hpp"
#include "elai/model.hpp"
#include "elai/pipeline.hpp"
#include "elai/training.hpp"
#include "elai/version.hpp"

namespace py = pybind11;
using namespace elai;

namespace {

Matrix matrix_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

py::array_t<double> matrix_to_numpy(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

py::array_t<double> vector_to_numpy(const std::vector<double>& v) {
  py::array_t<double> out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> vector_from_numpy(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lightweight explainable flow classifier: features, model, "
            "attributions, metrics";
  m.attr("__version__") = kToolVersion;

  py::register_exception<Error>(m, "ElaiError");

  // --- dataset ---------------------------------------------------------
  py::class_<FeatureSchema>(m, "FeatureSchema")
      .def(py::init<>())
      .def_readwrite("feature_names", &FeatureSchema::feature_names)
      .def_readwrite("label_column", &FeatureSchema::label_column)
      .def_readwrite("category_column", &FeatureSchema::category_column)
      .def_readwrite("delimiter", &FeatureSchema::delimiter);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("x", [](const Dataset& ds) { return matrix_to_numpy(ds.x); })
      .def_property_readonly("y",
                             [](const Dataset& ds) {
                               py::array_t<int> out(ds.y.size());
                               std::copy(ds.y.begin(), ds.y.end(), out.mutable_data());
                               return out;
                             })
      .def_readonly("categories", &Dataset::categories)
      .def_property_readonly(
          "feature_names",
          [](const Dataset& ds) { return ds.schema.feature_names; })
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("d", &Dataset::d);

  py::class_<NormStats>(m, "NormStats")
      .def_property_readonly("mean",
                             [](const NormStats& s) { return vector_to_numpy(s.mean); })
      .def_property_readonly("std_dev",
                             [](const NormStats& s) { return vector_to_numpy(s.std_dev); })
      .def_readonly("constant", &NormStats::constant);

  m.def(
      "generate_synthetic",
      [](std::size_t n_normal, std::size_t n_attack, std::size_t d, double separation,
         double noise_std, std::size_t n_categories, std::uint64_t seed) {
        return generate_synthetic({n_normal, n_attack, d, separation, noise_std, n_categories},
                                  seed);
      },
      py::arg("n_normal") = 100, py::arg("n_attack") = 100, py::arg("d") = 6,
      py::arg("separation") = 6.0, py::arg("noise_std") = 1.0, py::arg("n_categories") = 1,
      py::arg("seed") = 1);

  m.def(
      "load_csv",
      [](const std::string& path, const std::string& label_column,
         const std::optional<std::string>& category_column, char delimiter) {
        const auto schema = infer_schema(path, label_column, category_column, delimiter);
        return load_csv(path, schema);
      },
      py::arg("path"), py::arg("label_column") = "label",
      py::arg("category_column") = std::optional<std::string>("category"),
      py::arg("delimiter") = ',');

  m.def("save_csv", &save_csv, py::arg("dataset"), py::arg("path"));
  m.def("fit_normalize", &fit_normalize, py::arg("dataset"));
  m.def("apply_normalize", &apply_normalize, py::arg("dataset"), py::arg("stats"));
  m.def(
      "split",
      [](const Dataset& ds, double train_frac, double val_frac, std::uint64_t seed,
         bool stratified) {
        auto parts = split(ds, train_frac, val_frac, seed, stratified);
        return py::make_tuple(parts.train, parts.val, parts.test);
      },
      py::arg("dataset"), py::arg("train_frac"), py::arg("val_frac") = 0.0,
      py::arg("seed") = 1, py::arg("stratified") = false);
  m.def("holdout_category", &holdout_category, py::arg("dataset"), py::arg("category"));

  // --- features ----------------------------------------------------------
  py::class_<Projection>(m, "Projection")
      .def_property_readonly("w", [](const Projection& p) { return matrix_to_numpy(p.w); })
      .def_property_readonly("mode",
                             [](const Projection& p) {
                               return p.mode == ProjectionMode::pca ? "pca" : "fisher";
                             })
      .def_readonly("explained", &Projection::explained)
      .def_readonly("eigenvalues", &Projection::eigenvalues);

  m.def(
      "fit_pca",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         std::size_t k) { return fit_pca(matrix_from_numpy(x), k); },
      py::arg("x"), py::arg("k"));
  m.def(
      "fit_fisher",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         const std::vector<int>& y, std::size_t k) {
        return fit_fisher(matrix_from_numpy(x), y, k);
      },
      py::arg("x"), py::arg("y"), py::arg("k") = 1);
  m.def(
      "apply_projection",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         const Projection& p) { return matrix_to_numpy(apply_projection(matrix_from_numpy(x), p)); },
      py::arg("x"), py::arg("projection"));

  m.def("entropy", &entropy, py::arg("labels"));
  m.def(
      "information_gain",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& feature,
         const std::vector<int>& labels, std::size_t bins) {
        const auto values = vector_from_numpy(feature);
        return information_gain(values, labels, bins);
      },
      py::arg("feature"), py::arg("labels"), py::arg("bins") = 10);
  m.def(
      "rank_features",
      [](const Dataset& ds, std::size_t bins) {
        const auto ranking = rank_features(ds, bins);
        py::list out;
        for (const auto& e : ranking.entries) {
          out.append(py::make_tuple(e.index, e.name, e.ig_bits));
        }
        return out;
      },
      py::arg("dataset"), py::arg("bins") = 10);

  // --- model -------------------------------------------------------------
  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init([](std::size_t input_dim, std::size_t conv_filters, std::size_t conv_kernel,
                       const std::string& recurrent_mode, std::size_t hidden_dim,
                       std::uint64_t seed) {
             ModelConfig cfg;
             cfg.input_dim = input_dim;
             cfg.conv_filters = conv_filters;
             cfg.conv_kernel = conv_kernel;
             if (recurrent_mode == "simple") {
               cfg.recurrent_mode = RecurrentMode::simple;
             } else if (recurrent_mode == "gated") {
               cfg.recurrent_mode = RecurrentMode::gated;
             } else {
               throw py::value_error("recurrent_mode must be 'simple' or 'gated'");
             }
             cfg.hidden_dim = hidden_dim;
             cfg.seed = seed;
             return cfg;
           }),
           py::arg("input_dim") = 4, py::arg("conv_filters") = 4, py::arg("conv_kernel") = 3,
           py::arg("recurrent_mode") = "gated", py::arg("hidden_dim") = 8, py::arg("seed") = 7)
      .def_readwrite("input_dim", &ModelConfig::input_dim)
      .def_readwrite("conv_filters", &ModelConfig::conv_filters)
      .def_readwrite("conv_kernel", &ModelConfig::conv_kernel)
      .def_readwrite("hidden_dim", &ModelConfig::hidden_dim)
      .def_readwrite("seed", &ModelConfig::seed)
      .def_property_readonly("seq_len", &ModelConfig::seq_len);

  py::class_<ElaiModel>(m, "Model")
      .def_readonly("config", &ElaiModel::config);

  py::class_<ForwardTrace>(m, "ForwardTrace")
      .def_readonly("y_hat", &ForwardTrace::y_hat)
      .def_property_readonly("alpha",
                             [](const ForwardTrace& t) { return vector_to_numpy(t.alpha); })
      .def_property_readonly("context",
                             [](const ForwardTrace& t) { return vector_to_numpy(t.context); })
      .def_property_readonly("logits", [](const ForwardTrace& t) {
        return py::make_tuple(t.logits[0], t.logits[1]);
      });

  m.def("init_model", &init_model, py::arg("config"));
  m.def(
      "forward",
      [](const ElaiModel& model,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& z) {
        return forward(model, vector_from_numpy(z));
      },
      py::arg("model"), py::arg("z"));
  m.def("param_count", &param_count, py::arg("model"));
  m.def("model_size_bytes", &model_size_bytes, py::arg("model"));

  // --- training ------------------------------------------------------------
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("beta1", &TrainConfig::beta1)
      .def_readwrite("beta2", &TrainConfig::beta2)
      .def_readwrite("eps", &TrainConfig::eps)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("shuffle_seed", &TrainConfig::shuffle_seed)
      .def_readwrite("clip_eps", &TrainConfig::clip_eps);

  m.def(
      "bce_loss",
      [](const std::vector<double>& y_hat, const std::vector<int>& y, double clip_eps) {
        const auto loss = bce_loss(y_hat, y, clip_eps);
        return py::make_tuple(loss.sum, loss.mean);
      },
      py::arg("y_hat"), py::arg("y"), py::arg("clip_eps") = 1e-7);

  m.def(
      "train",
      [](ElaiModel& model,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         const std::vector<int>& y, const TrainConfig& cfg) {
        const auto history = train(model, matrix_from_numpy(x), y, nullptr, nullptr, cfg);
        py::list out;
        for (const auto& epoch : history) out.append(epoch.mean_train_loss);
        return out;
      },
      py::arg("model"), py::arg("x"), py::arg("y"), py::arg("config"));

  // --- explain ---------------------------------------------------------
  py::class_<Attribution>(m, "Attribution")
      .def_property_readonly("phi",
                             [](const Attribution& a) { return vector_to_numpy(a.phi); })
      .def_readonly("base", &Attribution::base)
      .def_property_readonly("method", [](const Attribution& a) {
        return a.method == AttributionMethod::exact ? "exact" : "sampled";
      });

  py::class_<AttentionMap>(m, "AttentionMap")
      .def_property_readonly("alpha",
                             [](const AttentionMap& a) { return vector_to_numpy(a.alpha); })
      .def_readonly("argmax_step", &AttentionMap::argmax_step);

  m.def(
      "shap_exact",
      [](const ElaiModel& model,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         const std::optional<std::vector<double>>& reference) {
        const auto values = vector_from_numpy(x);
        ValueFunctionSpec spec =
            reference ? ValueFunctionSpec{*reference} : zero_reference(values.size());
        return shap_exact(model, values, spec);
      },
      py::arg("model"), py::arg("x"), py::arg("reference") = std::nullopt);
  m.def(
      "shap_sampled",
      [](const ElaiModel& model,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         std::size_t permutations, std::uint64_t seed,
         const std::optional<std::vector<double>>& reference) {
        const auto values = vector_from_numpy(x);
        ValueFunctionSpec spec =
            reference ? ValueFunctionSpec{*reference} : zero_reference(values.size());
        return shap_sampled(model, values, spec, permutations, seed);
      },
      py::arg("model"), py::arg("x"), py::arg("permutations") = 200, py::arg("seed") = 1,
      py::arg("reference") = std::nullopt);
  m.def("attention_map", &attention_map, py::arg("trace"));

  // --- metrics --------------------------------------------------------
  py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
      .def_readonly("tp", &ConfusionMatrix::tp)
      .def_readonly("tn", &ConfusionMatrix::tn)
      .def_readonly("fp", &ConfusionMatrix::fp)
      .def_readonly("fn", &ConfusionMatrix::fn);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("confusion", &EvalReport::confusion)
      .def_readonly("accuracy", &EvalReport::accuracy)
      .def_readonly("precision", &EvalReport::precision)
      .def_readonly("recall", &EvalReport::recall)
      .def_readonly("f1", &EvalReport::f1)
      .def_readonly("auc_roc", &EvalReport::auc_roc)
      .def_readonly("threshold", &EvalReport::threshold);

  m.def(
      "confusion",
      [](const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
        return confusion(scores, labels, threshold);
      },
      py::arg("scores"), py::arg("labels"), py::arg("threshold") = 0.5);
  m.def(
      "auc_roc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        return auc_roc(scores, labels);
      },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "evaluate",
      [](const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
        return evaluate(scores, labels, threshold);
      },
      py::arg("scores"), py::arg("labels"), py::arg("threshold") = 0.5);

  // --- pipeline -------------------------------------------------------
  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init(&default_pipeline_config))
      .def_static("from_json",
                  [](const std::string& text) {
                    return pipeline_config_from_json(nlohmann::json::parse(text));
                  })
      .def("to_json",
           [](const PipelineConfig& cfg) { return pipeline_config_to_json(cfg).dump(); })
      .def_readwrite("normalize", &PipelineConfig::normalize)
      .def_readwrite("threshold", &PipelineConfig::threshold)
      .def_readwrite("val_frac", &PipelineConfig::val_frac)
      .def_readwrite("data_seed", &PipelineConfig::data_seed)
      .def_readwrite("model", &PipelineConfig::model)
      .def_readwrite("train", &PipelineConfig::train)
      .def_property(
          "selection_mode",
          [](const PipelineConfig& cfg) {
            switch (cfg.selection.mode) {
              case SelectionMode::pca: return "pca";
              case SelectionMode::fisher: return "fisher";
              case SelectionMode::ig_topk: return "ig-topk";
            }
            return "pca";
          },
          [](PipelineConfig& cfg, const std::string& mode) {
            if (mode == "pca") {
              cfg.selection.mode = SelectionMode::pca;
            } else if (mode == "fisher") {
              cfg.selection.mode = SelectionMode::fisher;
            } else if (mode == "ig-topk") {
              cfg.selection.mode = SelectionMode::ig_topk;
            } else {
              throw py::value_error("selection mode must be pca, fisher, or ig-topk");
            }
          })
      .def_property(
          "selection_k", [](const PipelineConfig& cfg) { return cfg.selection.k; },
          [](PipelineConfig& cfg, std::size_t k) {
            cfg.selection.k = k;
            cfg.model.input_dim = k;
          })
      .def_property(
          "selection_bins", [](const PipelineConfig& cfg) { return cfg.selection.bins; },
          [](PipelineConfig& cfg, std::size_t bins) { cfg.selection.bins = bins; });

  py::class_<FittedPipeline>(m, "FittedPipeline")
      .def_readonly("model", &FittedPipeline::model)
      .def_property_readonly("history",
                             [](const FittedPipeline& f) {
                               py::list out;
                               for (const auto& e : f.history) out.append(e.mean_train_loss);
                               return out;
                             })
      .def_property_readonly("feature_names", [](const FittedPipeline& f) {
        return f.transform.output_names;
      })
      .def(
          "transform",
          [](const FittedPipeline& f,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
            return matrix_to_numpy(f.transform.apply(matrix_from_numpy(x)));
          },
          py::arg("x"))
      .def(
          "score",
          [](const FittedPipeline& f,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
            return vector_to_numpy(score_all(f.model, f.transform.apply(matrix_from_numpy(x))));
          },
          py::arg("x"));

  m.def("fit_pipeline", &fit_pipeline, py::arg("dataset"), py::arg("config"));
  m.def("evaluate_pipeline", &evaluate_pipeline, py::arg("fitted"), py::arg("dataset"),
        py::arg("threshold") = 0.5);
  m.def(
      "zero_day_eval",
      [](const Dataset& train_ds, const Dataset& holdout_ds, const PipelineConfig& cfg) {
        const auto report = zero_day_eval(train_ds, holdout_ds, cfg);
        return py::dict(py::arg("category") = report.category,
                        py::arg("train_rows") = report.train_rows,
                        py::arg("holdout_rows") = report.holdout_rows,
                        py::arg("detection_rate") = report.detection_rate);
      },
      py::arg("train_dataset"), py::arg("holdout_dataset"), py::arg("config"));

  m.def(
      "save_checkpoint",
      [](const FittedPipeline& fitted, const PipelineConfig& cfg, const std::string& path) {
        save_checkpoint(to_checkpoint(fitted, cfg), path);
      },
      py::arg("fitted"), py::arg("config"), py::arg("path"));
  m.def(
      "load_checkpoint",
      [](const std::string& path) { return from_checkpoint(load_checkpoint(path)); },
      py::arg("path"));

  m.def(
      "latency_benchmark",
      [](const ElaiModel& model,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         std::size_t warmup, std::size_t reps) {
        const auto report = latency_benchmark(model, matrix_from_numpy(x), warmup, reps);
        return py::dict(py::arg("n") = report.n, py::arg("mean_ms") = report.mean_ms,
                        py::arg("p50_ms") = report.p50_ms, py::arg("p95_ms") = report.p95_ms,
                        py::arg("warmup") = report.warmup);
      },
      py::arg("model"), py::arg("x"), py::arg("warmup") = 100, py::arg("reps") = 1000);
}
