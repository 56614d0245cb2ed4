#include "elai/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "elai/errors.hpp"
#include "elai/rng.hpp"

namespace elai {

void validate(const TrainConfig& config) {
  if (!(config.learning_rate > 0.0)) fail(ErrorCode::BadConfig, "learning_rate must be > 0");
  if (!(config.beta1 > 0.0 && config.beta1 < 1.0)) {
    fail(ErrorCode::BadConfig, "beta1 must be in (0,1)");
  }
  if (!(config.beta2 > 0.0 && config.beta2 < 1.0)) {
    fail(ErrorCode::BadConfig, "beta2 must be in (0,1)");
  }
  if (!(config.eps > 0.0)) fail(ErrorCode::BadConfig, "eps must be > 0");
  if (config.batch_size < 1) fail(ErrorCode::BadConfig, "batch_size must be >= 1");
  if (!(config.clip_eps > 0.0 && config.clip_eps < 0.5)) {
    fail(ErrorCode::BadConfig, "clip_eps must be in (0, 0.5)");
  }
}

namespace {

double clamp_prob(double p, double clip_eps) {
  return std::clamp(p, clip_eps, 1.0 - clip_eps);
}

}  // namespace

BceLoss bce_loss(std::span<const double> y_hat, std::span<const int> y, double clip_eps) {
  if (y_hat.size() != y.size()) {
    fail(ErrorCode::LengthMismatch, "bce_loss: " + std::to_string(y_hat.size()) + " vs " +
                                        std::to_string(y.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    const double p = clamp_prob(y_hat[i], clip_eps);
    sum -= y[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return {sum, sum / static_cast<double>(y_hat.size())};
}

double bce_grad(double y_hat, int y, double clip_eps) {
  const double p = clamp_prob(y_hat, clip_eps);
  const double yy = static_cast<double>(y);
  return -yy / p + (1.0 - yy) / (1.0 - p);
}

AdamState init_adam(const ElaiModel& model) {
  AdamState state;
  for (auto view : param_views(model)) {
    state.m.emplace_back(view.size(), 0.0);
    state.v.emplace_back(view.size(), 0.0);
  }
  return state;
}

void adam_step(ElaiModel& model, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg) {
  auto params = param_views(model);
  auto grad_views = param_views(grads);
  if (params.size() != grad_views.size() || params.size() != state.m.size()) {
    fail(ErrorCode::ShapeMismatch, "adam_step: tensor count mismatch");
  }

  state.step += 1;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size() != grad_views[t].size()) {
      fail(ErrorCode::ShapeMismatch, "adam_step: tensor shape mismatch");
    }
    auto& m = state.m[t];
    auto& v = state.v[t];
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double g = grad_views[t][i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      params[t][i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

TrainHistory train(ElaiModel& model, const Matrix& x, const std::vector<int>& y,
                   const Matrix* val_x, const std::vector<int>* val_y,
                   const TrainConfig& cfg) {
  validate(cfg);
  if (x.rows() != y.size()) {
    fail(ErrorCode::LengthMismatch, "train: rows vs labels");
  }
  if (x.cols() != model.config.input_dim) {
    fail(ErrorCode::DimensionMismatch, "train: data width " + std::to_string(x.cols()) +
                                           " != model input " +
                                           std::to_string(model.config.input_dim));
  }
  if (val_x != nullptr && val_y != nullptr && val_x->rows() != val_y->size()) {
    fail(ErrorCode::LengthMismatch, "train: val rows vs labels");
  }

  const std::size_t n = x.rows();
  AdamState state = init_adam(model);
  Rng rng(cfg.shuffle_seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  TrainHistory history;
  history.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss_sum = 0.0;

    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, n);
      const double batch_n = static_cast<double>(end - start);

      Gradients batch_grads = zero_gradients(model.config);
      double batch_loss = 0.0;
      for (std::size_t idx = start; idx < end; ++idx) {
        const std::size_t row = order[idx];
        const ForwardTrace trace = forward(model, x.row(row));
        const int label = y[row];
        batch_loss += bce_loss({&trace.y_hat, 1}, {&label, 1}, cfg.clip_eps).sum;
        accumulate(batch_grads, backward(model, trace, label));
      }
      if (!std::isfinite(batch_loss)) {
        fail(ErrorCode::NonFiniteLoss, "epoch " + std::to_string(epoch + 1) + ", batch at " +
                                           std::to_string(start));
      }
      epoch_loss_sum += batch_loss;
      scale(batch_grads, 1.0 / batch_n);
      adam_step(model, batch_grads, state, cfg);
    }

    EpochStats stats;
    stats.mean_train_loss = epoch_loss_sum / static_cast<double>(n);
    if (val_x != nullptr && val_y != nullptr && val_x->rows() > 0) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < val_x->rows(); ++i) {
        const double p = forward(model, val_x->row(i)).y_hat;
        const int pred = p >= 0.5 ? 1 : 0;
        correct += pred == (*val_y)[i] ? 1 : 0;
      }
      stats.val_accuracy = static_cast<double>(correct) / static_cast<double>(val_x->rows());
    }
    history.push_back(stats);
  }
  return history;
}

// ---------------------------------------------------------------------------
// Checkpoint codec. nlohmann keeps object keys sorted and emits shortest
// round-trip decimals, which makes the serialized form canonical.

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::CorruptCheckpoint, "bad matrix");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      fail(ErrorCode::CorruptCheckpoint, "ragged matrix");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

const char* mode_name(RecurrentMode mode) {
  return mode == RecurrentMode::simple ? "simple" : "gated";
}

RecurrentMode mode_from_name(const std::string& name) {
  if (name == "simple") return RecurrentMode::simple;
  if (name == "gated") return RecurrentMode::gated;
  fail(ErrorCode::CorruptCheckpoint, "unknown recurrent mode '" + name + "'");
}

json model_config_to_json(const ModelConfig& c) {
  return {{"input_dim", c.input_dim},
          {"conv_filters", c.conv_filters},
          {"conv_kernel", c.conv_kernel},
          {"recurrent_mode", mode_name(c.recurrent_mode)},
          {"hidden_dim", c.hidden_dim},
          {"seed", c.seed}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.conv_filters = j.at("conv_filters").get<std::size_t>();
  c.conv_kernel = j.at("conv_kernel").get<std::size_t>();
  c.recurrent_mode = mode_from_name(j.at("recurrent_mode").get<std::string>());
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"shuffle_seed", c.shuffle_seed},
          {"clip_eps", c.clip_eps}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.eps = j.at("eps").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.shuffle_seed = j.at("shuffle_seed").get<std::uint64_t>();
  c.clip_eps = j.at("clip_eps").get<double>();
  return c;
}

json tensors_to_json(const ElaiModel& m) {
  json rec = json::array();
  for (const auto& block : m.recurrent.blocks) {
    rec.push_back({{"w_x", matrix_to_json(block.w_x)},
                   {"w_h", matrix_to_json(block.w_h)},
                   {"b", block.b}});
  }
  return {{"conv_w", matrix_to_json(m.conv.w)},
          {"conv_b", m.conv.b},
          {"recurrent", std::move(rec)},
          {"attention_w_a", m.attention.w_a},
          {"head_w_o", matrix_to_json(m.head.w_o)},
          {"head_b_o", m.head.b_o}};
}

void tensors_from_json(const json& j, ElaiModel& m) {
  m.conv.w = matrix_from_json(j.at("conv_w"));
  m.conv.b = j.at("conv_b").get<std::vector<double>>();
  m.recurrent.mode = m.config.recurrent_mode;
  m.recurrent.blocks.clear();
  for (const auto& bj : j.at("recurrent")) {
    GateBlock block;
    block.w_x = matrix_from_json(bj.at("w_x"));
    block.w_h = matrix_from_json(bj.at("w_h"));
    block.b = bj.at("b").get<std::vector<double>>();
    m.recurrent.blocks.push_back(std::move(block));
  }
  m.attention.w_a = j.at("attention_w_a").get<std::vector<double>>();
  m.head.w_o = matrix_from_json(j.at("head_w_o"));
  m.head.b_o = j.at("head_b_o").get<std::vector<double>>();
}

json norm_to_json(const NormStats& s) {
  return {{"mean", s.mean},
          {"std_dev", s.std_dev},
          {"constant", std::vector<int>(s.constant.begin(), s.constant.end())}};
}

NormStats norm_from_json(const json& j) {
  NormStats s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.std_dev = j.at("std_dev").get<std::vector<double>>();
  for (int v : j.at("constant").get<std::vector<int>>()) s.constant.push_back(v != 0);
  return s;
}

json projection_to_json(const Projection& p) {
  json out = {{"w", matrix_to_json(p.w)},
              {"mode", p.mode == ProjectionMode::pca ? "pca" : "fisher"},
              {"explained", p.explained},
              {"eigenvalues", p.eigenvalues}};
  if (p.scatter) {
    out["scatter_within"] = matrix_to_json(p.scatter->first);
    out["scatter_between"] = matrix_to_json(p.scatter->second);
  }
  return out;
}

Projection projection_from_json(const json& j) {
  Projection p;
  p.w = matrix_from_json(j.at("w"));
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "pca") {
    p.mode = ProjectionMode::pca;
  } else if (mode == "fisher") {
    p.mode = ProjectionMode::fisher;
  } else {
    fail(ErrorCode::CorruptCheckpoint, "unknown projection mode '" + mode + "'");
  }
  p.explained = j.at("explained").get<std::vector<double>>();
  p.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  if (j.contains("scatter_within")) {
    p.scatter = std::make_pair(matrix_from_json(j.at("scatter_within")),
                               matrix_from_json(j.at("scatter_between")));
  }
  return p;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json j;
  j["version"] = ckpt.version;
  j["config"] = model_config_to_json(ckpt.model.config);
  j["tensors"] = tensors_to_json(ckpt.model);
  j["norm_stats"] = ckpt.norm ? norm_to_json(*ckpt.norm) : json(nullptr);
  j["projection"] = ckpt.projection ? projection_to_json(*ckpt.projection) : json(nullptr);
  j["selected_features"] =
      ckpt.selected_features ? json(*ckpt.selected_features) : json(nullptr);
  j["input_features"] = ckpt.input_features;
  j["train_config"] = train_config_to_json(ckpt.train_config);
  j["final_metrics"] = ckpt.final_metrics;
  j["pipeline_config"] = ckpt.pipeline_config;
  return j.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptCheckpoint, e.what());
  }
  if (!j.is_object() || !j.contains("version") || !j.at("version").is_number_integer()) {
    fail(ErrorCode::CorruptCheckpoint, "missing version field");
  }
  const int version = j.at("version").get<int>();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version) +
                                         ", expected " + std::to_string(kCheckpointVersion));
  }

  try {
    Checkpoint ckpt;
    ckpt.version = version;
    ckpt.model.config = model_config_from_json(j.at("config"));
    validate(ckpt.model.config);
    tensors_from_json(j.at("tensors"), ckpt.model);
    if (!j.at("norm_stats").is_null()) ckpt.norm = norm_from_json(j.at("norm_stats"));
    if (!j.at("projection").is_null()) {
      ckpt.projection = projection_from_json(j.at("projection"));
    }
    if (!j.at("selected_features").is_null()) {
      ckpt.selected_features = j.at("selected_features").get<std::vector<std::size_t>>();
    }
    ckpt.input_features = j.at("input_features").get<std::vector<std::string>>();
    ckpt.train_config = train_config_from_json(j.at("train_config"));
    ckpt.final_metrics = j.at("final_metrics").get<std::map<std::string, double>>();
    ckpt.pipeline_config = j.at("pipeline_config");
    return ckpt;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorCode::CorruptCheckpoint, e.what());
  }
}

std::size_t checkpoint_size_bytes(const Checkpoint& ckpt) {
  return checkpoint_to_json(ckpt).size();
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) fail(ErrorCode::IoFailure, "cannot write " + path);
  const std::string text = checkpoint_to_json(ckpt);
  file.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!file) fail(ErrorCode::IoFailure, "short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) fail(ErrorCode::IoFailure, "cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  return checkpoint_from_json(text);
}

std::size_t model_size_bytes(const ElaiModel& model) {
  Checkpoint ckpt;
  ckpt.model = model;
  return checkpoint_size_bytes(ckpt);
}

}  // namespace elai
