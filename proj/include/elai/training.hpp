#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "elai/dataset.hpp"
#include "elai/features.hpp"
#include "elai/model.hpp"

namespace elai {

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::uint64_t shuffle_seed = 11;
  double clip_eps = 1e-7;  // probability clamp before logs
};

void validate(const TrainConfig& config);

struct BceLoss {
  double sum;   // -sum_i [y log y_hat + (1-y) log(1-y_hat)]
  double mean;  // sum / n, the batch-size-independent view
};

BceLoss bce_loss(std::span<const double> y_hat, std::span<const int> y,
                 double clip_eps = 1e-7);

/// d loss / d y_hat at a single sample: -y/y_hat + (1-y)/(1-y_hat).
double bce_grad(double y_hat, int y, double clip_eps = 1e-7);

struct AdamState {
  std::vector<std::vector<double>> m;  // first moments, param_views order
  std::vector<std::vector<double>> v;  // second moments
  long step = 0;
};

AdamState init_adam(const ElaiModel& model);

void adam_step(ElaiModel& model, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg);

struct EpochStats {
  double mean_train_loss = 0.0;
  std::optional<double> val_accuracy;
};

using TrainHistory = std::vector<EpochStats>;

/// Seeded-shuffle mini-batch training; per-batch gradients are averaged over
/// the batch before one Adam step. Rows of x must already be in model input
/// space. Deterministic for a fixed (init, shuffle) seed pair.
TrainHistory train(ElaiModel& model, const Matrix& x, const std::vector<int>& y,
                   const Matrix* val_x, const std::vector<int>* val_y,
                   const TrainConfig& cfg);

inline constexpr int kCheckpointVersion = 1;

/// Everything needed to reload and re-run a fitted pipeline. Serialized as a
/// single JSON document with sorted keys and shortest round-trip decimals, so
/// save -> load -> save is byte-identical.
struct Checkpoint {
  int version = kCheckpointVersion;
  ElaiModel model;
  std::optional<NormStats> norm;
  std::optional<Projection> projection;
  std::optional<std::vector<std::size_t>> selected_features;  // ig-topk column indices
  std::vector<std::string> input_features;  // raw columns the transform expects
  TrainConfig train_config;
  std::map<std::string, double> final_metrics;
  nlohmann::json pipeline_config;  // opaque echo of the driving config
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

/// = checkpoint_to_json(ckpt).size(); save_checkpoint writes exactly these
/// bytes, so the on-disk length matches.
std::size_t checkpoint_size_bytes(const Checkpoint& ckpt);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace elai
