#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "elai/linalg.hpp"

namespace elai {

enum class RecurrentMode { simple, gated };

struct ModelConfig {
  std::size_t input_dim = 4;     // k: model input length
  std::size_t conv_filters = 4;  // F
  std::size_t conv_kernel = 3;   // k_c, valid convolution, stride 1
  RecurrentMode recurrent_mode = RecurrentMode::gated;
  std::size_t hidden_dim = 8;  // H
  std::uint64_t seed = 7;

  /// T = k - k_c + 1
  std::size_t seq_len() const { return input_dim - conv_kernel + 1; }
};

void validate(const ModelConfig& config);

struct ConvLayer {
  Matrix w;               // F x k_c
  std::vector<double> b;  // F
};

struct GateBlock {
  Matrix w_x;             // H x F
  Matrix w_h;             // H x H
  std::vector<double> b;  // H
};

/// simple: one block, h_t = tanh(W_x x_t + W_h h_{t-1} + b).
/// gated: four blocks (input, forget, output, candidate) in the standard
/// LSTM recurrence with sigmoid gates and tanh squashing; h_0 = c_0 = 0.
struct RecurrentLayer {
  RecurrentMode mode = RecurrentMode::gated;
  std::vector<GateBlock> blocks;
};

inline constexpr std::size_t kGateInput = 0;
inline constexpr std::size_t kGateForget = 1;
inline constexpr std::size_t kGateOutput = 2;
inline constexpr std::size_t kGateCandidate = 3;

struct AttentionLayer {
  std::vector<double> w_a;  // H, scores one hidden state per step
};

struct OutputHead {
  Matrix w_o;               // 2 x H
  std::vector<double> b_o;  // 2
};

struct ElaiModel {
  ModelConfig config;
  ConvLayer conv;
  RecurrentLayer recurrent;
  AttentionLayer attention;
  OutputHead head;
};

/// Every intermediate value of one forward pass, sufficient for exact
/// reverse-mode differentiation and attention inspection.
struct ForwardTrace {
  std::vector<double> input;  // k
  Matrix conv_pre;            // T x F
  Matrix conv_act;            // T x F
  Matrix hidden;              // T x H
  // gated mode only:
  Matrix cell;       // T x H
  Matrix tanh_cell;  // T x H
  Matrix gate_i, gate_f, gate_o, gate_g;
  std::vector<double> scores;   // T
  std::vector<double> alpha;    // T, sums to 1
  std::vector<double> context;  // H
  std::array<double, 2> logits{};
  double y_hat = 0.0;  // class-1 probability
};

/// Glorot-uniform weights (per tensor, +-sqrt(6/(fan_in+fan_out))), zero
/// biases, deterministic for a given seed.
ElaiModel init_model(const ModelConfig& config);

struct ConvOut {
  Matrix pre;  // T x F
  Matrix act;  // T x F, ReLU(pre)
};

ConvOut conv_forward(const ConvLayer& layer, std::span<const double> z);

struct RecurrentOut {
  Matrix hidden;  // T x H
  // gated mode only:
  Matrix cell, tanh_cell;
  Matrix gate_i, gate_f, gate_o, gate_g;
};

RecurrentOut recurrent_forward(const RecurrentLayer& layer, const Matrix& seq);

struct AttentionOut {
  std::vector<double> scores;   // T
  std::vector<double> alpha;    // softmax(scores), max-subtracted
  std::vector<double> context;  // sum_t alpha_t h_t
};

AttentionOut attention_forward(const AttentionLayer& layer, const Matrix& hidden);

struct HeadOut {
  std::array<double, 2> logits;
  double y_hat;  // softmax(logits)[1], max-subtracted
};

HeadOut head_forward(const OutputHead& head, std::span<const double> context);

ForwardTrace forward(const ElaiModel& model, std::span<const double> z);

/// Parameter-shaped gradient container.
struct Gradients {
  ConvLayer conv;
  RecurrentLayer recurrent;
  AttentionLayer attention;
  OutputHead head;
};

Gradients zero_gradients(const ModelConfig& config);
void accumulate(Gradients& into, const Gradients& from);
void scale(Gradients& grads, double factor);

/// d(loss)/d(parameter) for the single-sample binary cross entropy at the
/// traced input, exact reverse-mode through all four layers.
Gradients backward(const ElaiModel& model, const ForwardTrace& trace, int label);

/// Flat views over every parameter tensor in a fixed order (conv W, conv b,
/// per-block W_x/W_h/b, attention, head W, head b). Gradients share the order.
std::vector<std::span<double>> param_views(ElaiModel& model);
std::vector<std::span<const double>> param_views(const ElaiModel& model);
std::vector<std::span<double>> param_views(Gradients& grads);
std::vector<std::span<const double>> param_views(const Gradients& grads);

std::size_t param_count(const ElaiModel& model);

/// Byte length of the model serialized as a checkpoint document.
std::size_t model_size_bytes(const ElaiModel& model);

}  // namespace elai
