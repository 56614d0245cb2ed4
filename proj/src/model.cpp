#include "elai/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "elai/errors.hpp"
#include "elai/rng.hpp"

namespace elai {

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

void glorot_fill(Matrix& w, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (double& v : w.data()) v = rng.uniform(-bound, bound);
}

void glorot_fill(std::vector<double>& w, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + 1));
  for (double& v : w) v = rng.uniform(-bound, bound);
}

}  // namespace

void validate(const ModelConfig& config) {
  if (config.input_dim < 1 || config.conv_filters < 1 || config.conv_kernel < 1 ||
      config.hidden_dim < 1) {
    fail(ErrorCode::BadConfig, "all model dimensions must be >= 1");
  }
  if (config.conv_kernel > config.input_dim) {
    fail(ErrorCode::BadConfig,
         "conv_kernel " + std::to_string(config.conv_kernel) + " exceeds input_dim " +
             std::to_string(config.input_dim));
  }
}

ElaiModel init_model(const ModelConfig& config) {
  validate(config);
  Rng rng(config.seed);

  ElaiModel m;
  m.config = config;

  m.conv.w = Matrix(config.conv_filters, config.conv_kernel);
  glorot_fill(m.conv.w, rng);
  m.conv.b.assign(config.conv_filters, 0.0);

  m.recurrent.mode = config.recurrent_mode;
  const std::size_t n_blocks = config.recurrent_mode == RecurrentMode::gated ? 4 : 1;
  m.recurrent.blocks.resize(n_blocks);
  for (auto& block : m.recurrent.blocks) {
    block.w_x = Matrix(config.hidden_dim, config.conv_filters);
    glorot_fill(block.w_x, rng);
    block.w_h = Matrix(config.hidden_dim, config.hidden_dim);
    glorot_fill(block.w_h, rng);
    block.b.assign(config.hidden_dim, 0.0);
  }

  m.attention.w_a.resize(config.hidden_dim);
  glorot_fill(m.attention.w_a, config.hidden_dim, rng);

  m.head.w_o = Matrix(2, config.hidden_dim);
  glorot_fill(m.head.w_o, rng);
  m.head.b_o.assign(2, 0.0);
  return m;
}

ConvOut conv_forward(const ConvLayer& layer, std::span<const double> z) {
  const std::size_t k_c = layer.w.cols();
  const std::size_t n_filters = layer.w.rows();
  if (z.size() < k_c) {
    fail(ErrorCode::DimensionMismatch, "conv_forward: input shorter than kernel");
  }
  const std::size_t t_len = z.size() - k_c + 1;

  ConvOut out{Matrix(t_len, n_filters), Matrix(t_len, n_filters)};
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t f = 0; f < n_filters; ++f) {
      double acc = layer.b[f];
      for (std::size_t m = 0; m < k_c; ++m) acc += layer.w(f, m) * z[t + m];
      out.pre(t, f) = acc;
      out.act(t, f) = acc > 0.0 ? acc : 0.0;
    }
  }
  return out;
}

RecurrentOut recurrent_forward(const RecurrentLayer& layer, const Matrix& seq) {
  const std::size_t t_len = seq.rows();
  const std::size_t hidden = layer.blocks.at(0).w_h.rows();
  if (layer.blocks[0].w_x.cols() != seq.cols()) {
    fail(ErrorCode::DimensionMismatch, "recurrent_forward: input width mismatch");
  }

  RecurrentOut out;
  out.hidden = Matrix(t_len, hidden);

  if (layer.mode == RecurrentMode::simple) {
    const GateBlock& blk = layer.blocks[0];
    std::vector<double> h_prev(hidden, 0.0);
    for (std::size_t t = 0; t < t_len; ++t) {
      for (std::size_t i = 0; i < hidden; ++i) {
        double acc = blk.b[i];
        for (std::size_t j = 0; j < seq.cols(); ++j) acc += blk.w_x(i, j) * seq(t, j);
        for (std::size_t j = 0; j < hidden; ++j) acc += blk.w_h(i, j) * h_prev[j];
        out.hidden(t, i) = std::tanh(acc);
      }
      for (std::size_t i = 0; i < hidden; ++i) h_prev[i] = out.hidden(t, i);
    }
    return out;
  }

  if (layer.blocks.size() != 4) {
    fail(ErrorCode::ShapeMismatch, "gated layer needs 4 gate blocks");
  }
  out.cell = Matrix(t_len, hidden);
  out.tanh_cell = Matrix(t_len, hidden);
  out.gate_i = Matrix(t_len, hidden);
  out.gate_f = Matrix(t_len, hidden);
  out.gate_o = Matrix(t_len, hidden);
  out.gate_g = Matrix(t_len, hidden);

  std::vector<double> h_prev(hidden, 0.0), c_prev(hidden, 0.0);
  std::vector<double> pre(hidden, 0.0);
  for (std::size_t t = 0; t < t_len; ++t) {
    Matrix* gate_out[4] = {&out.gate_i, &out.gate_f, &out.gate_o, &out.gate_g};
    for (std::size_t g = 0; g < 4; ++g) {
      const GateBlock& blk = layer.blocks[g];
      for (std::size_t i = 0; i < hidden; ++i) {
        double acc = blk.b[i];
        for (std::size_t j = 0; j < seq.cols(); ++j) acc += blk.w_x(i, j) * seq(t, j);
        for (std::size_t j = 0; j < hidden; ++j) acc += blk.w_h(i, j) * h_prev[j];
        pre[i] = acc;
      }
      for (std::size_t i = 0; i < hidden; ++i) {
        (*gate_out[g])(t, i) = g == kGateCandidate ? std::tanh(pre[i]) : sigmoid(pre[i]);
      }
    }
    for (std::size_t i = 0; i < hidden; ++i) {
      const double c = out.gate_f(t, i) * c_prev[i] + out.gate_i(t, i) * out.gate_g(t, i);
      out.cell(t, i) = c;
      out.tanh_cell(t, i) = std::tanh(c);
      out.hidden(t, i) = out.gate_o(t, i) * out.tanh_cell(t, i);
    }
    for (std::size_t i = 0; i < hidden; ++i) {
      h_prev[i] = out.hidden(t, i);
      c_prev[i] = out.cell(t, i);
    }
  }
  return out;
}

AttentionOut attention_forward(const AttentionLayer& layer, const Matrix& hidden) {
  const std::size_t t_len = hidden.rows();
  const std::size_t h_dim = hidden.cols();
  if (layer.w_a.size() != h_dim) {
    fail(ErrorCode::DimensionMismatch, "attention_forward: scoring vector width mismatch");
  }

  AttentionOut out;
  out.scores.resize(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h_dim; ++i) acc += layer.w_a[i] * hidden(t, i);
    out.scores[t] = acc;
  }

  double max_score = out.scores[0];
  for (double s : out.scores) max_score = std::max(max_score, s);
  out.alpha.resize(t_len);
  double total = 0.0;
  for (std::size_t t = 0; t < t_len; ++t) {
    out.alpha[t] = std::exp(out.scores[t] - max_score);
    total += out.alpha[t];
  }
  for (double& a : out.alpha) a /= total;

  out.context.assign(h_dim, 0.0);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t i = 0; i < h_dim; ++i) out.context[i] += out.alpha[t] * hidden(t, i);
  }
  return out;
}

HeadOut head_forward(const OutputHead& head, std::span<const double> context) {
  if (head.w_o.cols() != context.size()) {
    fail(ErrorCode::DimensionMismatch, "head_forward: context width mismatch");
  }
  HeadOut out;
  for (std::size_t c = 0; c < 2; ++c) {
    double acc = head.b_o[c];
    for (std::size_t i = 0; i < context.size(); ++i) acc += head.w_o(c, i) * context[i];
    out.logits[c] = acc;
  }
  const double m = std::max(out.logits[0], out.logits[1]);
  const double e0 = std::exp(out.logits[0] - m);
  const double e1 = std::exp(out.logits[1] - m);
  out.y_hat = e1 / (e0 + e1);
  return out;
}

ForwardTrace forward(const ElaiModel& model, std::span<const double> z) {
  if (z.size() != model.config.input_dim) {
    fail(ErrorCode::DimensionMismatch, "forward: input length " + std::to_string(z.size()) +
                                           " != " + std::to_string(model.config.input_dim));
  }

  ForwardTrace trace;
  trace.input.assign(z.begin(), z.end());

  ConvOut conv = conv_forward(model.conv, z);
  trace.conv_pre = std::move(conv.pre);
  trace.conv_act = std::move(conv.act);

  RecurrentOut rec = recurrent_forward(model.recurrent, trace.conv_act);
  trace.hidden = std::move(rec.hidden);
  trace.cell = std::move(rec.cell);
  trace.tanh_cell = std::move(rec.tanh_cell);
  trace.gate_i = std::move(rec.gate_i);
  trace.gate_f = std::move(rec.gate_f);
  trace.gate_o = std::move(rec.gate_o);
  trace.gate_g = std::move(rec.gate_g);

  AttentionOut att = attention_forward(model.attention, trace.hidden);
  trace.scores = std::move(att.scores);
  trace.alpha = std::move(att.alpha);
  trace.context = std::move(att.context);

  HeadOut head = head_forward(model.head, trace.context);
  trace.logits = head.logits;
  trace.y_hat = head.y_hat;

  // Normalization invariant of the attention weights, checked on every pass.
  // Non-finite values pass through so numeric blowups surface as a loss
  // failure in the training loop rather than here.
  double alpha_sum = 0.0;
  for (double a : trace.alpha) alpha_sum += a;
  if (std::isfinite(alpha_sum) && std::abs(alpha_sum - 1.0) > 1e-12) {
    throw std::logic_error("attention weights do not sum to 1");
  }
  return trace;
}

Gradients zero_gradients(const ModelConfig& config) {
  Gradients g;
  g.conv.w = Matrix(config.conv_filters, config.conv_kernel);
  g.conv.b.assign(config.conv_filters, 0.0);
  g.recurrent.mode = config.recurrent_mode;
  const std::size_t n_blocks = config.recurrent_mode == RecurrentMode::gated ? 4 : 1;
  g.recurrent.blocks.resize(n_blocks);
  for (auto& block : g.recurrent.blocks) {
    block.w_x = Matrix(config.hidden_dim, config.conv_filters);
    block.w_h = Matrix(config.hidden_dim, config.hidden_dim);
    block.b.assign(config.hidden_dim, 0.0);
  }
  g.attention.w_a.assign(config.hidden_dim, 0.0);
  g.head.w_o = Matrix(2, config.hidden_dim);
  g.head.b_o.assign(2, 0.0);
  return g;
}

namespace {

template <class Model>
auto views_impl(Model& m) {
  using Span = std::conditional_t<std::is_const_v<Model>, std::span<const double>,
                                  std::span<double>>;
  std::vector<Span> out;
  out.push_back(Span(m.conv.w.data()));
  out.push_back(Span(m.conv.b));
  for (auto& block : m.recurrent.blocks) {
    out.push_back(Span(block.w_x.data()));
    out.push_back(Span(block.w_h.data()));
    out.push_back(Span(block.b));
  }
  out.push_back(Span(m.attention.w_a));
  out.push_back(Span(m.head.w_o.data()));
  out.push_back(Span(m.head.b_o));
  return out;
}

}  // namespace

std::vector<std::span<double>> param_views(ElaiModel& model) { return views_impl(model); }
std::vector<std::span<const double>> param_views(const ElaiModel& model) {
  return views_impl(model);
}
std::vector<std::span<double>> param_views(Gradients& grads) { return views_impl(grads); }
std::vector<std::span<const double>> param_views(const Gradients& grads) {
  return views_impl(grads);
}

void accumulate(Gradients& into, const Gradients& from) {
  auto dst = param_views(into);
  auto src = param_views(from);
  if (dst.size() != src.size()) fail(ErrorCode::ShapeMismatch, "gradient accumulate");
  for (std::size_t t = 0; t < dst.size(); ++t) {
    if (dst[t].size() != src[t].size()) fail(ErrorCode::ShapeMismatch, "gradient accumulate");
    for (std::size_t i = 0; i < dst[t].size(); ++i) dst[t][i] += src[t][i];
  }
}

void scale(Gradients& grads, double factor) {
  for (auto view : param_views(grads)) {
    for (double& v : view) v *= factor;
  }
}

std::size_t param_count(const ElaiModel& model) {
  std::size_t count = 0;
  for (auto view : param_views(model)) count += view.size();
  return count;
}

namespace {

void check_trace_shapes(const ElaiModel& model, const ForwardTrace& trace) {
  const auto& cfg = model.config;
  const std::size_t t_len = cfg.seq_len();
  bool ok = trace.input.size() == cfg.input_dim && trace.conv_pre.rows() == t_len &&
            trace.conv_pre.cols() == cfg.conv_filters && trace.hidden.rows() == t_len &&
            trace.hidden.cols() == cfg.hidden_dim && trace.alpha.size() == t_len &&
            trace.context.size() == cfg.hidden_dim;
  if (ok && cfg.recurrent_mode == RecurrentMode::gated) {
    ok = trace.cell.rows() == t_len && trace.cell.cols() == cfg.hidden_dim &&
         trace.gate_i.rows() == t_len && trace.gate_f.rows() == t_len &&
         trace.gate_o.rows() == t_len && trace.gate_g.rows() == t_len;
  }
  if (!ok) fail(ErrorCode::TraceMismatch, "trace shapes do not match the model config");
}

}  // namespace

Gradients backward(const ElaiModel& model, const ForwardTrace& trace, int label) {
  check_trace_shapes(model, trace);
  const auto& cfg = model.config;
  const std::size_t t_len = cfg.seq_len();
  const std::size_t h_dim = cfg.hidden_dim;
  const std::size_t n_filters = cfg.conv_filters;

  Gradients g = zero_gradients(cfg);

  // BCE through the two-class softmax collapses to (y_hat - y) on logit 1.
  const double delta = trace.y_hat - static_cast<double>(label);
  const std::array<double, 2> d_logits = {-delta, delta};

  // Output head.
  std::vector<double> d_context(h_dim, 0.0);
  for (std::size_t c = 0; c < 2; ++c) {
    g.head.b_o[c] = d_logits[c];
    for (std::size_t i = 0; i < h_dim; ++i) {
      g.head.w_o(c, i) = d_logits[c] * trace.context[i];
      d_context[i] += model.head.w_o(c, i) * d_logits[c];
    }
  }

  // Attention: c = sum_t alpha_t h_t, alpha = softmax(w_a . h_t).
  std::vector<double> d_alpha(t_len, 0.0);
  for (std::size_t t = 0; t < t_len; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h_dim; ++i) acc += d_context[i] * trace.hidden(t, i);
    d_alpha[t] = acc;
  }
  double weighted = 0.0;
  for (std::size_t t = 0; t < t_len; ++t) weighted += trace.alpha[t] * d_alpha[t];
  std::vector<double> d_scores(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    d_scores[t] = trace.alpha[t] * (d_alpha[t] - weighted);
  }
  Matrix d_hidden(t_len, h_dim);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t i = 0; i < h_dim; ++i) {
      g.attention.w_a[i] += d_scores[t] * trace.hidden(t, i);
      d_hidden(t, i) = trace.alpha[t] * d_context[i] + d_scores[t] * model.attention.w_a[i];
    }
  }

  // Recurrent layer, backwards through time. d_seq collects gradients w.r.t.
  // the conv activations feeding each step.
  Matrix d_seq(t_len, n_filters);

  if (cfg.recurrent_mode == RecurrentMode::simple) {
    const GateBlock& blk = model.recurrent.blocks[0];
    GateBlock& gblk = g.recurrent.blocks[0];
    std::vector<double> d_h_next(h_dim, 0.0);
    for (std::size_t tt = t_len; tt > 0; --tt) {
      const std::size_t t = tt - 1;
      std::vector<double> d_pre(h_dim);
      for (std::size_t i = 0; i < h_dim; ++i) {
        const double h = trace.hidden(t, i);
        d_pre[i] = (d_hidden(t, i) + d_h_next[i]) * (1.0 - h * h);
      }
      for (std::size_t i = 0; i < h_dim; ++i) {
        gblk.b[i] += d_pre[i];
        for (std::size_t j = 0; j < n_filters; ++j) {
          gblk.w_x(i, j) += d_pre[i] * trace.conv_act(t, j);
        }
        if (t > 0) {
          for (std::size_t j = 0; j < h_dim; ++j) {
            gblk.w_h(i, j) += d_pre[i] * trace.hidden(t - 1, j);
          }
        }
      }
      std::fill(d_h_next.begin(), d_h_next.end(), 0.0);
      for (std::size_t i = 0; i < h_dim; ++i) {
        for (std::size_t j = 0; j < h_dim; ++j) d_h_next[j] += blk.w_h(i, j) * d_pre[i];
      }
      for (std::size_t j = 0; j < n_filters; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < h_dim; ++i) acc += blk.w_x(i, j) * d_pre[i];
        d_seq(t, j) = acc;
      }
    }
  } else {
    std::vector<double> d_h_next(h_dim, 0.0), d_c_next(h_dim, 0.0);
    std::array<std::vector<double>, 4> d_gate_pre;
    for (auto& v : d_gate_pre) v.resize(h_dim);

    for (std::size_t tt = t_len; tt > 0; --tt) {
      const std::size_t t = tt - 1;
      for (std::size_t i = 0; i < h_dim; ++i) {
        const double dh = d_hidden(t, i) + d_h_next[i];
        const double tc = trace.tanh_cell(t, i);
        const double o = trace.gate_o(t, i);
        const double dc = d_c_next[i] + dh * o * (1.0 - tc * tc);
        const double gi = trace.gate_i(t, i);
        const double gf = trace.gate_f(t, i);
        const double gg = trace.gate_g(t, i);
        const double c_prev = t > 0 ? trace.cell(t - 1, i) : 0.0;

        d_gate_pre[kGateOutput][i] = dh * tc * o * (1.0 - o);
        d_gate_pre[kGateInput][i] = dc * gg * gi * (1.0 - gi);
        d_gate_pre[kGateForget][i] = dc * c_prev * gf * (1.0 - gf);
        d_gate_pre[kGateCandidate][i] = dc * gi * (1.0 - gg * gg);
        d_c_next[i] = dc * gf;
      }

      std::fill(d_h_next.begin(), d_h_next.end(), 0.0);
      std::fill(d_seq.row(t).begin(), d_seq.row(t).end(), 0.0);
      for (std::size_t gate = 0; gate < 4; ++gate) {
        const GateBlock& blk = model.recurrent.blocks[gate];
        GateBlock& gblk = g.recurrent.blocks[gate];
        const auto& d_pre = d_gate_pre[gate];
        for (std::size_t i = 0; i < h_dim; ++i) {
          gblk.b[i] += d_pre[i];
          for (std::size_t j = 0; j < n_filters; ++j) {
            gblk.w_x(i, j) += d_pre[i] * trace.conv_act(t, j);
            d_seq(t, j) += blk.w_x(i, j) * d_pre[i];
          }
          if (t > 0) {
            for (std::size_t j = 0; j < h_dim; ++j) {
              gblk.w_h(i, j) += d_pre[i] * trace.hidden(t - 1, j);
            }
          }
          for (std::size_t j = 0; j < h_dim; ++j) {
            d_h_next[j] += blk.w_h(i, j) * d_pre[i];
          }
        }
      }
    }
  }

  // Convolution: ReLU gates the pre-activation gradient.
  const std::size_t k_c = cfg.conv_kernel;
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t f = 0; f < n_filters; ++f) {
      if (trace.conv_pre(t, f) <= 0.0) continue;
      const double d_pre = d_seq(t, f);
      g.conv.b[f] += d_pre;
      for (std::size_t m = 0; m < k_c; ++m) {
        g.conv.w(f, m) += d_pre * trace.input[t + m];
      }
    }
  }
  return g;
}

}  // namespace elai
