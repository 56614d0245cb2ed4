#include <cmath>

#include <doctest.h>

#include "elai/dataset.hpp"
#include "elai/errors.hpp"
#include "elai/model.hpp"
#include "elai/rng.hpp"
#include "elai/training.hpp"
#include "test_util.hpp"

using namespace elai;

namespace {

ModelConfig tiny_config(std::uint64_t seed, RecurrentMode mode = RecurrentMode::gated) {
  ModelConfig cfg;
  cfg.input_dim = 4;
  cfg.conv_filters = 3;
  cfg.conv_kernel = 2;
  cfg.hidden_dim = 4;
  cfg.recurrent_mode = mode;
  cfg.seed = seed;
  return cfg;
}

Gradients constant_gradients(const ModelConfig& cfg, double value) {
  Gradients g = zero_gradients(cfg);
  for (auto view : param_views(g)) {
    for (double& v : view) v = value;
  }
  return g;
}

}  // namespace

TEST_CASE("bce_loss worked values") {
  CHECK(bce_loss(std::vector<double>{1.0 - 1e-7}, std::vector<int>{1}).sum < 1e-6);
  CHECK(bce_loss(std::vector<double>{0.5}, std::vector<int>{1}).sum ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const BceLoss two = bce_loss(std::vector<double>{0.9, 0.2}, std::vector<int>{1, 0});
  CHECK(two.sum == doctest::Approx(0.32850406697203605).epsilon(1e-12));
  CHECK(two.mean == doctest::Approx(two.sum / 2.0).epsilon(1e-15));

  // The clamp caps the loss even for an exact zero probability.
  CHECK(std::isfinite(bce_loss(std::vector<double>{0.0}, std::vector<int>{1}).sum));
  CHECK(bce_loss(std::vector<double>{0.3}, std::vector<int>{0}).sum >= 0.0);

  CHECK(test::error_code_of([] {
          bce_loss(std::vector<double>{0.5}, std::vector<int>{1, 0});
        }) == ErrorCode::LengthMismatch);
}

TEST_CASE("bce_grad closed forms and finite difference") {
  CHECK(bce_grad(0.5, 1) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(bce_grad(0.5, 0) == doctest::Approx(2.0).epsilon(1e-12));

  const double h = 1e-7;
  const double up = bce_loss(std::vector<double>{0.7 + h}, std::vector<int>{1}).sum;
  const double down = bce_loss(std::vector<double>{0.7 - h}, std::vector<int>{1}).sum;
  CHECK(std::abs((up - down) / (2 * h) - bce_grad(0.7, 1)) < 1e-6);
}

TEST_CASE("adam first step moves by about the learning rate against the sign") {
  const ModelConfig cfg = tiny_config(1);
  ElaiModel model = init_model(cfg);
  const ElaiModel before = model;
  AdamState state = init_adam(model);
  TrainConfig tc;
  tc.learning_rate = 0.05;

  adam_step(model, constant_gradients(cfg, 0.5), state, tc);
  CHECK(state.step == 1);
  const auto now = param_views(model);
  const auto old = param_views(before);
  for (std::size_t t = 0; t < now.size(); ++t) {
    for (std::size_t i = 0; i < now[t].size(); ++i) {
      CHECK(std::abs((now[t][i] - old[t][i]) + tc.learning_rate) < tc.learning_rate * 1e-6);
    }
  }
}

TEST_CASE("adam ignores zero gradients but still counts steps") {
  const ModelConfig cfg = tiny_config(2);
  ElaiModel model = init_model(cfg);
  const ElaiModel before = model;
  AdamState state = init_adam(model);
  TrainConfig tc;

  adam_step(model, zero_gradients(cfg), state, tc);
  adam_step(model, zero_gradients(cfg), state, tc);
  CHECK(state.step == 2);
  const auto now = param_views(model);
  const auto old = param_views(before);
  for (std::size_t t = 0; t < now.size(); ++t) {
    for (std::size_t i = 0; i < now[t].size(); ++i) CHECK(now[t][i] == old[t][i]);
  }
}

TEST_CASE("two adam steps under a constant gradient follow the scalar recursion") {
  const ModelConfig cfg = tiny_config(3);
  ElaiModel model = init_model(cfg);
  const double p0 = model.conv.w(0, 0);
  AdamState state = init_adam(model);
  TrainConfig tc;
  tc.learning_rate = 0.1;

  const Gradients ones = constant_gradients(cfg, 1.0);
  adam_step(model, ones, state, tc);
  adam_step(model, ones, state, tc);

  // Independent scalar recursion with the same hyperparameters.
  double m = 0.0, v = 0.0, p = p0;
  for (int t = 1; t <= 2; ++t) {
    m = tc.beta1 * m + (1 - tc.beta1) * 1.0;
    v = tc.beta2 * v + (1 - tc.beta2) * 1.0;
    const double m_hat = m / (1 - std::pow(tc.beta1, t));
    const double v_hat = v / (1 - std::pow(tc.beta2, t));
    p -= tc.learning_rate * m_hat / (std::sqrt(v_hat) + tc.eps);
  }
  CHECK(model.conv.w(0, 0) == doctest::Approx(p).epsilon(1e-15));
  CHECK(std::abs((p0 - model.conv.w(0, 0)) - 0.2) < 1e-6);
}

TEST_CASE("training separates the synthetic classes") {
  const Dataset ds = generate_synthetic({100, 100, 4, 6.0, 1.0, 1}, 8);
  const NormStats stats = fit_normalize(ds);
  const Dataset normed = apply_normalize(ds, stats);

  ElaiModel model = init_model(tiny_config(9));
  TrainConfig tc;
  tc.learning_rate = 0.01;
  tc.epochs = 200;
  const TrainHistory history = train(model, normed.x, normed.y, nullptr, nullptr, tc);
  REQUIRE(history.size() == 200);
  CHECK(history.back().mean_train_loss < history.front().mean_train_loss);

  std::size_t correct = 0;
  for (std::size_t i = 0; i < normed.n(); ++i) {
    const double p = forward(model, normed.x.row(i)).y_hat;
    correct += (p >= 0.5 ? 1 : 0) == normed.y[i] ? 1 : 0;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(normed.n()) >= 0.95);
}

TEST_CASE("zero epochs leave the model untouched") {
  const Dataset ds = generate_synthetic({10, 10, 4, 2.0, 1.0, 1}, 4);
  ElaiModel model = init_model(tiny_config(5));
  const ElaiModel before = model;
  TrainConfig tc;
  tc.epochs = 0;
  const TrainHistory history = train(model, ds.x, ds.y, nullptr, nullptr, tc);
  CHECK(history.empty());
  const auto now = param_views(model);
  const auto old = param_views(before);
  for (std::size_t t = 0; t < now.size(); ++t) {
    for (std::size_t i = 0; i < now[t].size(); ++i) CHECK(now[t][i] == old[t][i]);
  }
}

TEST_CASE("training is bit-for-bit deterministic given the seed triple") {
  const Dataset ds = generate_synthetic({30, 30, 4, 3.0, 1.0, 1}, 16);
  TrainConfig tc;
  tc.epochs = 5;
  tc.shuffle_seed = 77;

  ElaiModel a = init_model(tiny_config(6));
  ElaiModel b = init_model(tiny_config(6));
  train(a, ds.x, ds.y, nullptr, nullptr, tc);
  train(b, ds.x, ds.y, nullptr, nullptr, tc);
  const auto va = param_views(a);
  const auto vb = param_views(b);
  for (std::size_t t = 0; t < va.size(); ++t) {
    for (std::size_t i = 0; i < va[t].size(); ++i) CHECK(va[t][i] == vb[t][i]);
  }
}

TEST_CASE("a small step on one sample decreases its loss") {
  bool decreased = false;
  for (std::uint64_t seed = 1; seed <= 5 && !decreased; ++seed) {
    ElaiModel model = init_model(tiny_config(seed * 13));
    Rng rng(seed);
    std::vector<double> z(model.config.input_dim);
    for (double& v : z) v = rng.uniform(-2, 2);
    const int label = seed % 2 == 0 ? 1 : 0;

    const ForwardTrace trace = forward(model, z);
    const double before = bce_loss({&trace.y_hat, 1}, {&label, 1}).sum;
    const Gradients grads = backward(model, trace, label);

    AdamState state = init_adam(model);
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    adam_step(model, grads, state, tc);

    const ForwardTrace after_trace = forward(model, z);
    const double after = bce_loss({&after_trace.y_hat, 1}, {&label, 1}).sum;
    decreased = after < before;
  }
  CHECK(decreased);
}

TEST_CASE("one training batch applies the mean of the per-sample gradients") {
  const ModelConfig cfg = tiny_config(42);
  const Dataset ds = generate_synthetic({2, 2, 4, 2.0, 1.0, 1}, 21);
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 4;
  tc.shuffle_seed = 5;

  ElaiModel trained = init_model(cfg);
  train(trained, ds.x, ds.y, nullptr, nullptr, tc);

  // Replay by hand: same shuffle, averaged gradients, one adam step.
  ElaiModel manual = init_model(cfg);
  std::vector<std::size_t> order = {0, 1, 2, 3};
  Rng rng(tc.shuffle_seed);
  shuffle(order, rng);
  Gradients sum = zero_gradients(cfg);
  for (std::size_t idx : order) {
    const ForwardTrace trace = forward(manual, ds.x.row(idx));
    accumulate(sum, backward(manual, trace, ds.y[idx]));
  }
  scale(sum, 0.25);
  AdamState state = init_adam(manual);
  adam_step(manual, sum, state, tc);

  const auto va = param_views(trained);
  const auto vb = param_views(manual);
  for (std::size_t t = 0; t < va.size(); ++t) {
    for (std::size_t i = 0; i < va[t].size(); ++i) CHECK(va[t][i] == vb[t][i]);
  }
}

TEST_CASE("validation accuracy lands in the history") {
  const Dataset ds = generate_synthetic({40, 40, 4, 6.0, 1.0, 1}, 33);
  TrainConfig tc;
  tc.epochs = 3;
  ElaiModel model = init_model(tiny_config(12));
  const TrainHistory history = train(model, ds.x, ds.y, &ds.x, &ds.y, tc);
  REQUIRE(history.size() == 3);
  for (const auto& epoch : history) {
    REQUIRE(epoch.val_accuracy.has_value());
    CHECK(*epoch.val_accuracy >= 0.0);
    CHECK(*epoch.val_accuracy <= 1.0);
  }
}

TEST_CASE("checkpoint round trip is exact") {
  test::TempDir dir;
  const Dataset ds = generate_synthetic({20, 20, 4, 4.0, 1.0, 1}, 2);
  ElaiModel model = init_model(tiny_config(7, RecurrentMode::simple));
  TrainConfig tc;
  tc.epochs = 2;
  train(model, ds.x, ds.y, nullptr, nullptr, tc);

  Checkpoint ckpt;
  ckpt.model = model;
  ckpt.norm = fit_normalize(ds);
  ckpt.train_config = tc;
  ckpt.input_features = ds.schema.feature_names;
  ckpt.final_metrics["mean_train_loss"] = 0.25;

  const std::string path = dir.file("model.json");
  save_checkpoint(ckpt, path);
  const Checkpoint back = load_checkpoint(path);

  Rng rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(model.config.input_dim);
    for (double& v : z) v = rng.uniform(-4, 4);
    CHECK(forward(model, z).y_hat == forward(back.model, z).y_hat);
  }
  CHECK(back.norm->mean == ckpt.norm->mean);
  CHECK(back.final_metrics.at("mean_train_loss") == 0.25);

  // Saving what was loaded reproduces the bytes.
  const std::string again = dir.file("model2.json");
  save_checkpoint(back, again);
  CHECK(test::read_text(path) == test::read_text(again));
  CHECK(checkpoint_size_bytes(ckpt) == test::read_text(path).size());

  SUBCASE("truncated file is corrupt") {
    const std::string text = test::read_text(path);
    test::write_text(path, text.substr(0, text.size() / 2));
    CHECK(test::error_code_of([&] { load_checkpoint(path); }) ==
          ErrorCode::CorruptCheckpoint);
  }
  SUBCASE("future version is rejected") {
    auto j = nlohmann::json::parse(test::read_text(path));
    j["version"] = 999;
    test::write_text(path, j.dump());
    CHECK(test::error_code_of([&] { load_checkpoint(path); }) == ErrorCode::VersionMismatch);
  }
  SUBCASE("missing file is an io failure") {
    CHECK(test::error_code_of([&] { load_checkpoint(dir.file("missing.json")); }) ==
          ErrorCode::IoFailure);
  }
  SUBCASE("non-finite loss aborts training") {
    ElaiModel doomed = init_model(tiny_config(8));
    for (auto view : param_views(doomed)) {
      for (double& v : view) v = 1e308;
    }
    TrainConfig bad_tc;
    bad_tc.epochs = 1;
    CHECK(test::error_code_of([&] {
            train(doomed, ds.x, ds.y, nullptr, nullptr, bad_tc);
          }) == ErrorCode::NonFiniteLoss);
  }
  SUBCASE("config validation") {
    TrainConfig bad = tc;
    bad.batch_size = 0;
    CHECK(test::error_code_of([&] { validate(bad); }) == ErrorCode::BadConfig);
    bad = tc;
    bad.learning_rate = 0.0;
    CHECK(test::error_code_of([&] { validate(bad); }) == ErrorCode::BadConfig);
  }
}
