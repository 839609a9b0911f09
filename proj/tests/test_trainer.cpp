#include "audiorank/trainer.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>

#include "test_util.hpp"

using namespace audiorank;
using testutil::expect_error;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("audiorank_test_" + name);
}

TrainingSet small_synthetic_training_set(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_clusters = 4;
  spec.items_per_cluster = 24;
  spec.d_audio = 12;
  spec.d_text = 16;
  spec.noise_sigma = 0.05;
  spec.seed = seed;
  const SyntheticDataset data = generate_synthetic(spec);
  return make_training_set(data.manifest, data.audio_bank, data.caption_bank);
}

}  // namespace

TEST_CASE("make_batches is a reproducible permutation chunker") {
  const auto batches_a = make_batches(6, 2, 42, 0);
  const auto batches_b = make_batches(6, 2, 42, 0);
  CHECK(batches_a.size() == 3);
  CHECK(batches_a == batches_b);

  const auto other_epoch = make_batches(6, 2, 42, 1);
  CHECK(batches_a != other_epoch);  // streams split per epoch

  std::set<std::size_t> seen;
  for (const auto& batch : batches_a) {
    CHECK(batch.size() == 2);
    for (std::size_t idx : batch) {
      CHECK(idx < 6);
      CHECK(seen.insert(idx).second);
    }
  }
  CHECK(seen.size() == 6);
}

TEST_CASE("make_batches drops a small remainder") {
  const auto batches = make_batches(7, 2, 1, 3);
  CHECK(batches.size() == 3);
  std::set<std::size_t> seen;
  for (const auto& batch : batches) {
    for (std::size_t idx : batch) CHECK(seen.insert(idx).second);
  }
  CHECK(seen.size() == 6);  // one of seven items skipped this epoch

  expect_error(errc::batch_too_large, [] { make_batches(4, 5, 0, 0); });
}

TEST_CASE("cosine_annealed_lr endpoints and midpoint") {
  CHECK(cosine_annealed_lr(0, 100, 2e-5, 1e-7) == 2e-5);
  CHECK(cosine_annealed_lr(100, 100, 2e-5, 1e-7) == 1e-7);
  CHECK(cosine_annealed_lr(50, 100, 2e-5, 1e-7) ==
        doctest::Approx(1.005e-5).epsilon(1e-12));
  expect_error(errc::step_out_of_range, [] { cosine_annealed_lr(5, 4, 1.0, 0.1); });
  expect_error(errc::step_out_of_range, [] { cosine_annealed_lr(0, 0, 1.0, 0.1); });
}

TEST_CASE("cosine schedule is non-increasing and bounded") {
  double prev = 2e-5;
  for (std::size_t step = 0; step <= 400; ++step) {
    const double lr = cosine_annealed_lr(step, 400, 2e-5, 1e-7);
    CHECK(lr <= prev);
    CHECK(lr >= 1e-7);
    CHECK(lr <= 2e-5);
    prev = lr;
  }
}

TEST_CASE("adam first step matches the hand-derived value") {
  std::vector<double> params{0.0};
  std::vector<double> grads{1.0};
  std::vector<double> m{0.0}, v{0.0};
  adam_update(params, grads, m, v, 1, 0.001, AdamConfig{});
  // m_hat = v_hat = 1 at t = 1, so the delta is -lr / (1 + eps).
  CHECK(params[0] == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam with zero gradients from a zero state is a no-op") {
  std::vector<double> params{0.4, -0.7};
  const std::vector<double> before = params;
  std::vector<double> grads{0.0, 0.0};
  std::vector<double> m(2, 0.0), v(2, 0.0);
  for (std::size_t t = 1; t <= 5; ++t) {
    adam_update(params, grads, m, v, t, 0.01, AdamConfig{});
  }
  CHECK(params == before);

  std::vector<double> bad{std::numeric_limits<double>::quiet_NaN(), 0.0};
  expect_error(errc::non_finite_gradient,
               [&] { adam_update(params, bad, m, v, 1, 0.01, AdamConfig{}); });
}

TEST_CASE("TrainConfig validation") {
  TrainConfig config;
  CHECK_NOTHROW(config.validate());
  config.lr_max = 0.0;
  expect_error(errc::invalid_config, [&] { config.validate(); });
  config = TrainConfig{};
  config.batch_size = 1;
  expect_error(errc::invalid_config, [&] { config.validate(); });
  config = TrainConfig{};
  config.lr_min = 0.0;
  expect_error(errc::invalid_config, [&] { config.validate(); });
}

TEST_CASE("training reduces the loss on a learnable synthetic set") {
  const TrainingSet data = small_synthetic_training_set(5);
  TrainConfig config;
  config.batch_size = 8;
  config.epochs = 2;
  config.seed = 17;
  config.d_hidden = 16;
  config.d_out = 8;
  // Large steps so two epochs show movement on the smoke check.
  config.lr_max = 1e-3;
  config.lr_min = 1e-5;
  const auto [model, history] = train(data, config);
  REQUIRE(history.mean_loss.size() == 2);
  CHECK(history.mean_loss[1] < history.mean_loss[0]);
  CHECK(history.lr.size() == 2);
  CHECK(history.seconds.size() == 2);
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
  const TrainingSet data = small_synthetic_training_set(6);
  TrainConfig config;
  config.batch_size = 8;
  config.epochs = 2;
  config.seed = 3;
  config.d_hidden = 8;
  config.d_out = 8;
  const auto [model_a, history_a] = train(data, config);
  const auto [model_b, history_b] = train(data, config);
  CHECK(model_a.audio_head.w1.values() == model_b.audio_head.w1.values());
  CHECK(model_a.text_head.w2.values() == model_b.text_head.w2.values());
  CHECK(model_a.audio_head.b2 == model_b.audio_head.b2);
  CHECK(history_a.mean_loss == history_b.mean_loss);
  CHECK(history_a.lr == history_b.lr);
}

TEST_CASE("every epoch consumes each item at most once") {
  const TrainingSet data = small_synthetic_training_set(7);
  for (std::size_t epoch = 0; epoch < 3; ++epoch) {
    const auto batches = make_batches(data.size(), 10, 99, epoch);
    std::set<std::size_t> seen;
    for (const auto& batch : batches) {
      for (std::size_t idx : batch) CHECK(seen.insert(idx).second);
    }
  }
}

TEST_CASE("checkpoint round trip is bit identical") {
  const DualEncoder model = init_model(31, 6, 5, 7, 3);
  const auto path = temp_file("ckpt.denc");
  save_checkpoint(model, path);
  const DualEncoder loaded = load_checkpoint(path);
  CHECK(loaded.audio_head.w1.values() == model.audio_head.w1.values());
  CHECK(loaded.audio_head.b1 == model.audio_head.b1);
  CHECK(loaded.audio_head.w2.values() == model.audio_head.w2.values());
  CHECK(loaded.audio_head.b2 == model.audio_head.b2);
  CHECK(loaded.text_head.w1.values() == model.text_head.w1.values());
  CHECK(loaded.text_head.b1 == model.text_head.b1);
  CHECK(loaded.text_head.w2.values() == model.text_head.w2.values());
  CHECK(loaded.text_head.b2 == model.text_head.b2);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint loader rejects corrupt files") {
  const DualEncoder model = init_model(32, 4, 4, 4, 4);
  const auto path = temp_file("ckpt_corrupt.denc");
  save_checkpoint(model, path);

  // Truncation.
  const auto truncated = temp_file("ckpt_trunc.denc");
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    std::ofstream out(truncated, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  expect_error(errc::format_error, [&] { load_checkpoint(truncated); });

  // Wrong magic.
  const auto bad_magic = temp_file("ckpt_magic.denc");
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    bytes[0] = 'X';
    std::ofstream out(bad_magic, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  expect_error(errc::format_error, [&] { load_checkpoint(bad_magic); });

  expect_error(errc::io_error, [&] { load_checkpoint(temp_file("missing.denc")); });

  std::filesystem::remove(path);
  std::filesystem::remove(truncated);
  std::filesystem::remove(bad_magic);
}

TEST_CASE("history CSV stays reproducible unless timings are requested") {
  TrainHistory history;
  history.mean_loss = {1.5, 1.2};
  history.lr = {2e-5, 1.9e-5};
  history.seconds = {0.123, 0.456};
  const auto path = temp_file("history.csv");
  write_history_csv(history, path);
  std::ifstream in(path);
  std::string header, row0, row1;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  CHECK(header == "epoch,mean_loss,lr,seconds");
  CHECK(row0 == "0,1.5,2e-05,0.000000");
  CHECK(row1 == "1,1.2,1.9e-05,0.000000");
  write_history_csv(history, path, true);
  std::ifstream in2(path);
  std::getline(in2, header);
  std::getline(in2, row0);
  CHECK(row0 == "0,1.5,2e-05,0.123000");
  std::filesystem::remove(path);
}
