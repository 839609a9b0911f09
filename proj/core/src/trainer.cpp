#include "audiorank/trainer.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "audiorank/linalg.hpp"
#include "audiorank/rng.hpp"

namespace audiorank {

void TrainConfig::validate() const {
  if (batch_size < 2) {
    raise(errc::invalid_config, "batch_size must be >= 2 (in-batch lists)");
  }
  if (epochs == 0) raise(errc::invalid_config, "epochs must be >= 1");
  if (!(lr_max > lr_min) || !(lr_min > 0.0)) {
    raise(errc::invalid_config, "need lr_max > lr_min > 0");
  }
  if (d_hidden == 0 || d_out == 0) {
    raise(errc::invalid_config, "head dimensions must be positive");
  }
  loss.validate();
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n_items,
                                                   std::size_t batch_size,
                                                   std::uint64_t seed,
                                                   std::size_t epoch) {
  if (batch_size == 0) raise(errc::invalid_config, "batch_size must be >= 1");
  if (batch_size > n_items) {
    raise(errc::batch_too_large, "batch " + std::to_string(batch_size) +
                                     " > items " + std::to_string(n_items));
  }
  std::vector<std::size_t> perm(n_items);
  std::iota(perm.begin(), perm.end(), 0);
  Xoshiro256ss rng = Xoshiro256ss::stream(seed, RngStream::batch_shuffle, epoch);
  fisher_yates(perm, rng);
  std::vector<std::vector<std::size_t>> batches;
  batches.reserve(n_items / batch_size);
  for (std::size_t start = 0; start + batch_size <= n_items;
       start += batch_size) {
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(start + batch_size));
  }
  return batches;
}

double cosine_annealed_lr(std::size_t step, std::size_t total_steps,
                          double lr_max, double lr_min) {
  if (total_steps < 1) raise(errc::step_out_of_range, "total_steps must be >= 1");
  if (step > total_steps) {
    raise(errc::step_out_of_range, "step " + std::to_string(step) + " > total " +
                                       std::to_string(total_steps));
  }
  const double progress =
      static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_min +
         0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

AdamState AdamState::for_model(const DualEncoder& model) {
  AdamState state;
  auto init_slot = [](Slot& slot, std::size_t n) {
    slot.m.assign(n, 0.0);
    slot.v.assign(n, 0.0);
  };
  init_slot(state.audio_w1, model.audio_head.w1.size());
  init_slot(state.audio_b1, model.audio_head.b1.size());
  init_slot(state.audio_w2, model.audio_head.w2.size());
  init_slot(state.audio_b2, model.audio_head.b2.size());
  init_slot(state.text_w1, model.text_head.w1.size());
  init_slot(state.text_b1, model.text_head.b1.size());
  init_slot(state.text_w2, model.text_head.w2.size());
  init_slot(state.text_b2, model.text_head.b2.size());
  return state;
}

void adam_update(std::span<double> params, std::span<const double> grads,
                 std::span<double> m, std::span<double> v, std::size_t step,
                 double lr, const AdamConfig& config) {
  if (params.size() != grads.size() || params.size() != m.size() ||
      params.size() != v.size()) {
    raise(errc::shape_mismatch, "parameter/gradient/state sizes differ");
  }
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (!std::isfinite(g)) {
      raise(errc::non_finite_gradient, "gradient entry " + std::to_string(i));
    }
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

void adam_step(DualEncoder& model, const ModelGradients& grads,
               AdamState& state, double lr, const AdamConfig& config) {
  ++state.step;
  const std::size_t t = state.step;
  adam_update(model.audio_head.w1.values(), grads.audio.w1.values(),
              state.audio_w1.m, state.audio_w1.v, t, lr, config);
  adam_update(model.audio_head.b1, grads.audio.b1, state.audio_b1.m,
              state.audio_b1.v, t, lr, config);
  adam_update(model.audio_head.w2.values(), grads.audio.w2.values(),
              state.audio_w2.m, state.audio_w2.v, t, lr, config);
  adam_update(model.audio_head.b2, grads.audio.b2, state.audio_b2.m,
              state.audio_b2.v, t, lr, config);
  adam_update(model.text_head.w1.values(), grads.text.w1.values(),
              state.text_w1.m, state.text_w1.v, t, lr, config);
  adam_update(model.text_head.b1, grads.text.b1, state.text_b1.m,
              state.text_b1.v, t, lr, config);
  adam_update(model.text_head.w2.values(), grads.text.w2.values(),
              state.text_w2.m, state.text_w2.v, t, lr, config);
  adam_update(model.text_head.b2, grads.text.b2, state.text_b2.m,
              state.text_b2.v, t, lr, config);
}

namespace {

DenseMatrix gather_rows(const DenseMatrix& source,
                        const std::vector<std::size_t>& indices) {
  DenseMatrix out(indices.size(), source.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = source.row(indices[i]);
    auto dst = out.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

struct ProbeBatch {
  DenseMatrix captions;
  DenseMatrix audios;
  DenseMatrix targets;
};

/// Fixed canonical batches (index order) used to measure the per-epoch
/// training loss; relevance targets are constant so they are built once.
std::vector<ProbeBatch> make_probe_batches(const TrainingSet& dataset,
                                           const TrainConfig& config) {
  std::vector<ProbeBatch> probes;
  const std::size_t n = dataset.size();
  for (std::size_t start = 0; start + config.batch_size <= n;
       start += config.batch_size) {
    std::vector<std::size_t> indices(config.batch_size);
    std::iota(indices.begin(), indices.end(), start);
    ProbeBatch probe;
    probe.captions = gather_rows(dataset.caption_embeds, indices);
    probe.audios = gather_rows(dataset.audio_embeds, indices);
    if (config.loss.objective == ObjectiveKind::listnet) {
      const SimilarityMatrix sim{pairwise_cosine(probe.captions, probe.captions),
                                 {},
                                 {}};
      probe.targets =
          relevance_matrix(sim, config.transform, config.clamp_diagonal).values;
    }
    probes.push_back(std::move(probe));
  }
  return probes;
}

double probe_mean_loss(const DualEncoder& model,
                       const std::vector<ProbeBatch>& probes,
                       const LossConfig& loss) {
  double sum = 0.0;
  for (const ProbeBatch& probe : probes) {
    const DenseMatrix scores = score_matrix(model, probe.captions, probe.audios);
    sum += evaluate_objective(probe.targets, scores, loss).loss;
  }
  return sum / static_cast<double>(probes.size());
}

}  // namespace

std::pair<DualEncoder, TrainHistory> train(const TrainingSet& dataset,
                                           const TrainConfig& config,
                                           const EpochCallback& on_epoch) {
  config.validate();
  const std::size_t n = dataset.size();
  if (config.batch_size > n) {
    raise(errc::batch_too_large, "batch " + std::to_string(config.batch_size) +
                                     " > training rows " + std::to_string(n));
  }
  DualEncoder model =
      init_model(config.seed, dataset.audio_embeds.cols(),
                 dataset.caption_embeds.cols(), config.d_hidden, config.d_out);
  AdamState state = AdamState::for_model(model);

  const std::size_t batches_per_epoch = n / config.batch_size;
  const std::size_t total_steps = config.epochs * batches_per_epoch;
  const std::vector<ProbeBatch> probes = make_probe_batches(dataset, config);
  TrainHistory history;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const auto batches = make_batches(n, config.batch_size, config.seed, epoch);
    history.lr.push_back(
        cosine_annealed_lr(step, total_steps, config.lr_max, config.lr_min));
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const DenseMatrix captions = gather_rows(dataset.caption_embeds, batches[b]);
      const DenseMatrix audios = gather_rows(dataset.audio_embeds, batches[b]);

      DenseMatrix targets;
      if (config.loss.objective == ObjectiveKind::listnet) {
        const SimilarityMatrix sim{pairwise_cosine(captions, captions), {}, {}};
        targets = relevance_matrix(sim, config.transform, config.clamp_diagonal)
                      .values;
      }
      ScoreCache cache;
      const DenseMatrix scores = score_matrix(model, captions, audios, &cache);
      const LossResult loss = evaluate_objective(targets, scores, config.loss);
      if (!std::isfinite(loss.loss)) {
        raise(errc::non_finite_loss,
              "epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                  ", loss " + std::to_string(loss.loss));
      }
      const ModelGradients grads = backward(model, cache, loss.grad_scores);
      const double lr =
          cosine_annealed_lr(step, total_steps, config.lr_max, config.lr_min);
      adam_step(model, grads, state, lr, config.adam);
      ++step;
    }
    history.mean_loss.push_back(probe_mean_loss(model, probes, config.loss));
    history.seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      epoch_start)
            .count());
    if (on_epoch) on_epoch(epoch, model);
  }
  return {std::move(model), std::move(history)};
}

namespace {

constexpr char kCheckpointMagic[4] = {'D', 'E', 'N', 'C'};
constexpr std::uint16_t kCheckpointVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

void put_tensor(std::string& out, std::span<const double> values) {
  for (double v : values) put_f64(out, v);
}

}  // namespace

void save_checkpoint(const DualEncoder& model,
                     const std::filesystem::path& path) {
  std::string bytes;
  bytes.append(kCheckpointMagic, 4);
  put_u16(bytes, kCheckpointVersion);
  const auto d_audio = static_cast<std::uint32_t>(model.audio_head.input_dim());
  const auto d_text = static_cast<std::uint32_t>(model.text_head.input_dim());
  const auto d_hidden = static_cast<std::uint32_t>(model.audio_head.hidden_dim());
  const auto d_out = static_cast<std::uint32_t>(model.audio_head.output_dim());
  if (model.text_head.hidden_dim() != d_hidden ||
      model.text_head.output_dim() != d_out) {
    raise(errc::dimension_mismatch,
          "heads disagree on hidden/output dims; checkpoint format assumes "
          "shared widths");
  }
  put_u32(bytes, d_audio);
  put_u32(bytes, d_text);
  put_u32(bytes, d_hidden);
  put_u32(bytes, d_out);
  for (const ProjectionHead* head : {&model.audio_head, &model.text_head}) {
    put_tensor(bytes, head->w1.values());
    put_tensor(bytes, head->b1);
    put_tensor(bytes, head->w2.values());
    put_tensor(bytes, head->b2);
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(errc::io_error, "cannot open " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) raise(errc::io_error, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) raise(errc::io_error, "rename to " + path.string() + ": " + ec.message());
}

DualEncoder load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = std::move(buf).str();
  if (bytes.size() < 22) raise(errc::format_error, "file too short for header");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    raise(errc::format_error, "bad magic in " + path.string());
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint16_t version = get_u16(p + 4);
  if (version != kCheckpointVersion) {
    raise(errc::format_error, "unsupported version " + std::to_string(version));
  }
  const std::size_t d_audio = get_u32(p + 6);
  const std::size_t d_text = get_u32(p + 10);
  const std::size_t d_hidden = get_u32(p + 14);
  const std::size_t d_out = get_u32(p + 18);
  if (d_audio == 0 || d_text == 0 || d_hidden == 0 || d_out == 0) {
    raise(errc::dimension_mismatch, "checkpoint declares a zero dimension");
  }
  const std::size_t n_params = (d_audio * d_hidden + d_hidden +
                                d_hidden * d_out + d_out) +
                               (d_text * d_hidden + d_hidden +
                                d_hidden * d_out + d_out);
  const std::size_t expected = 22 + 8 * n_params;
  if (bytes.size() != expected) {
    raise(errc::format_error, "file size " + std::to_string(bytes.size()) +
                                  ", expected " + std::to_string(expected));
  }
  std::size_t offset = 22;
  auto read_tensor = [&](std::size_t count) {
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
      values[i] = get_f64(p + offset);
      offset += 8;
    }
    return values;
  };
  auto read_head = [&](std::size_t d_in) {
    ProjectionHead head;
    head.w1 = DenseMatrix(d_in, d_hidden, read_tensor(d_in * d_hidden));
    head.b1 = read_tensor(d_hidden);
    head.w2 = DenseMatrix(d_hidden, d_out, read_tensor(d_hidden * d_out));
    head.b2 = read_tensor(d_out);
    return head;
  };
  DualEncoder model;
  model.audio_head = read_head(d_audio);
  model.text_head = read_head(d_text);
  return model;
}

void write_history_csv(const TrainHistory& history,
                       const std::filesystem::path& path, bool with_timings) {
  std::string bytes = "epoch,mean_loss,lr,seconds\n";
  char buf[48];
  for (std::size_t e = 0; e < history.mean_loss.size(); ++e) {
    const double secs = with_timings ? history.seconds[e] : 0.0;
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.6f\n", e,
                  history.mean_loss[e], history.lr[e], secs);
    bytes += buf;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(errc::io_error, "cannot open " + path.string());
  out << bytes;
  if (!out) raise(errc::io_error, "short write to " + path.string());
}

}  // namespace audiorank
