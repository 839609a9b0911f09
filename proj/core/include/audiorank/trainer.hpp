#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "audiorank/data_io.hpp"
#include "audiorank/objectives.hpp"
#include "audiorank/projection.hpp"
#include "audiorank/relevance.hpp"

namespace audiorank {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 25;
  double lr_max = 2e-5;
  double lr_min = 1e-7;
  LossConfig loss;
  RelevanceTransform transform;
  bool clamp_diagonal = false;
  std::uint64_t seed = 0;
  AdamConfig adam;
  std::size_t d_hidden = 256;
  std::size_t d_out = 256;

  void validate() const;
};

struct TrainHistory {
  /// Mean training loss at each epoch end, measured over a fixed canonical
  /// batch partition (index order, full batches) so values across epochs
  /// are comparable and free of reshuffle composition noise.
  std::vector<double> mean_loss;
  std::vector<double> lr;       // at the first step of each epoch
  std::vector<double> seconds;  // wall clock per epoch
};

/// Seeded permutation of 0..n-1 (stream derived from seed and epoch),
/// chunked into full batches; a remainder smaller than batch_size is
/// dropped for that epoch.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n_items,
                                                   std::size_t batch_size,
                                                   std::uint64_t seed,
                                                   std::size_t epoch);

/// lr_min + (lr_max - lr_min)/2 * (1 + cos(pi * step / total_steps)).
double cosine_annealed_lr(std::size_t step, std::size_t total_steps,
                          double lr_max, double lr_min);

/// First/second moment accumulators for the eight parameter tensors.
struct AdamState {
  struct Slot {
    std::vector<double> m;
    std::vector<double> v;
  };
  Slot audio_w1, audio_b1, audio_w2, audio_b2;
  Slot text_w1, text_b1, text_w2, text_b2;
  std::size_t step = 0;

  static AdamState for_model(const DualEncoder& model);
};

/// One bias-corrected Adam update of a single tensor; `step` is 1-based.
void adam_update(std::span<double> params, std::span<const double> grads,
                 std::span<double> m, std::span<double> v, std::size_t step,
                 double lr, const AdamConfig& config);

/// Applies one optimizer step to all head parameters.
void adam_step(DualEncoder& model, const ModelGradients& grads,
               AdamState& state, double lr, const AdamConfig& config);

using EpochCallback =
    std::function<void(std::size_t epoch, const DualEncoder& model)>;

/// Full training loop: seeded shuffling, per-batch relevance targets,
/// loss/gradient evaluation, Adam updates on a per-step cosine schedule.
std::pair<DualEncoder, TrainHistory> train(const TrainingSet& dataset,
                                           const TrainConfig& config,
                                           const EpochCallback& on_epoch = {});

/// Checkpoint: magic "DENC", version u16 LE, dims (d_audio, d_text,
/// d_hidden, d_out) as u32 LE, then the eight tensors as 64-bit LE reals in
/// declared order (audio W1,b1,W2,b2 then text W1,b1,W2,b2).
void save_checkpoint(const DualEncoder& model,
                     const std::filesystem::path& path);
DualEncoder load_checkpoint(const std::filesystem::path& path);

/// CSV "epoch,mean_loss,lr,seconds". Wall-clock seconds are written only
/// when with_timings is set so default outputs stay byte-reproducible.
void write_history_csv(const TrainHistory& history,
                       const std::filesystem::path& path,
                       bool with_timings = false);

}  // namespace audiorank
