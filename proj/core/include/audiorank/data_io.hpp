#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "audiorank/eval.hpp"
#include "audiorank/matrix.hpp"

namespace audiorank {

/// EMB1 bank: magic "EMB1", version u16 LE, count u32 LE, dim u32 LE, then
/// count*dim IEEE-754 32-bit LE reals in row-major order. Values are stored
/// as 32-bit and promoted to 64-bit on read.
void write_bank(const std::filesystem::path& path, const DenseMatrix& matrix);
DenseMatrix read_bank(const std::filesystem::path& path);

struct ManifestItem {
  std::string item_id;
  std::string split;  // train | valid | eval
  std::size_t audio_row = 0;
  std::vector<std::size_t> caption_rows;
  std::vector<std::string> caption_texts;
};

/// Line-delimited JSON records, UTF-8. Blank lines and lines starting with
/// '#' are skipped.
struct Manifest {
  std::vector<ManifestItem> items;
};

Manifest load_manifest_file(const std::filesystem::path& path);
void save_manifest_file(const Manifest& manifest,
                        const std::filesystem::path& path);

/// Paired rows for training: one row per (item, caption) pair. The caption
/// embedding doubles as the text-head input and as the similarity source
/// for relevance targets.
struct TrainingSet {
  DenseMatrix caption_embeds;
  DenseMatrix audio_embeds;
  std::vector<std::string> row_item_ids;
  std::vector<std::string> row_caption_ids;

  std::size_t size() const noexcept { return row_item_ids.size(); }
};

struct EvalSet {
  DenseMatrix caption_embeds;
  std::vector<std::string> caption_ids;
  DenseMatrix audio_embeds;
  std::vector<std::string> audio_ids;
  Qrels text_to_audio;  // each caption -> its annotated audio
  Qrels audio_to_text;  // each audio -> its caption set
};

TrainingSet make_training_set(const Manifest& manifest,
                              const DenseMatrix& audio_bank,
                              const DenseMatrix& caption_bank,
                              std::string_view split = "train");

EvalSet make_eval_set(const Manifest& manifest, const DenseMatrix& audio_bank,
                      const DenseMatrix& caption_bank,
                      std::string_view split = "eval");

/// Clustered synthetic data: unit prototype directions in a latent space,
/// items drawn around them, then mapped to the audio and text spaces by
/// fixed orthonormal random maps so latent cosine structure carries over.
struct SyntheticSpec {
  std::size_t n_clusters = 8;
  std::size_t items_per_cluster = 64;
  std::size_t d_audio = 128;
  std::size_t d_text = 768;
  double noise_sigma = 0.1;
  /// Pulls all prototypes toward one shared direction; 0 keeps them
  /// independent (near-orthogonal in high dimension).
  double prototype_concentration = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticDataset {
  DenseMatrix audio_bank;
  DenseMatrix caption_bank;
  Manifest manifest;
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

/// CSV with header "id,<col ids...>" and one row per row id, values at
/// 9 significant digits. Refuses non-finite entries.
void export_matrix_csv(const DenseMatrix& values,
                       const std::vector<std::string>& row_ids,
                       const std::vector<std::string>& col_ids,
                       const std::filesystem::path& path);

}  // namespace audiorank
