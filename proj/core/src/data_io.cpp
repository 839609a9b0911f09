#include "audiorank/data_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "audiorank/linalg.hpp"
#include "audiorank/rng.hpp"

namespace audiorank {

namespace {

constexpr char kBankMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::uint16_t kBankVersion = 1;

constexpr double kTrainFraction = 0.7;
constexpr double kValidFraction = 0.15;
constexpr std::size_t kCaptionsPerItem = 5;  // Clotho-style, every split

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const unsigned char* p) {
  return std::bit_cast<float>(get_u32(p));
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& bytes) {
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

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

}  // namespace

void write_bank(const std::filesystem::path& path, const DenseMatrix& matrix) {
  std::string bytes;
  bytes.reserve(14 + 4 * matrix.size());
  bytes.append(kBankMagic, 4);
  put_u16(bytes, kBankVersion);
  put_u32(bytes, static_cast<std::uint32_t>(matrix.rows()));
  put_u32(bytes, static_cast<std::uint32_t>(matrix.cols()));
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
      const double v = matrix(i, j);
      if (!std::isfinite(v)) {
        raise(errc::non_finite_payload, "row " + std::to_string(i) + ", col " +
                                            std::to_string(j));
      }
      put_f32(bytes, static_cast<float>(v));
    }
  }
  write_file_atomic(path, bytes);
}

DenseMatrix read_bank(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 14) raise(errc::format_error, "file too short for header");
  if (std::memcmp(bytes.data(), kBankMagic, 4) != 0) {
    raise(errc::format_error, "bad magic in " + path.string());
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint16_t version = get_u16(p + 4);
  if (version != kBankVersion) {
    raise(errc::format_error, "unsupported version " + std::to_string(version));
  }
  const std::size_t count = get_u32(p + 6);
  const std::size_t dim = get_u32(p + 10);
  const std::size_t expected = 14 + 4 * count * dim;
  if (bytes.size() != expected) {
    raise(errc::format_error, "payload of " + std::to_string(bytes.size() - 14) +
                                  " bytes, expected " +
                                  std::to_string(expected - 14));
  }
  std::vector<double> values(count * dim);
  for (std::size_t i = 0; i < count * dim; ++i) {
    const float v = get_f32(p + 14 + 4 * i);
    if (!std::isfinite(v)) {
      raise(errc::non_finite_payload, "row " + std::to_string(i / dim) +
                                          ", col " + std::to_string(i % dim));
    }
    values[i] = static_cast<double>(v);
  }
  return DenseMatrix(count, dim, std::move(values));
}

Manifest load_manifest_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, "cannot open " + path.string());
  Manifest manifest;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      raise(errc::format_error,
            path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
    ManifestItem item;
    try {
      item.item_id = j.at("item_id").get<std::string>();
      item.split = j.at("split").get<std::string>();
      item.audio_row = j.at("audio_row").get<std::size_t>();
      item.caption_rows = j.at("caption_rows").get<std::vector<std::size_t>>();
      if (j.contains("caption_texts")) {
        item.caption_texts = j.at("caption_texts").get<std::vector<std::string>>();
      }
    } catch (const nlohmann::json::exception& e) {
      raise(errc::format_error,
            path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (item.split != "train" && item.split != "valid" && item.split != "eval") {
      raise(errc::format_error, "line " + std::to_string(line_no) +
                                    ": unknown split '" + item.split + "'");
    }
    if (!item.caption_texts.empty() &&
        item.caption_texts.size() != item.caption_rows.size()) {
      raise(errc::format_error,
            "line " + std::to_string(line_no) + ": caption_texts length " +
                std::to_string(item.caption_texts.size()) + " != caption_rows " +
                std::to_string(item.caption_rows.size()));
    }
    if (!seen_ids.insert(item.item_id).second) {
      raise(errc::duplicate_item_id, "'" + item.item_id + "'");
    }
    manifest.items.push_back(std::move(item));
  }
  return manifest;
}

void save_manifest_file(const Manifest& manifest,
                        const std::filesystem::path& path) {
  std::string bytes;
  for (const auto& item : manifest.items) {
    nlohmann::json j;
    j["item_id"] = item.item_id;
    j["split"] = item.split;
    j["audio_row"] = item.audio_row;
    j["caption_rows"] = item.caption_rows;
    j["caption_texts"] = item.caption_texts;
    bytes += j.dump();
    bytes += '\n';
  }
  write_file_atomic(path, bytes);
}

namespace {

std::string caption_id(const ManifestItem& item, std::size_t k) {
  return item.item_id + "#" + std::to_string(k);
}

void check_rows(const ManifestItem& item, const DenseMatrix& audio_bank,
                const DenseMatrix& caption_bank) {
  if (item.audio_row >= audio_bank.rows()) {
    raise(errc::index_out_of_range,
          "item '" + item.item_id + "' audio_row " +
              std::to_string(item.audio_row) + " >= bank count " +
              std::to_string(audio_bank.rows()));
  }
  for (std::size_t row : item.caption_rows) {
    if (row >= caption_bank.rows()) {
      raise(errc::index_out_of_range,
            "item '" + item.item_id + "' caption_row " + std::to_string(row) +
                " >= bank count " + std::to_string(caption_bank.rows()));
    }
  }
}

}  // namespace

TrainingSet make_training_set(const Manifest& manifest,
                              const DenseMatrix& audio_bank,
                              const DenseMatrix& caption_bank,
                              std::string_view split) {
  std::vector<std::vector<double>> captions;
  std::vector<std::vector<double>> audios;
  TrainingSet set;
  for (const auto& item : manifest.items) {
    if (item.split != split) continue;
    if (item.caption_rows.empty()) {
      raise(errc::missing_caption, "item '" + item.item_id + "' has no captions");
    }
    check_rows(item, audio_bank, caption_bank);
    // One training row per caption; single-caption items contribute one row.
    for (std::size_t k = 0; k < item.caption_rows.size(); ++k) {
      const auto crow = caption_bank.row(item.caption_rows[k]);
      const auto arow = audio_bank.row(item.audio_row);
      captions.emplace_back(crow.begin(), crow.end());
      audios.emplace_back(arow.begin(), arow.end());
      set.row_item_ids.push_back(item.item_id);
      set.row_caption_ids.push_back(caption_id(item, k));
    }
  }
  if (set.row_item_ids.empty()) {
    raise(errc::missing_split, "no items with split '" + std::string(split) + "'");
  }
  set.caption_embeds = DenseMatrix::from_rows(captions);
  set.audio_embeds = DenseMatrix::from_rows(audios);
  return set;
}

EvalSet make_eval_set(const Manifest& manifest, const DenseMatrix& audio_bank,
                      const DenseMatrix& caption_bank, std::string_view split) {
  std::vector<std::vector<double>> captions;
  std::vector<std::vector<double>> audios;
  EvalSet set;
  for (const auto& item : manifest.items) {
    if (item.split != split) continue;
    if (item.caption_rows.empty()) {
      raise(errc::missing_caption, "item '" + item.item_id + "' has no captions");
    }
    check_rows(item, audio_bank, caption_bank);
    const auto arow = audio_bank.row(item.audio_row);
    audios.emplace_back(arow.begin(), arow.end());
    set.audio_ids.push_back(item.item_id);
    auto& caption_set = set.audio_to_text.relevant[item.item_id];
    for (std::size_t k = 0; k < item.caption_rows.size(); ++k) {
      const auto crow = caption_bank.row(item.caption_rows[k]);
      captions.emplace_back(crow.begin(), crow.end());
      const std::string cid = caption_id(item, k);
      set.caption_ids.push_back(cid);
      set.text_to_audio.relevant[cid] = {item.item_id};
      caption_set.insert(cid);
    }
  }
  if (set.audio_ids.empty()) {
    raise(errc::missing_split, "no items with split '" + std::string(split) + "'");
  }
  set.caption_embeds = DenseMatrix::from_rows(captions);
  set.audio_embeds = DenseMatrix::from_rows(audios);
  return set;
}

void SyntheticSpec::validate() const {
  if (n_clusters == 0 || items_per_cluster == 0 || d_audio == 0 || d_text == 0) {
    raise(errc::invalid_spec, "all counts must be >= 1");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    raise(errc::invalid_spec, "noise_sigma must be >= 0");
  }
  if (!(prototype_concentration >= 0.0) ||
      !std::isfinite(prototype_concentration)) {
    raise(errc::invalid_spec, "prototype_concentration must be >= 0");
  }
}

namespace {

std::vector<double> gaussian_vector(std::size_t dim, Xoshiro256ss& rng) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.gaussian();
  return v;
}

void normalize(std::vector<double>& v) {
  const double n = l2_norm(v);
  if (n < 1e-12) raise(errc::numeric_failure, "degenerate random direction");
  for (double& x : v) x /= n;
}

/// rows x cols Gaussian matrix with rows orthonormalized by modified
/// Gram-Schmidt; right-multiplying latent row vectors by it preserves dot
/// products (cols >= rows required).
DenseMatrix orthonormal_row_map(std::size_t rows, std::size_t cols,
                                Xoshiro256ss& rng) {
  if (cols < rows) {
    raise(errc::invalid_spec, "embedding dim " + std::to_string(cols) +
                                  " below latent dim " + std::to_string(rows));
  }
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = rng.gaussian();
  for (std::size_t i = 0; i < rows; ++i) {
    auto ri = m.row(i);
    for (std::size_t k = 0; k < i; ++k) {
      const double proj = dot(m.row(k), ri);
      const auto rk = m.row(k);
      for (std::size_t j = 0; j < cols; ++j) ri[j] -= proj * rk[j];
    }
    const double n = l2_norm(ri);
    if (n < 1e-9) raise(errc::numeric_failure, "rank-deficient random map");
    for (std::size_t j = 0; j < cols; ++j) ri[j] /= n;
  }
  return m;
}

std::vector<double> map_latent(const std::vector<double>& latent,
                               const DenseMatrix& row_map) {
  std::vector<double> out(row_map.cols(), 0.0);
  for (std::size_t k = 0; k < row_map.rows(); ++k) {
    const double z = latent[k];
    const auto row = row_map.row(k);
    for (std::size_t j = 0; j < row.size(); ++j) out[j] += z * row[j];
  }
  return out;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Xoshiro256ss rng = Xoshiro256ss::stream(spec.seed, RngStream::synthesis);
  const std::size_t latent_dim = std::min(spec.d_audio, spec.d_text);

  std::vector<double> shared_dir = gaussian_vector(latent_dim, rng);
  normalize(shared_dir);
  // proto = normalize(unit_gaussian + kappa * shared): kappa 0 keeps the
  // prototypes independent, large kappa packs them around one direction
  // (pairwise prototype cosine ~ kappa^2 / (1 + kappa^2)).
  std::vector<std::vector<double>> prototypes(spec.n_clusters);
  for (auto& proto : prototypes) {
    proto = gaussian_vector(latent_dim, rng);
    normalize(proto);
    for (std::size_t j = 0; j < latent_dim; ++j) {
      proto[j] += spec.prototype_concentration * shared_dir[j];
    }
    normalize(proto);
  }

  const DenseMatrix audio_map = orthonormal_row_map(latent_dim, spec.d_audio, rng);
  const DenseMatrix text_map = orthonormal_row_map(latent_dim, spec.d_text, rng);

  const std::size_t per = spec.items_per_cluster;
  auto n_train = static_cast<std::size_t>(
      std::floor(kTrainFraction * static_cast<double>(per)));
  auto n_valid = static_cast<std::size_t>(
      std::floor(kValidFraction * static_cast<double>(per)));
  if (n_train == 0) n_train = per;  // tiny clusters go entirely to train
  if (n_train + n_valid > per) n_valid = per - n_train;

  auto draw_latent = [&](const std::vector<double>& center) {
    std::vector<double> z = center;
    if (spec.noise_sigma > 0.0) {
      for (double& x : z) x += spec.noise_sigma * rng.gaussian();
    }
    normalize(z);
    return z;
  };

  SyntheticDataset out;
  std::vector<std::vector<double>> audio_rows;
  std::vector<std::vector<double>> caption_rows;
  for (std::size_t c = 0; c < spec.n_clusters; ++c) {
    for (std::size_t t = 0; t < per; ++t) {
      const std::vector<double> z = draw_latent(prototypes[c]);
      ManifestItem item;
      item.item_id = "item_" + std::to_string(c) + "_" + std::to_string(t);
      item.split = t < n_train ? "train"
                   : t < n_train + n_valid ? "valid"
                                           : "eval";
      item.audio_row = audio_rows.size();
      audio_rows.push_back(map_latent(z, audio_map));
      for (std::size_t k = 0; k < kCaptionsPerItem; ++k) {
        // Captions are noisy views of the item latent, like human-written
        // descriptions of the same recording.
        const std::vector<double> cz = draw_latent(z);
        item.caption_rows.push_back(caption_rows.size());
        item.caption_texts.push_back("synthetic cluster " + std::to_string(c) +
                                     " item " + std::to_string(t) +
                                     " caption " + std::to_string(k));
        caption_rows.push_back(map_latent(cz, text_map));
      }
      out.manifest.items.push_back(std::move(item));
    }
  }
  out.audio_bank = DenseMatrix::from_rows(audio_rows);
  out.caption_bank = DenseMatrix::from_rows(caption_rows);
  return out;
}

void export_matrix_csv(const DenseMatrix& values,
                       const std::vector<std::string>& row_ids,
                       const std::vector<std::string>& col_ids,
                       const std::filesystem::path& path) {
  if (row_ids.size() != values.rows() || col_ids.size() != values.cols()) {
    raise(errc::shape_mismatch, "id counts do not match matrix shape");
  }
  std::string bytes = "id";
  for (const auto& id : col_ids) {
    bytes += ',';
    bytes += id;
  }
  bytes += '\n';
  char buf[32];
  for (std::size_t i = 0; i < values.rows(); ++i) {
    bytes += row_ids[i];
    for (std::size_t j = 0; j < values.cols(); ++j) {
      const double v = values(i, j);
      if (!std::isfinite(v)) {
        raise(errc::non_finite_payload,
              "row " + std::to_string(i) + ", col " + std::to_string(j));
      }
      std::snprintf(buf, sizeof(buf), "%.9g", v);
      bytes += ',';
      bytes += buf;
    }
    bytes += '\n';
  }
  write_file_atomic(path, bytes);
}

}  // namespace audiorank
