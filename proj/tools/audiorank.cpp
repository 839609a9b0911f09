// audiorank: reproducible learning-to-rank experiments for text-based audio
// retrieval on precomputed embeddings.
//
// Subcommands: gen-synth, relevance, train, evaluate, significance,
// export-scores. Every command is deterministic given its flags and seed.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "audiorank/data_io.hpp"
#include "audiorank/eval.hpp"
#include "audiorank/linalg.hpp"
#include "audiorank/objectives.hpp"
#include "audiorank/projection.hpp"
#include "audiorank/relevance.hpp"
#include "audiorank/trainer.hpp"

namespace fs = std::filesystem;
using namespace audiorank;

namespace {

/// Flag/validation problems detected after parsing; mapped to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_double(double v, const char* fmt = "%.9g") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared option bundles

struct DataArgs {
  std::string manifest;
  std::string audio_bank;
  std::string caption_bank;

  void resolve_bank_defaults() {
    const fs::path dir = fs::path(manifest).parent_path();
    if (audio_bank.empty()) audio_bank = (dir / "audio.emb").string();
    if (caption_bank.empty()) caption_bank = (dir / "captions.emb").string();
  }
};

void add_data_options(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--manifest", args.manifest, "Dataset manifest (JSON lines)")
      ->required();
  cmd->add_option("--audio-bank", args.audio_bank,
                  "Audio embedding bank (default: <manifest dir>/audio.emb)");
  cmd->add_option("--caption-bank", args.caption_bank,
                  "Caption embedding bank (default: <manifest dir>/captions.emb)");
}

struct TransformArgs {
  std::string name = "logistic";
  double intercept = 2.73;
  double slope = 4.58;
  bool clamp_diagonal = false;

  RelevanceTransform make() const {
    if (name == "logistic") return RelevanceTransform::logistic(intercept, slope);
    return RelevanceTransform::min_max();
  }
};

void add_transform_options(CLI::App* cmd, TransformArgs& args) {
  cmd->add_option("--transform", args.name, "Relevance transform")
      ->check(CLI::IsMember({"logistic", "minmax"}))
      ->capture_default_str();
  cmd->add_option("--intercept", args.intercept, "Logistic intercept")
      ->capture_default_str();
  cmd->add_option("--slope", args.slope, "Logistic slope")->capture_default_str();
  cmd->add_flag("--clamp-diagonal", args.clamp_diagonal,
                "Pin annotated-pair relevance to 1 instead of f(1)");
}

struct TrainArgs {
  std::size_t batch_size = 32;
  std::size_t epochs = 25;
  double lr_max = 2e-5;
  double lr_min = 1e-7;
  double omega = 0.05;
  double tau = 0.05;
  std::size_t d_hidden = 256;
  std::size_t d_out = 256;
  std::uint64_t seed = 0;

  TrainConfig make(const std::string& objective,
                   const TransformArgs& transform) const {
    TrainConfig config;
    config.batch_size = batch_size;
    config.epochs = epochs;
    config.lr_max = lr_max;
    config.lr_min = lr_min;
    config.seed = seed;
    config.d_hidden = d_hidden;
    config.d_out = d_out;
    config.transform = transform.make();
    config.clamp_diagonal = transform.clamp_diagonal;
    config.loss.omega = omega;
    config.loss.tau = tau;
    if (objective == "listnet-audio") {
      config.loss.objective = ObjectiveKind::listnet;
      config.loss.direction = LossDirection::audio;
    } else if (objective == "listnet-text") {
      config.loss.objective = ObjectiveKind::listnet;
      config.loss.direction = LossDirection::text;
    } else if (objective == "listnet-both") {
      config.loss.objective = ObjectiveKind::listnet;
      config.loss.direction = LossDirection::audio_plus_text;
    } else if (objective == "infonce") {
      config.loss.objective = ObjectiveKind::infonce;
    } else {
      throw UsageError("unknown objective '" + objective + "'");
    }
    return config;
  }
};

const std::vector<std::string> kObjectives = {"listnet-audio", "listnet-text",
                                              "listnet-both", "infonce"};

void add_train_options(CLI::App* cmd, TrainArgs& args) {
  cmd->add_option("--batch-size", args.batch_size, "Mini-batch size")
      ->capture_default_str();
  cmd->add_option("--epochs", args.epochs, "Training epochs")
      ->capture_default_str();
  cmd->add_option("--lr-max", args.lr_max, "Initial learning rate")
      ->capture_default_str();
  cmd->add_option("--lr-min", args.lr_min, "Final learning rate")
      ->capture_default_str();
  cmd->add_option("--omega", args.omega, "Target-distribution temperature")
      ->capture_default_str();
  cmd->add_option("--tau", args.tau, "Predicted-distribution temperature")
      ->capture_default_str();
  cmd->add_option("--d-hidden", args.d_hidden, "Projection head hidden width")
      ->capture_default_str();
  cmd->add_option("--d-out", args.d_out, "Shared embedding dimension")
      ->capture_default_str();
  cmd->add_option("--seed", args.seed, "PRNG seed")->capture_default_str();
}

void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!force && !fs::is_empty(dir)) {
      raise(errc::io_error, "output directory " + dir.string() +
                                " exists and is not empty (use --force)");
    }
  } else {
    fs::create_directories(dir);
  }
}

struct LoadedData {
  Manifest manifest;
  DenseMatrix audio_bank;
  DenseMatrix caption_bank;
};

LoadedData load_data(DataArgs& args) {
  args.resolve_bank_defaults();
  LoadedData data;
  data.manifest = load_manifest_file(args.manifest);
  data.audio_bank = read_bank(args.audio_bank);
  data.caption_bank = read_bank(args.caption_bank);
  return data;
}

// ---------------------------------------------------------------------------
// gen-synth

struct GenSynthArgs {
  SyntheticSpec spec;
  std::string out_dir;
  bool force = false;
};

void run_gen_synth(const GenSynthArgs& args) {
  prepare_out_dir(args.out_dir, args.force);
  const SyntheticDataset data = generate_synthetic(args.spec);
  const fs::path dir = args.out_dir;
  write_bank(dir / "audio.emb", data.audio_bank);
  write_bank(dir / "captions.emb", data.caption_bank);
  save_manifest_file(data.manifest, dir / "manifest.jsonl");

  // Cosine summary over a deterministic caption subsample.
  std::vector<std::size_t> cluster_of_caption;
  for (std::size_t idx = 0; idx < data.manifest.items.size(); ++idx) {
    for (std::size_t k = 0; k < data.manifest.items[idx].caption_rows.size();
         ++k) {
      cluster_of_caption.push_back(idx / args.spec.items_per_cluster);
    }
  }
  const std::size_t total = cluster_of_caption.size();
  const std::size_t stride = std::max<std::size_t>(1, total / 256);
  std::vector<std::size_t> sample;
  for (std::size_t i = 0; i < total; i += stride) sample.push_back(i);
  double within = 0.0, cross = 0.0;
  std::size_t n_within = 0, n_cross = 0;
  for (std::size_t a = 0; a < sample.size(); ++a) {
    for (std::size_t b = a + 1; b < sample.size(); ++b) {
      const double cs = cosine_similarity(data.caption_bank.row(sample[a]),
                                          data.caption_bank.row(sample[b]));
      if (cluster_of_caption[sample[a]] == cluster_of_caption[sample[b]]) {
        within += cs;
        ++n_within;
      } else {
        cross += cs;
        ++n_cross;
      }
    }
  }
  std::size_t n_train = 0, n_valid = 0, n_eval = 0;
  for (const auto& item : data.manifest.items) {
    if (item.split == "train") {
      ++n_train;
    } else if (item.split == "valid") {
      ++n_valid;
    } else {
      ++n_eval;
    }
  }
  std::cout << "generated " << data.manifest.items.size() << " items ("
            << n_train << " train, " << n_valid << " valid, " << n_eval
            << " eval), " << data.caption_bank.rows() << " captions\n"
            << "dims: audio " << data.audio_bank.cols() << ", text "
            << data.caption_bank.cols() << "\n"
            << "caption cosine means: within-cluster "
            << format_double(n_within ? within / double(n_within) : 0.0, "%.4f")
            << ", cross-cluster "
            << format_double(n_cross ? cross / double(n_cross) : 0.0, "%.4f")
            << "\n"
            << "wrote " << (dir / "audio.emb").string() << ", "
            << (dir / "captions.emb").string() << ", "
            << (dir / "manifest.jsonl").string() << "\n";
}

// ---------------------------------------------------------------------------
// relevance

struct RelevanceArgs {
  DataArgs data;
  TransformArgs transform;
  std::string split = "train";
  std::string out = "relevance.csv";
};

/// Rows are the split's captions, columns its audio items, each column
/// represented by the item's annotated (first) caption.
void run_relevance(RelevanceArgs& args) {
  const LoadedData data = load_data(args.data);

  std::vector<std::vector<double>> query_rows;
  std::vector<std::string> query_ids;
  std::vector<std::vector<double>> annotated_rows;
  std::vector<std::string> audio_ids;
  for (const auto& item : data.manifest.items) {
    if (item.split != args.split) continue;
    if (item.caption_rows.empty()) {
      raise(errc::missing_caption,
            "item '" + item.item_id + "' has no captions");
    }
    for (std::size_t k = 0; k < item.caption_rows.size(); ++k) {
      if (item.caption_rows[k] >= data.caption_bank.rows()) {
        raise(errc::index_out_of_range,
              "caption row " + std::to_string(item.caption_rows[k]));
      }
      const auto row = data.caption_bank.row(item.caption_rows[k]);
      query_rows.emplace_back(row.begin(), row.end());
      query_ids.push_back(item.item_id + "#" + std::to_string(k));
    }
    const auto annotated = data.caption_bank.row(item.caption_rows[0]);
    annotated_rows.emplace_back(annotated.begin(), annotated.end());
    audio_ids.push_back(item.item_id);
  }
  if (audio_ids.empty()) {
    raise(errc::missing_split, "no items with split '" + args.split + "'");
  }
  const SimilarityMatrix sim = textual_similarity(
      DenseMatrix::from_rows(query_rows), DenseMatrix::from_rows(annotated_rows),
      query_ids, audio_ids);
  const RelevanceMatrix rel = relevance_matrix(sim, args.transform.make(),
                                               args.transform.clamp_diagonal);
  export_matrix_csv(rel.values, rel.row_ids, rel.col_ids, args.out);
  std::cout << "wrote " << args.out << " (" << rel.values.rows()
            << " queries x " << rel.values.cols() << " audios)\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainCmdArgs {
  DataArgs data;
  TransformArgs transform;
  TrainArgs train;
  std::string objective = "listnet-audio";
  std::size_t eval_every = 0;
  bool timings = false;
  std::string out_dir = "run";
  bool force = false;
};

void run_train(TrainCmdArgs& args) {
  const LoadedData data = load_data(args.data);
  prepare_out_dir(args.out_dir, args.force);
  const TrainingSet training =
      make_training_set(data.manifest, data.audio_bank, data.caption_bank);
  const TrainConfig config = args.train.make(args.objective, args.transform);

  std::optional<EvalSet> valid;
  if (args.eval_every > 0) {
    try {
      valid = make_eval_set(data.manifest, data.audio_bank, data.caption_bank,
                            "valid");
    } catch (const Error& e) {
      if (e.code() != errc::missing_split) throw;
      std::cerr << "note: no valid split; --eval-every disabled\n";
    }
  }
  EpochCallback callback;
  if (valid.has_value()) {
    callback = [&](std::size_t epoch, const DualEncoder& model) {
      if ((epoch + 1) % args.eval_every != 0) return;
      const RunMetrics m =
          evaluate(model, valid->caption_embeds, valid->caption_ids,
                   valid->audio_embeds, valid->audio_ids, valid->text_to_audio,
                   RetrievalDirection::text_to_audio);
      std::cerr << "epoch " << epoch + 1 << ": valid text->audio mAP@10 "
                << format_double(m.map10, "%.4f") << "\n";
    };
  }

  const auto [model, history] = train(training, config, callback);
  const fs::path dir = args.out_dir;
  save_checkpoint(model, dir / "model.denc");
  write_history_csv(history, dir / "history.csv", args.timings);
  std::cout << "trained " << args.objective << " on " << training.size()
            << " rows for " << config.epochs << " epochs\n"
            << "first epoch mean loss "
            << format_double(history.mean_loss.front()) << ", last "
            << format_double(history.mean_loss.back()) << "\n"
            << "wrote " << (dir / "model.denc").string() << ", "
            << (dir / "history.csv").string() << "\n";
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  DataArgs data;
  TransformArgs transform;
  TrainArgs train;
  std::string checkpoint;
  std::string direction = "text-to-audio";
  std::string split = "eval";
  std::vector<std::string> objectives = {"listnet-audio"};
  std::vector<std::uint64_t> seeds;
  std::size_t runs = 0;
  std::string out_dir = "eval";
  bool force = false;
  bool timings = false;
};

RetrievalDirection parse_direction(const std::string& name) {
  if (name == "text-to-audio") return RetrievalDirection::text_to_audio;
  if (name == "audio-to-text") return RetrievalDirection::audio_to_text;
  throw UsageError("unknown direction '" + name + "'");
}

void write_per_query_ap_csv(const fs::path& path, const MetricReport& report,
                            const std::vector<std::uint64_t>& seeds) {
  std::string bytes = "query_id";
  for (std::uint64_t seed : seeds) {
    bytes += ",ap_seed_" + std::to_string(seed);
  }
  bytes += ",ap_mean\n";
  const auto& query_ids = report.runs.front().query_ids;
  const std::vector<double> mean_ap = report.mean_per_query_ap();
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    bytes += query_ids[q];
    for (const auto& run : report.runs) {
      bytes += ',';
      bytes += format_double(run.per_query_ap[q]);
    }
    bytes += ',';
    bytes += format_double(mean_ap[q]);
    bytes += '\n';
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(errc::io_error, "cannot open " + path.string());
  out << bytes;
}

void print_table(const std::map<std::string, MetricReport>& reports,
                 const std::string& direction) {
  std::printf("%-16s %-16s %-16s %-16s %-16s (%s)\n", "method", "mAP@10", "R@1",
              "R@5", "R@10", direction.c_str());
  for (const auto& [method, report] : reports) {
    auto cell = [](MetricReport::Summary s) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.4f+-%.4f", s.mean, s.sd);
      return std::string(buf);
    };
    std::printf("%-16s %-16s %-16s %-16s %-16s\n", method.c_str(),
                cell(report.map10()).c_str(), cell(report.r1()).c_str(),
                cell(report.r5()).c_str(), cell(report.r10()).c_str());
  }
}

void run_evaluate(EvaluateArgs& args) {
  const RetrievalDirection direction = parse_direction(args.direction);
  const LoadedData data = load_data(args.data);
  prepare_out_dir(args.out_dir, args.force);
  const fs::path dir = args.out_dir;
  const EvalSet eval_set = make_eval_set(data.manifest, data.audio_bank,
                                         data.caption_bank, args.split);
  const Qrels& qrels = direction == RetrievalDirection::text_to_audio
                           ? eval_set.text_to_audio
                           : eval_set.audio_to_text;

  auto evaluate_model = [&](const DualEncoder& model) {
    return evaluate(model, eval_set.caption_embeds, eval_set.caption_ids,
                    eval_set.audio_embeds, eval_set.audio_ids, qrels, direction);
  };

  std::map<std::string, MetricReport> reports;

  if (!args.checkpoint.empty()) {
    if (!args.seeds.empty() || args.runs > 0) {
      throw UsageError("--checkpoint cannot be combined with --seeds/--runs");
    }
    const DualEncoder model = load_checkpoint(args.checkpoint);
    MetricReport report;
    report.runs.push_back(evaluate_model(model));
    const std::string method = fs::path(args.checkpoint).stem().string();
    write_per_query_ap_csv(dir / "per_query_ap.csv", report, {args.train.seed});
    reports[method] = std::move(report);
  } else {
    std::vector<std::uint64_t> seeds = args.seeds;
    if (seeds.empty()) {
      const std::size_t n_runs = args.runs > 0 ? args.runs : 1;
      for (std::size_t r = 0; r < n_runs; ++r) {
        seeds.push_back(args.train.seed + r);
      }
    } else if (args.runs > 0 && args.runs != seeds.size()) {
      throw UsageError("--runs disagrees with the number of --seeds");
    }
    const TrainingSet training =
        make_training_set(data.manifest, data.audio_bank, data.caption_bank);
    std::string runs_csv = "method,seed,untrained_map10,map10,r1,r5,r10\n";
    for (const std::string& objective : args.objectives) {
      MetricReport report;
      for (std::uint64_t seed : seeds) {
        TrainArgs per_run = args.train;
        per_run.seed = seed;
        const TrainConfig config = per_run.make(objective, args.transform);
        const DualEncoder untrained = init_model(
            seed, training.audio_embeds.cols(), training.caption_embeds.cols(),
            config.d_hidden, config.d_out);
        const RunMetrics before = evaluate_model(untrained);
        const auto [model, history] = train(training, config);
        const RunMetrics after = evaluate_model(model);
        write_history_csv(history,
                          dir / ("history_" + objective + "_seed" +
                                 std::to_string(seed) + ".csv"),
                          args.timings);
        runs_csv += objective + "," + std::to_string(seed) + "," +
                    format_double(before.map10) + "," +
                    format_double(after.map10) + "," + format_double(after.r1) +
                    "," + format_double(after.r5) + "," +
                    format_double(after.r10) + "\n";
        report.runs.push_back(after);
        std::cerr << objective << " seed " << seed << ": mAP@10 "
                  << format_double(after.map10, "%.4f") << " (untrained "
                  << format_double(before.map10, "%.4f") << ")\n";
      }
      write_per_query_ap_csv(dir / ("per_query_ap_" + objective + ".csv"),
                             report, seeds);
      reports[objective] = std::move(report);
    }
    std::ofstream runs_out(dir / "runs.csv", std::ios::trunc);
    runs_out << runs_csv;
  }

  std::string metrics_csv =
      "method,direction,runs,map10_mean,map10_sd,r1_mean,r1_sd,r5_mean,r5_sd,"
      "r10_mean,r10_sd\n";
  for (const auto& [method, report] : reports) {
    metrics_csv += method + "," + args.direction + "," +
                   std::to_string(report.run_count());
    for (const auto summary :
         {report.map10(), report.r1(), report.r5(), report.r10()}) {
      metrics_csv +=
          "," + format_double(summary.mean) + "," + format_double(summary.sd);
    }
    metrics_csv += "\n";
  }
  std::ofstream metrics_out(dir / "metrics.csv", std::ios::trunc);
  metrics_out << metrics_csv;

  print_table(reports, args.direction);
  std::cout << "wrote " << (dir / "metrics.csv").string() << "\n";
}

// ---------------------------------------------------------------------------
// significance

struct SignificanceArgs {
  std::string report_a;
  std::string report_b;
};

std::map<std::string, double> read_per_query_ap(const fs::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, "cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) raise(errc::format_error, "empty report");
  std::vector<std::string> columns;
  std::stringstream hs(header);
  std::string tok;
  while (std::getline(hs, tok, ',')) columns.push_back(tok);
  std::size_t mean_col = columns.size();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] == "ap_mean") mean_col = c;
  }
  if (columns.empty() || columns[0] != "query_id" ||
      mean_col == columns.size()) {
    raise(errc::format_error,
          "expected query_id,...,ap_mean header in " + path.string());
  }
  std::map<std::string, double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::vector<std::string> cells;
    while (std::getline(ls, tok, ',')) cells.push_back(tok);
    if (cells.size() != columns.size()) {
      raise(errc::format_error, "ragged row in " + path.string());
    }
    out[cells[0]] = std::stod(cells[mean_col]);
  }
  return out;
}

void run_significance(const SignificanceArgs& args) {
  const auto a = read_per_query_ap(args.report_a);
  const auto b = read_per_query_ap(args.report_b);
  if (a.size() != b.size()) {
    raise(errc::length_mismatch, "reports cover different query counts");
  }
  std::vector<double> va, vb;
  va.reserve(a.size());
  vb.reserve(a.size());
  for (const auto& [query, ap] : a) {
    auto it = b.find(query);
    if (it == b.end()) {
      raise(errc::length_mismatch,
            "query '" + query + "' missing from " + args.report_b);
    }
    va.push_back(ap);
    vb.push_back(it->second);
  }
  const TTestResult r = paired_t_test(va, vb);
  std::printf("paired t-test on %zu queries: t(%zu) = %.4f, p = %.6g\n",
              va.size(), r.df, r.t, r.p);
}

// ---------------------------------------------------------------------------
// export-scores

struct ExportScoresArgs {
  DataArgs data;
  std::string checkpoint;
  std::string split = "eval";
  std::string out = "scores.csv";
};

void run_export_scores(ExportScoresArgs& args) {
  const LoadedData data = load_data(args.data);
  const EvalSet eval_set = make_eval_set(data.manifest, data.audio_bank,
                                         data.caption_bank, args.split);
  const DualEncoder model = load_checkpoint(args.checkpoint);
  const ScoreMatrix scores{
      score_matrix(model, eval_set.caption_embeds, eval_set.audio_embeds),
      eval_set.caption_ids, eval_set.audio_ids};
  export_matrix_csv(scores.values, scores.row_ids, scores.col_ids, args.out);
  std::cout << "wrote " << args.out << " (" << scores.values.rows()
            << " captions x " << scores.values.cols() << " audios)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-to-rank engine for text-based audio retrieval"};
  app.require_subcommand(1);

  GenSynthArgs gen_args;
  CLI::App* gen =
      app.add_subcommand("gen-synth", "Generate a clustered synthetic dataset");
  gen->set_config("--config");
  gen->add_option("--clusters", gen_args.spec.n_clusters, "Number of clusters")
      ->required();
  gen->add_option("--per-cluster", gen_args.spec.items_per_cluster,
                  "Items per cluster")
      ->required();
  gen->add_option("--d-audio", gen_args.spec.d_audio, "Audio embedding dim")
      ->capture_default_str();
  gen->add_option("--d-text", gen_args.spec.d_text, "Caption embedding dim")
      ->capture_default_str();
  gen->add_option("--sigma", gen_args.spec.noise_sigma, "Latent noise sigma")
      ->capture_default_str();
  gen->add_option("--concentration", gen_args.spec.prototype_concentration,
                  "Prototype concentration toward a shared direction")
      ->capture_default_str();
  gen->add_option("--seed", gen_args.spec.seed, "PRNG seed")
      ->capture_default_str();
  gen->add_option("--out-dir", gen_args.out_dir, "Output directory")->required();
  gen->add_flag("--force", gen_args.force, "Write into a non-empty directory");

  RelevanceArgs rel_args;
  CLI::App* rel = app.add_subcommand("relevance",
                                     "Export the corpus relevance matrix as CSV");
  rel->set_config("--config");
  add_data_options(rel, rel_args.data);
  add_transform_options(rel, rel_args.transform);
  rel->add_option("--split", rel_args.split, "Manifest split to use")
      ->check(CLI::IsMember({"train", "valid", "eval"}))
      ->capture_default_str();
  rel->add_option("--out", rel_args.out, "Output CSV path")->capture_default_str();

  TrainCmdArgs train_args;
  CLI::App* tr = app.add_subcommand("train", "Train the dual projection heads");
  tr->set_config("--config");
  add_data_options(tr, train_args.data);
  add_transform_options(tr, train_args.transform);
  add_train_options(tr, train_args.train);
  tr->add_option("--objective", train_args.objective, "Training objective")
      ->check(CLI::IsMember(kObjectives))
      ->capture_default_str();
  tr->add_option("--eval-every", train_args.eval_every,
                 "Report valid-split mAP@10 every N epochs (0 = never)")
      ->capture_default_str();
  tr->add_flag("--timings", train_args.timings,
               "Record wall-clock seconds in history.csv");
  tr->add_option("--out-dir", train_args.out_dir, "Output directory")
      ->capture_default_str();
  tr->add_flag("--force", train_args.force, "Write into a non-empty directory");

  EvaluateArgs eval_args;
  CLI::App* ev = app.add_subcommand(
      "evaluate", "Evaluate a checkpoint, or train per seed and aggregate");
  ev->set_config("--config");
  add_data_options(ev, eval_args.data);
  add_transform_options(ev, eval_args.transform);
  add_train_options(ev, eval_args.train);
  ev->add_option("--checkpoint", eval_args.checkpoint,
                 "Evaluate this checkpoint instead of training");
  ev->add_option("--direction", eval_args.direction, "Retrieval direction")
      ->check(CLI::IsMember({"text-to-audio", "audio-to-text"}))
      ->capture_default_str();
  ev->add_option("--split", eval_args.split, "Evaluation split")
      ->check(CLI::IsMember({"train", "valid", "eval"}))
      ->capture_default_str();
  ev->add_option("--objectives", eval_args.objectives,
                 "Objectives to train and compare (multi-run mode)")
      ->delimiter(',')
      ->check(CLI::IsMember(kObjectives))
      ->capture_default_str();
  ev->add_option("--seeds", eval_args.seeds, "Training seeds (multi-run mode)")
      ->delimiter(',');
  ev->add_option("--runs", eval_args.runs,
                 "Number of runs; seeds default to seed..seed+runs-1")
      ->capture_default_str();
  ev->add_flag("--timings", eval_args.timings,
               "Record wall-clock seconds in history CSVs");
  ev->add_option("--out-dir", eval_args.out_dir, "Output directory")
      ->capture_default_str();
  ev->add_flag("--force", eval_args.force, "Write into a non-empty directory");

  SignificanceArgs sig_args;
  CLI::App* sig = app.add_subcommand(
      "significance", "Paired t-test between two per-query AP reports");
  sig->set_config("--config");
  sig->add_option("--report-a", sig_args.report_a, "First per-query AP CSV")
      ->required();
  sig->add_option("--report-b", sig_args.report_b, "Second per-query AP CSV")
      ->required();

  ExportScoresArgs export_args;
  CLI::App* ex = app.add_subcommand("export-scores",
                                    "Score a split with a checkpoint, as CSV");
  ex->set_config("--config");
  add_data_options(ex, export_args.data);
  ex->add_option("--checkpoint", export_args.checkpoint, "Model checkpoint")
      ->required();
  ex->add_option("--split", export_args.split, "Manifest split to score")
      ->check(CLI::IsMember({"train", "valid", "eval"}))
      ->capture_default_str();
  ex->add_option("--out", export_args.out, "Output CSV path")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) run_gen_synth(gen_args);
    if (rel->parsed()) run_relevance(rel_args);
    if (tr->parsed()) run_train(train_args);
    if (ev->parsed()) run_evaluate(eval_args);
    if (sig->parsed()) run_significance(sig_args);
    if (ex->parsed()) run_export_scores(export_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
