// stcl: command-line driver for teacher training, difficulty partitioning,
// curriculum/baseline training, evaluation, steganalysis and knee detection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "stcl/checkpoint.hpp"
#include "stcl/config.hpp"
#include "stcl/csv.hpp"
#include "stcl/error.hpp"
#include "stcl/metrics.hpp"

namespace fs = std::filesystem;
using namespace stcl;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string corpus;
  std::string out;
  bool force = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, const std::string& out_help) {
  cmd->add_option("--config", c.config, "Flat JSON config; every key optional");
  cmd->add_option("--seed", c.seed, "Root seed for every generator unless the config names one explicitly");
  cmd->add_option("--corpus", c.corpus, "Image directory, 'synthetic' or 'synthetic:<n>' (overrides the config)");
  cmd->add_option("--out", c.out, out_help)->required();
  cmd->add_flag("--force", c.force, "Overwrite existing outputs");
  cmd->add_flag("--quiet", c.quiet, "No per-epoch progress on stderr");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (c.seed) {
    // A flag seed wins over the config seeds.
    cfg.set_seed(*c.seed);
  }
  if (!c.corpus.empty()) cfg.corpus = c.corpus;
  cfg.validate();
  return cfg;
}

Corpus open(const RunConfig& cfg) {
  return open_corpus(cfg.corpus, cfg.corpus_size, cfg.model.image_height, cfg.model.image_width, cfg.corpus_seed);
}

void prepare_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_directory(dir)) throw ValidationError(dir.string() + " exists and is not a directory");
  if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
    throw ValidationError("output directory " + dir.string() + " is not empty (use --force to overwrite)");
  }
  fs::create_directories(dir);
}

void prepare_file(const fs::path& file, bool force) {
  if (fs::exists(file) && !force) {
    throw ValidationError("output file " + file.string() + " exists (use --force to overwrite)");
  }
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

std::function<void(const LogRow&)> progress(const Common& c, const std::string& tag) {
  if (c.quiet) return {};
  return [tag](const LogRow& r) {
    std::fprintf(stderr, "%s epoch %zu stage %zu train %.5f val %.5f ssim %.4f psnr %.2f acc %.4f\n", tag.c_str(),
                 r.epoch, r.stage, r.train_loss, r.val_loss, r.ssim, r.psnr, r.accuracy);
  };
}

std::vector<Model> load_teachers(const fs::path& dir) {
  std::vector<Model> out;
  for (std::size_t j = 1;; ++j) {
    const auto path = dir / ("teacher_" + std::to_string(j) + ".stcl");
    if (!fs::exists(path)) break;
    out.push_back(model_from(load_checkpoint(path)));
  }
  if (out.empty()) throw DataError("no teacher_<j>.stcl checkpoints in " + dir.string());
  return out;
}

// ---------------------------------------------------------------- commands

int cmd_train_teachers(const Common& c) {
  const auto cfg = resolve(c);
  const fs::path out = c.out;
  prepare_dir(out, c.force);
  const auto corpus = open(cfg);
  const auto ladder = train_teachers(corpus, cfg.model, cfg.train, cfg.teachers, progress(c, "teacher"));
  nlohmann::ordered_json meta;
  meta["budgets"] = cfg.teachers.epochs;
  meta["convergence_budget"] = cfg.teachers.convergence;
  auto fps = nlohmann::ordered_json::array();
  for (std::size_t j = 0; j < ladder.teachers.size(); ++j) {
    const auto ckpt = model_checkpoint(ladder.teachers[j]);
    save_checkpoint(out / ("teacher_" + std::to_string(j + 1) + ".stcl"), ckpt);
    write_csv(out / ("teacher_" + std::to_string(j + 1) + "_log.csv"), log_table(ladder.logs[j]));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(ckpt.fingerprint()));
    fps.push_back(buf);
  }
  meta["fingerprints"] = fps;
  write_text(out / "ladder.json", meta.dump(2) + "\n");
  write_text(out / "config.json", config_json(cfg));
  std::printf("wrote %zu teachers to %s\n", ladder.teachers.size(), out.string().c_str());
  return 0;
}

int cmd_partition(const Common& c, const std::string& teachers_dir) {
  const auto cfg = resolve(c);
  const fs::path out = c.out;
  prepare_file(out, c.force);
  const auto corpus = open(cfg);
  auto teachers = load_teachers(teachers_dir);
  std::vector<std::unique_ptr<ModelEncoder>> encoders;
  std::vector<StegoEncoder*> ptrs;
  for (auto& t : teachers) {
    encoders.push_back(std::make_unique<ModelEncoder>(t));
    ptrs.push_back(encoders.back().get());
  }
  const auto manifest = partition(corpus, ptrs, cfg.thresholds, cfg.payload_seed);
  write_manifest(out, manifest);
  std::printf("easy=%zu medium=%zu hard=%zu total=%zu\n", manifest.count(Difficulty::easy),
              manifest.count(Difficulty::medium), manifest.count(Difficulty::hard), manifest.entries.size());
  return 0;
}

std::vector<Difficulty> parse_subset(const std::string& text) {
  if (text == "easy+medium") return {Difficulty::easy, Difficulty::medium};
  return {parse_difficulty(text)};
}

int cmd_train(const Common& c, const std::string& mode, const std::string& subset, const std::string& manifest_path,
              std::optional<std::size_t> budget) {
  const auto cfg = resolve(c);
  const fs::path out = c.out;
  if (mode != "stcl" && mode != "baseline" && mode != "subset") {
    throw ValidationError("--mode must be stcl, baseline or subset");
  }
  if (mode != "baseline" && manifest_path.empty()) throw ValidationError("--mode " + mode + " needs --manifest");
  if (mode == "subset" && subset.empty()) throw ValidationError("--mode subset needs --subset");
  if (mode == "baseline" && !manifest_path.empty()) {
    std::fprintf(stderr, "warning: --manifest is ignored in baseline mode\n");
  }
  prepare_dir(out, c.force);
  const auto corpus = open(cfg);

  StageHooks hooks;
  hooks.on_epoch = progress(c, mode);
  hooks.on_stage_end = [&](std::size_t stage, const Model& model, const KneeReport& report) {
    const auto stem = "stage_" + std::to_string(stage);
    save_checkpoint(out / (stem + ".stcl"), model_checkpoint(model));
    write_text(out / (stem + "_knee.txt"), knee_report_text(report));
  };

  CurriculumResult result = [&] {
    if (mode == "baseline") return run_baseline(corpus, cfg.model, cfg.train, budget.value_or(cfg.total_budget), hooks);
    const auto labels = read_manifest(manifest_path).labels_for(corpus);
    if (mode == "stcl") return run_curriculum(corpus, labels, cfg.plan(), cfg.model, cfg.train, hooks);
    const auto plan = CurriculumPlan::single_subset(parse_subset(subset), budget.value_or(cfg.total_budget),
                                                    cfg.patience, cfg.min_delta);
    return run_curriculum(corpus, labels, plan, cfg.model, cfg.train, hooks);
  }();

  save_checkpoint(out / "final.stcl", model_checkpoint(result.model));
  write_csv(out / "log.csv", log_table(result.log));
  write_text(out / "config.json", config_json(cfg));
  const auto& last = result.log.back();
  std::printf("epochs=%zu ssim=%s msssim=%s psnr=%s rmse=%s accuracy=%s\n", result.epochs(),
              fixed(last.ssim, 6).c_str(), fixed(last.msssim, 6).c_str(), fixed(last.psnr, 6).c_str(),
              fixed(last.rmse, 6).c_str(), fixed(last.accuracy, 6).c_str());
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& checkpoint, const std::string& manifest_path,
                 const std::string& histogram_path) {
  const auto cfg = resolve(c);
  const fs::path out = c.out;
  const fs::path hist = histogram_path.empty() ? fs::path(out.string() + ".hist.csv") : fs::path(histogram_path);
  prepare_file(out, c.force);
  prepare_file(hist, c.force);
  auto model = model_from(load_checkpoint(checkpoint));
  RunConfig sized = cfg;
  sized.model.image_height = model.config().image_height;
  sized.model.image_width = model.config().image_width;
  const auto corpus = open(sized);
  const auto& test = corpus.split.test;
  if (test.empty()) throw ValidationError("evaluate: the test split is empty");

  CsvTable report;
  report.header = {"subset", "count", "loss", "ssim", "msssim", "psnr", "rmse", "accuracy"};
  auto add_row = [&](const std::string& name, const std::vector<std::size_t>& idx) {
    if (idx.empty()) {
      report.rows.push_back({name, "0", "", "", "", "", "", ""});
      return;
    }
    const auto e = evaluate(model, corpus, idx, cfg.train.weights, cfg.payload_seed);
    report.rows.push_back({name, std::to_string(idx.size()), fixed(e.loss, 6), fixed(e.report.ssim, 6),
                           fixed(e.report.msssim, 6), fixed(e.report.psnr, 6), fixed(e.report.rmse, 6),
                           fixed(e.report.accuracy, 6)});
  };
  add_row("overall", test);
  if (!manifest_path.empty()) {
    const auto labels = read_manifest(manifest_path).labels_for(corpus);
    for (auto d : {Difficulty::easy, Difficulty::medium, Difficulty::hard}) {
      std::vector<std::size_t> idx;
      for (auto i : test) {
        if (labels[i] == d) idx.push_back(i);
      }
      add_row(to_string(d), idx);
    }
  }
  write_csv(out, report);

  const auto stegos = embed_images(model, corpus, test, cfg.payload_seed);
  const std::size_t hw = corpus.height * corpus.width;
  std::array<std::array<std::array<std::size_t, 256>, 3>, 2> counts{};
  auto bin = [](float v) {
    const long b = std::lround(static_cast<double>(v) * 255.0);
    return static_cast<std::size_t>(std::clamp(b, 0L, 255L));
  };
  for (std::size_t k = 0; k < test.size(); ++k) {
    const auto& cover = corpus.samples[test[k]].pixels;
    for (std::size_t ch = 0; ch < 3; ++ch) {
      for (std::size_t i = 0; i < hw; ++i) {
        ++counts[0][ch][bin(cover[ch * hw + i])];
        ++counts[1][ch][bin(stegos[k][ch * hw + i])];
      }
    }
  }
  CsvTable h;
  h.header = {"set", "channel", "bin", "count"};
  const char* sets[] = {"cover", "stego"};
  const char* channels[] = {"r", "g", "b"};
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t ch = 0; ch < 3; ++ch) {
      for (std::size_t b = 0; b < 256; ++b) {
        h.rows.push_back({sets[s], channels[ch], std::to_string(b), std::to_string(counts[s][ch][b])});
      }
    }
  }
  write_csv(hist, h);
  std::printf("%s", to_csv_string(report).c_str());
  return 0;
}

int cmd_steganalyze(const Common& c, const std::string& detector_path, const std::vector<std::string>& models) {
  auto cfg = resolve(c);
  const fs::path out = c.out;
  if (models.empty()) throw ValidationError("steganalyze: give at least one --stego-model");
  prepare_dir(out, c.force);
  std::vector<Model> stego_models;
  for (const auto& m : models) stego_models.push_back(model_from(load_checkpoint(m)));
  cfg.model.image_height = stego_models.front().config().image_height;
  cfg.model.image_width = stego_models.front().config().image_width;
  const auto corpus = open(cfg);
  const std::size_t h = corpus.height, w = corpus.width;

  std::optional<Detector> detector;
  if (!detector_path.empty()) {
    detector.emplace(Detector::from(load_checkpoint(detector_path)));
  } else {
    // Covers from the training split against an equal number of stegos,
    // drawn round-robin from every supplied model.
    const auto& train = corpus.split.train;
    std::vector<std::vector<float>> covers, stegos;
    for (std::size_t k = 0; k < train.size(); ++k) {
      covers.push_back(corpus.samples[train[k]].pixels);
      const std::size_t idx[] = {train[k]};
      stegos.push_back(embed_images(stego_models[k % stego_models.size()], corpus, idx, cfg.payload_seed).front());
    }
    auto trained = train_detector(covers, stegos, h, w, cfg.detector);
    std::printf("detector holdout accuracy=%s (n=%zu)\n", fixed(trained.holdout_accuracy, 6).c_str(),
                trained.holdout_size);
    save_checkpoint(out / "detector.stcl", trained.detector.checkpoint());
    detector.emplace(std::move(trained.detector));
  }

  const auto& test = corpus.split.test;
  CsvTable summary;
  summary.header = {"set", "mean_score"};
  auto emit = [&](const std::string& name, const std::vector<std::vector<float>>& images) {
    const auto r = score_corpus(*detector, images, h, w);
    CsvTable t;
    t.header = {"image_id", "score"};
    for (std::size_t k = 0; k < test.size(); ++k) t.rows.push_back({corpus.samples[test[k]].id, fixed(r.scores[k], 6)});
    t.rows.push_back({"mean", fixed(r.mean, 6)});
    write_csv(out / (name + "_scores.csv"), t);
    summary.rows.push_back({name, fixed(r.mean, 6)});
  };
  std::vector<std::vector<float>> covers;
  for (auto i : test) covers.push_back(corpus.samples[i].pixels);
  emit("cover", covers);
  for (std::size_t m = 0; m < stego_models.size(); ++m) {
    emit(fs::path(models[m]).stem().string() + "_" + std::to_string(m + 1),
         embed_images(stego_models[m], corpus, test, cfg.payload_seed));
  }
  write_csv(out / "summary.csv", summary);
  std::printf("%s", to_csv_string(summary).c_str());
  return 0;
}

int cmd_detect_knee(const std::string& log_path, const std::string& column, std::optional<std::size_t> stage,
                    const KneeParams& params, const std::string& out) {
  const auto table = read_csv(log_path);
  auto series = table.numeric_column(column);
  if (stage) {
    const auto stages = table.numeric_column("stage");
    std::vector<double> kept;
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (static_cast<std::size_t>(stages[i]) == *stage) kept.push_back(series[i]);
    }
    series = std::move(kept);
  }
  const auto analysis = analyze_knee(series, params);
  if (!out.empty()) {
    CsvTable t;
    t.header = {"index", "value", "smoothed", "difference"};
    for (std::size_t i = 0; i < analysis.difference.size(); ++i) {
      t.rows.push_back({std::to_string(i), fixed(series[i], kLogDigits), fixed(analysis.smoothed[i], kLogDigits),
                        fixed(analysis.difference[i], kLogDigits)});
    }
    write_csv(out, t);
  }
  if (!analysis.knee) {
    std::printf("no knee\n");
    return 1;
  }
  std::printf("knee_index=%zu length=%zu\n", *analysis.knee, series.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curriculum training for image steganography: teachers, partition, staged training, evaluation"};
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "Print the tool and checkpoint-format versions");

  Common tt;
  auto* train_teachers_cmd = app.add_subcommand("train-teachers", "Train the teacher ladder (budgets C1<C2<C3<CN)");
  add_common(train_teachers_cmd, tt, "Directory for teacher checkpoints and logs");

  Common pt;
  std::string teachers_dir;
  auto* partition_cmd = app.add_subcommand("partition", "Score every sample under the teachers and label it");
  add_common(partition_cmd, pt, "Manifest CSV path (a .meta.json sidecar is written next to it)");
  partition_cmd->add_option("--teachers", teachers_dir, "Directory written by train-teachers")->required();

  Common tr;
  std::string mode = "stcl", subset, manifest;
  std::optional<std::size_t> budget;
  auto* train_cmd = app.add_subcommand("train", "Curriculum, baseline or single-subset training");
  add_common(train_cmd, tr, "Directory for logs, stage checkpoints and knee reports");
  train_cmd->add_option("--mode", mode, "stcl | baseline | subset")->check(CLI::IsMember({"stcl", "baseline", "subset"}));
  train_cmd->add_option("--subset", subset, "easy | medium | hard | easy+medium (subset mode)")
      ->check(CLI::IsMember({"easy", "medium", "hard", "easy+medium"}));
  train_cmd->add_option("--manifest", manifest, "Difficulty manifest (stcl and subset modes)");
  train_cmd->add_option("--budget", budget, "Epochs for baseline/subset runs (default: total_budget)");

  Common ev;
  std::string checkpoint, ev_manifest, histograms;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Metrics on the test split, overall and per difficulty");
  add_common(evaluate_cmd, ev, "Report CSV path");
  evaluate_cmd->add_option("--checkpoint", checkpoint, "Stego-model checkpoint")->required();
  evaluate_cmd->add_option("--manifest", ev_manifest, "Adds one row per difficulty label");
  evaluate_cmd->add_option("--histograms", histograms, "Histogram CSV path (default: <out>.hist.csv)");

  Common sa;
  std::string detector;
  std::vector<std::string> stego_models;
  auto* steganalyze_cmd = app.add_subcommand("steganalyze", "Train or load the detector and score stego sets");
  add_common(steganalyze_cmd, sa, "Directory for detector and score CSVs");
  steganalyze_cmd->add_option("--detector", detector, "Existing detector checkpoint (trained when omitted)");
  steganalyze_cmd->add_option("--covers", sa.corpus, "Cover corpus (alias of --corpus)");
  steganalyze_cmd->add_option("--stego-model", stego_models, "Stego-model checkpoint(s) to score")->required();

  std::string log_path, column = "val_loss", knee_out;
  std::optional<std::size_t> knee_stage;
  KneeParams knee;
  auto* knee_cmd = app.add_subcommand("detect-knee", "Offline knee detection on a saved log column");
  knee_cmd->add_option("--log", log_path, "Training log CSV")->required();
  knee_cmd->add_option("--column", column, "Column to analyse (default val_loss)");
  knee_cmd->add_option("--stage", knee_stage, "Only rows of this stage");
  knee_cmd->add_option("--window", knee.smoothing_window, "Smoothing window (odd, default 5)");
  knee_cmd->add_option("--sensitivity", knee.sensitivity, "Sensitivity S (default 1.0)");
  knee_cmd->add_option("--min-epochs", knee.min_epochs, "Shortest series considered (default 10)");
  knee_cmd->add_option("--out", knee_out, "Difference-curve CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (version) {
      std::printf("stcl %s (checkpoint format %u)\n", kVersion, static_cast<unsigned>(kCheckpointVersion));
      return 0;
    }
    if (*train_teachers_cmd) return cmd_train_teachers(tt);
    if (*partition_cmd) return cmd_partition(pt, teachers_dir);
    if (*train_cmd) return cmd_train(tr, mode, subset, manifest, budget);
    if (*evaluate_cmd) return cmd_evaluate(ev, checkpoint, ev_manifest, histograms);
    if (*steganalyze_cmd) return cmd_steganalyze(sa, detector, stego_models);
    if (*knee_cmd) return cmd_detect_knee(log_path, column, knee_stage, knee, knee_out);
    std::cout << app.help();
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
