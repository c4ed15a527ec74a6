#include "stcl/difficulty.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "stcl/checkpoint.hpp"
#include "stcl/error.hpp"
#include "stcl/hash.hpp"
#include "stcl/metrics.hpp"
#include "stcl/random.hpp"

namespace stcl {
namespace {

constexpr std::uint64_t kTeacherTag = 0x7EAC;
constexpr int kScoreDigits = 6;

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex(const std::string& s) { return std::stoull(s, nullptr, 16); }

std::filesystem::path meta_path(const std::filesystem::path& path) {
  return path.string() + ".meta.json";
}

}  // namespace

const char* to_string(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return "easy";
    case Difficulty::medium: return "medium";
    case Difficulty::hard: return "hard";
  }
  return "?";
}

Difficulty parse_difficulty(const std::string& text) {
  std::string s = text;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "easy") return Difficulty::easy;
  if (s == "medium") return Difficulty::medium;
  if (s == "hard") return Difficulty::hard;
  throw ValidationError("unknown difficulty label '" + text + "' (expected easy, medium or hard)");
}

void Thresholds::validate() const {
  for (double v : {alpha1, alpha2, mu1, mu2}) {
    if (!std::isfinite(v)) throw ValidationError("thresholds must be finite");
  }
  if (!(alpha1 > alpha2)) throw ValidationError("thresholds: alpha1 must exceed alpha2");
  if (!(mu1 > mu2)) throw ValidationError("thresholds: mu1 must exceed mu2");
}

Difficulty classify(const SampleScores& scores, const Thresholds& t) {
  t.validate();
  if (scores.ssim.size() != scores.psnr.size() || scores.ssim.empty()) {
    throw ValidationError("classify: need one SSIM and one PSNR score per teacher");
  }
  bool all_high = true;
  bool any_low = false;
  for (std::size_t j = 0; j < scores.ssim.size(); ++j) {
    all_high = all_high && scores.ssim[j] >= t.alpha1 && scores.psnr[j] >= t.mu1;
    any_low = any_low || scores.ssim[j] <= t.alpha2 || scores.psnr[j] <= t.mu2;
  }
  if (any_low) return Difficulty::hard;
  return all_high ? Difficulty::easy : Difficulty::medium;
}

void TeacherBudgets::validate() const {
  if (epochs.empty()) throw ValidationError("teacher budgets: need at least one teacher");
  for (std::size_t j = 0; j < epochs.size(); ++j) {
    if (epochs[j] == 0) throw ValidationError("teacher budgets must be positive");
    if (j > 0 && epochs[j] <= epochs[j - 1]) {
      throw ValidationError("teacher budgets must be strictly increasing (C1 < C2 < ... < CN)");
    }
  }
  if (epochs.back() >= convergence) {
    throw ValidationError("teacher budget " + std::to_string(epochs.back()) +
                          " must be below the convergence budget " + std::to_string(convergence));
  }
}

ModelEncoder::ModelEncoder(Model& model) : model_(model), fingerprint_(model_checkpoint(model).fingerprint()) {}

Tensor ModelEncoder::embed(const Tensor& covers, const Tensor& payloads) {
  NoGradGuard no_grad;
  return model_.encode(covers, payloads, false);
}

TeacherLadder train_teachers(const Corpus& corpus, const ModelConfig& model, const TrainConfig& train,
                             const TeacherBudgets& budgets, const EpochCallback& on_epoch) {
  budgets.validate();
  TeacherLadder ladder;
  ladder.budgets = budgets.epochs;
  for (std::size_t j = 0; j < budgets.epochs.size(); ++j) {
    ModelConfig mc = model;
    mc.seed = derive_seed(model.seed, {kTeacherTag, j});
    TrainConfig tc = train;
    tc.seed = derive_seed(train.seed, {kTeacherTag, j});
    Model teacher(mc);
    AdamState adam;
    TrainingLog log;
    for (std::size_t e = 1; e <= budgets.epochs[j]; ++e) {
      const auto result = train_epoch(teacher, adam, corpus, corpus.split.train, corpus.split.val, tc, e);
      log.push_back(to_log_row(e, 0, result));
      if (on_epoch) on_epoch(log.back());
    }
    ladder.teachers.push_back(std::move(teacher));
    ladder.logs.push_back(std::move(log));
  }
  return ladder;
}

SampleScores score_sample(const Corpus& corpus, std::size_t index, std::span<StegoEncoder* const> teachers,
                          std::uint64_t payload_seed) {
  if (index >= corpus.size()) throw ValidationError("score_sample: index out of range");
  SampleScores out;
  const std::size_t idx[] = {index};
  const auto cover = gather_images(corpus, idx);
  const auto cover_d = widen(cover.data());
  const ImageView cv{cover_d, 3, corpus.height, corpus.width};
  for (auto* teacher : teachers) {
    const auto& cfg = teacher->config();
    if (cfg.image_height != corpus.height || cfg.image_width != corpus.width) {
      throw CheckpointError(CheckpointFault::config_mismatch,
                            "teacher expects " + std::to_string(cfg.image_height) + "x" +
                                std::to_string(cfg.image_width) + " images, corpus has " +
                                std::to_string(corpus.height) + "x" + std::to_string(corpus.width));
    }
    const Payload payloads[] = {evaluation_payload(payload_seed, cfg, index)};
    const auto stego = teacher->embed(cover, stack_payloads(payloads));
    const auto stego_d = widen(stego.data());
    const ImageView sv{stego_d, 3, corpus.height, corpus.width};
    out.ssim.push_back(ssim(cv, sv));
    out.psnr.push_back(psnr(cv, sv));
  }
  return out;
}

std::uint64_t DifficultyManifest::fingerprint() const {
  Fnv1a h;
  h.add_value(corpus_fingerprint);
  h.add_value(static_cast<std::uint64_t>(teacher_fingerprints.size()));
  for (auto f : teacher_fingerprints) h.add_value(f);
  for (double v : {thresholds.alpha1, thresholds.alpha2, thresholds.mu1, thresholds.mu2}) h.add_value(v);
  h.add_value(payload_seed);
  return h.digest();
}

std::size_t DifficultyManifest::count(Difficulty d) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [d](const ManifestEntry& e) { return e.label == d; }));
}

std::vector<Difficulty> DifficultyManifest::labels_for(const Corpus& corpus) const {
  std::vector<Difficulty> out;
  out.reserve(corpus.size());
  std::size_t hint = 0;
  for (const auto& s : corpus.samples) {
    std::size_t found = entries.size();
    if (hint < entries.size() && entries[hint].id == s.id) {
      found = hint;
    } else {
      for (std::size_t k = 0; k < entries.size(); ++k) {
        if (entries[k].id == s.id) {
          found = k;
          break;
        }
      }
    }
    if (found == entries.size()) throw DataError("manifest has no entry for sample '" + s.id + "'");
    out.push_back(entries[found].label);
    hint = found + 1;
  }
  return out;
}

DifficultyManifest partition(const Corpus& corpus, std::span<StegoEncoder* const> teachers,
                             const Thresholds& thresholds, std::uint64_t payload_seed) {
  thresholds.validate();
  if (corpus.size() == 0) throw ValidationError("partition: corpus is empty");
  if (teachers.empty()) throw ValidationError("partition: need at least one teacher");
  DifficultyManifest m;
  m.thresholds = thresholds;
  m.payload_seed = payload_seed;
  m.corpus_fingerprint = corpus.fingerprint();
  for (auto* t : teachers) m.teacher_fingerprints.push_back(t->fingerprint());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ManifestEntry e;
    e.id = corpus.samples[i].id;
    e.path = corpus.samples[i].path;
    e.scores = score_sample(corpus, i, teachers, payload_seed);
    // Classify what the manifest records, so a re-read manifest agrees with itself.
    for (auto& v : e.scores.ssim) v = round_trip(v, kScoreDigits);
    for (auto& v : e.scores.psnr) v = round_trip(v, kScoreDigits);
    e.label = classify(e.scores, thresholds);
    m.entries.push_back(std::move(e));
  }
  const bool easy_in_train = std::any_of(corpus.split.train.begin(), corpus.split.train.end(),
                                         [&](std::size_t i) { return m.entries[i].label == Difficulty::easy; });
  if (!easy_in_train) {
    throw ValidationError("partition: no training sample is Easy (" + std::to_string(m.count(Difficulty::easy)) +
                          " Easy overall); lower alpha1/mu1 or train the teachers longer");
  }
  return m;
}

CsvTable manifest_table(const DifficultyManifest& manifest) {
  CsvTable t;
  t.header = {"id", "path", "label"};
  const std::size_t teachers = manifest.entries.empty() ? 0 : manifest.entries.front().scores.ssim.size();
  for (std::size_t j = 1; j <= teachers; ++j) {
    t.header.push_back("s" + std::to_string(j));
    t.header.push_back("p" + std::to_string(j));
  }
  for (const auto& e : manifest.entries) {
    std::vector<std::string> row{e.id, e.path, to_string(e.label)};
    for (std::size_t j = 0; j < e.scores.ssim.size(); ++j) {
      row.push_back(fixed(e.scores.ssim[j], kScoreDigits));
      row.push_back(fixed(e.scores.psnr[j], kScoreDigits));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

DifficultyManifest parse_manifest(const CsvTable& table) {
  const auto id = table.column_index("id");
  const auto path = table.column_index("path");
  const auto label = table.column_index("label");
  std::vector<std::size_t> s_cols, p_cols;
  for (std::size_t j = 1;; ++j) {
    const auto s = "s" + std::to_string(j);
    if (std::find(table.header.begin(), table.header.end(), s) == table.header.end()) break;
    s_cols.push_back(table.column_index(s));
    p_cols.push_back(table.column_index("p" + std::to_string(j)));
  }
  DifficultyManifest m;
  for (const auto& row : table.rows) {
    ManifestEntry e;
    e.id = row[id];
    e.path = row[path];
    e.label = parse_difficulty(row[label]);
    for (std::size_t j = 0; j < s_cols.size(); ++j) {
      e.scores.ssim.push_back(std::stod(row[s_cols[j]]));
      e.scores.psnr.push_back(std::stod(row[p_cols[j]]));
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const DifficultyManifest& manifest) {
  write_csv(path, manifest_table(manifest));
  nlohmann::ordered_json meta;
  meta["thresholds"] = {{"alpha1", manifest.thresholds.alpha1},
                        {"alpha2", manifest.thresholds.alpha2},
                        {"mu1", manifest.thresholds.mu1},
                        {"mu2", manifest.thresholds.mu2}};
  meta["payload_seed"] = manifest.payload_seed;
  meta["corpus_fingerprint"] = hex(manifest.corpus_fingerprint);
  auto teachers = nlohmann::ordered_json::array();
  for (auto f : manifest.teacher_fingerprints) teachers.push_back(hex(f));
  meta["teacher_fingerprints"] = teachers;
  meta["fingerprint"] = hex(manifest.fingerprint());
  meta["counts"] = {{"easy", manifest.count(Difficulty::easy)},
                    {"medium", manifest.count(Difficulty::medium)},
                    {"hard", manifest.count(Difficulty::hard)}};
  std::ofstream f(meta_path(path), std::ios::trunc);
  if (!f) throw DataError("cannot write " + meta_path(path).string());
  f << meta.dump(2) << '\n';
}

DifficultyManifest read_manifest(const std::filesystem::path& path) {
  auto m = parse_manifest(read_csv(path));
  std::ifstream f(meta_path(path));
  if (!f) return m;
  try {
    const auto meta = nlohmann::json::parse(f);
    const auto& t = meta.at("thresholds");
    m.thresholds = {t.at("alpha1").get<double>(), t.at("alpha2").get<double>(), t.at("mu1").get<double>(),
                    t.at("mu2").get<double>()};
    m.payload_seed = meta.at("payload_seed").get<std::uint64_t>();
    m.corpus_fingerprint = parse_hex(meta.at("corpus_fingerprint").get<std::string>());
    for (const auto& v : meta.at("teacher_fingerprints")) m.teacher_fingerprints.push_back(parse_hex(v.get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest metadata " + meta_path(path).string() + ": " + e.what());
  }
  return m;
}

}  // namespace stcl
