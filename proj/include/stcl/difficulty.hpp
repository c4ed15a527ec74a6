#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stcl/corpus.hpp"
#include "stcl/csv.hpp"
#include "stcl/trainer.hpp"

namespace stcl {

enum class Difficulty { easy, medium, hard };

const char* to_string(Difficulty d);
/// Accepts "easy", "medium", "hard" in any case.
Difficulty parse_difficulty(const std::string& text);

struct Thresholds {
  double alpha1 = 0.9;
  double alpha2 = 0.8;
  double mu1 = 20.0;
  double mu2 = 12.0;

  /// Requires alpha1 > alpha2 and mu1 > mu2.
  void validate() const;
};

struct SampleScores {
  std::vector<double> ssim;
  std::vector<double> psnr;
};

/// Easy when every teacher is high on both scores, Hard when any teacher is
/// low on either score, Medium otherwise.
Difficulty classify(const SampleScores& scores, const Thresholds& t);

struct TeacherBudgets {
  std::vector<std::size_t> epochs{5, 15, 30};
  std::size_t convergence = 60;

  /// Strictly increasing, positive, and below the convergence budget.
  void validate() const;
};

/// Anything that turns covers [N,3,H,W] plus payloads [N,D,H,W] into stego
/// images in eval mode.
class StegoEncoder {
 public:
  virtual ~StegoEncoder() = default;
  virtual Tensor embed(const Tensor& covers, const Tensor& payloads) = 0;
  virtual const ModelConfig& config() const = 0;
  virtual std::uint64_t fingerprint() const = 0;
};

class ModelEncoder : public StegoEncoder {
 public:
  explicit ModelEncoder(Model& model);
  Tensor embed(const Tensor& covers, const Tensor& payloads) override;
  const ModelConfig& config() const override { return model_.config(); }
  std::uint64_t fingerprint() const override { return fingerprint_; }

 private:
  Model& model_;
  std::uint64_t fingerprint_;
};

struct TeacherLadder {
  std::vector<Model> teachers;
  std::vector<std::size_t> budgets;
  std::vector<TrainingLog> logs;
};

using EpochCallback = std::function<void(const LogRow&)>;

/// Teacher j is a fresh model (seed derived from the base seed and j) trained
/// for budgets.epochs[j] epochs on the training split.
TeacherLadder train_teachers(const Corpus& corpus, const ModelConfig& model, const TrainConfig& train,
                             const TeacherBudgets& budgets, const EpochCallback& on_epoch = {});

/// SSIM and PSNR of cover vs stego under each teacher, with the payload
/// fixed by (payload_seed, index).
SampleScores score_sample(const Corpus& corpus, std::size_t index, std::span<StegoEncoder* const> teachers,
                          std::uint64_t payload_seed);

struct ManifestEntry {
  std::string id;
  std::string path;
  Difficulty label = Difficulty::medium;
  SampleScores scores;
};

struct DifficultyManifest {
  std::vector<ManifestEntry> entries;
  Thresholds thresholds;
  std::uint64_t payload_seed = 0;
  std::uint64_t corpus_fingerprint = 0;
  std::vector<std::uint64_t> teacher_fingerprints;

  /// Changes whenever the corpus, a teacher, the thresholds or the seed do.
  std::uint64_t fingerprint() const;
  std::size_t count(Difficulty d) const;
  /// Label of every corpus sample, matched by id; throws DataError when the
  /// manifest does not cover the corpus.
  std::vector<Difficulty> labels_for(const Corpus& corpus) const;
};

/// Scores and classifies every sample. Throws ValidationError when no
/// training-split sample is Easy, since the first stage would have nothing
/// to train on.
DifficultyManifest partition(const Corpus& corpus, std::span<StegoEncoder* const> teachers,
                             const Thresholds& thresholds, std::uint64_t payload_seed);

/// Header id,path,label,s1,p1,...,sN,pN with scores at 6 decimals.
CsvTable manifest_table(const DifficultyManifest& manifest);
DifficultyManifest parse_manifest(const CsvTable& table);

/// Manifest CSV plus a JSON sidecar (path + ".meta.json") with the
/// thresholds, seed and fingerprints.
void write_manifest(const std::filesystem::path& path, const DifficultyManifest& manifest);
DifficultyManifest read_manifest(const std::filesystem::path& path);

}  // namespace stcl
