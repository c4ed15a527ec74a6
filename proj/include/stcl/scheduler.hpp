#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "stcl/corpus.hpp"
#include "stcl/csv.hpp"
#include "stcl/difficulty.hpp"
#include "stcl/knee.hpp"
#include "stcl/trainer.hpp"

namespace stcl {

struct StopRule {
  enum class Kind { knee, converge };
  Kind kind = Kind::knee;
  KneeParams knee;
  std::size_t patience = 10;
  double min_delta = 1e-4;

  static StopRule at_knee(KneeParams params = {}) { return {Kind::knee, params, 10, 1e-4}; }
  static StopRule at_convergence(std::size_t patience = 10, double min_delta = 1e-4) {
    return {Kind::converge, {}, patience, min_delta};
  }
};

struct StagePolicy {
  std::vector<Difficulty> labels;
  StopRule rule;
  std::size_t epoch_cap = 40;

  void validate() const;
};

struct CurriculumPlan {
  std::vector<StagePolicy> stages;
  std::size_t total_budget = 120;

  /// Checks every stage, that pools only grow, and that the caps fit the budget.
  void validate() const;

  /// Easy to knee, Easy+Medium to knee, everything to convergence.
  static CurriculumPlan standard(const KneeParams& knee = {}, std::size_t cap = 40, std::size_t patience = 10,
                                 double min_delta = 1e-4);
  /// The standard pools with every stage run to convergence instead of a knee.
  static CurriculumPlan convergence_only(std::size_t cap = 40, std::size_t patience = 10, double min_delta = 1e-4);
  /// One stage on a fixed label set, run to convergence within the budget.
  static CurriculumPlan single_subset(std::vector<Difficulty> labels, std::size_t budget = 120,
                                      std::size_t patience = 10, double min_delta = 1e-4);
};

enum class StopTrigger { none, knee, cap, converge };

const char* to_string(StopTrigger trigger);

struct KneeReport {
  std::size_t stage = 0;
  /// Stage-relative epoch (1-based) at which the knee rule fired.
  std::optional<std::size_t> knee_epoch;
  /// Index into the stage's validation-loss series of the knee itself.
  std::optional<std::size_t> knee_index;
  std::vector<double> difference_curve;
  StopTrigger triggered_by = StopTrigger::none;
  std::size_t epochs = 0;
};

struct StopDecision {
  bool stop = false;
  KneeReport report;
};

/// `val_losses` holds one entry per epoch of the current stage.
StopDecision should_stop_stage(std::span<const double> val_losses, const StagePolicy& policy);

struct StageHooks {
  std::function<void(const LogRow&)> on_epoch;
  /// Called at every stage boundary with the model as it leaves the stage.
  std::function<void(std::size_t stage, const Model&, const KneeReport&)> on_stage_end;
};

struct CurriculumResult {
  Model model;
  TrainingLog log;
  std::vector<KneeReport> reports;
  std::size_t epochs() const { return log.size(); }
};

/// Pool of training-split indices whose label is in `labels`.
std::vector<std::size_t> stage_pool(const Corpus& corpus, std::span<const Difficulty> corpus_labels,
                                    std::span<const Difficulty> labels);

/// Stages run in order from one model; Adam restarts at every boundary and
/// validation always uses the full validation split. Throws ValidationError
/// before training if any stage pool is empty.
CurriculumResult run_curriculum(const Corpus& corpus, std::span<const Difficulty> corpus_labels,
                                const CurriculumPlan& plan, const ModelConfig& model, const TrainConfig& train,
                                const StageHooks& hooks = {});

/// Plain shuffled training on the full training split for exactly `budget` epochs.
CurriculumResult run_baseline(const Corpus& corpus, const ModelConfig& model, const TrainConfig& train,
                              std::size_t budget, const StageHooks& hooks = {});

/// Text sidecar: key=value lines plus the difference curve.
std::string knee_report_text(const KneeReport& report);

}  // namespace stcl
