#include "stcl/scheduler.hpp"

#include <algorithm>
#include <sstream>

#include "stcl/error.hpp"

namespace stcl {

void StagePolicy::validate() const {
  if (labels.empty()) throw ValidationError("stage: pool selects no labels");
  if (epoch_cap == 0) throw ValidationError("stage: epoch_cap must be >= 1");
  if (rule.kind == StopRule::Kind::knee) {
    rule.knee.validate();
    if (rule.knee.min_epochs >= epoch_cap) {
      throw ValidationError("stage: knee min_epochs (" + std::to_string(rule.knee.min_epochs) +
                            ") must be below the epoch cap (" + std::to_string(epoch_cap) + ")");
    }
  } else {
    if (rule.patience == 0) throw ValidationError("stage: patience must be >= 1");
    if (!(rule.min_delta >= 0.0)) throw ValidationError("stage: min_delta must be >= 0");
  }
}

void CurriculumPlan::validate() const {
  if (stages.empty()) throw ValidationError("curriculum: no stages");
  std::size_t caps = 0;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    stages[s].validate();
    caps += stages[s].epoch_cap;
    if (s == 0) continue;
    for (auto d : stages[s - 1].labels) {
      if (std::find(stages[s].labels.begin(), stages[s].labels.end(), d) == stages[s].labels.end()) {
        throw ValidationError("curriculum: stage " + std::to_string(s + 1) + " drops label " + to_string(d) +
                              " used by the stage before it");
      }
    }
  }
  if (caps > total_budget) {
    throw ValidationError("curriculum: stage caps sum to " + std::to_string(caps) + ", above the budget of " +
                          std::to_string(total_budget));
  }
}

CurriculumPlan CurriculumPlan::standard(const KneeParams& knee, std::size_t cap, std::size_t patience,
                                        double min_delta) {
  CurriculumPlan p;
  p.stages = {{{Difficulty::easy}, StopRule::at_knee(knee), cap},
              {{Difficulty::easy, Difficulty::medium}, StopRule::at_knee(knee), cap},
              {{Difficulty::easy, Difficulty::medium, Difficulty::hard}, StopRule::at_convergence(patience, min_delta),
               cap}};
  p.total_budget = 3 * cap;
  return p;
}

CurriculumPlan CurriculumPlan::convergence_only(std::size_t cap, std::size_t patience, double min_delta) {
  auto p = standard({}, cap, patience, min_delta);
  for (auto& s : p.stages) s.rule = StopRule::at_convergence(patience, min_delta);
  return p;
}

CurriculumPlan CurriculumPlan::single_subset(std::vector<Difficulty> labels, std::size_t budget,
                                             std::size_t patience, double min_delta) {
  CurriculumPlan p;
  p.stages = {{std::move(labels), StopRule::at_convergence(patience, min_delta), budget}};
  p.total_budget = budget;
  return p;
}

const char* to_string(StopTrigger trigger) {
  switch (trigger) {
    case StopTrigger::none: return "none";
    case StopTrigger::knee: return "knee";
    case StopTrigger::cap: return "cap";
    case StopTrigger::converge: return "converge";
  }
  return "?";
}

StopDecision should_stop_stage(std::span<const double> val_losses, const StagePolicy& policy) {
  StopDecision out;
  const std::size_t n = val_losses.size();
  out.report.epochs = n;
  const auto& rule = policy.rule;
  if (rule.kind == StopRule::Kind::knee) {
    auto analysis = analyze_knee(val_losses, rule.knee);
    out.report.difference_curve = std::move(analysis.difference);
    if (analysis.knee) {
      out.stop = true;
      out.report.knee_epoch = n;
      out.report.knee_index = analysis.knee;
      out.report.triggered_by = StopTrigger::knee;
      return out;
    }
  } else if (n > 0) {
    double best = val_losses[0];
    std::size_t since = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (val_losses[i] < best - rule.min_delta) {
        best = val_losses[i];
        since = 0;
      } else {
        ++since;
      }
    }
    if (since >= rule.patience) {
      out.stop = true;
      out.report.triggered_by = StopTrigger::converge;
      return out;
    }
  }
  if (n >= policy.epoch_cap) {
    out.stop = true;
    out.report.triggered_by = StopTrigger::cap;
  }
  return out;
}

std::vector<std::size_t> stage_pool(const Corpus& corpus, std::span<const Difficulty> corpus_labels,
                                    std::span<const Difficulty> labels) {
  if (corpus_labels.size() != corpus.size()) {
    throw ValidationError("stage_pool: " + std::to_string(corpus_labels.size()) + " labels for " +
                          std::to_string(corpus.size()) + " samples");
  }
  std::vector<std::size_t> pool;
  for (auto i : corpus.split.train) {
    if (std::find(labels.begin(), labels.end(), corpus_labels[i]) != labels.end()) pool.push_back(i);
  }
  return pool;
}

CurriculumResult run_curriculum(const Corpus& corpus, std::span<const Difficulty> corpus_labels,
                                const CurriculumPlan& plan, const ModelConfig& model, const TrainConfig& train,
                                const StageHooks& hooks) {
  plan.validate();
  train.validate();
  if (corpus.split.val.empty()) throw ValidationError("curriculum: validation split is empty");
  std::vector<std::vector<std::size_t>> pools;
  for (std::size_t s = 0; s < plan.stages.size(); ++s) {
    pools.push_back(stage_pool(corpus, corpus_labels, plan.stages[s].labels));
    if (pools.back().empty()) {
      throw ValidationError("curriculum: stage " + std::to_string(s + 1) + " has an empty training pool");
    }
  }

  CurriculumResult result{Model(model), {}, {}};
  std::size_t epoch = 0;
  for (std::size_t s = 0; s < plan.stages.size(); ++s) {
    const auto& policy = plan.stages[s];
    AdamState adam;
    std::vector<double> val_losses;
    StopDecision decision;
    while (!decision.stop) {
      ++epoch;
      const auto r = train_epoch(result.model, adam, corpus, pools[s], corpus.split.val, train, epoch);
      const auto row = as_logged(to_log_row(epoch, s + 1, r));
      result.log.push_back(row);
      if (hooks.on_epoch) hooks.on_epoch(row);
      val_losses.push_back(row.val_loss);
      decision = should_stop_stage(val_losses, policy);
    }
    decision.report.stage = s + 1;
    if (hooks.on_stage_end) hooks.on_stage_end(s + 1, result.model, decision.report);
    result.reports.push_back(std::move(decision.report));
  }
  return result;
}

CurriculumResult run_baseline(const Corpus& corpus, const ModelConfig& model, const TrainConfig& train,
                              std::size_t budget, const StageHooks& hooks) {
  train.validate();
  if (corpus.split.train.empty()) throw ValidationError("baseline: training split is empty");
  if (budget == 0) throw ValidationError("baseline: budget must be >= 1");
  CurriculumResult result{Model(model), {}, {}};
  AdamState adam;
  for (std::size_t epoch = 1; epoch <= budget; ++epoch) {
    const auto r = train_epoch(result.model, adam, corpus, corpus.split.train, corpus.split.val, train, epoch);
    result.log.push_back(as_logged(to_log_row(epoch, 0, r)));
    if (hooks.on_epoch) hooks.on_epoch(result.log.back());
  }
  KneeReport report;
  report.triggered_by = StopTrigger::cap;
  report.epochs = budget;
  if (hooks.on_stage_end) hooks.on_stage_end(0, result.model, report);
  result.reports.push_back(std::move(report));
  return result;
}

std::string knee_report_text(const KneeReport& r) {
  std::ostringstream out;
  out << "stage=" << r.stage << '\n';
  out << "epochs=" << r.epochs << '\n';
  out << "triggered_by=" << to_string(r.triggered_by) << '\n';
  out << "knee_epoch=" << (r.knee_epoch ? std::to_string(*r.knee_epoch) : "none") << '\n';
  out << "knee_index=" << (r.knee_index ? std::to_string(*r.knee_index) : "none") << '\n';
  out << "difference_curve=";
  for (std::size_t i = 0; i < r.difference_curve.size(); ++i) {
    out << (i ? "," : "") << fixed(r.difference_curve[i], 6);
  }
  out << '\n';
  return out.str();
}

}  // namespace stcl
