#include <cmath>

#include "doctest.h"
#include "stcl/error.hpp"
#include "stcl/scheduler.hpp"

using namespace stcl;

namespace {

StagePolicy knee_stage(std::size_t cap = 40) {
  KneeParams k;
  k.smoothing_window = 1;
  k.min_epochs = 5;
  return {{Difficulty::easy}, StopRule::at_knee(k), cap};
}

std::vector<double> hyperbola(std::size_t n) {
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + static_cast<double>(i) / 2.0);
  return y;
}

ModelConfig tiny_model() {
  ModelConfig c;
  c.image_height = 12;
  c.image_width = 12;
  c.hidden_channels = 3;
  c.encoder_layers = 2;
  c.decoder_layers = 2;
  c.seed = 4;
  return c;
}

}  // namespace

TEST_CASE("knee rule fires once the series shows a knee") {
  auto policy = knee_stage();
  auto y = hyperbola(30);
  std::optional<std::size_t> fired_at;
  for (std::size_t n = 1; n <= y.size() && !fired_at; ++n) {
    auto d = should_stop_stage(std::span(y).first(n), policy);
    if (d.stop) {
      fired_at = n;
      CHECK(d.report.triggered_by == StopTrigger::knee);
      CHECK(d.report.knee_epoch == n);
      REQUIRE(d.report.knee_index.has_value());
      CHECK(*d.report.knee_index < n);
      CHECK(d.report.difference_curve.size() == n);
    }
  }
  REQUIRE(fired_at.has_value());
  CHECK(*fired_at >= policy.rule.knee.min_epochs);
  CHECK(*fired_at < policy.epoch_cap);
}

TEST_CASE("knee rule falls back to the cap on a straight line") {
  auto policy = knee_stage(12);
  std::vector<double> y(12);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 3.0 - 0.1 * static_cast<double>(i);
  CHECK_FALSE(should_stop_stage(std::span(y).first(11), policy).stop);
  auto d = should_stop_stage(y, policy);
  CHECK(d.stop);
  CHECK(d.report.triggered_by == StopTrigger::cap);
  CHECK_FALSE(d.report.knee_index.has_value());
}

TEST_CASE("convergence rule waits for patience epochs without improvement") {
  StagePolicy p{{Difficulty::easy}, StopRule::at_convergence(3, 0.01), 40};
  std::vector<double> y{1.0, 0.8, 0.7, 0.695, 0.699, 0.692};
  CHECK_FALSE(should_stop_stage(std::span(y).first(5), p).stop);
  auto d = should_stop_stage(y, p);
  CHECK(d.stop);
  CHECK(d.report.triggered_by == StopTrigger::converge);
}

TEST_CASE("plans are validated") {
  CHECK_NOTHROW(CurriculumPlan::standard().validate());
  auto p = CurriculumPlan::standard();
  p.total_budget = 100;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = CurriculumPlan::standard();
  std::swap(p.stages[0].labels, p.stages[1].labels);
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = CurriculumPlan::standard();
  p.stages[0].epoch_cap = 10;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  CHECK_NOTHROW(CurriculumPlan::convergence_only().validate());
  CHECK_NOTHROW(CurriculumPlan::single_subset({Difficulty::hard}).validate());
  auto std_plan = CurriculumPlan::standard();
  CHECK(std_plan.stages[2].labels.size() == 3);
  CHECK(std_plan.stages[2].rule.kind == StopRule::Kind::converge);
}

TEST_CASE("stage pools only draw on the training split") {
  auto corpus = synth_corpus(20, 12, 12, 1);
  std::vector<Difficulty> labels(20, Difficulty::medium);
  for (std::size_t i = 0; i < 20; i += 3) labels[i] = Difficulty::easy;
  const std::vector<Difficulty> easy{Difficulty::easy};
  auto pool = stage_pool(corpus, labels, easy);
  for (auto i : pool) {
    CHECK(labels[i] == Difficulty::easy);
    CHECK(std::find(corpus.split.train.begin(), corpus.split.train.end(), i) != corpus.split.train.end());
  }
}

TEST_CASE("an empty stage pool fails before any training") {
  auto corpus = synth_corpus(20, 12, 12, 1);
  std::vector<Difficulty> labels(20, Difficulty::medium);
  bool trained = false;
  StageHooks hooks;
  hooks.on_epoch = [&](const LogRow&) { trained = true; };
  CHECK_THROWS_AS(run_curriculum(corpus, labels, CurriculumPlan::standard(), tiny_model(), TrainConfig{}, hooks),
                  ValidationError);
  CHECK_FALSE(trained);
}

TEST_CASE("curriculum tags stages, counts epochs globally and restarts Adam") {
  auto corpus = synth_corpus(24, 12, 12, 2);
  std::vector<Difficulty> labels(24, Difficulty::hard);
  for (std::size_t i = 0; i < 24; i += 2) labels[i] = Difficulty::easy;
  CurriculumPlan plan;
  plan.total_budget = 5;
  plan.stages = {{{Difficulty::easy}, StopRule::at_convergence(50), 2},
                 {{Difficulty::easy, Difficulty::hard}, StopRule::at_convergence(50), 2}};
  TrainConfig tc;
  tc.seed = 6;

  std::optional<Model> after_stage1;
  std::vector<KneeReport> seen;
  StageHooks hooks;
  hooks.on_stage_end = [&](std::size_t stage, const Model& m, const KneeReport& r) {
    if (stage == 1) after_stage1 = m;
    seen.push_back(r);
  };
  auto res = run_curriculum(corpus, labels, plan, tiny_model(), tc, hooks);
  REQUIRE(res.log.size() == 4);
  CHECK(res.log[0].stage == 1);
  CHECK(res.log[1].stage == 1);
  CHECK(res.log[2].stage == 2);
  CHECK(res.log[3].epoch == 4);
  REQUIRE(res.reports.size() == 2);
  CHECK(res.reports[0].triggered_by == StopTrigger::cap);
  CHECK(seen.size() == 2);
  REQUIRE(after_stage1.has_value());

  // stage 2 must behave like a fresh optimizer started from the stage-1 model
  const std::vector<Difficulty> both{Difficulty::easy, Difficulty::hard};
  auto pool = stage_pool(corpus, labels, both);
  AdamState fresh;
  auto r = train_epoch(*after_stage1, fresh, corpus, pool, corpus.split.val, tc, 3);
  CHECK(as_logged(to_log_row(3, 2, r)).val_loss == res.log[2].val_loss);
}

TEST_CASE("baseline runs exactly its budget on the full training split") {
  auto corpus = synth_corpus(16, 12, 12, 3);
  auto res = run_baseline(corpus, tiny_model(), TrainConfig{}, 3);
  REQUIRE(res.log.size() == 3);
  for (const auto& row : res.log) CHECK(row.stage == 0);
  REQUIRE(res.reports.size() == 1);
  CHECK(res.reports[0].epochs == 3);
  CHECK(knee_report_text(res.reports[0]).find("triggered_by=cap") != std::string::npos);
}
