#include "doctest.h"
#include "stcl/config.hpp"
#include "stcl/error.hpp"

using namespace stcl;

TEST_CASE("an empty config yields the defaults") {
  auto c = parse_config("{}");
  CHECK(c.model.encoder_layers == 9);
  CHECK(c.train.batch_size == 8);
  CHECK(c.thresholds.alpha1 == 0.9);
  CHECK(c.stage_cap == 40);
  CHECK(c.total_budget == 120);
  CHECK(c.corpus_size == 200);
  CHECK(c.plan().stages.size() == 3);
}

TEST_CASE("seed fans out and explicit seeds win") {
  auto c = parse_config(R"({"train_seed": 5, "seed": 9})");
  CHECK(c.model.seed == 9);
  CHECK(c.corpus_seed == 9);
  CHECK(c.detector.seed == 9);
  CHECK(c.train.seed == 5);
}

TEST_CASE("keys map onto their fields") {
  auto c = parse_config(R"({"alpha1": 0.75, "alpha2": 0.5, "mu1": 18, "teacher_budgets": [2, 4, 6],
                           "convergence_budget": 10, "hidden_channels": 16, "learning_rate": 0.002,
                           "w_decode": 1.0, "smoothing_window": 3, "stage_cap": 30, "total_budget": 90,
                           "min_epochs": 8, "corpus": "synthetic", "detector_epochs": 5})");
  CHECK(c.thresholds.alpha1 == 0.75);
  CHECK(c.thresholds.mu1 == 18.0);
  CHECK(c.teachers.epochs == std::vector<std::size_t>{2, 4, 6});
  CHECK(c.model.hidden_channels == 16);
  CHECK(c.train.adam.lr == 0.002);
  CHECK(c.train.weights.w_decode == 1.0);
  CHECK(c.knee.smoothing_window == 3);
  CHECK(c.plan().stages[0].epoch_cap == 30);
  CHECK(c.detector.epochs == 5);
}

TEST_CASE("invalid configs are validation errors") {
  CHECK_THROWS_AS(parse_config("{"), ValidationError);
  CHECK_THROWS_AS(parse_config("[]"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"colour": 1})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"batch_size": -1})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"alpha1": "high"})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"teacher_budgets": [5, 5, 30]})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"alpha1": 0.7})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"stage_cap": 50})"), ValidationError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), DataError);
}

TEST_CASE("config JSON round-trips") {
  auto c = parse_config(R"({"seed": 4, "alpha1": 0.8, "alpha2": 0.6, "patience": 7})");
  auto text = config_json(c);
  auto back = parse_config(text);
  CHECK(config_json(back) == text);
  CHECK(back.patience == 7);
  CHECK(back.model.seed == 4);
}
