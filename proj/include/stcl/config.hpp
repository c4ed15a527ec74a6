#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "stcl/difficulty.hpp"
#include "stcl/scheduler.hpp"
#include "stcl/steganalyzer.hpp"
#include "stcl/trainer.hpp"

namespace stcl {

/// Everything a run needs, read from one flat JSON object. Every key is
/// optional; unknown keys are rejected.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  Thresholds thresholds;
  TeacherBudgets teachers;
  KneeParams knee;
  std::size_t stage_cap = 40;
  std::size_t total_budget = 120;
  std::size_t patience = 10;
  double min_delta = 1e-4;
  DetectorConfig detector;

  std::string corpus = "synthetic";
  std::size_t corpus_size = 200;
  std::uint64_t corpus_seed = 0;
  std::uint64_t payload_seed = 0;

  /// Sets every seed that is not given explicitly from one root.
  void set_seed(std::uint64_t seed);
  void validate() const;

  CurriculumPlan plan() const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
/// Flat JSON with every key, in a fixed order.
std::string config_json(const RunConfig& config);

}  // namespace stcl
