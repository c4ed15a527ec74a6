#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stcl/adam.hpp"
#include "stcl/corpus.hpp"
#include "stcl/csv.hpp"
#include "stcl/metrics.hpp"
#include "stcl/model.hpp"

namespace stcl {

struct TrainConfig {
  std::size_t batch_size = 8;
  AdamConfig adam;
  LossWeights weights;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochResult {
  double train_loss = 0.0;
  double val_loss = 0.0;
  MetricReport val;
};

LogRow to_log_row(std::size_t epoch, std::size_t stage, const EpochResult& result);

struct Evaluation {
  double loss = 0.0;
  MetricReport report;
};

/// One pass over `pool`: shuffled with a seed derived from (seed, epoch),
/// batches of batch_size, a fresh payload per sample, one Adam step per
/// batch. Validation uses eval-mode normalization and fixed payloads.
EpochResult train_epoch(Model& model, AdamState& adam, const Corpus& corpus,
                        std::span<const std::size_t> pool, std::span<const std::size_t> val,
                        const TrainConfig& config, std::size_t epoch);

/// Composite loss and metric means over `indices` with eval-mode
/// normalization. Payload for sample i is derived from (payload_seed, i).
Evaluation evaluate(Model& model, const Corpus& corpus, std::span<const std::size_t> indices,
                    const LossWeights& weights, std::uint64_t payload_seed);

/// Payload used for sample `index` during the given training epoch.
Payload training_payload(const TrainConfig& config, const ModelConfig& model, std::size_t epoch,
                         std::size_t index);
/// Payload used for sample `index` whenever it is evaluated.
Payload evaluation_payload(std::uint64_t payload_seed, const ModelConfig& model, std::size_t index);

/// Stego images for the selected samples (eval mode), one [3,H,W] vector each.
std::vector<std::vector<float>> embed_images(Model& model, const Corpus& corpus,
                                             std::span<const std::size_t> indices,
                                             std::uint64_t payload_seed);

}  // namespace stcl
