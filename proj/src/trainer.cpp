#include "stcl/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "stcl/error.hpp"
#include "stcl/random.hpp"

namespace stcl {
namespace {

constexpr std::size_t kEvalBatch = 16;

constexpr std::uint64_t kTrainPayloadTag = 0x7A11;
constexpr std::uint64_t kShuffleTag = 0x5F1E;

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ValidationError("batch_size must be >= 1");
  if (!(adam.lr > 0.0)) throw ValidationError("learning rate must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ValidationError("Adam betas must lie in [0,1)");
  }
  weights.validate();
}

LogRow to_log_row(std::size_t epoch, std::size_t stage, const EpochResult& r) {
  return {epoch, stage, r.train_loss, r.val_loss, r.val.ssim, r.val.msssim, r.val.psnr, r.val.rmse, r.val.accuracy};
}

Payload training_payload(const TrainConfig& config, const ModelConfig& model, std::size_t epoch,
                         std::size_t index) {
  return gen_payload(derive_seed(config.seed, {kTrainPayloadTag, epoch, index}), model.payload_depth,
                     model.image_height, model.image_width);
}

Payload evaluation_payload(std::uint64_t payload_seed, const ModelConfig& model, std::size_t index) {
  return gen_payload(derive_seed(payload_seed, {index}), model.payload_depth, model.image_height,
                     model.image_width);
}

EpochResult train_epoch(Model& model, AdamState& adam, const Corpus& corpus,
                        std::span<const std::size_t> pool, std::span<const std::size_t> val,
                        const TrainConfig& config, std::size_t epoch) {
  if (pool.empty()) throw ValidationError("train_epoch: training pool is empty");
  config.validate();
  std::vector<std::size_t> order(pool.begin(), pool.end());
  Rng rng(derive_seed(config.seed, {kShuffleTag, epoch}));
  std::shuffle(order.begin(), order.end(), rng.engine());

  auto params = model.parameters();
  if (adam.m.empty()) adam = AdamState::for_params<float>(params);

  double loss_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
    const std::size_t end = std::min(order.size(), start + config.batch_size);
    std::span<const std::size_t> batch(order.data() + start, end - start);
    std::vector<Payload> payloads;
    for (auto i : batch) payloads.push_back(training_payload(config, model.config(), epoch, i));
    auto cover = gather_images(corpus, batch);
    auto payload = stack_payloads(payloads);
    auto stego = model.encode(cover, payload, true);
    auto probs = model.decode(stego, true);
    auto loss = composite_loss(cover, stego, payload, probs, config.weights);
    model.zero_grad();
    loss.total.backward();
    adam_step<float>(params, adam, config.adam);
    loss_sum += static_cast<double>(loss.total.item()) * static_cast<double>(batch.size());
  }

  EpochResult result;
  result.train_loss = loss_sum / static_cast<double>(order.size());
  if (!val.empty()) {
    const auto eval = evaluate(model, corpus, val, config.weights, derive_seed(config.seed, {0xE7A1}));
    result.val_loss = eval.loss;
    result.val = eval.report;
  }
  return result;
}

Evaluation evaluate(Model& model, const Corpus& corpus, std::span<const std::size_t> indices,
                    const LossWeights& weights, std::uint64_t payload_seed) {
  if (indices.empty()) throw ValidationError("evaluate: no samples selected");
  NoGradGuard no_grad;
  const auto& cfg = model.config();
  const std::size_t per = 3 * cfg.image_height * cfg.image_width;
  Evaluation out;
  double loss_sum = 0.0, ssim_sum = 0.0, ms_sum = 0.0, psnr_sum = 0.0, rmse_sum = 0.0;
  std::size_t hits = 0, bits = 0;
  for (std::size_t start = 0; start < indices.size(); start += kEvalBatch) {
    const std::size_t end = std::min(indices.size(), start + kEvalBatch);
    std::span<const std::size_t> batch(indices.data() + start, end - start);
    std::vector<Payload> payloads;
    for (auto i : batch) payloads.push_back(evaluation_payload(payload_seed, cfg, i));
    auto cover = gather_images(corpus, batch);
    auto payload = stack_payloads(payloads);
    auto stego = model.encode(cover, payload, false);
    auto probs = model.decode(stego, false);
    auto loss = composite_loss(cover, stego, payload, probs, weights);
    loss_sum += static_cast<double>(loss.total.item()) * static_cast<double>(batch.size());

    const auto cover_d = widen(std::span<const float>(cover.data()));
    const auto stego_d = widen(std::span<const float>(stego.data()));
    for (std::size_t k = 0; k < batch.size(); ++k) {
      ImageView a{std::span<const double>(cover_d).subspan(k * per, per), 3, cfg.image_height, cfg.image_width};
      ImageView b{std::span<const double>(stego_d).subspan(k * per, per), 3, cfg.image_height, cfg.image_width};
      ssim_sum += ssim(a, b);
      ms_sum += ms_ssim(a, b);
      psnr_sum += psnr(a, b);
      rmse_sum += rmse(a, b);
    }
    for (std::size_t j = 0; j < probs.numel(); ++j) {
      hits += ((probs.data()[j] >= 0.5f) == (payload.data()[j] >= 0.5f)) ? 1 : 0;
    }
    bits += probs.numel();
  }
  const double n = static_cast<double>(indices.size());
  out.loss = loss_sum / n;
  out.report = {ssim_sum / n, ms_sum / n, psnr_sum / n, rmse_sum / n,
                static_cast<double>(hits) / static_cast<double>(bits)};
  return out;
}

std::vector<std::vector<float>> embed_images(Model& model, const Corpus& corpus,
                                             std::span<const std::size_t> indices,
                                             std::uint64_t payload_seed) {
  NoGradGuard no_grad;
  const auto& cfg = model.config();
  const std::size_t per = 3 * cfg.image_height * cfg.image_width;
  std::vector<std::vector<float>> out;
  for (std::size_t start = 0; start < indices.size(); start += kEvalBatch) {
    const std::size_t end = std::min(indices.size(), start + kEvalBatch);
    std::span<const std::size_t> batch(indices.data() + start, end - start);
    std::vector<Payload> payloads;
    for (auto i : batch) payloads.push_back(evaluation_payload(payload_seed, cfg, i));
    auto stego = model.encode(gather_images(corpus, batch), stack_payloads(payloads), false);
    for (std::size_t k = 0; k < batch.size(); ++k) {
      out.emplace_back(stego.data().begin() + static_cast<std::ptrdiff_t>(k * per),
                       stego.data().begin() + static_cast<std::ptrdiff_t>((k + 1) * per));
    }
  }
  return out;
}

}  // namespace stcl
