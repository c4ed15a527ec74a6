#include "stcl/steganalyzer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stcl/error.hpp"
#include "stcl/metric_ops.hpp"
#include "stcl/random.hpp"

namespace stcl {
namespace {

constexpr std::uint64_t kInitTag = 0xDE7E;
constexpr std::uint64_t kHoldoutTag = 0x401D;
constexpr std::uint64_t kShuffleTag = 0x5F1E;

std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  if (i < 0) i = -i;
  if (i >= m) i = 2 * (m - 1) - i;
  return static_cast<std::size_t>(i);
}

Tensor stack(std::span<const std::vector<float>> images, std::span<const std::size_t> idx, std::size_t h,
             std::size_t w) {
  const std::size_t per = 3 * h * w;
  std::vector<float> out;
  out.reserve(idx.size() * per);
  for (auto i : idx) {
    if (images[i].size() != per) {
      throw ValidationError("detector: image " + std::to_string(i) + " has " + std::to_string(images[i].size()) +
                            " values, expected " + std::to_string(per));
    }
    out.insert(out.end(), images[i].begin(), images[i].end());
  }
  return Tensor::from({idx.size(), 3, h, w}, std::move(out));
}

}  // namespace

Tensor residual_frontend(const Tensor& images) {
  if (images.rank() != 4 || images.dim(1) != 3) {
    throw ValidationError("residual_frontend: expected [N,3,H,W], got " + shape_str(images.shape()));
  }
  const std::size_t n = images.dim(0), h = images.dim(2), w = images.dim(3), hw = h * w;
  if (h < 3 || w < 3) throw ValidationError("residual_frontend: image must be at least 3x3");
  std::vector<double> gray(hw);
  std::vector<float> out(n * hw);
  const auto px = images.data();
  for (std::size_t b = 0; b < n; ++b) {
    const float* img = px.data() + b * 3 * hw;
    for (std::size_t i = 0; i < hw; ++i) {
      gray[i] = 0.299 * img[i] + 0.587 * img[hw + i] + 0.114 * img[2 * hw + i];
    }
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t dy = -2; dy <= 2; ++dy) {
          const std::size_t yy = reflect(static_cast<std::ptrdiff_t>(y) + dy, h);
          for (std::ptrdiff_t dx = -2; dx <= 2; ++dx) {
            const std::size_t xx = reflect(static_cast<std::ptrdiff_t>(x) + dx, w);
            acc += kKvKernel[static_cast<std::size_t>((dy + 2) * 5 + (dx + 2))] * gray[yy * w + xx];
          }
        }
        out[b * hw + y * w + x] = static_cast<float>(acc * kKvScale);
      }
    }
  }
  return Tensor::from({n, 1, h, w}, std::move(out));
}

void DetectorConfig::validate() const {
  if (conv_blocks < 1) throw ValidationError("detector: conv_blocks must be >= 1");
  if (channels < 1) throw ValidationError("detector: channels must be >= 1");
  if (batch_size < 2) throw ValidationError("detector: batch_size must be >= 2");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ValidationError("detector: holdout_fraction must lie in (0,1)");
  }
}

Detector::Detector(const DetectorConfig& config) : config_(config) {
  config_.validate();
  Rng rng(derive_seed(config_.seed, {kInitTag}));
  std::size_t in = 1;
  for (std::size_t i = 0; i < config_.conv_blocks; ++i) {
    blocks_.push_back(ConvBlock<float>::make(in, config_.channels, 3, true, Activation::leaky_relu, rng));
    in = config_.channels;
  }
  blocks_.push_back(ConvBlock<float>::make(in, 1, 1, false, Activation::identity, rng));
}

Tensor Detector::forward(const Tensor& images, bool training) {
  auto x = residual_frontend(images);
  for (auto& b : blocks_) x = b.forward(x, training);
  return sigmoid(global_avg_pool(x));
}

std::vector<Tensor> Detector::parameters() const {
  std::vector<Tensor> out;
  for (const auto& b : blocks_) b.collect_parameters(out);
  return out;
}

Checkpoint Detector::checkpoint() const {
  Checkpoint c;
  c.kind = "detector";
  c.config = {{"conv_blocks", config_.conv_blocks}, {"channels", config_.channels}, {"seed", config_.seed}};
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect_state("detector." + std::to_string(i), c.arrays);
  return c;
}

Detector Detector::from(const Checkpoint& checkpoint) {
  if (checkpoint.kind != "detector") {
    throw CheckpointError(CheckpointFault::config_mismatch,
                          "expected a detector checkpoint, found '" + checkpoint.kind + "'");
  }
  DetectorConfig cfg;
  cfg.conv_blocks = checkpoint.field("conv_blocks");
  cfg.channels = checkpoint.field("channels");
  cfg.seed = checkpoint.field("seed");
  Detector d(cfg);
  for (std::size_t i = 0; i < d.blocks_.size(); ++i) {
    d.blocks_[i].load_state("detector." + std::to_string(i), checkpoint.arrays);
  }
  return d;
}

DetectorTraining train_detector(std::span<const std::vector<float>> images, std::span<const int> labels,
                                std::size_t height, std::size_t width, const DetectorConfig& config) {
  config.validate();
  if (images.size() != labels.size()) throw ValidationError("train_detector: one label per image required");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t negatives = labels.size() - positives;
  const std::size_t lo = std::min(positives, negatives), hi = std::max(positives, negatives);
  if (lo == 0 || hi > 10 * lo) {
    throw ValidationError("train_detector: class imbalance " + std::to_string(positives) + " stego vs " +
                          std::to_string(negatives) + " cover exceeds 10:1");
  }

  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(config.seed, {kHoldoutTag}));
  std::shuffle(order.begin(), order.end(), split_rng.engine());
  const auto holdout_n = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(config.holdout_fraction * static_cast<double>(images.size()))), 1,
      images.size() - 1);
  std::vector<std::size_t> holdout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(holdout_n));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(holdout_n), order.end());
  std::sort(holdout.begin(), holdout.end());
  std::sort(train.begin(), train.end());

  DetectorTraining out{Detector(config), 0.0, holdout.size()};
  auto params = out.detector.parameters();
  auto adam = AdamState::for_params<float>(params);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto pass = train;
    Rng rng(derive_seed(config.seed, {kShuffleTag, epoch}));
    std::shuffle(pass.begin(), pass.end(), rng.engine());
    for (std::size_t start = 0; start < pass.size(); start += config.batch_size) {
      const std::size_t end = std::min(pass.size(), start + config.batch_size);
      if (end - start < 2) continue;  // batch statistics need two samples
      std::span<const std::size_t> batch(pass.data() + start, end - start);
      std::vector<float> target;
      for (auto i : batch) target.push_back(static_cast<float>(labels[i]));
      auto probs = out.detector.forward(stack(images, batch, height, width), true);
      auto loss = bce_term(probs, Tensor::from({batch.size(), 1}, std::move(target)));
      for (auto& p : params) p.zero_grad();
      loss.backward();
      adam_step<float>(params, adam, config.adam);
    }
  }

  std::vector<std::vector<float>> held;
  std::vector<int> held_labels;
  for (auto i : holdout) {
    held.push_back(images[i]);
    held_labels.push_back(labels[i]);
  }
  out.holdout_accuracy = detection_accuracy(out.detector, held, held_labels, height, width);
  return out;
}

DetectorTraining train_detector(std::span<const std::vector<float>> covers,
                                std::span<const std::vector<float>> stegos, std::size_t height, std::size_t width,
                                const DetectorConfig& config) {
  std::vector<std::vector<float>> images(covers.begin(), covers.end());
  images.insert(images.end(), stegos.begin(), stegos.end());
  std::vector<int> labels(covers.size(), 0);
  labels.resize(images.size(), 1);
  return train_detector(images, labels, height, width, config);
}

ScoreReport score_corpus(Detector& detector, std::span<const std::vector<float>> images, std::size_t height,
                         std::size_t width) {
  if (images.empty()) throw ValidationError("score_corpus: no images to score");
  NoGradGuard no_grad;
  ScoreReport out;
  // Every image is scored alone so its score does not depend on its neighbours.
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::size_t idx[] = {i};
    out.scores.push_back(detector.forward(stack(images, idx, height, width), false).item());
  }
  double acc = 0.0;
  for (double s : out.scores) acc += s;
  out.mean = acc / static_cast<double>(out.scores.size());
  return out;
}

double detection_accuracy(Detector& detector, std::span<const std::vector<float>> images,
                          std::span<const int> labels, std::size_t height, std::size_t width) {
  const auto report = score_corpus(detector, images, height, width);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += ((report.scores[i] >= 0.5) == (labels[i] == 1)) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace stcl
