#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "stcl/adam.hpp"
#include "stcl/checkpoint.hpp"
#include "stcl/layers.hpp"

namespace stcl {

/// The KV high-pass kernel (divided by 12); its entries sum to zero.
inline constexpr std::array<double, 25> kKvKernel = {
    -1, 2,  -2, 2,  -1,  //
    2,  -6, 8,  -6, 2,   //
    -2, 8,  -12, 8, -2,  //
    2,  -6, 8,  -6, 2,   //
    -1, 2,  -2, 2,  -1,
};
inline constexpr double kKvScale = 1.0 / 12.0;

/// Luma (0.299, 0.587, 0.114) filtered with the KV kernel under reflect
/// padding, so a constant image has an exactly zero residual.
/// images [N,3,H,W] -> [N,1,H,W]; no gradient is recorded.
Tensor residual_frontend(const Tensor& images);

struct DetectorConfig {
  std::size_t conv_blocks = 3;
  std::size_t channels = 8;
  std::uint64_t seed = 0;
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double holdout_fraction = 0.25;
  AdamConfig adam;

  void validate() const;
};

/// Residual front end, conv_blocks of 3x3 conv + BN + LeakyReLU, a 1x1
/// projection to one channel, global average pooling and a sigmoid.
class Detector {
 public:
  explicit Detector(const DetectorConfig& config);

  const DetectorConfig& config() const { return config_; }
  /// images [N,3,H,W] -> stego probability [N,1]
  Tensor forward(const Tensor& images, bool training);
  std::vector<Tensor> parameters() const;

  Checkpoint checkpoint() const;
  static Detector from(const Checkpoint& checkpoint);

 private:
  DetectorConfig config_;
  std::vector<ConvBlock<float>> blocks_;
};

struct DetectorTraining {
  Detector detector;
  double holdout_accuracy = 0.0;
  std::size_t holdout_size = 0;
};

/// Binary classifier on labelled images (1 = stego) trained with BCE. A
/// seeded holdout is kept aside for the reported accuracy. Throws
/// ValidationError when one class outnumbers the other more than 10:1.
DetectorTraining train_detector(std::span<const std::vector<float>> images, std::span<const int> labels,
                                std::size_t height, std::size_t width, const DetectorConfig& config);

/// Covers labelled 0 and stegos labelled 1.
DetectorTraining train_detector(std::span<const std::vector<float>> covers,
                                std::span<const std::vector<float>> stegos, std::size_t height, std::size_t width,
                                const DetectorConfig& config);

struct ScoreReport {
  std::vector<double> scores;
  double mean = 0.0;
};

/// Eval-mode stego probability per image and their mean. Throws
/// ValidationError on an empty set.
ScoreReport score_corpus(Detector& detector, std::span<const std::vector<float>> images, std::size_t height,
                         std::size_t width);

/// Fraction of images whose score falls on the side of 0.5 their label says.
double detection_accuracy(Detector& detector, std::span<const std::vector<float>> images,
                          std::span<const int> labels, std::size_t height, std::size_t width);

}  // namespace stcl
