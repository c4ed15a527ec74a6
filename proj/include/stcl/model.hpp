#pragma once

#include <cstdint>
#include <vector>

#include "stcl/layers.hpp"

namespace stcl {

struct ModelConfig {
  std::size_t image_height = 32;
  std::size_t image_width = 32;
  std::size_t payload_depth = 1;
  std::size_t encoder_layers = 9;
  std::size_t decoder_layers = 5;
  std::size_t hidden_channels = 32;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Encoding loss is w_ssim*(1-SSIM) + w_msssim*(1-MSSSIM) + w_rmse*RMSE;
/// total = w_encode*encoding + w_decode*BCE.
struct LossWeights {
  double w_ssim = 0.5;
  double w_msssim = 0.5;
  double w_rmse = 0.3;
  double w_encode = 1.0;
  double w_decode = 0.7;

  void validate() const;
};

/// Encoder/decoder pair. The encoder sees the cover depth-concatenated with
/// the payload bit planes and emits a 3-channel stego image through a
/// sigmoid; the decoder maps a stego image to D bit probabilities.
///
/// Copies are deep: two models never share parameter storage.
template <typename T>
class StegoModel {
 public:
  explicit StegoModel(const ModelConfig& config);
  StegoModel(const StegoModel& other);
  StegoModel& operator=(const StegoModel& other);
  StegoModel(StegoModel&&) noexcept = default;
  StegoModel& operator=(StegoModel&&) noexcept = default;

  const ModelConfig& config() const { return config_; }

  /// cover [N,3,H,W], payload [N,D,H,W] -> stego [N,3,H,W]
  BasicTensor<T> encode(const BasicTensor<T>& cover, const BasicTensor<T>& payload, bool training);
  /// stego [N,3,H,W] -> probabilities [N,D,H,W]
  BasicTensor<T> decode(const BasicTensor<T>& stego, bool training);

  /// Handles aliasing the trainable tensors, in a fixed order.
  std::vector<BasicTensor<T>> parameters() const;
  void zero_grad();

  /// Trainable parameters plus normalization statistics, by name.
  std::vector<NamedArray> state() const;
  void load_state(const std::vector<NamedArray>& arrays);

 private:
  ModelConfig config_;
  std::vector<ConvBlock<T>> encoder_;
  std::vector<ConvBlock<T>> decoder_;
};

template <typename T>
struct LossBreakdown {
  BasicTensor<T> total;
  double ssim = 0.0;
  double msssim = 0.0;
  double rmse = 0.0;
  double bce = 0.0;
};

/// Throws NumericError if any term is not finite.
template <typename T>
LossBreakdown<T> composite_loss(const BasicTensor<T>& cover, const BasicTensor<T>& stego,
                                const BasicTensor<T>& payload, const BasicTensor<T>& probs,
                                const LossWeights& weights);

using Model = StegoModel<float>;

}  // namespace stcl
