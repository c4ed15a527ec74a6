#include "stcl/model.hpp"

#include <cmath>

#include "stcl/error.hpp"
#include "stcl/metric_ops.hpp"

namespace stcl {

void ModelConfig::validate() const {
  if (image_height == 0 || image_width == 0) throw ValidationError("model: image size must be positive");
  if (payload_depth < 1) throw ValidationError("model: payload_depth must be >= 1");
  if (encoder_layers < 2) throw ValidationError("model: encoder_layers must be >= 2");
  if (decoder_layers < 2) throw ValidationError("model: decoder_layers must be >= 2");
  if (hidden_channels < 1) throw ValidationError("model: hidden_channels must be >= 1");
}

void LossWeights::validate() const {
  for (double w : {w_ssim, w_msssim, w_rmse, w_encode, w_decode}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("loss weights must be finite and >= 0");
  }
}

template <typename T>
StegoModel<T>::StegoModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  Rng rng(derive_seed(config_.seed, {0x5EED}));
  const std::size_t hidden = config_.hidden_channels;
  std::size_t in = 3 + config_.payload_depth;
  for (std::size_t i = 0; i + 1 < config_.encoder_layers; ++i) {
    encoder_.push_back(ConvBlock<T>::make(in, hidden, 3, true, Activation::leaky_relu, rng));
    in = hidden;
  }
  encoder_.push_back(ConvBlock<T>::make(in, 3, 3, false, Activation::sigmoid, rng));
  in = 3;
  for (std::size_t i = 0; i + 1 < config_.decoder_layers; ++i) {
    decoder_.push_back(ConvBlock<T>::make(in, hidden, 3, true, Activation::leaky_relu, rng));
    in = hidden;
  }
  decoder_.push_back(ConvBlock<T>::make(in, config_.payload_depth, 3, false, Activation::sigmoid, rng));
}

template <typename T>
StegoModel<T>::StegoModel(const StegoModel& other) : StegoModel(other.config_) {
  load_state(other.state());
}

template <typename T>
StegoModel<T>& StegoModel<T>::operator=(const StegoModel& other) {
  if (this != &other) *this = StegoModel(other);
  return *this;
}

template <typename T>
BasicTensor<T> StegoModel<T>::encode(const BasicTensor<T>& cover, const BasicTensor<T>& payload,
                                     bool training) {
  const Shape expect_cover{cover.rank() == 4 ? cover.dim(0) : 0, 3, config_.image_height,
                           config_.image_width};
  if (cover.shape() != expect_cover) {
    throw ValidationError("encode: cover must be [N,3," + std::to_string(config_.image_height) + "," +
                          std::to_string(config_.image_width) + "], got " + shape_str(cover.shape()));
  }
  const Shape expect_payload{cover.dim(0), config_.payload_depth, config_.image_height, config_.image_width};
  if (payload.shape() != expect_payload) {
    throw ValidationError("encode: payload must be " + shape_str(expect_payload) + ", got " +
                          shape_str(payload.shape()));
  }
  auto x = concat_channels(cover, payload);
  for (auto& block : encoder_) x = block.forward(x, training);
  return x;
}

template <typename T>
BasicTensor<T> StegoModel<T>::decode(const BasicTensor<T>& stego, bool training) {
  if (stego.rank() != 4 || stego.dim(1) != 3 || stego.dim(2) != config_.image_height ||
      stego.dim(3) != config_.image_width) {
    throw ValidationError("decode: stego must be [N,3," + std::to_string(config_.image_height) + "," +
                          std::to_string(config_.image_width) + "], got " + shape_str(stego.shape()));
  }
  auto x = stego;
  for (auto& block : decoder_) x = block.forward(x, training);
  return x;
}

template <typename T>
std::vector<BasicTensor<T>> StegoModel<T>::parameters() const {
  std::vector<BasicTensor<T>> out;
  for (const auto& b : encoder_) b.collect_parameters(out);
  for (const auto& b : decoder_) b.collect_parameters(out);
  return out;
}

template <typename T>
void StegoModel<T>::zero_grad() {
  for (auto& p : parameters()) p.zero_grad();
}

template <typename T>
std::vector<NamedArray> StegoModel<T>::state() const {
  std::vector<NamedArray> out;
  for (std::size_t i = 0; i < encoder_.size(); ++i) encoder_[i].collect_state("encoder." + std::to_string(i), out);
  for (std::size_t i = 0; i < decoder_.size(); ++i) decoder_[i].collect_state("decoder." + std::to_string(i), out);
  return out;
}

template <typename T>
void StegoModel<T>::load_state(const std::vector<NamedArray>& arrays) {
  for (std::size_t i = 0; i < encoder_.size(); ++i) encoder_[i].load_state("encoder." + std::to_string(i), arrays);
  for (std::size_t i = 0; i < decoder_.size(); ++i) decoder_[i].load_state("decoder." + std::to_string(i), arrays);
}

template <typename T>
LossBreakdown<T> composite_loss(const BasicTensor<T>& cover, const BasicTensor<T>& stego,
                                const BasicTensor<T>& payload, const BasicTensor<T>& probs,
                                const LossWeights& w) {
  auto s = ssim_term(cover, stego);
  auto ms = ms_ssim_term(cover, stego);
  auto r = rmse_term(cover, stego);
  auto b = bce_term(probs, payload);
  LossBreakdown<T> out;
  out.ssim = s.item();
  out.msssim = ms.item();
  out.rmse = r.item();
  out.bce = b.item();
  out.total = weighted_sum<T>({s, ms, r, b},
                              {-w.w_encode * w.w_ssim, -w.w_encode * w.w_msssim, w.w_encode * w.w_rmse,
                               w.w_decode},
                              w.w_encode * (w.w_ssim + w.w_msssim));
  if (!std::isfinite(out.ssim) || !std::isfinite(out.msssim) || !std::isfinite(out.rmse) ||
      !std::isfinite(out.bce) || !std::isfinite(static_cast<double>(out.total.item()))) {
    throw NumericError("composite loss is not finite (ssim " + std::to_string(out.ssim) + ", msssim " +
                       std::to_string(out.msssim) + ", rmse " + std::to_string(out.rmse) + ", bce " +
                       std::to_string(out.bce) + ")");
  }
  return out;
}

template class StegoModel<float>;
template class StegoModel<double>;
template LossBreakdown<float> composite_loss(const BasicTensor<float>&, const BasicTensor<float>&,
                                             const BasicTensor<float>&, const BasicTensor<float>&,
                                             const LossWeights&);
template LossBreakdown<double> composite_loss(const BasicTensor<double>&, const BasicTensor<double>&,
                                              const BasicTensor<double>&, const BasicTensor<double>&,
                                              const LossWeights&);

}  // namespace stcl
