#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stcl {

/// Planar image [C,H,W] with pixels in [0,1].
struct ImageView {
  std::span<const double> pixels;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t plane_size() const { return height * width; }
  std::span<const double> plane(std::size_t c) const {
    return pixels.subspan(c * plane_size(), plane_size());
  }
};

/// PSNR reported for identical images (MSE == 0), and the upper clamp in
/// general, so that difficulty thresholds never compare against infinity.
inline constexpr double kPsnrCap = 100.0;
inline constexpr double kBceClamp = 1e-7;
inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;
/// Smallest per-scale side for which MS-SSIM still evaluates a level; below
/// 11 pixels the Gaussian window is truncated to the largest odd size that fits.
inline constexpr std::size_t kMsSsimMinSide = 7;
inline constexpr std::size_t kMsSsimMaxScales = 5;

struct MetricReport {
  double ssim = 0.0;
  double msssim = 0.0;
  double psnr = 0.0;
  double rmse = 0.0;
  double accuracy = 0.0;
};

/// Mean local SSIM (11x11 Gaussian window, sigma 1.5, K1=0.01, K2=0.03, L=1,
/// valid positions only), averaged over channels.
double ssim(ImageView x, ImageView y);

/// Same value as ssim(x, y); additionally accumulates seed * d ssim / d y
/// into grad_y (same layout as y).
double ssim_with_grad(ImageView x, ImageView y, std::span<double> grad_y, double seed = 1.0);

/// Number of levels auto mode uses for an image of this size.
std::size_t ms_ssim_auto_scales(std::size_t height, std::size_t width);

/// Multi-scale SSIM averaged over channels. scales == 0 selects the largest
/// count the image supports (at most 5); an explicit count the image cannot
/// support throws ValidationError. Exponents are the standard five-scale
/// weights truncated to the active levels and renormalized to sum to 1.
double ms_ssim(ImageView x, ImageView y, std::size_t scales = 0);
double ms_ssim_with_grad(ImageView x, ImageView y, std::span<double> grad_y, double seed = 1.0,
                         std::size_t scales = 0);
std::vector<double> ms_ssim_weights(std::size_t scales);

double mse(ImageView x, ImageView y);
double rmse(ImageView x, ImageView y);
double rmse_with_grad(ImageView x, ImageView y, std::span<double> grad_y, double seed = 1.0);
/// 10*log10(1/MSE) with peak 1, clamped to kPsnrCap.
double psnr(ImageView x, ImageView y);

/// Mean binary cross-entropy with probabilities clamped to [1e-7, 1-1e-7].
double bce(std::span<const double> probs, std::span<const double> targets);
double bce_with_grad(std::span<const double> probs, std::span<const double> targets,
                     std::span<double> grad_probs, double seed = 1.0);

/// Fraction of positions where (p >= 0.5) equals the target bit.
double bit_accuracy(std::span<const double> probs, std::span<const double> targets);

std::vector<double> widen(std::span<const float> values);
std::vector<double> widen(std::span<const double> values);

}  // namespace stcl
