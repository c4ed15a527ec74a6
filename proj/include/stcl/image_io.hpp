#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace stcl {

/// Planar RGB image, channel-major [3,H,W], values in [0,1].
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;
};

/// Decodes PNG (8/16-bit, any color type) or binary/ASCII PPM/PGM. Grayscale
/// inputs are replicated into three channels; alpha is dropped. Throws
/// DataError naming the file when it cannot be read.
RgbImage read_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

/// Bilinear resampling with half-pixel centers.
RgbImage resize_bilinear(const RgbImage& image, std::size_t height, std::size_t width);

}  // namespace stcl
