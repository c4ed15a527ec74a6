#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stcl/tensor.hpp"

namespace stcl {

enum class ImageFamily { texture, gradient, solid, file };

const char* to_string(ImageFamily family);

struct SampleRecord {
  std::string id;
  std::string path;
  ImageFamily family = ImageFamily::file;
  std::vector<float> pixels;  // [3,H,W] in [0,1]
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

struct Corpus {
  std::vector<SampleRecord> samples;
  std::size_t height = 0;
  std::size_t width = 0;
  std::string source;
  Split split;

  std::size_t size() const { return samples.size(); }
  /// Hash over ids, sizes and pixel bits.
  std::uint64_t fingerprint() const;
};

inline constexpr double kTrainFraction = 0.70;
inline constexpr double kValFraction = 0.15;

/// Seeded permutation cut 70/15/15 (train and val rounded to nearest,
/// test takes the remainder).
Split assign_splits(std::size_t n, std::uint64_t seed);

/// Mix of filtered-noise textures, smooth gradients and muted solid-color
/// blocks with small texture patches, in 50/25/25 proportions (index i gets
/// texture for i%4 in {0,1}, gradient for 2, solid for 3). Needs n >= 10.
Corpus synth_corpus(std::size_t n, std::size_t height, std::size_t width, std::uint64_t seed);

/// Loads every .png/.ppm/.pgm file in `dir` (sorted by name), converts to
/// RGB in [0,1] and resizes bilinearly.
Corpus load_corpus(const std::filesystem::path& dir, std::size_t height, std::size_t width,
                   std::uint64_t seed);

/// Source "synthetic" (or "synthetic:<n>") generates, anything else is a directory.
Corpus open_corpus(const std::string& source, std::size_t count, std::size_t height, std::size_t width,
                   std::uint64_t seed);

struct Payload {
  std::vector<float> bits;  // [D,H,W], entries 0 or 1
  std::size_t depth = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::uint64_t seed = 0;
};

/// i.i.d. fair bits from a counter-based generator keyed on (seed, D, H, W).
Payload gen_payload(std::uint64_t seed, std::size_t depth, std::size_t height, std::size_t width);

/// Stacks the selected samples into [N,3,H,W].
Tensor gather_images(const Corpus& corpus, std::span<const std::size_t> indices);
Tensor stack_payloads(std::span<const Payload> payloads);

/// Spatial variance of each channel plane, averaged over channels.
double pixel_variance(std::span<const float> pixels, std::size_t channels = 3);

}  // namespace stcl
