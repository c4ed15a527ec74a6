#include "stcl/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "stcl/error.hpp"
#include "stcl/hash.hpp"
#include "stcl/image_io.hpp"
#include "stcl/random.hpp"

namespace stcl {
namespace {

std::vector<double> blur_plane(const std::vector<double>& src, std::size_t h, std::size_t w, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kern(2 * radius + 1);
  double s = 0.0;
  for (int i = -radius; i <= radius; ++i) s += kern[i + radius] = std::exp(-i * i / (2.0 * sigma * sigma));
  for (auto& v : kern) v /= s;
  auto wrap = [](long i, std::size_t n) { return static_cast<std::size_t>((i % static_cast<long>(n) + n) % n); };
  std::vector<double> tmp(h * w), out(h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kern[i + radius] * src[y * w + wrap(static_cast<long>(x) + i, w)];
      tmp[y * w + x] = acc;
    }
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kern[i + radius] * tmp[wrap(static_cast<long>(y) + i, h) * w + x];
      out[y * w + x] = acc;
    }
  return out;
}

void standardize(std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(v.size()));
  for (double& x : v) x = sd > 0 ? (x - mean) / sd : 0.0;
}

// Filtered noise, standardized, then spread around a per-channel base.
std::vector<float> make_texture(std::size_t h, std::size_t w, Rng& rng) {
  const double sigma = rng.uniform(0.6, 2.0);
  std::vector<double> shared(h * w);
  for (auto& v : shared) v = rng.normal();
  shared = blur_plane(shared, h, w, sigma);
  standardize(shared);
  std::vector<float> px(3 * h * w);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> own(h * w);
    for (auto& v : own) v = rng.normal();
    own = blur_plane(own, h, w, sigma);
    standardize(own);
    const double base = rng.uniform(0.4, 0.6);
    for (std::size_t i = 0; i < h * w; ++i) {
      const double z = 0.6 * shared[i] + 0.8 * own[i];
      px[c * h * w + i] = static_cast<float>(std::clamp(base + 0.24 * z, 0.0, 1.0));
    }
  }
  return px;
}

std::vector<float> make_gradient(std::size_t h, std::size_t w, Rng& rng) {
  double c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = rng.uniform(0.05, 0.95);
    c1[c] = rng.uniform(0.05, 0.95);
  }
  const bool radial = rng.uniform() < 0.3;
  const double angle = rng.uniform(0.0, 2.0 * M_PI);
  const double cx = rng.uniform(0.2, 0.8), cy = rng.uniform(0.2, 0.8);
  std::vector<float> px(3 * h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double u = (x + 0.5) / static_cast<double>(w), v = (y + 0.5) / static_cast<double>(h);
      double t;
      if (radial) {
        t = std::min(1.0, std::hypot(u - cx, v - cy) / 0.75);
      } else {
        t = 0.5 + ((u - 0.5) * std::cos(angle) + (v - 0.5) * std::sin(angle)) / std::sqrt(2.0);
      }
      for (int c = 0; c < 3; ++c) px[(c * h + y) * w + x] = static_cast<float>(c0[c] + (c1[c] - c0[c]) * t);
    }
  return px;
}

// Muted palette: blocks stay within 0.15 of the base color and patches are
// low-amplitude, which keeps variance below any texture image.
std::vector<float> make_solid(std::size_t h, std::size_t w, Rng& rng) {
  double base[3];
  for (auto& b : base) b = rng.uniform(0.2, 0.8);
  std::vector<float> px(3 * h * w);
  for (int c = 0; c < 3; ++c)
    std::fill(px.begin() + c * h * w, px.begin() + (c + 1) * h * w, static_cast<float>(base[c]));
  const std::size_t blocks = 1 + rng.below(3);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t bh = h / 4 + rng.below(h / 2), bw = w / 4 + rng.below(w / 2);
    const std::size_t y0 = rng.below(h - bh + 1), x0 = rng.below(w - bw + 1);
    double color[3];
    for (int c = 0; c < 3; ++c) color[c] = base[c] + rng.uniform(-0.15, 0.15);
    for (std::size_t y = y0; y < y0 + bh; ++y)
      for (std::size_t x = x0; x < x0 + bw; ++x)
        for (int c = 0; c < 3; ++c) px[(c * h + y) * w + x] = static_cast<float>(color[c]);
  }
  const std::size_t patches = 1 + rng.below(2);
  const std::size_t ph = std::max<std::size_t>(2, h / 6), pw = std::max<std::size_t>(2, w / 6);
  for (std::size_t p = 0; p < patches; ++p) {
    const std::size_t y0 = rng.below(h - ph + 1), x0 = rng.below(w - pw + 1);
    for (std::size_t y = y0; y < y0 + ph; ++y)
      for (std::size_t x = x0; x < x0 + pw; ++x) {
        const double n = rng.uniform(-0.08, 0.08);
        for (int c = 0; c < 3; ++c) {
          float& v = px[(c * h + y) * w + x];
          v = static_cast<float>(std::clamp(v + n, 0.0, 1.0));
        }
      }
  }
  return px;
}

}  // namespace

const char* to_string(ImageFamily family) {
  switch (family) {
    case ImageFamily::texture: return "texture";
    case ImageFamily::gradient: return "gradient";
    case ImageFamily::solid: return "solid";
    case ImageFamily::file: return "file";
  }
  return "file";
}

std::uint64_t Corpus::fingerprint() const {
  Fnv1a h;
  h.add_value(static_cast<std::uint64_t>(height));
  h.add_value(static_cast<std::uint64_t>(width));
  for (const auto& s : samples) {
    h.add_string(s.id);
    h.add_bytes(s.pixels.data(), s.pixels.size() * sizeof(float));
  }
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    h.add_value(static_cast<std::uint64_t>(part->size()));
    for (auto i : *part) h.add_value(static_cast<std::uint64_t>(i));
  }
  return h.digest();
}

Split assign_splits(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, {0x5B17}));
  std::shuffle(order.begin(), order.end(), rng.engine());
  const auto n_train = static_cast<std::size_t>(std::lround(kTrainFraction * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::lround(kValFraction * static_cast<double>(n))));
  Split split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                   order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  for (auto* part : {&split.train, &split.val, &split.test}) std::sort(part->begin(), part->end());
  return split;
}

Corpus synth_corpus(std::size_t n, std::size_t height, std::size_t width, std::uint64_t seed) {
  if (n < 10) throw ValidationError("synthetic corpus needs n >= 10, got " + std::to_string(n));
  if (height < 8 || width < 8) throw ValidationError("synthetic corpus needs images of at least 8x8");
  Corpus corpus;
  corpus.height = height;
  corpus.width = width;
  corpus.source = "synthetic";
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, {0xC0, i}));
    SampleRecord rec;
    const std::size_t slot = i % 4;
    rec.family = slot < 2 ? ImageFamily::texture : (slot == 2 ? ImageFamily::gradient : ImageFamily::solid);
    switch (rec.family) {
      case ImageFamily::texture: rec.pixels = make_texture(height, width, rng); break;
      case ImageFamily::gradient: rec.pixels = make_gradient(height, width, rng); break;
      default: rec.pixels = make_solid(height, width, rng); break;
    }
    char id[32];
    std::snprintf(id, sizeof id, "syn%05zu", i);
    rec.id = id;
    rec.path = std::string("synthetic/") + to_string(rec.family) + "/" + rec.id;
    corpus.samples.push_back(std::move(rec));
  }
  corpus.split = assign_splits(n, seed);
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& dir, std::size_t height, std::size_t width,
                   std::uint64_t seed) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("corpus directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm") files.push_back(entry.path());
  }
  if (files.empty()) throw DataError("corpus directory '" + dir.string() + "' contains no PNG/PPM images");
  std::sort(files.begin(), files.end());
  Corpus corpus;
  corpus.height = height;
  corpus.width = width;
  corpus.source = dir.string();
  for (const auto& f : files) {
    SampleRecord rec;
    rec.id = f.stem().string();
    rec.path = f.string();
    rec.family = ImageFamily::file;
    rec.pixels = resize_bilinear(read_image(f), height, width).pixels;
    corpus.samples.push_back(std::move(rec));
  }
  corpus.split = assign_splits(corpus.samples.size(), seed);
  return corpus;
}

Corpus open_corpus(const std::string& source, std::size_t count, std::size_t height, std::size_t width,
                   std::uint64_t seed) {
  if (source == "synthetic") return synth_corpus(count, height, width, seed);
  if (source.rfind("synthetic:", 0) == 0) {
    return synth_corpus(std::stoul(source.substr(10)), height, width, seed);
  }
  return load_corpus(source, height, width, seed);
}

Payload gen_payload(std::uint64_t seed, std::size_t depth, std::size_t height, std::size_t width) {
  Payload p;
  p.depth = depth;
  p.height = height;
  p.width = width;
  p.seed = seed;
  const std::size_t n = depth * height * width;
  p.bits.resize(n);
  const std::uint64_t key = derive_seed(seed, {depth, height, width});
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) word = mix64(key ^ mix64(i / 64));
    p.bits[i] = static_cast<float>((word >> (i % 64)) & 1u);
  }
  return p;
}

Tensor gather_images(const Corpus& corpus, std::span<const std::size_t> indices) {
  const std::size_t per = 3 * corpus.height * corpus.width;
  std::vector<float> data;
  data.reserve(indices.size() * per);
  for (auto i : indices) {
    const auto& px = corpus.samples.at(i).pixels;
    data.insert(data.end(), px.begin(), px.end());
  }
  return Tensor::from({indices.size(), 3, corpus.height, corpus.width}, std::move(data));
}

Tensor stack_payloads(std::span<const Payload> payloads) {
  if (payloads.empty()) throw ValidationError("stack_payloads: empty list");
  const auto& first = payloads.front();
  std::vector<float> data;
  data.reserve(payloads.size() * first.bits.size());
  for (const auto& p : payloads) {
    if (p.depth != first.depth || p.height != first.height || p.width != first.width) {
      throw ValidationError("stack_payloads: payload shapes differ");
    }
    data.insert(data.end(), p.bits.begin(), p.bits.end());
  }
  return Tensor::from({payloads.size(), first.depth, first.height, first.width}, std::move(data));
}

double pixel_variance(std::span<const float> pixels, std::size_t channels) {
  if (channels == 0 || pixels.empty() || pixels.size() % channels != 0) {
    throw ValidationError("pixel_variance: " + std::to_string(pixels.size()) + " values do not split into " +
                          std::to_string(channels) + " planes");
  }
  const std::size_t plane = pixels.size() / channels;
  double total = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    const auto p = pixels.subspan(c * plane, plane);
    double mean = 0.0;
    for (float v : p) mean += v;
    mean /= static_cast<double>(plane);
    double var = 0.0;
    for (float v : p) var += (v - mean) * (v - mean);
    total += var / static_cast<double>(plane);
  }
  return total / static_cast<double>(channels);
}

}  // namespace stcl
