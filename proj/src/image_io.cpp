#include "stcl/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "stcl/error.hpp"

namespace stcl {
namespace {

using FilePtr = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  return FilePtr(std::fopen(path.string().c_str(), mode), &std::fclose);
}

RgbImage read_png(const std::filesystem::path& path) {
  auto fp = open_file(path, "rb");
  if (!fp) throw DataError("cannot open image '" + path.string() + "'");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw DataError("'" + path.string() + "' is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng initialization failed for '" + path.string() + "'");
  }
  RgbImage image;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("corrupt PNG '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info), h = png_get_image_height(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = buffer.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  image.height = h;
  image.width = w;
  image.pixels.resize(3 * static_cast<std::size_t>(w) * h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        image.pixels[(c * h + y) * w + x] = static_cast<float>(buffer[y * stride + x * 3 + c]) / 255.0f;
  return image;
}

// Skips whitespace and '#' comments between PNM header tokens.
bool next_token(std::istream& in, std::string& token) {
  token.clear();
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      token.push_back(ch);
      break;
    }
  }
  while (in.get(ch)) {
    if (std::isspace(static_cast<unsigned char>(ch))) break;
    token.push_back(ch);
  }
  return !token.empty();
}

RgbImage read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image '" + path.string() + "'");
  std::string magic, ws, hs, ms;
  if (!next_token(in, magic) || !next_token(in, ws) || !next_token(in, hs) || !next_token(in, ms)) {
    throw DataError("truncated PNM header in '" + path.string() + "'");
  }
  const bool color = magic == "P6" || magic == "P3";
  const bool binary = magic == "P6" || magic == "P5";
  if (magic != "P6" && magic != "P3" && magic != "P5" && magic != "P2") {
    throw DataError("unsupported PNM variant '" + magic + "' in '" + path.string() + "'");
  }
  std::size_t w = 0, h = 0;
  int maxval = 0;
  try {
    w = std::stoul(ws);
    h = std::stoul(hs);
    maxval = std::stoi(ms);
  } catch (const std::exception&) {
    throw DataError("malformed PNM header in '" + path.string() + "'");
  }
  if (w == 0 || h == 0 || maxval <= 0 || maxval > 65535) {
    throw DataError("invalid PNM dimensions in '" + path.string() + "'");
  }
  const std::size_t channels = color ? 3 : 1;
  std::vector<double> samples(w * h * channels);
  if (binary) {
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(samples.size() * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw DataError("truncated pixel data in '" + path.string() + "'");
    }
    for (std::size_t i = 0; i < samples.size(); ++i)
      samples[i] = bytes_per == 2 ? (raw[2 * i] << 8 | raw[2 * i + 1]) : raw[i];
  } else {
    std::string tok;
    for (auto& s : samples) {
      if (!next_token(in, tok)) throw DataError("truncated pixel data in '" + path.string() + "'");
      s = std::stod(tok);
    }
  }
  RgbImage image{h, w, std::vector<float>(3 * w * h)};
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = samples[(y * w + x) * channels + (channels == 3 ? c : 0)];
        image.pixels[(c * h + y) * w + x] = static_cast<float>(v / maxval);
      }
  return image;
}

unsigned char to_byte(float v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

RgbImage read_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw DataError("cannot open image '" + path.string() + "'");
  char head[2] = {0, 0};
  probe.read(head, 2);
  probe.close();
  if (head[0] == 'P' && head[1] >= '2' && head[1] <= '6') return read_pnm(path);
  return read_png(path);
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  auto fp = open_file(path, "wb");
  if (!fp) throw DataError("cannot write '" + path.string() + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng initialization failed for '" + path.string() + "'");
  }
  std::vector<png_byte> row(image.width * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("failed writing PNG '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t plane = image.height * image.width;
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) row[x * 3 + c] = to_byte(image.pixels[c * plane + y * image.width + x]);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  const std::size_t plane = image.height * image.width;
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) out.put(static_cast<char>(to_byte(image.pixels[c * plane + i])));
}

RgbImage resize_bilinear(const RgbImage& image, std::size_t height, std::size_t width) {
  if (image.height == height && image.width == width) return image;
  RgbImage out{height, width, std::vector<float>(3 * height * width)};
  const double sy = static_cast<double>(image.height) / static_cast<double>(height);
  const double sx = static_cast<double>(image.width) / static_cast<double>(width);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(image.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(image.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double tx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        const float* p = image.pixels.data() + c * image.height * image.width;
        const double top = p[y0 * image.width + x0] * (1 - tx) + p[y0 * image.width + x1] * tx;
        const double bottom = p[y1 * image.width + x0] * (1 - tx) + p[y1 * image.width + x1] * tx;
        out.pixels[(c * height + y) * width + x] = static_cast<float>(top * (1 - ty) + bottom * ty);
      }
    }
  }
  return out;
}

}  // namespace stcl
