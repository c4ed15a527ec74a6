#include "stcl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stcl/error.hpp"

namespace stcl {
namespace {

constexpr double kC1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
constexpr double kC2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);

void check_pair(ImageView x, ImageView y, const char* op) {
  if (x.channels != y.channels || x.height != y.height || x.width != y.width) {
    throw ValidationError(std::string(op) + ": image shapes differ ([" + std::to_string(x.channels) +
                          "," + std::to_string(x.height) + "," + std::to_string(x.width) + "] vs [" +
                          std::to_string(y.channels) + "," + std::to_string(y.height) + "," +
                          std::to_string(y.width) + "])");
  }
  if (x.pixels.size() != x.channels * x.plane_size() || y.pixels.size() != y.channels * y.plane_size()) {
    throw ValidationError(std::string(op) + ": pixel count does not match declared shape");
  }
}

std::vector<double> gaussian_window(std::size_t size) {
  std::vector<double> g(size);
  const double r = static_cast<double>(size / 2);
  double s = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - r;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    s += g[i];
  }
  for (auto& v : g) v /= s;
  return g;
}

// Separable valid-mode correlation: [h,w] -> [h-k+1, w-k+1].
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::vector<double>& g) {
  const std::size_t k = g.size(), oh = h - k + 1, ow = w - k + 1;
  std::vector<double> tmp(h * ow, 0.0), out(oh * ow, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += g[j] * src[y * w + x + j];
      tmp[y * ow + x] = s;
    }
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += g[i] * tmp[(y + i) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

// Adjoint of filter_valid: [h-k+1, w-k+1] -> [h,w].
std::vector<double> filter_valid_adjoint(const std::vector<double>& src, std::size_t h, std::size_t w,
                                         const std::vector<double>& g) {
  const std::size_t k = g.size(), oh = h - k + 1, ow = w - k + 1;
  std::vector<double> tmp(h * ow, 0.0), out(h * w, 0.0);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t x = 0; x < ow; ++x) tmp[(y + i) * ow + x] += g[i] * src[y * ow + x];
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x)
      for (std::size_t j = 0; j < k; ++j) out[y * w + x + j] += g[j] * tmp[y * ow + x];
  return out;
}

enum class SsimPart { full, contrast_structure };

// Mean of the SSIM map (or its contrast-structure factor) for one plane.
// When grad is non-empty, adds seed * d(mean)/dy into it.
double ssim_plane(std::span<const double> x, std::span<const double> y, std::size_t h, std::size_t w,
                  const std::vector<double>& g, SsimPart part, std::span<double> grad, double seed) {
  std::vector<double> xv(x.begin(), x.end()), yv(y.begin(), y.end());
  std::vector<double> xx(h * w), yy(h * w), xy(h * w);
  for (std::size_t i = 0; i < h * w; ++i) {
    xx[i] = xv[i] * xv[i];
    yy[i] = yv[i] * yv[i];
    xy[i] = xv[i] * yv[i];
  }
  const auto mx = filter_valid(xv, h, w, g);
  const auto my = filter_valid(yv, h, w, g);
  const auto exx = filter_valid(xx, h, w, g);
  const auto eyy = filter_valid(yy, h, w, g);
  const auto exy = filter_valid(xy, h, w, g);
  const std::size_t m = mx.size();
  const bool want_grad = !grad.empty();
  std::vector<double> da, db, dc;
  if (want_grad) {
    da.resize(m);
    db.resize(m);
    dc.resize(m);
  }
  const double inv_m = 1.0 / static_cast<double>(m);

  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double ux = mx[i], uy = my[i];
    const double sxx = exx[i] - ux * ux, syy = eyy[i] - uy * uy, sxy = exy[i] - ux * uy;
    const double a2 = 2.0 * sxy + kC2, b2 = sxx + syy + kC2;
    if (part == SsimPart::full) {
      const double a1 = 2.0 * ux * uy + kC1, b1 = ux * ux + uy * uy + kC1;
      const double s = (a1 * a2) / (b1 * b2);
      total += s;
      if (want_grad) {
        const double k = seed * inv_m;
        da[i] = k * (2.0 * ux * (a2 - a1) / (b1 * b2) - 2.0 * uy * s * (b2 - b1) / (b1 * b2));
        db[i] = k * (-s / b2);
        dc[i] = k * (2.0 * a1 / (b1 * b2));
      }
    } else {
      const double cs = a2 / b2;
      total += cs;
      if (want_grad) {
        const double k = seed * inv_m;
        da[i] = k * (-2.0 * ux + 2.0 * uy * cs) / b2;
        db[i] = k * (-cs / b2);
        dc[i] = k * (2.0 / b2);
      }
    }
  }
  if (want_grad) {
    const auto ga = filter_valid_adjoint(da, h, w, g);
    const auto gb = filter_valid_adjoint(db, h, w, g);
    const auto gc = filter_valid_adjoint(dc, h, w, g);
    for (std::size_t i = 0; i < h * w; ++i) grad[i] += ga[i] + 2.0 * yv[i] * gb[i] + xv[i] * gc[i];
  }
  return total * inv_m;
}

std::vector<double> downsample2(std::span<const double> src, std::size_t h, std::size_t w) {
  const std::size_t oh = h / 2, ow = w / 2;
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x)
      out[y * ow + x] = 0.25 * (src[(2 * y) * w + 2 * x] + src[(2 * y) * w + 2 * x + 1] +
                                src[(2 * y + 1) * w + 2 * x] + src[(2 * y + 1) * w + 2 * x + 1]);
  return out;
}

void upsample2_add(const std::vector<double>& coarse, std::size_t oh, std::size_t ow,
                   std::vector<double>& fine, std::size_t w) {
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      const double v = 0.25 * coarse[y * ow + x];
      fine[(2 * y) * w + 2 * x] += v;
      fine[(2 * y) * w + 2 * x + 1] += v;
      fine[(2 * y + 1) * w + 2 * x] += v;
      fine[(2 * y + 1) * w + 2 * x + 1] += v;
    }
}

std::size_t window_for(std::size_t h, std::size_t w) {
  std::size_t side = std::min({h, w, kSsimWindow});
  if (side % 2 == 0) --side;
  return side;
}

std::size_t resolve_scales(std::size_t h, std::size_t w, std::size_t requested) {
  const std::size_t feasible = ms_ssim_auto_scales(h, w);
  if (requested == 0) {
    if (feasible == 0) {
      throw ValidationError("ms_ssim: image " + std::to_string(h) + "x" + std::to_string(w) +
                            " is smaller than the minimum side " + std::to_string(kMsSsimMinSide));
    }
    return feasible;
  }
  if (requested > kMsSsimMaxScales) {
    throw ValidationError("ms_ssim: at most " + std::to_string(kMsSsimMaxScales) + " scales supported");
  }
  if (requested > feasible) {
    throw ValidationError("ms_ssim: image " + std::to_string(h) + "x" + std::to_string(w) +
                          " supports " + std::to_string(feasible) + " scales, " +
                          std::to_string(requested) + " requested");
  }
  return requested;
}

double ms_ssim_plane(std::span<const double> x, std::span<const double> y, std::size_t h, std::size_t w,
                     std::size_t scales, std::span<double> grad, double seed) {
  const auto weights = ms_ssim_weights(scales);
  std::vector<std::vector<double>> xs{{x.begin(), x.end()}}, ys{{y.begin(), y.end()}};
  std::vector<std::size_t> hs{h}, ws{w};
  for (std::size_t s = 1; s < scales; ++s) {
    xs.push_back(downsample2(xs.back(), hs.back(), ws.back()));
    ys.push_back(downsample2(ys.back(), hs.back(), ws.back()));
    hs.push_back(hs.back() / 2);
    ws.push_back(ws.back() / 2);
  }

  std::vector<double> values(scales);
  for (std::size_t s = 0; s < scales; ++s) {
    const auto g = gaussian_window(window_for(hs[s], ws[s]));
    const auto part = s + 1 == scales ? SsimPart::full : SsimPart::contrast_structure;
    values[s] = ssim_plane(xs[s], ys[s], hs[s], ws[s], g, part, {}, 0.0);
  }
  double value = 1.0;
  for (std::size_t s = 0; s < scales; ++s) value *= std::pow(std::max(values[s], 0.0), weights[s]);

  if (!grad.empty() && value > 0.0) {
    std::vector<std::vector<double>> level_grad(scales);
    for (std::size_t s = 0; s < scales; ++s) {
      level_grad[s].assign(hs[s] * ws[s], 0.0);
      const auto g = gaussian_window(window_for(hs[s], ws[s]));
      const auto part = s + 1 == scales ? SsimPart::full : SsimPart::contrast_structure;
      const double coef = seed * weights[s] * value / values[s];
      ssim_plane(xs[s], ys[s], hs[s], ws[s], g, part, level_grad[s], coef);
    }
    for (std::size_t s = scales - 1; s > 0; --s)
      upsample2_add(level_grad[s], hs[s], ws[s], level_grad[s - 1], ws[s - 1]);
    for (std::size_t i = 0; i < h * w; ++i) grad[i] += level_grad[0][i];
  }
  return value;
}

double ssim_impl(ImageView x, ImageView y, std::span<double> grad_y, double seed) {
  check_pair(x, y, "ssim");
  if (x.height < kSsimWindow || x.width < kSsimWindow) {
    throw ValidationError("ssim: image " + std::to_string(x.height) + "x" + std::to_string(x.width) +
                          " is smaller than the " + std::to_string(kSsimWindow) + "x" +
                          std::to_string(kSsimWindow) + " window");
  }
  const auto g = gaussian_window(kSsimWindow);
  const double per_channel = 1.0 / static_cast<double>(x.channels);
  double total = 0.0;
  for (std::size_t c = 0; c < x.channels; ++c) {
    std::span<double> gc = grad_y.empty() ? std::span<double>{} : grad_y.subspan(c * x.plane_size(), x.plane_size());
    total += ssim_plane(x.plane(c), y.plane(c), x.height, x.width, g, SsimPart::full, gc, seed * per_channel);
  }
  return total * per_channel;
}

double ms_ssim_impl(ImageView x, ImageView y, std::span<double> grad_y, double seed, std::size_t scales) {
  check_pair(x, y, "ms_ssim");
  const std::size_t levels = resolve_scales(x.height, x.width, scales);
  const double per_channel = 1.0 / static_cast<double>(x.channels);
  double total = 0.0;
  for (std::size_t c = 0; c < x.channels; ++c) {
    std::span<double> gc = grad_y.empty() ? std::span<double>{} : grad_y.subspan(c * x.plane_size(), x.plane_size());
    total += ms_ssim_plane(x.plane(c), y.plane(c), x.height, x.width, levels, gc, seed * per_channel);
  }
  return total * per_channel;
}

}  // namespace

double ssim(ImageView x, ImageView y) { return ssim_impl(x, y, {}, 0.0); }

double ssim_with_grad(ImageView x, ImageView y, std::span<double> grad_y, double seed) {
  if (grad_y.size() != y.pixels.size()) throw ValidationError("ssim_with_grad: gradient buffer size mismatch");
  return ssim_impl(x, y, grad_y, seed);
}

std::size_t ms_ssim_auto_scales(std::size_t height, std::size_t width) {
  std::size_t scales = 0, h = height, w = width;
  while (scales < kMsSsimMaxScales && std::min(h, w) >= kMsSsimMinSide) {
    ++scales;
    h /= 2;
    w /= 2;
  }
  return scales;
}

std::vector<double> ms_ssim_weights(std::size_t scales) {
  static constexpr double kWeights[kMsSsimMaxScales] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  if (scales == 0 || scales > kMsSsimMaxScales) throw ValidationError("ms_ssim: scale count out of range");
  std::vector<double> w(kWeights, kWeights + scales);
  double s = 0.0;
  for (double v : w) s += v;
  for (double& v : w) v /= s;
  return w;
}

double ms_ssim(ImageView x, ImageView y, std::size_t scales) { return ms_ssim_impl(x, y, {}, 0.0, scales); }

double ms_ssim_with_grad(ImageView x, ImageView y, std::span<double> grad_y, double seed, std::size_t scales) {
  if (grad_y.size() != y.pixels.size()) throw ValidationError("ms_ssim_with_grad: gradient buffer size mismatch");
  return ms_ssim_impl(x, y, grad_y, seed, scales);
}

double mse(ImageView x, ImageView y) {
  check_pair(x, y, "mse");
  if (x.pixels.empty()) throw ValidationError("mse: empty image");
  double s = 0.0;
  for (std::size_t i = 0; i < x.pixels.size(); ++i) {
    const double d = x.pixels[i] - y.pixels[i];
    s += d * d;
  }
  return s / static_cast<double>(x.pixels.size());
}

double rmse(ImageView x, ImageView y) { return std::sqrt(mse(x, y)); }

double rmse_with_grad(ImageView x, ImageView y, std::span<double> grad_y, double seed) {
  const double r = rmse(x, y);
  if (grad_y.size() != y.pixels.size()) throw ValidationError("rmse_with_grad: gradient buffer size mismatch");
  if (r > 0.0) {
    const double k = seed / (static_cast<double>(x.pixels.size()) * r);
    for (std::size_t i = 0; i < grad_y.size(); ++i) grad_y[i] += k * (y.pixels[i] - x.pixels[i]);
  }
  return r;
}

double psnr(ImageView x, ImageView y) {
  const double m = mse(x, y);
  if (m == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

namespace {
double bce_impl(std::span<const double> probs, std::span<const double> targets, std::span<double> grad,
                double seed) {
  if (probs.size() != targets.size()) throw ValidationError("bce: probability/target size mismatch");
  if (probs.empty()) throw ValidationError("bce: empty input");
  const double n = static_cast<double>(probs.size());
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kBceClamp, 1.0 - kBceClamp);
    const double t = targets[i];
    s -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    if (!grad.empty() && probs[i] > kBceClamp && probs[i] < 1.0 - kBceClamp)
      grad[i] += seed * (-t / p + (1.0 - t) / (1.0 - p)) / n;
  }
  return s / n;
}
}  // namespace

double bce(std::span<const double> probs, std::span<const double> targets) {
  return bce_impl(probs, targets, {}, 0.0);
}

double bce_with_grad(std::span<const double> probs, std::span<const double> targets,
                     std::span<double> grad_probs, double seed) {
  if (grad_probs.size() != probs.size()) throw ValidationError("bce_with_grad: gradient buffer size mismatch");
  return bce_impl(probs, targets, grad_probs, seed);
}

double bit_accuracy(std::span<const double> probs, std::span<const double> targets) {
  if (probs.size() != targets.size()) throw ValidationError("bit_accuracy: size mismatch");
  if (probs.empty()) throw ValidationError("bit_accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool bit = probs[i] >= 0.5;
    hits += (bit == (targets[i] >= 0.5)) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(probs.size());
}

std::vector<double> widen(std::span<const float> values) { return {values.begin(), values.end()}; }
std::vector<double> widen(std::span<const double> values) { return {values.begin(), values.end()}; }

}  // namespace stcl
