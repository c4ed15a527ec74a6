#include "stcl/metric_ops.hpp"

#include <functional>

#include "stcl/error.hpp"
#include "stcl/metrics.hpp"

namespace stcl {
namespace {

// value(a, b, grad_b, seed) must accumulate seed * d value / d b into grad_b.
using PairMetric = std::function<double(ImageView, ImageView, std::span<double>, double)>;

template <typename T>
BasicTensor<T> pair_metric(const BasicTensor<T>& x, const BasicTensor<T>& y, std::string_view name,
                           PairMetric metric) {
  if (x.rank() != 4 || x.shape() != y.shape()) {
    throw ValidationError(std::string(name) + ": expected matching [N,C,H,W] tensors, got " +
                          shape_str(x.shape()) + " and " + shape_str(y.shape()));
  }
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3), per = c * h * w;
  const auto xd = widen(std::span<const T>(x.data()));
  const auto yd = widen(std::span<const T>(y.data()));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ImageView a{std::span<const double>(xd).subspan(i * per, per), c, h, w};
    ImageView b{std::span<const double>(yd).subspan(i * per, per), c, h, w};
    total += metric(a, b, {}, 0.0);
  }
  const double value = total / static_cast<double>(n);
  return make_result<T>(
      {}, {static_cast<T>(value)}, name, {x, y},
      [n, c, h, w, per, xd, yd, metric](typename BasicTensor<T>::Impl& self) {
        const double seed = static_cast<double>(self.grad[0]) / static_cast<double>(n);
        for (std::size_t side = 0; side < 2; ++side) {
          auto& target = *self.node->parents[side];
          if (!target.requires_grad) continue;
          target.ensure_grad();
          // Every metric here is symmetric, so d/dx is d/d(second) with the roles swapped.
          const auto& fixed = side == 0 ? yd : xd;
          const auto& moving = side == 0 ? xd : yd;
          std::vector<double> g(per);
          for (std::size_t i = 0; i < n; ++i) {
            std::fill(g.begin(), g.end(), 0.0);
            ImageView a{std::span<const double>(fixed).subspan(i * per, per), c, h, w};
            ImageView b{std::span<const double>(moving).subspan(i * per, per), c, h, w};
            metric(a, b, g, seed);
            for (std::size_t j = 0; j < per; ++j) target.grad[i * per + j] += static_cast<T>(g[j]);
          }
        }
      });
}

}  // namespace

template <typename T>
BasicTensor<T> ssim_term(const BasicTensor<T>& x, const BasicTensor<T>& y) {
  return pair_metric<T>(x, y, "ssim", [](ImageView a, ImageView b, std::span<double> g, double seed) {
    return g.empty() ? ssim(a, b) : ssim_with_grad(a, b, g, seed);
  });
}

template <typename T>
BasicTensor<T> ms_ssim_term(const BasicTensor<T>& x, const BasicTensor<T>& y) {
  return pair_metric<T>(x, y, "ms_ssim", [](ImageView a, ImageView b, std::span<double> g, double seed) {
    return g.empty() ? ms_ssim(a, b) : ms_ssim_with_grad(a, b, g, seed);
  });
}

template <typename T>
BasicTensor<T> rmse_term(const BasicTensor<T>& x, const BasicTensor<T>& y) {
  return pair_metric<T>(x, y, "rmse", [](ImageView a, ImageView b, std::span<double> g, double seed) {
    return g.empty() ? rmse(a, b) : rmse_with_grad(a, b, g, seed);
  });
}

template <typename T>
BasicTensor<T> bce_term(const BasicTensor<T>& probs, const BasicTensor<T>& targets) {
  if (probs.shape() != targets.shape()) {
    throw ValidationError("bce: shape mismatch " + shape_str(probs.shape()) + " vs " +
                          shape_str(targets.shape()));
  }
  auto p = widen(std::span<const T>(probs.data()));
  auto t = widen(std::span<const T>(targets.data()));
  const double value = bce(p, t);
  return make_result<T>({}, {static_cast<T>(value)}, "bce", {probs, targets},
                        [p = std::move(p), t = std::move(t)](typename BasicTensor<T>::Impl& self) {
                          auto& target = *self.node->parents[0];
                          if (!target.requires_grad) return;
                          target.ensure_grad();
                          std::vector<double> g(p.size(), 0.0);
                          bce_with_grad(p, t, g, static_cast<double>(self.grad[0]));
                          for (std::size_t i = 0; i < g.size(); ++i) target.grad[i] += static_cast<T>(g[i]);
                        });
}

template BasicTensor<float> ssim_term(const BasicTensor<float>&, const BasicTensor<float>&);
template BasicTensor<double> ssim_term(const BasicTensor<double>&, const BasicTensor<double>&);
template BasicTensor<float> ms_ssim_term(const BasicTensor<float>&, const BasicTensor<float>&);
template BasicTensor<double> ms_ssim_term(const BasicTensor<double>&, const BasicTensor<double>&);
template BasicTensor<float> rmse_term(const BasicTensor<float>&, const BasicTensor<float>&);
template BasicTensor<double> rmse_term(const BasicTensor<double>&, const BasicTensor<double>&);
template BasicTensor<float> bce_term(const BasicTensor<float>&, const BasicTensor<float>&);
template BasicTensor<double> bce_term(const BasicTensor<double>&, const BasicTensor<double>&);

}  // namespace stcl
