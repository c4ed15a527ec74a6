#include "stcl/ops.hpp"

#include <Eigen/Core>
#include <cmath>

#include "stcl/error.hpp"

namespace stcl {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMatrix = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMapMatrix = Eigen::Map<const RowMatrix<T>>;

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                      " vs " + shape_str(b.shape()));
}

// Rows ordered (c, ky, kx); columns (y, x).
template <typename T>
void im2col(const T* image, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
            T* cols) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(w);
  for (std::size_t c = 0; c < channels; ++c) {
    const T* plane = image + c * h * w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = cols + ((c * k + ky) * k + kx) * h * w;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        for (std::ptrdiff_t y = 0; y < H; ++y) {
          T* out = row + y * W;
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= H) {
            std::fill(out, out + W, T(0));
            continue;
          }
          const T* src = plane + sy * W;
          for (std::ptrdiff_t x = 0; x < W; ++x) {
            const std::ptrdiff_t sx = x + dx;
            out[x] = (sx >= 0 && sx < W) ? src[sx] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
                T* image) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(w);
  for (std::size_t c = 0; c < channels; ++c) {
    T* plane = image + c * h * w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* row = cols + ((c * k + ky) * k + kx) * h * w;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        for (std::ptrdiff_t y = 0; y < H; ++y) {
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= H) continue;
          const T* in = row + y * W;
          T* dst = plane + sy * W;
          const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
          const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - dx);
          for (std::ptrdiff_t x = x0; x < x1; ++x) dst[x + dx] += in[x];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
BatchNormState<T>::BatchNormState(std::size_t channels)
    : gamma(BasicTensor<T>::full({channels}, T(1), true)),
      beta(BasicTensor<T>::zeros({channels}, true)),
      running_mean(channels, 0.0),
      running_var(channels, 1.0) {}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                      const BasicTensor<T>& bias) {
  require(input.rank() == 4, "conv2d: input must be [N,C,H,W], got " + shape_str(input.shape()));
  require(kernel.rank() == 4, "conv2d: kernel must be [K,C,k,k], got " + shape_str(kernel.shape()));
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t kout = kernel.dim(0), k = kernel.dim(2);
  require(kernel.dim(1) == c, "conv2d: input has C=" + std::to_string(c) +
                                  " channels but kernel expects C=" + std::to_string(kernel.dim(1)));
  require(kernel.dim(3) == k && k % 2 == 1,
          "conv2d: kernel must be square with odd size, got " + shape_str(kernel.shape()));
  require(bias.rank() == 1 && bias.dim(0) == kout,
          "conv2d: bias must be [K=" + std::to_string(kout) + "], got " + shape_str(bias.shape()));

  const std::size_t hw = h * w, ckk = c * k * k;
  std::vector<T> out(n * kout * hw);
  std::vector<T> cols(ckk * hw);
  ConstMapMatrix<T> wmat(kernel.data().data(), kout, ckk);
  for (std::size_t i = 0; i < n; ++i) {
    im2col(input.data().data() + i * c * hw, c, h, w, k, cols.data());
    MapMatrix<T> o(out.data() + i * kout * hw, kout, hw);
    o.noalias() = wmat * ConstMapMatrix<T>(cols.data(), ckk, hw);
    for (std::size_t ko = 0; ko < kout; ++ko) o.row(ko).array() += bias.data()[ko];
  }

  return make_result<T>(
      {n, kout, h, w}, std::move(out), "conv2d", {input, kernel, bias},
      [n, c, h, w, kout, k, hw, ckk](typename BasicTensor<T>::Impl& self) {
        auto& x = *self.node->parents[0];
        auto& kern = *self.node->parents[1];
        auto& b = *self.node->parents[2];
        std::vector<T> cols(ckk * hw);
        ConstMapMatrix<T> wmat(kern.data.data(), kout, ckk);
        if (kern.requires_grad) kern.ensure_grad();
        if (b.requires_grad) b.ensure_grad();
        if (x.requires_grad) x.ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
          ConstMapMatrix<T> dout(self.grad.data() + i * kout * hw, kout, hw);
          if (b.requires_grad) {
            for (std::size_t ko = 0; ko < kout; ++ko) {
              double acc = 0.0;
              for (std::size_t p = 0; p < hw; ++p) acc += dout(ko, p);
              b.grad[ko] += static_cast<T>(acc);
            }
          }
          if (kern.requires_grad) {
            im2col(x.data.data() + i * c * hw, c, h, w, k, cols.data());
            MapMatrix<T> dw(kern.grad.data(), kout, ckk);
            dw.noalias() += dout * ConstMapMatrix<T>(cols.data(), ckk, hw).transpose();
          }
          if (x.requires_grad) {
            MapMatrix<T> dcols(cols.data(), ckk, hw);
            dcols.noalias() = wmat.transpose() * dout;
            col2im_add(cols.data(), c, h, w, k, x.grad.data() + i * c * hw);
          }
        }
      });
}

template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& input, BatchNormState<T>& state, bool training) {
  require(input.rank() == 4, "batch_norm: input must be [N,C,H,W], got " + shape_str(input.shape()));
  const std::size_t n = input.dim(0), c = input.dim(1), hw = input.dim(2) * input.dim(3);
  require(c == state.channels(), "batch_norm: input has " + std::to_string(c) +
                                     " channels, state has " + std::to_string(state.channels()));
  const std::size_t count = n * hw;
  if (training && count < 2) {
    throw ValidationError("batch_norm: training mode needs N*H*W >= 2 per channel, got " +
                          std::to_string(count));
  }

  auto x = input.data();
  std::vector<double> mean(c), inv_std(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    if (training) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const T* p = x.data() + (i * c + ch) * hw;
        for (std::size_t j = 0; j < hw; ++j) s += p[j];
      }
      const double mu = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const T* p = x.data() + (i * c + ch) * hw;
        for (std::size_t j = 0; j < hw; ++j) {
          const double d = p[j] - mu;
          ss += d * d;
        }
      }
      const double var = ss / static_cast<double>(count);
      mean[ch] = mu;
      inv_std[ch] = 1.0 / std::sqrt(var + state.epsilon);
      const double unbiased = var * static_cast<double>(count) / static_cast<double>(count - 1);
      state.running_mean[ch] = (1.0 - state.momentum) * state.running_mean[ch] + state.momentum * mu;
      state.running_var[ch] = (1.0 - state.momentum) * state.running_var[ch] + state.momentum * unbiased;
    } else {
      mean[ch] = state.running_mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(state.running_var[ch] + state.epsilon);
    }
  }

  auto gamma = state.gamma.data();
  auto beta = state.beta.data();
  std::vector<T> xhat(input.numel()), out(input.numel());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = (i * c + ch) * hw;
      for (std::size_t j = 0; j < hw; ++j) {
        const double v = (x[off + j] - mean[ch]) * inv_std[ch];
        xhat[off + j] = static_cast<T>(v);
        out[off + j] = static_cast<T>(gamma[ch] * v + beta[ch]);
      }
    }
  }

  return make_result<T>(
      input.shape(), std::move(out), "batch_norm", {input, state.gamma, state.beta},
      [n, c, hw, count, training, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](typename BasicTensor<T>::Impl& self) {
        auto& xin = *self.node->parents[0];
        auto& g = *self.node->parents[1];
        auto& b = *self.node->parents[2];
        for (std::size_t ch = 0; ch < c; ++ch) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t off = (i * c + ch) * hw;
            for (std::size_t j = 0; j < hw; ++j) {
              sum_dy += self.grad[off + j];
              sum_dy_xhat += static_cast<double>(self.grad[off + j]) * xhat[off + j];
            }
          }
          if (g.requires_grad) {
            g.ensure_grad();
            g.grad[ch] += static_cast<T>(sum_dy_xhat);
          }
          if (b.requires_grad) {
            b.ensure_grad();
            b.grad[ch] += static_cast<T>(sum_dy);
          }
          if (!xin.requires_grad) continue;
          xin.ensure_grad();
          const double scale = g.data[ch] * inv_std[ch];
          const double mean_dy = sum_dy / static_cast<double>(count);
          const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(count);
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t off = (i * c + ch) * hw;
            for (std::size_t j = 0; j < hw; ++j) {
              const double dy = self.grad[off + j];
              const double dx = training ? scale * (dy - mean_dy - xhat[off + j] * mean_dy_xhat)
                                         : scale * dy;
              xin.grad[off + j] += static_cast<T>(dx);
            }
          }
        }
      });
}

template <typename T>
BasicTensor<T> leaky_relu(const BasicTensor<T>& input, double slope) {
  require(slope >= 0.0 && slope < 1.0, "leaky_relu: slope must be in [0,1)");
  auto x = input.data();
  std::vector<T> out(x.size());
  const T s = static_cast<T>(slope);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : s * x[i];
  return make_result<T>(input.shape(), std::move(out), "leaky_relu", {input},
                        [s](typename BasicTensor<T>::Impl& self) {
                          auto& in = *self.node->parents[0];
                          in.ensure_grad();
                          for (std::size_t i = 0; i < in.data.size(); ++i)
                            in.grad[i] += in.data[i] > T(0) ? self.grad[i] : s * self.grad[i];
                        });
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& input) {
  auto x = input.data();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-x[i]));
    } else {
      const T e = std::exp(x[i]);
      out[i] = e / (T(1) + e);
    }
  }
  return make_result<T>(input.shape(), std::move(out), "sigmoid", {input},
                        [](typename BasicTensor<T>::Impl& self) {
                          auto& in = *self.node->parents[0];
                          in.ensure_grad();
                          for (std::size_t i = 0; i < self.data.size(); ++i) {
                            const T y = self.data[i];
                            in.grad[i] += self.grad[i] * y * (T(1) - y);
                          }
                        });
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result<T>(a.shape(), std::move(out), "add", {a, b},
                        [](typename BasicTensor<T>::Impl& self) {
                          for (auto& p : self.node->parents) {
                            if (!p->requires_grad) continue;
                            p->ensure_grad();
                            for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
                          }
                        });
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_result<T>(a.shape(), std::move(out), "sub", {a, b},
                        [](typename BasicTensor<T>::Impl& self) {
                          auto& pa = *self.node->parents[0];
                          auto& pb = *self.node->parents[1];
                          if (pa.requires_grad) {
                            pa.ensure_grad();
                            for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
                          }
                          if (pb.requires_grad) {
                            pb.ensure_grad();
                            for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] -= self.grad[i];
                          }
                        });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result<T>(a.shape(), std::move(out), "mul", {a, b},
                        [](typename BasicTensor<T>::Impl& self) {
                          auto& pa = *self.node->parents[0];
                          auto& pb = *self.node->parents[1];
                          if (pa.requires_grad) {
                            pa.ensure_grad();
                            for (std::size_t i = 0; i < self.grad.size(); ++i)
                              pa.grad[i] += self.grad[i] * pb.data[i];
                          }
                          if (pb.requires_grad) {
                            pb.ensure_grad();
                            for (std::size_t i = 0; i < self.grad.size(); ++i)
                              pb.grad[i] += self.grad[i] * pa.data[i];
                          }
                        });
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, double factor) {
  std::vector<T> out(a.numel());
  const T f = static_cast<T>(factor);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * f;
  return make_result<T>(a.shape(), std::move(out), "scale", {a},
                        [f](typename BasicTensor<T>::Impl& self) {
                          auto& p = *self.node->parents[0];
                          p.ensure_grad();
                          for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i] * f;
                        });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  double s = 0.0;
  for (T v : a.data()) s += v;
  return make_result<T>({}, {static_cast<T>(s)}, "sum", {a},
                        [](typename BasicTensor<T>::Impl& self) {
                          auto& p = *self.node->parents[0];
                          p.ensure_grad();
                          for (auto& g : p.grad) g += self.grad[0];
                        });
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
  require(a.numel() > 0, "mean: empty tensor");
  double s = 0.0;
  for (T v : a.data()) s += v;
  const double n = static_cast<double>(a.numel());
  return make_result<T>({}, {static_cast<T>(s / n)}, "mean", {a},
                        [n](typename BasicTensor<T>::Impl& self) {
                          auto& p = *self.node->parents[0];
                          p.ensure_grad();
                          const T g = static_cast<T>(self.grad[0] / n);
                          for (auto& v : p.grad) v += g;
                        });
}

template <typename T>
BasicTensor<T> weighted_sum(const std::vector<BasicTensor<T>>& terms,
                            const std::vector<double>& weights, double offset) {
  require(terms.size() == weights.size(), "weighted_sum: term/weight count mismatch");
  double s = offset;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    require(terms[i].numel() == 1, "weighted_sum: terms must be scalars");
    s += weights[i] * static_cast<double>(terms[i].data()[0]);
  }
  return make_result<T>({}, {static_cast<T>(s)}, "weighted_sum", terms,
                        [weights](typename BasicTensor<T>::Impl& self) {
                          for (std::size_t i = 0; i < weights.size(); ++i) {
                            auto& p = *self.node->parents[i];
                            if (!p.requires_grad) continue;
                            p.ensure_grad();
                            p.grad[0] += static_cast<T>(weights[i] * self.grad[0]);
                          }
                        });
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require(a.rank() == 4 && b.rank() == 4, "concat_channels: inputs must be [N,C,H,W]");
  require(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3),
          "concat_channels: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const std::size_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1), hw = a.dim(2) * a.dim(3);
  std::vector<T> out;
  out.reserve(n * (ca + cb) * hw);
  for (std::size_t i = 0; i < n; ++i) {
    auto sa = a.data().subspan(i * ca * hw, ca * hw);
    auto sb = b.data().subspan(i * cb * hw, cb * hw);
    out.insert(out.end(), sa.begin(), sa.end());
    out.insert(out.end(), sb.begin(), sb.end());
  }
  return make_result<T>({n, ca + cb, a.dim(2), a.dim(3)}, std::move(out), "concat_channels", {a, b},
                        [n, ca, cb, hw](typename BasicTensor<T>::Impl& self) {
                          auto& pa = *self.node->parents[0];
                          auto& pb = *self.node->parents[1];
                          for (std::size_t i = 0; i < n; ++i) {
                            const T* g = self.grad.data() + i * (ca + cb) * hw;
                            if (pa.requires_grad) {
                              pa.ensure_grad();
                              for (std::size_t j = 0; j < ca * hw; ++j) pa.grad[i * ca * hw + j] += g[j];
                            }
                            if (pb.requires_grad) {
                              pb.ensure_grad();
                              for (std::size_t j = 0; j < cb * hw; ++j)
                                pb.grad[i * cb * hw + j] += g[ca * hw + j];
                            }
                          }
                        });
}

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& input) {
  require(input.rank() == 4, "global_avg_pool: input must be [N,C,H,W]");
  const std::size_t n = input.dim(0), c = input.dim(1), hw = input.dim(2) * input.dim(3);
  std::vector<T> out(n * c);
  for (std::size_t i = 0; i < n * c; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < hw; ++j) s += input.data()[i * hw + j];
    out[i] = static_cast<T>(s / static_cast<double>(hw));
  }
  return make_result<T>({n, c}, std::move(out), "global_avg_pool", {input},
                        [n, c, hw](typename BasicTensor<T>::Impl& self) {
                          auto& p = *self.node->parents[0];
                          p.ensure_grad();
                          for (std::size_t i = 0; i < n * c; ++i) {
                            const T g = static_cast<T>(self.grad[i] / static_cast<double>(hw));
                            for (std::size_t j = 0; j < hw; ++j) p.grad[i * hw + j] += g;
                          }
                        });
}

#define STCL_INSTANTIATE_OPS(T)                                                              \
  template struct BatchNormState<T>;                                                         \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,               \
                                 const BasicTensor<T>&);                                     \
  template BasicTensor<T> batch_norm(const BasicTensor<T>&, BatchNormState<T>&, bool);       \
  template BasicTensor<T> leaky_relu(const BasicTensor<T>&, double);                         \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                    \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> scale(const BasicTensor<T>&, double);                              \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                        \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                       \
  template BasicTensor<T> weighted_sum(const std::vector<BasicTensor<T>>&,                   \
                                       const std::vector<double>&, double);                          \
  template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);     \
  template BasicTensor<T> global_avg_pool(const BasicTensor<T>&);

STCL_INSTANTIATE_OPS(float)
STCL_INSTANTIATE_OPS(double)

}  // namespace stcl
