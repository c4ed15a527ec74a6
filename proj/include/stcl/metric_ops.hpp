#pragma once

#include "stcl/tensor.hpp"

namespace stcl {

// Differentiable batch versions of the quality metrics. Each takes two
// [N,C,H,W] tensors and returns a rank-0 tensor holding the mean over the
// batch of the per-image metric, computed by the same functions the
// evaluation path calls.

template <typename T>
BasicTensor<T> ssim_term(const BasicTensor<T>& x, const BasicTensor<T>& y);

template <typename T>
BasicTensor<T> ms_ssim_term(const BasicTensor<T>& x, const BasicTensor<T>& y);

template <typename T>
BasicTensor<T> rmse_term(const BasicTensor<T>& x, const BasicTensor<T>& y);

/// Mean BCE over every element; gradients flow to `probs` only.
template <typename T>
BasicTensor<T> bce_term(const BasicTensor<T>& probs, const BasicTensor<T>& targets);

}  // namespace stcl
