#pragma once

#include <vector>

#include "stcl/tensor.hpp"

namespace stcl {

/// Per-channel affine parameters plus running statistics of a batch
/// normalization layer. Statistics are kept at 64-bit.
template <typename T>
struct BatchNormState {
  BasicTensor<T> gamma;
  BasicTensor<T> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;

  explicit BatchNormState(std::size_t channels = 0);
  std::size_t channels() const { return running_mean.size(); }
};

/// Same-size cross-correlation: zero padding of k/2, stride 1, odd square
/// kernels. input [N,C,H,W], kernel [K,C,k,k], bias [K] -> [N,K,H,W].
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                      const BasicTensor<T>& bias);

/// Training mode normalizes with batch statistics and updates the running
/// averages; eval mode reads the running averages and leaves the state alone.
template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& input, BatchNormState<T>& state, bool training);

/// max(x, slope*x); the subgradient at 0 is taken as `slope`.
template <typename T>
BasicTensor<T> leaky_relu(const BasicTensor<T>& input, double slope = 0.01);

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, double factor);

/// Sum (or mean) of every element, accumulated at 64-bit, as a rank-0 tensor.
template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a);
template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a);

/// offset + sum_i weights[i] * terms[i] over rank-0 tensors.
template <typename T>
BasicTensor<T> weighted_sum(const std::vector<BasicTensor<T>>& terms,
                            const std::vector<double>& weights, double offset = 0.0);

/// Depth concatenation: [N,Ca,H,W] ++ [N,Cb,H,W] -> [N,Ca+Cb,H,W].
template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// [N,C,H,W] -> [N,C]
template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& input);

}  // namespace stcl
