#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stcl/tensor.hpp"

namespace stcl {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment accumulators mirror the parameter list they were created for.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t t = 0;

  template <typename T>
  static AdamState for_params(std::span<const BasicTensor<T>> params);

  void reset();
};

/// One bias-corrected Adam update over every parameter. Parameters without a
/// gradient slot are treated as having zero gradient. Throws NumericError
/// (leaving parameters untouched) when any gradient is non-finite.
template <typename T>
void adam_step(std::span<BasicTensor<T>> params, AdamState& state, const AdamConfig& config);

}  // namespace stcl
