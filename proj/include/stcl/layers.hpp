#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stcl/ops.hpp"
#include "stcl/random.hpp"

namespace stcl {

inline constexpr double kLeakySlope = 0.01;

/// A named parameter or statistics array, as persisted in checkpoints.
struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

enum class Activation { leaky_relu, sigmoid, identity };

/// k x k convolution, optional batch normalization, activation.
template <typename T>
struct ConvBlock {
  BasicTensor<T> kernel;
  BasicTensor<T> bias;
  std::optional<BatchNormState<T>> bn;
  Activation activation = Activation::leaky_relu;

  /// Kaiming-uniform (fan-in, LeakyReLU gain) kernel, zero bias, gamma 1, beta 0.
  static ConvBlock make(std::size_t in_channels, std::size_t out_channels, std::size_t ksize,
                        bool with_bn, Activation activation, Rng& rng);

  BasicTensor<T> forward(const BasicTensor<T>& x, bool training);

  void collect_parameters(std::vector<BasicTensor<T>>& out) const;
  void collect_state(const std::string& prefix, std::vector<NamedArray>& out) const;
  /// Consumes the entries written by collect_state for this prefix.
  void load_state(const std::string& prefix, const std::vector<NamedArray>& in);
};

/// Looks up an array by name; throws CheckpointError(config_mismatch) when
/// the name is missing or the shape differs.
const NamedArray& find_array(const std::vector<NamedArray>& arrays, const std::string& name,
                             const Shape& expected);

}  // namespace stcl
