#include "stcl/layers.hpp"

#include <cmath>

#include "stcl/error.hpp"

namespace stcl {
namespace {

template <typename T>
NamedArray to_array(const std::string& name, const BasicTensor<T>& t) {
  return {name, t.shape(), std::vector<double>(t.data().begin(), t.data().end())};
}

template <typename T>
void assign(BasicTensor<T>& t, const NamedArray& a) {
  for (std::size_t i = 0; i < a.values.size(); ++i) t.data()[i] = static_cast<T>(a.values[i]);
}

}  // namespace

const NamedArray& find_array(const std::vector<NamedArray>& arrays, const std::string& name,
                             const Shape& expected) {
  for (const auto& a : arrays) {
    if (a.name != name) continue;
    if (a.shape != expected) {
      throw CheckpointError(CheckpointFault::config_mismatch,
                            "array '" + name + "' has shape " + shape_str(a.shape) +
                                ", model expects " + shape_str(expected));
    }
    return a;
  }
  throw CheckpointError(CheckpointFault::config_mismatch, "array '" + name + "' missing");
}

template <typename T>
ConvBlock<T> ConvBlock<T>::make(std::size_t in_channels, std::size_t out_channels, std::size_t ksize,
                                bool with_bn, Activation activation, Rng& rng) {
  ConvBlock block;
  const double fan_in = static_cast<double>(in_channels * ksize * ksize);
  const double bound = std::sqrt(6.0 / ((1.0 + kLeakySlope * kLeakySlope) * fan_in));
  std::vector<T> w(out_channels * in_channels * ksize * ksize);
  for (auto& v : w) v = static_cast<T>(rng.uniform(-bound, bound));
  block.kernel = BasicTensor<T>::from({out_channels, in_channels, ksize, ksize}, std::move(w), true);
  block.bias = BasicTensor<T>::zeros({out_channels}, true);
  if (with_bn) block.bn.emplace(out_channels);
  block.activation = activation;
  return block;
}

template <typename T>
BasicTensor<T> ConvBlock<T>::forward(const BasicTensor<T>& x, bool training) {
  auto y = conv2d(x, kernel, bias);
  if (bn) y = batch_norm(y, *bn, training);
  switch (activation) {
    case Activation::leaky_relu: return leaky_relu(y, kLeakySlope);
    case Activation::sigmoid: return sigmoid(y);
    case Activation::identity: return y;
  }
  return y;
}

template <typename T>
void ConvBlock<T>::collect_parameters(std::vector<BasicTensor<T>>& out) const {
  out.push_back(kernel);
  out.push_back(bias);
  if (bn) {
    out.push_back(bn->gamma);
    out.push_back(bn->beta);
  }
}

template <typename T>
void ConvBlock<T>::collect_state(const std::string& prefix, std::vector<NamedArray>& out) const {
  out.push_back(to_array(prefix + ".kernel", kernel));
  out.push_back(to_array(prefix + ".bias", bias));
  if (bn) {
    out.push_back(to_array(prefix + ".bn.gamma", bn->gamma));
    out.push_back(to_array(prefix + ".bn.beta", bn->beta));
    out.push_back({prefix + ".bn.running_mean", {bn->channels()}, bn->running_mean});
    out.push_back({prefix + ".bn.running_var", {bn->channels()}, bn->running_var});
  }
}

template <typename T>
void ConvBlock<T>::load_state(const std::string& prefix, const std::vector<NamedArray>& in) {
  assign(kernel, find_array(in, prefix + ".kernel", kernel.shape()));
  assign(bias, find_array(in, prefix + ".bias", bias.shape()));
  if (bn) {
    assign(bn->gamma, find_array(in, prefix + ".bn.gamma", bn->gamma.shape()));
    assign(bn->beta, find_array(in, prefix + ".bn.beta", bn->beta.shape()));
    bn->running_mean = find_array(in, prefix + ".bn.running_mean", {bn->channels()}).values;
    bn->running_var = find_array(in, prefix + ".bn.running_var", {bn->channels()}).values;
  }
}

template struct ConvBlock<float>;
template struct ConvBlock<double>;

}  // namespace stcl
