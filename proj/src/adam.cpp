#include "stcl/adam.hpp"

#include <cmath>

#include "stcl/error.hpp"

namespace stcl {

template <typename T>
AdamState AdamState::for_params(std::span<const BasicTensor<T>> params) {
  AdamState state;
  for (const auto& p : params) {
    state.m.emplace_back(p.numel(), 0.0);
    state.v.emplace_back(p.numel(), 0.0);
  }
  return state;
}

void AdamState::reset() {
  for (auto& m_i : m) std::fill(m_i.begin(), m_i.end(), 0.0);
  for (auto& v_i : v) std::fill(v_i.begin(), v_i.end(), 0.0);
  t = 0;
}

template <typename T>
void adam_step(std::span<BasicTensor<T>> params, AdamState& state, const AdamConfig& config) {
  if (state.m.size() != params.size()) {
    throw ValidationError("adam_step: state tracks " + std::to_string(state.m.size()) +
                          " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].numel()) {
      throw ValidationError("adam_step: moment shape mismatch for parameter " + std::to_string(i));
    }
    if (!params[i].has_grad()) continue;
    for (T g : params[i].grad()) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw NumericError("adam_step: non-finite gradient in parameter " + std::to_string(i));
      }
    }
  }

  state.t += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].data();
    const bool has_grad = params[i].has_grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = has_grad ? static_cast<double>(params[i].grad()[j]) : 0.0;
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      values[j] = static_cast<T>(values[j] - config.lr * m_hat / (std::sqrt(v_hat) + config.eps));
    }
  }
}

template AdamState AdamState::for_params(std::span<const BasicTensor<float>>);
template AdamState AdamState::for_params(std::span<const BasicTensor<double>>);
template void adam_step(std::span<BasicTensor<float>>, AdamState&, const AdamConfig&);
template void adam_step(std::span<BasicTensor<double>>, AdamState&, const AdamConfig&);

}  // namespace stcl
