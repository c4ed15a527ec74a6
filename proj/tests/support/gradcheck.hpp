#pragma once

#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stcl/tensor.hpp"

namespace gradcheck {

using stcl::Tensor64;
using Fn = std::function<Tensor64(const std::vector<Tensor64>&)>;

struct Result {
  double worst = 0.0;
  std::size_t checked = 0;
};

inline std::vector<Tensor64> fresh_inputs(const std::vector<Tensor64>& inputs, bool grad) {
  std::vector<Tensor64> out;
  for (const auto& t : inputs) {
    std::vector<double> v(t.data().begin(), t.data().end());
    out.push_back(Tensor64::from(t.shape(), std::move(v), grad));
  }
  return out;
}

// Compares backward() against central differences for every input listed in
// `wrt`; returns the worst norm-wise relative error.
inline Result check(const Fn& f, const std::vector<Tensor64>& inputs, const std::vector<std::size_t>& wrt,
                    double h = 1e-4) {
  auto live = fresh_inputs(inputs, true);
  f(live).backward();
  Result r;
  for (std::size_t k : wrt) {
    std::vector<double> analytic(live[k].grad().begin(), live[k].grad().end());
    std::vector<double> x0(inputs[k].data().begin(), inputs[k].data().end());
    auto eval = [&](const std::vector<double>& x) {
      auto probe = fresh_inputs(inputs, false);
      std::copy(x.begin(), x.end(), probe[k].data().begin());
      return f(probe).item();
    };
    auto numeric = oracle::numeric_gradient(eval, x0, h);
    r.worst = std::max(r.worst, oracle::relative_error(analytic, numeric));
    ++r.checked;
  }
  return r;
}

// Uniform values kept at least `gap` away from zero, so piecewise ops are
// not probed across their kink.
inline std::vector<double> away_from_zero(std::mt19937_64& rng, std::size_t n, double lo, double hi,
                                          double gap = 1e-2) {
  auto v = oracle::random_vector(rng, n, lo, hi);
  for (auto& e : v)
    if (std::abs(e) < gap) e = e < 0 ? -gap - std::abs(e) : gap + e;
  return v;
}

}  // namespace gradcheck
