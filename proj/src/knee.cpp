#include "stcl/knee.hpp"

#include <algorithm>
#include <cmath>

#include "stcl/error.hpp"

namespace stcl {

void KneeParams::validate() const {
  if (smoothing_window == 0 || smoothing_window % 2 == 0) {
    throw ValidationError("knee: smoothing_window must be odd and >= 1");
  }
  if (!(sensitivity >= 0.0) || !std::isfinite(sensitivity)) {
    throw ValidationError("knee: sensitivity must be finite and >= 0");
  }
}

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  const std::size_t n = series.size();
  const std::size_t half = window / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t reach = std::min({half, i, n - 1 - i});
    double acc = 0.0;
    for (std::size_t j = i - reach; j <= i + reach; ++j) acc += series[j];
    out[i] = acc / static_cast<double>(2 * reach + 1);
  }
  return out;
}

namespace {

// Min-max normalization; std::nullopt for a flat series.
std::optional<std::vector<double>> normalize(std::span<const double> y) {
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return std::nullopt;
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = (y[i] - *lo) / range;
  return out;
}

}  // namespace

KneeAnalysis analyze_knee(std::span<const double> series, const KneeParams& params) {
  params.validate();
  KneeAnalysis out;
  const std::size_t n = series.size();
  for (double v : series) {
    if (!std::isfinite(v)) throw NumericError("knee: series contains a non-finite value");
  }
  if (n < 3 || n < params.min_epochs || n < params.smoothing_window) return out;

  out.smoothed = moving_average(series, params.smoothing_window);
  auto norm = normalize(out.smoothed);
  if (!norm) {
    out.difference.assign(n, 0.0);
    return out;
  }
  const bool decreasing = out.smoothed.back() < out.smoothed.front();
  const double step = 1.0 / static_cast<double>(n - 1);
  out.difference.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = decreasing ? 1.0 - (*norm)[i] : (*norm)[i];
    out.difference[i] = y - static_cast<double>(i) * step;
  }

  const auto& d = out.difference;
  const double drop = params.sensitivity * step;
  std::optional<std::size_t> candidate;
  for (std::size_t j = 1; j < n; ++j) {
    if (j + 1 < n && d[j] > d[j - 1] && d[j] >= d[j + 1] && d[j] > 0.0) {
      candidate = j;
      continue;
    }
    if (candidate && d[j] < d[*candidate] - drop) {
      out.knee = candidate;
      break;
    }
  }
  return out;
}

}  // namespace stcl
