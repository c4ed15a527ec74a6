#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace stcl {

struct KneeParams {
  std::size_t smoothing_window = 5;
  double sensitivity = 1.0;
  std::size_t min_epochs = 10;

  void validate() const;
};

struct KneeAnalysis {
  std::optional<std::size_t> knee;
  std::vector<double> smoothed;
  std::vector<double> difference;  // y' - x on the normalized axes
};

/// Centered moving average; the window shrinks symmetrically at the ends.
std::vector<double> moving_average(std::span<const double> series, std::size_t window);

/// Kneedle on a loss-like series. Candidates are local maxima of the
/// normalized difference curve; the latest candidate fires once the curve
/// falls more than sensitivity/(n-1) below it. A series shorter than
/// min_epochs or the smoothing window, or a flat one, has no knee.
KneeAnalysis analyze_knee(std::span<const double> series, const KneeParams& params);

inline std::optional<std::size_t> detect_knee(std::span<const double> series, const KneeParams& params) {
  return analyze_knee(series, params).knee;
}

}  // namespace stcl
