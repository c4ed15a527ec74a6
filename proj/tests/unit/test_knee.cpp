#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "stcl/error.hpp"
#include "stcl/knee.hpp"

using namespace stcl;

namespace {

KneeParams raw() {
  KneeParams p;
  p.smoothing_window = 1;
  p.min_epochs = 0;
  return p;
}

std::vector<double> curve(std::size_t n, const std::function<double(double)>& f) {
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = f(static_cast<double>(i));
  return y;
}

}  // namespace

TEST_CASE("a straight line has no knee") {
  for (std::size_t n : {10u, 25u, 60u}) {
    auto y = curve(n, [](double i) { return 5.0 - 0.1 * i; });
    CHECK_FALSE(detect_knee(y, raw()).has_value());
    CHECK_FALSE(detect_knee(y, KneeParams{}).has_value());
  }
}

TEST_CASE("flat and short series have no knee") {
  CHECK_FALSE(detect_knee(std::vector<double>(20, 1.0), raw()).has_value());
  CHECK_FALSE(detect_knee(std::vector<double>{1.0, 0.5}, raw()).has_value());
  auto y = curve(30, [](double i) { return 1.0 / (1.0 + i); });
  KneeParams p;
  p.min_epochs = 31;
  CHECK_FALSE(detect_knee(y, p).has_value());
}

TEST_CASE("hyperbolic loss agrees with the maximum-curvature oracle") {
  for (std::size_t n : {20u, 31u, 45u}) {
    for (double a : {0.5, 1.0, 3.0, 8.0}) {
      auto y = curve(n, [a](double i) { return 1.0 / (1.0 + i / a); });
      auto k = detect_knee(y, raw());
      REQUIRE(k.has_value());
      CHECK(std::abs(static_cast<long>(*k) - static_cast<long>(oracle::max_curvature(y))) <= 1);
    }
  }
}

TEST_CASE("knee index is invariant to affine rescaling of the loss") {
  auto y = curve(40, [](double i) { return std::exp(-i / 2.0); });
  auto base = detect_knee(y, raw());
  REQUIRE(base.has_value());
  for (auto [s, t] : {std::pair{3.0, 0.0}, std::pair{0.01, 7.0}, std::pair{250.0, -4.0}}) {
    std::vector<double> z(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) z[i] = s * y[i] + t;
    CHECK(detect_knee(z, raw()) == base);
    CHECK(detect_knee(z, KneeParams{}) == detect_knee(y, KneeParams{}));
  }
}

TEST_CASE("increasing curves are mirrored") {
  auto down = curve(30, [](double i) { return 1.0 / (1.0 + i); });
  auto up = curve(30, [](double i) { return 1.0 - 1.0 / (1.0 + i); });
  CHECK(detect_knee(up, raw()) == detect_knee(down, raw()));
}

TEST_CASE("higher sensitivity waits longer or gives up") {
  auto y = curve(25, [](double i) { return 1.0 / (1.0 + i / 2.0); });
  KneeParams low = raw(), high = raw();
  high.sensitivity = 50.0;
  CHECK(detect_knee(y, low).has_value());
  CHECK_FALSE(detect_knee(y, high).has_value());
}

TEST_CASE("moving average is centered and shrinks at the ends") {
  std::vector<double> y{1, 2, 3, 10, 5};
  auto m = moving_average(y, 3);
  CHECK(m[0] == doctest::Approx(1.0));
  CHECK(m[1] == doctest::Approx(2.0));
  CHECK(m[2] == doctest::Approx(5.0));
  CHECK(m[3] == doctest::Approx(6.0));
  CHECK(m[4] == doctest::Approx(5.0));
  CHECK(moving_average(y, 1) == y);
}

TEST_CASE("difference curve is zero at both ends") {
  auto y = curve(20, [](double i) { return std::exp(-i / 3.0); });
  auto a = analyze_knee(y, raw());
  REQUIRE(a.difference.size() == 20);
  CHECK(a.difference.front() == doctest::Approx(0.0));
  CHECK(a.difference.back() == doctest::Approx(0.0));
  for (double d : a.difference) CHECK(d >= -1e-12);
}

TEST_CASE("knee parameters are validated") {
  KneeParams p;
  p.smoothing_window = 4;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.smoothing_window = 5;
  p.sensitivity = -1.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  std::vector<double> y{1.0, std::nan(""), 0.5};
  CHECK_THROWS_AS(analyze_knee(y, raw()), NumericError);
}
