#pragma once

#include <cmath>

namespace hminlag::tol {

/// Identities that hold exactly up to rounding.
inline constexpr double kExact = 1e-9;
inline constexpr double kPullbackFloor = 1e-8;

/// C in the C * h^2 bounds of the order-2 checks. Calibrated on the
/// geodesic-block products and closed-form curves (tests/test_geoverify.cpp).
inline constexpr double kPullbackC = 10.0;
inline constexpr double kMetricC = 10.0;
inline constexpr double kMeanCurvatureC = 10.0;
inline constexpr double kGradientC = 10.0;
inline constexpr double kDivJHC = 50.0;
inline constexpr double kEq10C = 50.0;

inline constexpr double kRoundoff = 20.0 * 2.220446049250313e-16;

inline double order2(double c, double h) { return c * h * h; }

/// C h^2 plus the rounding floor eps / h^k of a k-fold nested difference quotient.
inline double order2_floor(double c, double h, int k) { return c * h * h + kRoundoff / std::pow(h, k); }

}  // namespace hminlag::tol
