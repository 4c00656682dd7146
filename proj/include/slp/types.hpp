#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace slp {

using Complex = std::complex<double>;
using ArrayXc = Eigen::ArrayXcd;
using ArrayXr = Eigen::ArrayXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace slp
