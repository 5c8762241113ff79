#pragma once

#include <numbers>

namespace asyncnet::circle {

// Circle coordinates live on a dyadic lattice with spacing 2^-50 rad. The
// period is the double nearest 2*pi, which is itself a lattice point, so
// translations by lattice increments and reduction modulo the period are
// exact. Two phases advanced by equal increments keep their difference
// bit-for-bit.
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kLatticeScale = 1125899906842624.0;  // 2^50

/// Nearest lattice point.
double quantize(double x);

/// Quantize and reduce into [0, 2pi).
double wrap(double x);

/// Geodesic distance on the circle, in [0, pi].
double distance(double u, double v);

// Trigonometric functions reduced by the representable period. sin(k*pi)
// and cos(pi/2 + k*pi) are exactly zero for lattice arguments.
double sin(double x);
double cos(double x);
double tan(double x);

}  // namespace asyncnet::circle
