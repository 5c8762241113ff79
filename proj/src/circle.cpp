#include "asyncnet/circle.hpp"

#include <cmath>

namespace asyncnet::circle {

namespace {

constexpr double kHalfPi = kPi / 2.0;

// Reduce into [0, 2pi) without quantizing.
double reduce(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

// sin on [0, pi]; reflections use exact (Sterbenz) subtractions.
double sin_upper_half(double y) {
  if (y > kHalfPi) y = kPi - y;
  return std::sin(y);
}

// cos on [0, pi/2]; zero at pi/2 exactly.
double cos_quarter(double y) {
  if (y > kHalfPi / 2.0) return std::sin(kHalfPi - y);
  return std::cos(y);
}

// cos on [0, pi]
double cos_upper_half(double y) {
  if (y > kHalfPi) return -cos_quarter(kPi - y);
  return cos_quarter(y);
}

}  // namespace

double quantize(double x) {
  return std::nearbyint(x * kLatticeScale) / kLatticeScale;
}

double wrap(double x) {
  double r = std::fmod(quantize(x), kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double distance(double u, double v) {
  double d = std::fmod(std::fabs(u - v), kTwoPi);
  return d > kPi ? kTwoPi - d : d;
}

double sin(double x) {
  double r = reduce(x);
  if (r >= kPi) return -sin_upper_half(r - kPi);
  return sin_upper_half(r);
}

double cos(double x) {
  double r = reduce(x);
  if (r > kPi) r = kTwoPi - r;
  return cos_upper_half(r);
}

double tan(double x) { return sin(x) / cos(x); }

}  // namespace asyncnet::circle
