#include "pinnbo/beam_physics.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace pinnbo::beam {

namespace {

constexpr double kPi = std::numbers::pi;

// d^k/dx^k sin(4 pi e^{2x}), k in [2, 4]; u = 4 pi e^{2x}, u' = 2u.
double chirp_derivative(double x, int k) {
  const double u = 4.0 * kPi * std::exp(2.0 * x);
  const double s = std::sin(u);
  const double c = std::cos(u);
  switch (k) {
    case 2: return -4.0 * u * u * s + 4.0 * u * c;
    case 3: return -24.0 * u * u * s - 8.0 * u * u * u * c + 8.0 * u * c;
    case 4: return 16.0 * u * u * u * u * s - 96.0 * u * u * u * c - 112.0 * u * u * s + 16.0 * u * c;
    default: throw std::invalid_argument("chirp_derivative: order out of range");
  }
}

// d^k/dx^k e^{2x} sin(20x) = Im((2 + 20i)^k e^{(2 + 20i) x})
double damped_wave_derivative(double x, int k) {
  const std::complex<double> a(2.0, 20.0);
  return (std::pow(a, k) * std::exp(a * x)).imag();
}

double cubic_derivative(double x, int k) {
  switch (k) {
    case 2: return 2.4 * x + 0.4;
    case 3: return 2.4;
    case 4: return 0.0;
    default: throw std::invalid_argument("cubic_derivative: order out of range");
  }
}

constexpr double kBumpAmp = 3.0;
constexpr double kBumpCenter = 0.3;
constexpr double kBumpWidth = 0.06;

}  // namespace

double rho(double x, int k) {
  if (k < 0 || k > 2) throw std::invalid_argument("beam::rho: derivative order must be 0..2");
  return chirp_derivative(x, k + 2) + damped_wave_derivative(x, k + 2) + cubic_derivative(x, k + 2);
}

double rigidity(double x) { return std::exp(x) / rho(x); }

double rigidity_d1(double x) {
  const double r = rho(x);
  return rigidity(x) * (1.0 - rho(x, 1) / r);
}

double rigidity_d2(double x) {
  const double r = rho(x);
  const double ratio = rho(x, 1) / r;
  return rigidity(x) * ((1.0 - ratio) * (1.0 - ratio) - rho(x, 2) / r + ratio * ratio);
}

double compliance(double x) { return rho(x) * std::exp(-x); }

double load_moment(double x) {
  const double g = std::exp(-(x - kBumpCenter) * (x - kBumpCenter) / (2.0 * kBumpWidth * kBumpWidth));
  return -std::sin(kPi * x) * (1.0 + kBumpAmp * g);
}

double load(double x) {
  const double s = std::sin(kPi * x);
  const double s1 = kPi * std::cos(kPi * x);
  const double s2 = -kPi * kPi * s;
  const double w2 = kBumpWidth * kBumpWidth;
  const double dx = x - kBumpCenter;
  const double g = std::exp(-dx * dx / (2.0 * w2));
  const double b = 1.0 + kBumpAmp * g;
  const double b1 = kBumpAmp * g * (-dx / w2);
  const double b2 = kBumpAmp * g * (dx * dx / (w2 * w2) - 1.0 / w2);
  return -(s2 * b + 2.0 * s1 * b1 + s * b2);
}

bool near_pole(double x) {
  // max|rho| on [0, 1] is about 3.4e4
  constexpr double kRhoScale = 3.4e4;
  return std::abs(rho(x)) < kSingularRhoFraction * kRhoScale;
}

}  // namespace pinnbo::beam
