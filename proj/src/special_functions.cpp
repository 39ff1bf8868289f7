#include "gi0nn/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gi0nn {

namespace {

void require_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error(std::string(fn) + ": argument must be positive and finite");
  }
}

// Lanczos coefficients for g = 7, n = 9 (Godfrey's tableau).
constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

}  // namespace

double ln_gamma(double x) {
  require_positive(x, "ln_gamma");
  if (x < 0.5) {
    // Reflection keeps the Lanczos argument away from zero.
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - ln_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double series = kLanczos[0];
  for (int i = 1; i < 9; ++i) series += kLanczos[i] / (z + i);
  const double t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(series);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double result = 0.0;
  // psi(x) = psi(x+1) - 1/x until the asymptotic series applies.
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  // psi(x) ~ log x - 1/(2x) - sum_k B_{2k} / (2k x^{2k})
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  static constexpr double kCoef[7] = {
      1.0 / 12.0,   -1.0 / 120.0,  1.0 / 252.0, -1.0 / 240.0,
      1.0 / 132.0,  -691.0 / 32760.0, 1.0 / 12.0};
  double p = inv2;
  for (int k = 0; k < 7; ++k) {
    series += kCoef[k] * p;
    p *= inv2;
  }
  return result + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double result = 0.0;
  // psi'(x) = psi'(x+1) + 1/x^2
  while (x < 10.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  // psi'(x) ~ 1/x + 1/(2x^2) + sum_k B_{2k} / x^{2k+1}
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  static constexpr double kCoef[7] = {
      1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0,
      5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0};
  double series = 0.0;
  double p = inv * inv2;
  for (int k = 0; k < 7; ++k) {
    series += kCoef[k] * p;
    p *= inv2;
  }
  return result + inv + 0.5 * inv2 + series;
}

double sample_normal(RngStream& stream) {
  for (;;) {
    const double u = 2.0 * stream.next_double() - 1.0;
    const double v = 2.0 * stream.next_double() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

double sample_gamma(RngStream& stream, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw std::domain_error("sample_gamma: shape and rate must be positive");
  }
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a+1) * U^{1/a}
    const double boost = std::pow(stream.next_open(), 1.0 / shape);
    return sample_gamma(stream, shape + 1.0, rate) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z;
    double v;
    do {
      z = sample_normal(stream);
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.next_open();
    if (u < 1.0 - 0.0331 * z * z * z * z) return d * v / rate;
    if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

}  // namespace gi0nn
