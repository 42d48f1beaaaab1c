#include "lcft/gamma.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace lcft {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoef = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

cplx lanczos_log_gamma(cplx z) {
  // valid for Re z >= 1/2
  z -= 1.0;
  cplx x = kLanczosCoef[0];
  for (std::size_t i = 1; i < kLanczosCoef.size(); ++i) {
    x += kLanczosCoef[i] / (z + static_cast<double>(i));
  }
  const cplx t = z + kLanczosG + 0.5;
  return kLogSqrt2Pi + (z + 0.5) * std::log(t) - t + std::log(x);
}

// log(sin(pi z)) without overflow for large |Im z|.
cplx log_sin_pi(cplx z) {
  const double y = z.imag();
  if (std::abs(y) < 20.0) return std::log(std::sin(std::numbers::pi * z));
  // sin(pi z) = (e^{i pi z} - e^{-i pi z}) / (2i)
  const cplx ipz = cplx(0.0, std::numbers::pi) * z;
  if (y > 0) {
    // e^{-i pi z} dominates
    return -ipz + std::log((std::exp(2.0 * ipz) - 1.0) / cplx(0.0, 2.0));
  }
  return ipz + std::log((1.0 - std::exp(-2.0 * ipz)) / cplx(0.0, 2.0));
}

}  // namespace

bool near_gamma_pole(cplx z, double tol) {
  if (z.real() > 0.5) return false;
  const double n = std::round(z.real());
  return std::abs(z - cplx(n, 0.0)) < tol * std::max(1.0, std::abs(n));
}

cplx log_gamma(cplx z) {
  if (near_gamma_pole(z)) {
    return {std::numeric_limits<double>::infinity(), 0.0};
  }
  if (z.real() < 0.5) {
    return std::log(std::numbers::pi) - log_sin_pi(z) - lanczos_log_gamma(1.0 - z);
  }
  return lanczos_log_gamma(z);
}

cplx log_l(cplx z) {
  const cplx num = log_gamma(z);
  const cplx den = log_gamma(1.0 - z);
  if (std::isinf(num.real()) && std::isinf(den.real())) {
    return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  }
  if (std::isinf(den.real())) return {-std::numeric_limits<double>::infinity(), 0.0};
  return num - den;
}

double log_gamma_pos(double x) { return std::lgamma(x); }

}  // namespace lcft
