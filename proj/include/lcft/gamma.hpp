#pragma once

#include <complex>

namespace lcft {

using cplx = std::complex<double>;

/// Complex log-Gamma (Lanczos, g = 7, n = 9) with reflection for Re z < 1/2.
/// Returns some branch of log Gamma(z); only exp() of sums of these values is
/// meaningful. Relative accuracy of exp(log_gamma(z)) is about 1e-15 away
/// from the poles. At a pole the real part is +infinity.
cplx log_gamma(cplx z);

/// log l(z) where l(z) = Gamma(z) / Gamma(1 - z).
cplx log_l(cplx z);

/// Real log|Gamma(x)| for x > 0.
double log_gamma_pos(double x);

/// True when z is within tol of a non-positive integer.
bool near_gamma_pole(cplx z, double tol = 1e-14);

/// zeta_R'(-1) = 1/12 - log(Glaisher's constant).
inline constexpr double kZetaPrimeMinusOne = -0.16542114370045092921;

}  // namespace lcft
