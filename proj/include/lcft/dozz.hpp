#pragma once

#include <array>
#include <complex>

#include "lcft/params.hpp"
#include "lcft/upsilon.hpp"

namespace lcft {

/// Value of the DOZZ structure constant. `log_value` is a branch of the log
/// of `value`; both are meaningless when is_pole or is_zero is set.
struct DozzValue {
  cplx value{0.0, 0.0};
  cplx log_value{0.0, 0.0};
  bool is_pole = false;
  bool is_zero = false;
  // distance from the nearest denominator Upsilon argument to the zero set
  double pole_distance = 0.0;
};

inline constexpr double kDozzPoleTolerance = 1e-8;

/// log of the base pi mu l(g^2/4) (g/2)^{2 - g^2/2} of the DOZZ prefactor.
double dozz_log_prefactor_base(const CFTParams& params);

DozzValue dozz(cplx a1, cplx a2, cplx a3, const CFTParams& params,
               const UpsilonEvaluator& ev);

/// C_0 = sqrt(pi) exp(-1/4 + 2 zeta'(-1) - Q^2 (1 - 2 log 2)).
double c0_constant(const CFTParams& params);

/// Round-sphere metric density g(z) = 4 / (1 + |z|^2)^2.
double round_metric(cplx z);

/// Three-point function on the round sphere at finite distinct points:
/// distance powers x prod g(z_i)^{-Delta_i} x C_0 x DOZZ. Throws DomainError
/// on Seiberg failure or coincident points.
cplx three_point_fixed(cplx z1, cplx z2, cplx z3, double a1, double a2,
                       double a3, const CFTParams& params,
                       const UpsilonEvaluator& ev);

/// log |three_point_fixed| without C_0 and DOZZ (the explicit position part).
double three_point_log_position_factor(cplx z1, cplx z2, cplx z3, double a1,
                                       double a2, double a3,
                                       const CFTParams& params);

}  // namespace lcft
