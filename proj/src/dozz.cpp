#include "lcft/dozz.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "lcft/errors.hpp"
#include "lcft/gamma.hpp"

namespace lcft {

double dozz_log_prefactor_base(const CFTParams& params) {
  const double g = params.gamma;
  const double l = std::exp(std::lgamma(g * g / 4.0) - std::lgamma(1.0 - g * g / 4.0));
  return std::log(std::numbers::pi * params.mu * l) + (2.0 - g * g / 2.0) * std::log(g / 2.0);
}

DozzValue dozz(cplx a1, cplx a2, cplx a3, const CFTParams& params,
               const UpsilonEvaluator& ev) {
  DozzValue out;
  const cplx abar = a1 + a2 + a3;
  const std::array<cplx, 4> den = {abar / 2.0 - params.Q, abar / 2.0 - a1,
                                   abar / 2.0 - a2, abar / 2.0 - a3};
  out.pole_distance = std::numeric_limits<double>::infinity();
  for (const cplx& d : den) out.pole_distance = std::min(out.pole_distance, ev.zero_distance(d));
  if (out.pole_distance < kDozzPoleTolerance) {
    out.is_pole = true;
    out.value = {std::numeric_limits<double>::infinity(), 0.0};
    return out;
  }

  cplx log_num = std::log(ev.derivative_at_zero());
  for (const cplx& a : {a1, a2, a3}) {
    const LogUpsilon lu = ev.log_upsilon_continued(a);
    if (lu.is_zero) {
      out.is_zero = true;
      out.value = 0.0;
      return out;
    }
    log_num += lu.log;
  }
  cplx log_den = 0.0;
  for (const cplx& d : den) log_den += ev.log_upsilon_continued(d).log;

  const cplx exponent = (2.0 * params.Q - abar) / params.gamma;
  out.log_value = exponent * dozz_log_prefactor_base(params) + log_num - log_den;
  out.value = std::exp(out.log_value);
  return out;
}

double c0_constant(const CFTParams& params) {
  const double Q = params.Q;
  return std::sqrt(std::numbers::pi) *
         std::exp(-0.25 + 2.0 * kZetaPrimeMinusOne - Q * Q * (1.0 - 2.0 * std::log(2.0)));
}

double round_metric(cplx z) {
  const double r = 1.0 + std::norm(z);
  return 4.0 / (r * r);
}

double three_point_log_position_factor(cplx z1, cplx z2, cplx z3, double a1,
                                       double a2, double a3,
                                       const CFTParams& params) {
  const double d1 = conformal_weight(a1, params);
  const double d2 = conformal_weight(a2, params);
  const double d3 = conformal_weight(a3, params);
  const double l12 = std::log(std::abs(z1 - z2));
  const double l13 = std::log(std::abs(z1 - z3));
  const double l23 = std::log(std::abs(z2 - z3));
  return 2.0 * (d2 - d1 - d3) * l13 + 2.0 * (d1 - d2 - d3) * l23 +
         2.0 * (d3 - d1 - d2) * l12 - d1 * std::log(round_metric(z1)) -
         d2 * std::log(round_metric(z2)) - d3 * std::log(round_metric(z3));
}

cplx three_point_fixed(cplx z1, cplx z2, cplx z3, double a1, double a2,
                       double a3, const CFTParams& params,
                       const UpsilonEvaluator& ev) {
  InsertionSet ins({SpherePoint::finite(z1), SpherePoint::finite(z2), SpherePoint::finite(z3)},
                   {a1, a2, a3}, params);
  const SeibergReport rep = check_seiberg(ins, params);
  if (!rep.pass) {
    throw DomainError("three_point_fixed: Seiberg bounds violated: " + rep.violations.front());
  }
  const DozzValue c = dozz(a1, a2, a3, params, ev);
  if (c.is_pole) throw DomainError("three_point_fixed: DOZZ pole");
  const double pos = three_point_log_position_factor(z1, z2, z3, a1, a2, a3, params);
  return std::exp(pos) * c0_constant(params) * c.value;
}

}  // namespace lcft
