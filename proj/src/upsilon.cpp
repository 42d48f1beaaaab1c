#include "lcft/upsilon.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "lcft/errors.hpp"
#include "lcft/gamma.hpp"
#include "lcft/quadrature.hpp"

namespace lcft {

std::string rule_name(UpsilonRule rule) {
  switch (rule) {
    case UpsilonRule::AdaptiveGaussKronrod:
      return "adaptive-gauss-kronrod-31";
    case UpsilonRule::CompositeGaussLegendre:
      return "composite-gauss-legendre";
  }
  return "unknown";
}

UpsilonEvaluator::UpsilonEvaluator(double gamma, UpsilonQuadrature quad,
                                   int max_shift_depth)
    : gamma_(gamma), Q_(2.0 / gamma + gamma / 2.0), quad_(quad),
      max_shift_depth_(max_shift_depth) {
  if (!(gamma > 0.0) || !(gamma < 2.0)) {
    throw DomainError("UpsilonEvaluator: gamma must lie in (0,2)");
  }
}

namespace {

// sinh(x)/x - 1 without cancellation for small |x|.
cplx shc_minus_one(cplx x) {
  if (std::abs(x) > 0.5) return std::sinh(x) / x - 1.0;
  const cplx x2 = x * x;
  cplx term = x2 / 6.0, sum = 0.0;
  for (int k = 1; k < 12; ++k) {
    sum += term;
    term *= x2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
  }
  return sum;
}

}  // namespace

// Integrand of the log-Upsilon integral divided by t, with a = Q/2 - z and
// Re a >= 0. For t <= 2 the a^2 pieces are cancelled analytically:
//   f = a^2 [expm1(-t) + (p + q + pq - 2r - r^2) / ((1+p)(1+q))] / t,
// p, q, r = sinh(x)/x - 1 at x = g t/4, t/g, a t/2. For t > 2 the ratio is
// written overflow-free as
//   e^{(a - Q/2) t} (1 - e^{-a t})^2 / ((1 - e^{-g t/2}) (1 - e^{-2t/g})).
cplx UpsilonEvaluator::integrand(cplx a, double t) const {
  if (t <= 2.0) {
    const cplx p = shc_minus_one(gamma_ * t / 4.0);
    const cplx q = shc_minus_one(t / gamma_);
    const cplx r = shc_minus_one(a * t / 2.0);
    const cplx frac = (p + q + p * q - 2.0 * r - r * r) / ((1.0 + p) * (1.0 + q));
    return a * a * (std::expm1(-t) + frac) / t;
  }
  const cplx one_minus = 1.0 - std::exp(-a * t);
  const double den = (-std::expm1(-gamma_ * t / 2.0)) * (-std::expm1(-2.0 * t / gamma_));
  const cplx ratio = std::exp((a - Q_ / 2.0) * t) * one_minus * one_minus / den;
  return (a * a * std::exp(-t) - ratio) / t;
}

double UpsilonEvaluator::tail_bound(cplx a, double T) const {
  const double kappa = Q_ / 2.0 - a.real();
  const double D = (-std::expm1(-gamma_ * T / 2.0)) * (-std::expm1(-2.0 * T / gamma_));
  return std::norm(a) * std::exp(-T) / T + 4.0 * std::exp(-kappa * T) / (kappa * T * D);
}

UpsilonIntegral UpsilonEvaluator::integrate(cplx z) const {
  if (!(z.real() > 0.0) || !(z.real() < Q_)) {
    std::ostringstream os;
    os << "log_upsilon: Re z = " << z.real() << " outside the strip (0, " << Q_
       << "); use upsilon() for the continuation";
    throw DomainError(os.str());
  }
  cplx a = Q_ / 2.0 - z;
  if (a.real() < 0.0) a = -a;  // integrand is even in a

  UpsilonIntegral out;
  double T = quad_.cutoff;
  const double tail_target = 1e-2 * quad_.tolerance;
  if (T <= 0.0) {
    T = 8.0;
    while (tail_bound(a, T) > tail_target) {
      T *= 1.25;
      if (T > quad_.max_cutoff) {
        std::ostringstream os;
        os << "log_upsilon: tail bound above tolerance at cutoff " << quad_.max_cutoff
           << " for z = " << z;
        throw AccuracyError(os.str());
      }
    }
  }
  out.cutoff = T;
  out.tail_bound = tail_bound(a, T);

  cplx total = 0.0;
  auto f = [&](double t) { return integrand(a, t); };
  if (quad_.rule == UpsilonRule::AdaptiveGaussKronrod) {
    // panels no wider than 2 and no wider than ~ one oscillation period
    const double width = std::min(2.0, 6.0 / std::max(1.0, std::abs(a.imag())));
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    // absolute share of the tolerance per panel; a relative target alone
    // cannot be met on far-tail panels whose values sit at roundoff level
    const double panel_target = 1e-2 * quad_.tolerance * width / T;
    double lo = 0.0;
    while (lo < T) {
      const double hi = std::min(T, lo + width);
      double err = 0, l1 = 0;
      cplx v = GK::integrate(f, lo, hi, 0, 0.0, &err, &l1);
      if (err > panel_target)
        v = GK::integrate(f, lo, hi, 15, std::max(1e-14, panel_target / std::max(l1, 1e-300)), &err, &l1);
      total += v;
      out.error_estimate += err;
      lo = hi;
    }
  } else {
    const int panels = std::max(1, static_cast<int>(std::ceil(T / quad_.panel_width)));
    const auto rule = composite_gauss_legendre(quad_.nodes, panels, 0.0, T);
    cplx acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(rule.nodes[i]);
    total += acc;
  }
  if (out.error_estimate > quad_.tolerance * std::max(1.0, std::abs(total))) {
    std::ostringstream os;
    os << "log_upsilon: quadrature error estimate " << out.error_estimate
       << " above tolerance at z = " << z;
    throw AccuracyError(os.str());
  }
  out.value = total;
  return out;
}

cplx UpsilonEvaluator::log_upsilon(cplx z) const { return integrate(z).value; }

double UpsilonEvaluator::step_size(UpsilonShift step) const {
  return step == UpsilonShift::HalfGamma ? gamma_ / 2.0 : 2.0 / gamma_;
}

cplx UpsilonEvaluator::log_shift_factor(cplx z, UpsilonShift step) const {
  const double lg = std::log(gamma_ / 2.0);
  if (step == UpsilonShift::HalfGamma) {
    return log_l(gamma_ * z / 2.0) + (1.0 - gamma_ * z) * lg;
  }
  return log_l(2.0 * z / gamma_) + (4.0 * z / gamma_ - 1.0) * lg;
}

double UpsilonEvaluator::zero_distance(cplx z) const {
  const double b = gamma_ / 2.0, B = 2.0 / gamma_;
  // distance from r >= 0 to the semigroup {b m + B n : m, n >= 0}
  auto lattice_gap = [&](double r) {
    if (r <= 0.0) return -r;
    double best = std::numeric_limits<double>::infinity();
    const int nmax = static_cast<int>(std::floor(r / B)) + 1;
    for (int n = 0; n <= nmax; ++n) {
      const double rem = r - B * n;
      const double m = std::max(0.0, std::round(rem / b));
      best = std::min(best, std::abs(rem - b * m));
    }
    return best;
  };
  const double lower = lattice_gap(-z.real());
  const double upper = lattice_gap(z.real() - Q_);
  const double dx = std::min(lower, upper);
  return std::hypot(dx, z.imag());
}

LogUpsilon UpsilonEvaluator::log_upsilon_continued(cplx z) const {
  LogUpsilon out;
  if (zero_distance(z) < 1e-14 * std::max(1.0, std::abs(z))) {
    out.is_zero = true;
    return out;
  }
  const double b = gamma_ / 2.0, B = 2.0 / gamma_;
  const double centre = Q_ / 2.0;
  cplx w = z;
  cplx acc = 0.0;  // log Upsilon(z) = log Upsilon(w) + acc
  int depth = 0;
  while (std::abs(w.real() - centre) > b / 2.0) {
    if (++depth > max_shift_depth_) {
      std::ostringstream os;
      os << "upsilon: shift depth limit " << max_shift_depth_ << " exceeded for z = " << z;
      throw ResourceError(os.str());
    }
    const double off = w.real() - centre;
    if (off > 0) {
      // Upsilon(w) = factor(w - s) Upsilon(w - s)
      const UpsilonShift st = (off - B >= -b / 2.0) ? UpsilonShift::TwoOverGamma : UpsilonShift::HalfGamma;
      w -= step_size(st);
      acc += log_shift_factor(w, st);
    } else {
      // Upsilon(w) = Upsilon(w + s) / factor(w)
      const UpsilonShift st = (off + B <= b / 2.0) ? UpsilonShift::TwoOverGamma : UpsilonShift::HalfGamma;
      acc -= log_shift_factor(w, st);
      w += step_size(st);
    }
  }
  if (!std::isfinite(acc.real()) || !std::isfinite(acc.imag())) {
    std::ostringstream os;
    os << "upsilon: degenerate shift path for z = " << z;
    throw AccuracyError(os.str());
  }
  out.log = log_upsilon(w) + acc;
  out.shifts = depth;
  return out;
}

cplx UpsilonEvaluator::upsilon(cplx z) const {
  const LogUpsilon lu = log_upsilon_continued(z);
  if (lu.is_zero) return 0.0;
  return std::exp(lu.log);
}

cplx UpsilonEvaluator::derivative_at_zero() const { return upsilon(gamma_ / 2.0); }

}  // namespace lcft
