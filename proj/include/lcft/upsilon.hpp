#pragma once

#include <complex>
#include <string>

namespace lcft {

using cplx = std::complex<double>;

enum class UpsilonRule {
  // Boost Gauss-Kronrod (31 point) with per-panel adaptive bisection.
  AdaptiveGaussKronrod,
  // Fixed composite Gauss-Legendre; useful as an independent-resolution check.
  CompositeGaussLegendre,
};

struct UpsilonQuadrature {
  UpsilonRule rule = UpsilonRule::AdaptiveGaussKronrod;
  int nodes = 32;             // per panel (composite rule only)
  double panel_width = 0.5;   // composite rule only
  double cutoff = 0.0;        // upper limit T; 0 selects it from the tail bound
  double tolerance = 1e-13;   // absolute target on the integral
  double max_cutoff = 4000.0;
};

std::string rule_name(UpsilonRule rule);

/// One evaluation of the log-Upsilon integral with its diagnostics.
struct UpsilonIntegral {
  cplx value;
  double cutoff = 0;        // T actually used
  double tail_bound = 0;    // analytic bound on |int_T^inf|
  double error_estimate = 0;
};

/// Result of the continued log-Upsilon: either a finite log or an exact zero.
struct LogUpsilon {
  cplx log{0.0, 0.0};
  bool is_zero = false;
  int shifts = 0;
};

enum class UpsilonShift { HalfGamma, TwoOverGamma };

/// Zamolodchikov's Upsilon_{gamma/2}. Immutable after construction and safe
/// to share between threads.
class UpsilonEvaluator {
 public:
  explicit UpsilonEvaluator(double gamma, UpsilonQuadrature quad = {},
                            int max_shift_depth = 20000);

  double gamma() const { return gamma_; }
  double Q() const { return Q_; }
  const UpsilonQuadrature& quadrature() const { return quad_; }
  int max_shift_depth() const { return max_shift_depth_; }

  /// The defining integral; requires 0 < Re z < Q (DomainError otherwise).
  cplx log_upsilon(cplx z) const;
  UpsilonIntegral integrate(cplx z) const;

  /// Entire continuation through the shift relations.
  cplx upsilon(cplx z) const;
  LogUpsilon log_upsilon_continued(cplx z) const;

  /// log of Upsilon(z + step) / Upsilon(z) from the shift relations.
  cplx log_shift_factor(cplx z, UpsilonShift step) const;
  double step_size(UpsilonShift step) const;

  /// Distance from z to the zero set (-g/2 N - 2/g N) u (Q + g/2 N + 2/g N).
  double zero_distance(cplx z) const;

  /// Upsilon'(0) = Upsilon(gamma/2), the z -> 0 limit of the gamma/2 shift.
  cplx derivative_at_zero() const;

 private:
  cplx integrand(cplx a, double t) const;
  double tail_bound(cplx a, double T) const;

  double gamma_;
  double Q_;
  UpsilonQuadrature quad_;
  int max_shift_depth_;
};

}  // namespace lcft
