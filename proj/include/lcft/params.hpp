#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace lcft {

using cplx = std::complex<double>;

/// Coupling data of the theory. Construct through derive_params().
struct CFTParams {
  double gamma = 0;
  double Q = 0;
  double mu = 0;
  double c_L = 0;
};

/// Validates 0 < gamma < 2 and mu > 0 and fills Q = 2/gamma + gamma/2,
/// c_L = 1 + 6 Q^2. Throws DomainError naming the violated bound.
CFTParams derive_params(double gamma, double mu);

/// Delta_alpha = (alpha/2)(Q - alpha/2).
cplx conformal_weight(cplx alpha, const CFTParams& params);
double conformal_weight(double alpha, const CFTParams& params);

/// A marked point on the sphere in stereographic coordinates. The point at
/// infinity is flagged rather than encoded as a huge number.
struct SpherePoint {
  cplx z{0.0, 0.0};
  bool at_infinity = false;

  static SpherePoint finite(cplx z) { return {z, false}; }
  static SpherePoint infinity() { return {{0.0, 0.0}, true}; }
};

bool same_point(const SpherePoint& a, const SpherePoint& b);

/// Marked points with weights; conformal weights are derived on construction.
class InsertionSet {
 public:
  InsertionSet(std::vector<SpherePoint> points, std::vector<double> weights,
               const CFTParams& params);

  const std::vector<SpherePoint>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& conformal_weights() const { return deltas_; }
  std::size_t size() const { return points_.size(); }
  double weight_sum() const;

 private:
  std::vector<SpherePoint> points_;
  std::vector<double> weights_;
  std::vector<double> deltas_;
};

struct SeibergReport {
  bool pass = false;
  // s = sum(alpha) - chi * Q
  double s = 0;
  std::vector<std::string> violations;
};

/// Seiberg bounds: sum alpha_j > chi Q and alpha_j < Q for all j. Only the
/// sphere (chi = 2) is supported.
SeibergReport check_seiberg(const InsertionSet& insertions,
                            const CFTParams& params, int euler_char = 2);

}  // namespace lcft
