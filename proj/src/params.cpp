#include "lcft/params.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "lcft/errors.hpp"

namespace lcft {

CFTParams derive_params(double gamma, double mu) {
  if (!(gamma > 0.0) || !(gamma < 2.0)) {
    std::ostringstream os;
    os << "gamma must satisfy 0 < gamma < 2 (chaos is trivial outside (0,2)), got "
       << gamma;
    throw DomainError(os.str());
  }
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    std::ostringstream os;
    os << "mu must be a positive finite number, got " << mu;
    throw DomainError(os.str());
  }
  CFTParams p;
  p.gamma = gamma;
  p.mu = mu;
  p.Q = 2.0 / gamma + gamma / 2.0;
  p.c_L = 1.0 + 6.0 * p.Q * p.Q;
  return p;
}

cplx conformal_weight(cplx alpha, const CFTParams& params) {
  return 0.5 * alpha * (params.Q - 0.5 * alpha);
}

double conformal_weight(double alpha, const CFTParams& params) {
  return 0.5 * alpha * (params.Q - 0.5 * alpha);
}

bool same_point(const SpherePoint& a, const SpherePoint& b) {
  if (a.at_infinity || b.at_infinity) return a.at_infinity && b.at_infinity;
  return a.z == b.z;
}

InsertionSet::InsertionSet(std::vector<SpherePoint> points,
                           std::vector<double> weights,
                           const CFTParams& params)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.size() != weights_.size()) {
    throw DomainError("InsertionSet: points and weights differ in length");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (std::size_t j = i + 1; j < points_.size(); ++j) {
      if (same_point(points_[i], points_[j])) {
        std::ostringstream os;
        os << "InsertionSet: points " << i << " and " << j << " coincide";
        throw DomainError(os.str());
      }
    }
  }
  deltas_.reserve(weights_.size());
  for (double a : weights_) deltas_.push_back(conformal_weight(a, params));
}

double InsertionSet::weight_sum() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

SeibergReport check_seiberg(const InsertionSet& insertions,
                            const CFTParams& params, int euler_char) {
  if (euler_char != 2) {
    throw DomainError("check_seiberg: only the sphere (euler_char = 2) is supported");
  }
  SeibergReport rep;
  rep.s = insertions.weight_sum() - euler_char * params.Q;
  if (!(rep.s > 0.0)) {
    std::ostringstream os;
    os << "sum of alpha_j > chi*Q violated (s = " << rep.s << ")";
    rep.violations.push_back(os.str());
  }
  const auto& w = insertions.weights();
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (!(w[j] < params.Q)) {
      std::ostringstream os;
      os << "alpha_j < Q violated at j=" << j << " (alpha=" << w[j]
         << ", Q=" << params.Q << ")";
      rep.violations.push_back(os.str());
    }
  }
  rep.pass = rep.violations.empty();
  return rep;
}

}  // namespace lcft
