#pragma once

#include <functional>
#include <vector>

namespace lcft {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
/// Results are memoised per n; the returned reference stays valid.
const QuadratureRule& gauss_legendre(int n);

/// Gauss-Legendre rule mapped onto [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

/// Composite rule: `panels` equal panels on [a, b], n nodes each.
QuadratureRule composite_gauss_legendre(int n, int panels, double a, double b);

}  // namespace lcft
