#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance run.

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "lcft/young.hpp"

namespace lcft::oracle {

using std::numbers::pi;
using lcft::YoungDiagram;

// Exact polynomial in (Delta, h = c/2), keyed by exponents.
using Poly = std::map<std::pair<int, int>, long long>;

inline void add_to(Poly& acc, const Poly& p, long long s) {
  for (const auto& [k, v] : p) acc[k] += s * v;
}

inline Poly times_delta(const Poly& p) {
  Poly r;
  for (const auto& [k, v] : p) r[{k.first + 1, k.second}] += v;
  return r;
}

inline Poly times_h(const Poly& p) {
  Poly r;
  for (const auto& [k, v] : p) r[{k.first, k.second + 1}] += v;
  return r;
}

inline void prune(Poly& p) {
  std::erase_if(p, [](const auto& kv) { return kv.second == 0; });
}

// <Delta| L_{w_1} ... L_{w_n} |Delta> by bubble-sorting modes into ascending
// order with [L_a, L_b] = (a - b) L_{a+b} + (c/12)(a^3 - a) delta_{a+b,0}.
class WordOracle {
 public:
  Poly vev(const std::vector<int>& w) {
    if (auto it = memo_.find(w); it != memo_.end()) return it->second;
    Poly out;
    std::size_t i = 0;
    while (i + 1 < w.size() && w[i] <= w[i + 1]) ++i;
    if (i + 1 >= w.size()) {
      // ascending word
      if (w.empty()) {
        out[{0, 0}] = 1;
      } else if (w.front() < 0 || w.back() > 0) {
        // bra or ket annihilated
      } else {
        out[{static_cast<int>(w.size()), 0}] = 1;
      }
    } else {
      const int a = w[i], b = w[i + 1];
      std::vector<int> swapped = w;
      std::swap(swapped[i], swapped[i + 1]);
      add_to(out, vev(swapped), 1);
      std::vector<int> merged(w.begin(), w.begin() + i);
      merged.push_back(a + b);
      merged.insert(merged.end(), w.begin() + i + 2, w.end());
      add_to(out, vev(merged), a - b);
      if (a + b == 0) {
        std::vector<int> dropped(w.begin(), w.begin() + i);
        dropped.insert(dropped.end(), w.begin() + i + 2, w.end());
        add_to(out, times_h(vev(dropped)), (static_cast<long long>(a) * a * a - a) / 6);
      }
      prune(out);
    }
    return memo_.emplace(w, out).first->second;
  }

  // <L_{-nu} Psi, L_{-nu'} Psi> = <Delta| L_{nu_n} .. L_{nu_1} L_{-nu'_1} .. L_{-nu'_m} |Delta>
  Poly pairing(const YoungDiagram& nu, const YoungDiagram& nup) {
    std::vector<int> w(nu.parts().rbegin(), nu.parts().rend());
    for (int k : nup.parts()) w.push_back(-k);
    return vev(w);
  }

 private:
  std::map<std::vector<int>, Poly> memo_;
};

// (1/2pi) int_0^{2pi} |1 - e^{i t}|^{-g2} dt by tanh-sinh (endpoint singularities)
inline double circle_second_moment_oracle(double gamma) {
  boost::math::quadrature::tanh_sinh<double> ts;
  const double g2 = gamma * gamma;
  auto f = [&](double t) { return std::pow(2 * std::sin(t / 2), -g2); };
  return ts.integrate(f, 0.0, 2 * pi) / (2 * pi);
}

// (1/(2pi)^2) int int |1-e^{ia}|^{-g2} |1-e^{ib}|^{-g2} |e^{ia}-e^{ib}|^{-g2}, inner
// integral split at the diagonal singularity
inline double circle_third_moment_oracle(double gamma) {
  boost::math::quadrature::tanh_sinh<double> ts(12);
  const double g2 = gamma * gamma;
  auto chord = [](double t) { return 2 * std::abs(std::sin(t / 2)); };
  // weight zero where roundoff lands exactly on an integrable singularity
  auto power = [&](double x) { return x > 0 ? std::pow(x, -g2) : 0.0; };
  // two-argument integrands receive the distance to the nearest endpoint
  auto outer = [&](double a) {
    auto lower = [&](double b, double bc) {
      const double gap = b > a / 2 ? bc : a - b;  // a - b
      return power(chord(b) * chord(gap));
    };
    auto upper = [&](double b, double bc) {
      const double gap = b < (a + 2 * pi) / 2 ? -bc : b - a;  // b - a
      const double to_end = b < (a + 2 * pi) / 2 ? 2 * pi - b : bc;
      return power(chord(to_end) * chord(gap));
    };
    return power(chord(a)) * (ts.integrate(lower, 0.0, a) + ts.integrate(upper, a, 2 * pi));
  };
  return ts.integrate(outer, 0.0, 2 * pi) / (4 * pi * pi);
}

// Moment of a circular-ensemble type: Gamma(1 - k g2/2) / Gamma(1 - g2/2)^k
inline double fyodorov_bouchaud(double gamma, int k) {
  const double g2 = gamma * gamma;
  return std::tgamma(1 - k * g2 / 2) / std::pow(std::tgamma(1 - g2 / 2), k);
}

// l(x) (gamma/2)^{1 - gamma x}, via std::tgamma (real x only).
inline double shift_half_gamma_factor(double x, double gamma) {
  const double u = gamma * x / 2;
  return std::tgamma(u) / std::tgamma(1 - u) * std::pow(gamma / 2, 1 - gamma * x);
}

}  // namespace lcft::oracle
