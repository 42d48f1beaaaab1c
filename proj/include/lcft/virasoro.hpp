#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lcft/params.hpp"
#include "lcft/young.hpp"

namespace lcft {

/// Integer combination constant + delta*Delta + half_c*(c/2). Every entry of
/// the matrix of L_k (k > 0) on the PBW basis has this form.
struct AffineCoeff {
  long long constant = 0;
  long long delta = 0;
  long long half_c = 0;

  AffineCoeff& operator+=(const AffineCoeff& o) {
    constant += o.constant;
    delta += o.delta;
    half_c += o.half_c;
    return *this;
  }
  AffineCoeff operator*(long long s) const { return {constant * s, delta * s, half_c * s}; }
  bool is_zero() const { return constant == 0 && delta == 0 && half_c == 0; }
};

/// Exact polynomial in (Delta, h = c/2) with integer coefficients.
class IntPoly2 {
 public:
  IntPoly2() = default;
  IntPoly2(long long c);  // NOLINT(google-explicit-constructor)
  static IntPoly2 delta();
  static IntPoly2 half_c();

  IntPoly2& operator+=(const IntPoly2& o);
  friend IntPoly2 operator+(IntPoly2 a, const IntPoly2& b) { return a += b; }
  friend IntPoly2 operator-(const IntPoly2& a, const IntPoly2& b);
  friend IntPoly2 operator*(const IntPoly2& a, const IntPoly2& b);
  friend bool operator==(const IntPoly2& a, const IntPoly2& b) = default;

  /// (power of Delta, power of h) -> coefficient, zero terms dropped
  const std::map<std::pair<int, int>, long long>& terms() const { return terms_; }
  cplx eval(cplx delta, cplx c) const;
  int total_degree() const;
  std::string str() const;

 private:
  void prune();
  std::map<std::pair<int, int>, long long> terms_;
};

/// Matrices of L_k (k >= 1) on the PBW basis of the Verma module, levels
/// 0..max_level, obtained by straightening with the Virasoro commutators.
/// Shared read-only after construction.
class VermaStructure {
 public:
  /// Returns a structure covering at least max_level (built once, then reused).
  static const VermaStructure& get(int max_level);

  int max_level() const { return max_level_; }
  const LevelIndex& level(int N) const { return levels_.at(N); }

  struct Entry {
    int column;  // index at level N - k
    AffineCoeff coeff;
  };
  /// Row j lists L_k applied to basis vector j of level N.
  const std::vector<std::vector<Entry>>& lowering(int N, int k) const;

 private:
  explicit VermaStructure(int max_level);
  int max_level_;
  std::vector<LevelIndex> levels_;
  // lowering_[N][k] for 1 <= k <= N
  std::vector<std::vector<std::vector<std::vector<Entry>>>> lowering_;
};

/// Shapovalov pairing <L_{-nu} Psi, L_{-nu'} Psi> for a highest-weight state
/// of weight Delta at central charge c (bilinear form). Zero across levels.
cplx virasoro_pairing(const YoungDiagram& nu, const YoungDiagram& nu_prime, cplx Delta, cplx c);

/// Exact Gram matrix of level N as integer polynomials in (Delta, c/2).
std::vector<std::vector<IntPoly2>> gram_polynomial(int N);

template <class S>
using DenseMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S>
struct GramLevelT {
  int level = 0;
  std::vector<YoungDiagram> basis;
  DenseMatrix<S> gram;
  DenseMatrix<S> gram_inverse;
  S delta{};
  S c{};
  // reciprocal condition estimate of the Jacobi-scaled Gram matrix
  double scaled_rcond = 1.0;
};
using GramLevel = GramLevelT<cplx>;
using RealGramLevel = GramLevelT<double>;

inline constexpr double kGramConditionLimit = 1e12;

/// Gram matrix and inverse at level N, memoised by (N, Delta, c). Throws
/// DegeneracyError (naming the nearest Kac weight) when the scaled condition
/// number exceeds 1e12. Safe for concurrent callers.
std::shared_ptr<const GramLevel> gram_level(int N, cplx Delta, cplx c);
std::shared_ptr<const RealGramLevel> gram_level_real(int N, double Delta, double c);

/// Uncached construction of levels 0..N.
template <class S>
std::vector<GramLevelT<S>> build_gram_levels(int N, S Delta, S c);

/// Number of entries currently held by the Gram caches.
std::size_t gram_cache_size();
void clear_gram_cache();

/// Descendant three-point coefficient <L_{-nu} Delta | V_{Delta2}(1) | Delta1>,
/// normalised to 1 at the empty diagram. Peels L_{-nu_1} with
/// [L_k, V(z)] = z^k (z d/dz + (k+1) Delta2) V(z).
template <class S>
S descendant_3pt(S Delta1, S Delta2, S Delta, const YoungDiagram& nu);

/// c_N = sum_{|nu|=|nu'|=N} w(D1,D2,D;nu) F^{-1}(nu,nu') w(D4,D3,D;nu'), N = 0..L.
template <class S>
std::vector<S> block_coefficients(S Delta, S c, const std::array<S, 4>& externals, int L);

/// Truncated conformal block value and diagnostics.
struct BlockEval {
  double p = 0;
  std::array<double, 4> deltas{};
  cplx z{};
  int L = 0;
  std::vector<cplx> coefficients;
  cplx prefactor{};   // z^{Delta - Delta1 - Delta2}, principal branch
  cplx value{};
  double tail_estimate = 0;
};

/// Geometric estimate of |sum_{N > L} c_N z^N| from the last coefficient ratios.
double block_tail_estimate(const std::vector<cplx>& coefficients, double abs_z);

/// Principal-branch z^{Delta - Delta1 - Delta2} * sum_{N <= L} c_N z^N.
cplx block_series(const std::vector<cplx>& coefficients, cplx exponent, cplx z);

/// Block with internal weight Delta_{Q+ip} = Q^2/4 + p^2/4 at c = c_L.
/// Requires |z| < 1 and L >= 0.
BlockEval block(double p, const std::array<double, 4>& deltas, cplx z, int L,
                const CFTParams& params);

/// Kac weight Delta_{r,s} = Q^2/4 - (r b + s/b)^2/4 with b + 1/b = Q, c = 1 + 6 Q^2.
cplx kac_weight(int r, int s, cplx c);

}  // namespace lcft
