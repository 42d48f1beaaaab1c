#include "lcft/virasoro.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <tuple>
#include <type_traits>

#include "lcft/errors.hpp"

namespace lcft {

// ---------------------------------------------------------------- IntPoly2

IntPoly2::IntPoly2(long long c) {
  if (c != 0) terms_[{0, 0}] = c;
}

IntPoly2 IntPoly2::delta() {
  IntPoly2 p;
  p.terms_[{1, 0}] = 1;
  return p;
}

IntPoly2 IntPoly2::half_c() {
  IntPoly2 p;
  p.terms_[{0, 1}] = 1;
  return p;
}

void IntPoly2::prune() {
  std::erase_if(terms_, [](const auto& kv) { return kv.second == 0; });
}

IntPoly2& IntPoly2::operator+=(const IntPoly2& o) {
  for (const auto& [k, v] : o.terms_) terms_[k] += v;
  prune();
  return *this;
}

IntPoly2 operator-(const IntPoly2& a, const IntPoly2& b) {
  IntPoly2 r = a;
  for (const auto& [k, v] : b.terms_) r.terms_[k] -= v;
  r.prune();
  return r;
}

IntPoly2 operator*(const IntPoly2& a, const IntPoly2& b) {
  IntPoly2 r;
  for (const auto& [ka, va] : a.terms_)
    for (const auto& [kb, vb] : b.terms_)
      r.terms_[{ka.first + kb.first, ka.second + kb.second}] += va * vb;
  r.prune();
  return r;
}

cplx IntPoly2::eval(cplx delta, cplx c) const {
  cplx h = 0.5 * c;
  cplx sum = 0;
  for (const auto& [k, v] : terms_)
    sum += static_cast<double>(v) * std::pow(delta, k.first) * std::pow(h, k.second);
  return sum;
}

int IntPoly2::total_degree() const {
  int d = 0;
  for (const auto& [k, v] : terms_) d = std::max(d, k.first + k.second);
  return d;
}

std::string IntPoly2::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, v] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << v;
    if (k.first) os << "*D^" << k.first;
    if (k.second) os << "*h^" << k.second;
  }
  return os.str();
}

// ------------------------------------------------------------ straightening

namespace {

using IntState = std::map<YoungDiagram, long long>;
using AffState = std::map<YoungDiagram, AffineCoeff>;

YoungDiagram prepend(int n, const YoungDiagram& nu) {
  std::vector<int> parts;
  parts.reserve(nu.length() + 1);
  parts.push_back(n);
  parts.insert(parts.end(), nu.parts().begin(), nu.parts().end());
  return YoungDiagram(std::move(parts));
}

class Straightener {
 public:
  // L_{-n} L_{-nu} Psi in the PBW basis (integer coefficients).
  const IntState& create(int n, const YoungDiagram& nu) {
    auto key = std::make_pair(n, nu);
    if (auto it = create_memo_.find(key); it != create_memo_.end()) return it->second;
    IntState out;
    if (nu.empty() || n >= nu.parts().front()) {
      out[prepend(n, nu)] = 1;
    } else {
      // L_{-n} L_{-m} Y = L_{-m} L_{-n} Y + (m - n) L_{-(n+m)} Y
      const int m = nu.parts().front();
      const YoungDiagram rest = nu.tail();
      const IntState inner = create(n, rest);
      for (const auto& [d, a] : inner)
        for (const auto& [d2, b] : create(m, d)) out[d2] += a * b;
      for (const auto& [d, a] : create(n + m, rest)) out[d] += (m - n) * a;
      std::erase_if(out, [](const auto& kv) { return kv.second == 0; });
    }
    return create_memo_.emplace(key, std::move(out)).first->second;
  }

  // L_k L_{-nu} Psi for k >= 1.
  const AffState& lower(int k, const YoungDiagram& nu) {
    auto key = std::make_pair(k, nu);
    if (auto it = lower_memo_.find(key); it != lower_memo_.end()) return it->second;
    AffState out;
    if (k <= nu.level()) {
      const int n = nu.parts().front();
      const YoungDiagram rest = nu.tail();
      // L_k L_{-n} X = L_{-n} L_k X + (k + n) L_{k-n} X + delta_{kn} (c/12)(k^3 - k) X
      const AffState inner = lower(k, rest);
      for (const auto& [d, a] : inner)
        for (const auto& [d2, b] : create(n, d)) out[d2] += a * b;
      if (k > n) {
        for (const auto& [d, a] : lower(k - n, rest)) out[d] += a * (k + n);
      } else if (k == n) {
        out[rest] += AffineCoeff{rest.level(), 1, 0} * (k + n);
        out[rest] += AffineCoeff{0, 0, (static_cast<long long>(k) * k * k - k) / 6};
      } else {
        for (const auto& [d, b] : create(n - k, rest)) out[d] += AffineCoeff{b * (k + n), 0, 0};
      }
      std::erase_if(out, [](const auto& kv) { return kv.second.is_zero(); });
    }
    return lower_memo_.emplace(key, std::move(out)).first->second;
  }

 private:
  std::map<std::pair<int, YoungDiagram>, IntState> create_memo_;
  std::map<std::pair<int, YoungDiagram>, AffState> lower_memo_;
};

template <class S>
S affine_value(const AffineCoeff& a, S delta, S half_c) {
  return S(static_cast<double>(a.constant)) + S(static_cast<double>(a.delta)) * delta +
         S(static_cast<double>(a.half_c)) * half_c;
}

IntPoly2 affine_value(const AffineCoeff& a, const IntPoly2& delta, const IntPoly2& half_c) {
  return IntPoly2(a.constant) + IntPoly2(a.delta) * delta + IntPoly2(a.half_c) * half_c;
}

// Gram matrices of levels 0..N as nested vectors over an arbitrary ring.
template <class T>
std::vector<std::vector<std::vector<T>>> gram_recursion(int N, const T& delta, const T& half_c) {
  const VermaStructure& vs = VermaStructure::get(N);
  std::vector<std::vector<std::vector<T>>> g(N + 1);
  g[0] = {{T(1)}};
  for (int n = 1; n <= N; ++n) {
    const auto& basis = vs.level(n).basis();
    const std::size_t dim = basis.size();
    g[n].assign(dim, std::vector<T>(dim, T(0)));
    for (std::size_t i = 0; i < dim; ++i) {
      const int k = basis[i].parts().front();
      const int row = vs.level(n - k).index(basis[i].tail());
      const auto& low = vs.lowering(n, k);
      for (std::size_t j = 0; j < dim; ++j) {
        T sum(0);
        for (const auto& e : low[j]) sum = sum + affine_value(e.coeff, delta, half_c) * g[n - k][row][e.column];
        g[n][i][j] = sum;
      }
    }
  }
  return g;
}

}  // namespace

// ---------------------------------------------------------- VermaStructure

VermaStructure::VermaStructure(int max_level) : max_level_(max_level) {
  Straightener st;
  levels_.reserve(max_level + 1);
  for (int n = 0; n <= max_level; ++n) levels_.emplace_back(n);
  lowering_.resize(max_level + 1);
  for (int n = 1; n <= max_level; ++n) {
    lowering_[n].resize(n + 1);
    for (int k = 1; k <= n; ++k) {
      auto& rows = lowering_[n][k];
      rows.resize(levels_[n].size());
      for (std::size_t j = 0; j < levels_[n].size(); ++j)
        for (const auto& [d, a] : st.lower(k, levels_[n].basis()[j]))
          rows[j].push_back({levels_[n - k].index(d), a});
    }
  }
}

const VermaStructure& VermaStructure::get(int max_level) {
  if (max_level < 0) throw DomainError("VermaStructure: level must be >= 0");
  static std::mutex mutex;
  static std::vector<std::unique_ptr<VermaStructure>> built;
  std::lock_guard lock(mutex);
  if (built.empty() || built.back()->max_level() < max_level)
    built.push_back(std::unique_ptr<VermaStructure>(new VermaStructure(std::max(max_level, 8))));
  return *built.back();
}

const std::vector<std::vector<VermaStructure::Entry>>& VermaStructure::lowering(int N, int k) const {
  if (N < 1 || N > max_level_ || k < 1 || k > N) throw DomainError("VermaStructure::lowering: bad (N, k)");
  return lowering_[N][k];
}

// ------------------------------------------------------------------ pairing

cplx virasoro_pairing(const YoungDiagram& nu, const YoungDiagram& nu_prime, cplx Delta, cplx c) {
  if (nu.level() != nu_prime.level()) return 0.0;
  const int N = nu.level();
  const VermaStructure& vs = VermaStructure::get(N);
  const cplx h = 0.5 * c;
  // apply L_{nu_1}, L_{nu_2}, ... to the ket until level 0
  std::vector<cplx> state(vs.level(N).size(), 0.0);
  state[vs.level(N).index(nu_prime)] = 1.0;
  int level = N;
  for (int k : nu.parts()) {
    std::vector<cplx> next(vs.level(level - k).size(), 0.0);
    const auto& low = vs.lowering(level, k);
    for (std::size_t j = 0; j < state.size(); ++j) {
      if (state[j] == 0.0) continue;
      for (const auto& e : low[j]) next[e.column] += affine_value(e.coeff, Delta, h) * state[j];
    }
    state = std::move(next);
    level -= k;
  }
  return state.empty() ? cplx(1.0) : state[0];
}

std::vector<std::vector<IntPoly2>> gram_polynomial(int N) {
  if (N < 0) throw DomainError("gram_polynomial: level must be >= 0");
  return gram_recursion<IntPoly2>(N, IntPoly2::delta(), IntPoly2::half_c()).back();
}

// ------------------------------------------------------------- Kac weights

cplx kac_weight(int r, int s, cplx c) {
  const cplx Q = std::sqrt((c - 1.0) / 6.0);
  const cplx b = 0.5 * (Q - std::sqrt(Q * Q - 4.0));
  const cplx x = double(r) * b + double(s) / b;
  return Q * Q / 4.0 - x * x / 4.0;
}

namespace {

std::string degeneracy_message(int N, cplx Delta, cplx c, double rcond) {
  int best_r = 1, best_s = 1;
  double best = INFINITY;
  for (int r = 1; r <= N; ++r)
    for (int s = 1; r * s <= N; ++s) {
      double d = std::abs(Delta - kac_weight(r, s, c));
      if (d < best) {
        best = d;
        best_r = r;
        best_s = s;
      }
    }
  std::ostringstream os;
  os << "Gram matrix at level " << N << " is degenerate (scaled rcond " << rcond << ") at Delta = " << Delta
     << ", c = " << c << "; nearest Kac weight Delta_{" << best_r << "," << best_s << "} = "
     << kac_weight(best_r, best_s, c) << " (distance " << best << ")";
  return os.str();
}

template <class S>
GramLevelT<S> finish_level(int n, const std::vector<std::vector<S>>& g, S Delta, S c,
                           const std::vector<YoungDiagram>& basis) {
  GramLevelT<S> out;
  out.level = n;
  out.basis = basis;
  out.delta = Delta;
  out.c = c;
  const Eigen::Index dim = static_cast<Eigen::Index>(g.size());
  out.gram.resize(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) out.gram(i, j) = g[i][j];
  // Jacobi scaling: S = D^{-1} G D^{-1}, D_i = sqrt|G_ii|
  Eigen::VectorXd d(dim);
  bool zero_diag = false;
  for (Eigen::Index i = 0; i < dim; ++i) {
    d(i) = std::sqrt(std::abs(out.gram(i, i)));
    if (!(d(i) > 0)) zero_diag = true;
  }
  if (zero_diag) {
    out.scaled_rcond = 0;
  } else {
    DenseMatrix<S> scaled = out.gram;
    for (Eigen::Index i = 0; i < dim; ++i)
      for (Eigen::Index j = 0; j < dim; ++j) scaled(i, j) /= d(i) * d(j);
    Eigen::PartialPivLU<DenseMatrix<S>> lu(scaled);
    out.scaled_rcond = lu.rcond();
    DenseMatrix<S> inv = lu.inverse();
    for (Eigen::Index i = 0; i < dim; ++i)
      for (Eigen::Index j = 0; j < dim; ++j) inv(i, j) /= d(i) * d(j);
    out.gram_inverse = std::move(inv);
  }
  if (!(out.scaled_rcond * kGramConditionLimit >= 1.0))
    throw DegeneracyError(degeneracy_message(n, cplx(Delta), cplx(c), out.scaled_rcond));
  return out;
}

}  // namespace

template <class S>
std::vector<GramLevelT<S>> build_gram_levels(int N, S Delta, S c) {
  if (N < 0) throw DomainError("gram_level: level must be >= 0");
  const auto g = gram_recursion<S>(N, Delta, S(0.5) * c);
  const VermaStructure& vs = VermaStructure::get(N);
  std::vector<GramLevelT<S>> out;
  out.reserve(N + 1);
  for (int n = 0; n <= N; ++n) out.push_back(finish_level<S>(n, g[n], Delta, c, vs.level(n).basis()));
  return out;
}

template std::vector<GramLevelT<double>> build_gram_levels<double>(int, double, double);
template std::vector<GramLevelT<cplx>> build_gram_levels<cplx>(int, cplx, cplx);

// ------------------------------------------------------------------- caches

namespace {

template <class S>
class GramCache {
 public:
  using Key = std::tuple<int, double, double, double, double>;

  std::shared_ptr<const GramLevelT<S>> get(int N, S Delta, S c) {
    const Key key = make_key(N, Delta, c);
    {
      std::shared_lock lock(mutex_);
      if (auto it = map_.find(key); it != map_.end()) return it->second;
    }
    // computed outside the lock; a concurrent duplicate is discarded
    auto levels = build_gram_levels<S>(N, Delta, c);
    std::unique_lock lock(mutex_);
    for (auto& lvl : levels) {
      Key k = make_key(lvl.level, Delta, c);
      map_.try_emplace(k, std::make_shared<const GramLevelT<S>>(std::move(lvl)));
    }
    return map_.at(key);
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return map_.size();
  }

  void clear() {
    std::unique_lock lock(mutex_);
    map_.clear();
  }

 private:
  static Key make_key(int N, S Delta, S c) {
    const cplx d(Delta), cc(c);
    return {N, d.real(), d.imag(), cc.real(), cc.imag()};
  }

  mutable std::shared_mutex mutex_;
  std::map<Key, std::shared_ptr<const GramLevelT<S>>> map_;
};

GramCache<cplx>& complex_cache() {
  static GramCache<cplx> cache;
  return cache;
}

GramCache<double>& real_cache() {
  static GramCache<double> cache;
  return cache;
}

}  // namespace

std::shared_ptr<const GramLevel> gram_level(int N, cplx Delta, cplx c) {
  if (N < 0) throw DomainError("gram_level: level must be >= 0");
  return complex_cache().get(N, Delta, c);
}

std::shared_ptr<const RealGramLevel> gram_level_real(int N, double Delta, double c) {
  if (N < 0) throw DomainError("gram_level: level must be >= 0");
  return real_cache().get(N, Delta, c);
}

std::size_t gram_cache_size() { return complex_cache().size() + real_cache().size(); }

void clear_gram_cache() {
  complex_cache().clear();
  real_cache().clear();
}

// ------------------------------------------------------ descendants, blocks

template <class S>
S descendant_3pt(S Delta1, S Delta2, S Delta, const YoungDiagram& nu) {
  S w(1);
  int later = nu.level();
  for (int k : nu.parts()) {
    later -= k;
    w *= Delta + S(double(k)) * Delta2 - Delta1 + S(double(later));
  }
  return w;
}

template double descendant_3pt<double>(double, double, double, const YoungDiagram&);
template cplx descendant_3pt<cplx>(cplx, cplx, cplx, const YoungDiagram&);

template <class S>
std::vector<S> block_coefficients(S Delta, S c, const std::array<S, 4>& ext, int L) {
  if (L < 0) throw DomainError("block: truncation level L must be >= 0");
  auto fetch = [&](int n) {
    if constexpr (std::is_same_v<S, double>)
      return gram_level_real(n, Delta, c);
    else
      return gram_level(n, Delta, c);
  };
  fetch(L);  // fills the cache for all levels <= L in one pass
  std::vector<S> coeffs(L + 1);
  for (int n = 0; n <= L; ++n) {
    const auto lvl = fetch(n);
    const Eigen::Index dim = static_cast<Eigen::Index>(lvl->basis.size());
    Eigen::Matrix<S, Eigen::Dynamic, 1> w12(dim), w43(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      w12(i) = descendant_3pt<S>(ext[0], ext[1], Delta, lvl->basis[i]);
      w43(i) = descendant_3pt<S>(ext[3], ext[2], Delta, lvl->basis[i]);
    }
    coeffs[n] = w12.dot(lvl->gram_inverse * w43);
  }
  return coeffs;
}

template std::vector<double> block_coefficients<double>(double, double, const std::array<double, 4>&, int);
template std::vector<cplx> block_coefficients<cplx>(cplx, cplx, const std::array<cplx, 4>&, int);

double block_tail_estimate(const std::vector<cplx>& coefficients, double abs_z) {
  const std::size_t n = coefficients.size();
  if (n == 0) return 0;
  const double last = std::abs(coefficients.back()) * std::pow(abs_z, double(n - 1));
  if (n < 3) return last;
  // ratio of successive terms, taken as the worst of the last two
  double ratio = 0;
  for (std::size_t k = n - 2; k < n; ++k) {
    const double prev = std::abs(coefficients[k - 1]);
    const double cur = std::abs(coefficients[k]);
    if (prev > 0) ratio = std::max(ratio, cur / prev * abs_z);
  }
  if (ratio >= 1) return INFINITY;
  return last * ratio / (1 - ratio);
}

cplx block_series(const std::vector<cplx>& coefficients, cplx exponent, cplx z) {
  cplx sum = 0;
  for (std::size_t n = coefficients.size(); n-- > 0;) sum = sum * z + coefficients[n];
  return std::exp(exponent * std::log(z)) * sum;
}

BlockEval block(double p, const std::array<double, 4>& deltas, cplx z, int L, const CFTParams& params) {
  if (!(std::abs(z) < 1)) throw DomainError("block: requires |z| < 1");
  if (z == 0.0) throw DomainError("block: requires z != 0");
  if (L < 0) throw DomainError("block: truncation level L must be >= 0");
  const double Delta = params.Q * params.Q / 4 + p * p / 4;
  const auto coeffs = block_coefficients<double>(Delta, params.c_L, deltas, L);
  BlockEval out;
  out.p = p;
  out.deltas = deltas;
  out.z = z;
  out.L = L;
  out.coefficients.assign(coeffs.begin(), coeffs.end());
  const cplx exponent = Delta - deltas[0] - deltas[1];
  out.prefactor = std::exp(exponent * std::log(z));
  out.value = block_series(out.coefficients, exponent, z);
  out.tail_estimate = std::abs(out.prefactor) * block_tail_estimate(out.coefficients, std::abs(z));
  return out;
}

}  // namespace lcft
