#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "lcft/block_cache.hpp"
#include "lcft/correlators.hpp"
#include "lcft/params.hpp"
#include "lcft/upsilon.hpp"

namespace lcft {

using FourAlphas = std::array<double, 4>;

/// How the truncated block series is summed. Z sums c_N z^N for N <= L.
/// Nome rewrites the same coefficients as
///   F = (16q)^{Delta - h} z^{h - D1 - D2} (1 - z)^{h - D2 - D3} theta_3(q)^{12h - 4(D1 + D2 + D3 + D4)} H(q),
/// h = (c - 1)/24, q the elliptic nome of z, and sums H to order q^L. Both
/// use only the coefficients of levels <= L; the q-series converges much
/// faster because |q| << |z| (q(0.7) = 0.07).
enum class BlockExpansion { Z, Nome };

/// p-grid for the spectral integral, folded onto (0, p_max].
struct SpectralQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
  double p_max = 12;
  int level = 10;  // block truncation level L
  BlockExpansion expansion = BlockExpansion::Nome;

  /// `panels` Gauss-Legendre panels of `order` nodes on [0, p_max].
  static SpectralQuadrature gauss_panels(double p_max, int panels, int order, int level,
                                         BlockExpansion expansion = BlockExpansion::Nome);
  /// Throws ConfigError unless nodes lie in (0, p_max] with positive weights.
  void validate() const;
};

/// DOZZ values on the spectrum line and block coefficients, memoised per p
/// so that several positions and channels share them. Block coefficients
/// are also looked up in and written to an optional on-disk cache.
class SpectralContext {
 public:
  explicit SpectralContext(const CFTParams& params, std::shared_ptr<BlockCoefficientCache> disk = nullptr);

  const CFTParams& params() const { return params_; }
  const UpsilonEvaluator& upsilon() const { return ev_; }
  /// C^DOZZ(Q + ip, a, b).
  cplx dozz_line(double p, double a, double b) const;
  /// c_0..c_L of the block with internal weight Q^2/4 + p^2/4 and externals Delta(alphas).
  std::vector<double> block_coefficients(double p, const FourAlphas& alphas, int level) const;

 private:
  CFTParams params_;
  UpsilonEvaluator ev_;
  std::shared_ptr<BlockCoefficientCache> disk_;
  mutable std::mutex mutex_;
  mutable std::map<std::array<double, 3>, cplx> dozz_memo_;
  mutable std::map<std::pair<BlockKey, int>, std::vector<double>> block_memo_;
};

/// Elliptic nome q = exp(-pi K(1 - z) / K(z)) (parameter convention), 0 < |z| < 1.
cplx elliptic_nome(cplx z);

/// conj(C(Q+ip, a1, a2)) C(Q+ip, a3, a4) |F_p(z)|^2 with the block of the
/// configuration (0, z, 1, infinity), F_p(z) = z^{Delta_p - Delta_1 - Delta_2}
/// sum_N c_N z^N truncated at quad.level and summed as quad.expansion says.
/// Requires a1 + a2 > Q, a3 + a4 > Q, every a_j < Q and 0 < |z| < 1.
struct IntegrandValue {
  double p = 0;
  double value = 0;
  double imag = 0;        // imaginary part of the assembled product
  double block_tail = 0;  // size of the last two retained terms relative to the sum
};
IntegrandValue spectral_integrand(double p, cplx z, const FourAlphas& alphas, const SpectralQuadrature& quad,
                                  const SpectralContext& ctx);

struct BootstrapResult {
  cplx z{};
  FourAlphas alphas{};
  /// (1/2 pi) int_R ... dp = (1/pi) int_0^inf ... dp: the four-point function
  /// at (0, z, 1, infinity) in the flat metric, up to the z-independent
  /// constants C(g)^2 of the metric gluing.
  double value = 0;
  std::vector<IntegrandValue> samples;
  double tail_estimate = 0;     // p > p_max, relative to value
  double max_block_tail = 0;  // over nodes carrying more than 1e-8 of the integral
  double max_imag_ratio = 0;
};

/// Throws AccuracyError (naming a sufficient p_max) when the p > p_max tail
/// exceeds `tail_tolerance` relative to the value.
BootstrapResult four_point_bootstrap(cplx z, const FourAlphas& alphas, const SpectralQuadrature& quad,
                                     const SpectralContext& ctx, int threads = 1, double tail_tolerance = 1e-8);

/// g(z)^{-Delta_2} times the bootstrap value: the z dependence of the
/// four-point function on the round sphere with the other points fixed at
/// 0, 1 and infinity.
double round_metric_four_point(const BootstrapResult& r, const CFTParams& params);

struct CrossingReport {
  BootstrapResult direct;   // G_{1234}(z)
  BootstrapResult crossed;  // G_{3214}(1 - z)
  double discrepancy = 0;   // |direct - crossed| / |direct|
};

/// Crossing symmetry of the flat four-point function: the map w -> 1 - w
/// swaps insertions 1 and 3 and fixes infinity, so G_{1234}(z) = G_{3214}(1 - z).
/// Throws DomainError when a channel is inadmissible.
CrossingReport crossing_check(cplx z, const FourAlphas& alphas, const SpectralQuadrature& quad,
                              const SpectralContext& ctx, int threads = 1);

/// Monte Carlo ratio of round-sphere four-point functions at (0, z, 1, inf)
/// and (0, z', 1, inf) with common random numbers.
RatioEstimate mc_four_point_ratio(cplx z, cplx z_prime, const FourAlphas& alphas, const CFTParams& params,
                                  const SphereFieldSpec& field, std::int64_t n_samples, std::uint64_t seed,
                                  int threads = 1, const Discretization& disc = {});

}  // namespace lcft
