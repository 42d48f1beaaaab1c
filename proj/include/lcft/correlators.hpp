#pragma once

#include <cstdint>
#include <vector>

#include "lcft/gmc.hpp"
#include "lcft/params.hpp"
#include "lcft/zoom.hpp"

namespace lcft {

/// log det'(Laplacian) of the unit round sphere from the zeta-regularised
/// spectrum l(l+1) with multiplicity 2l+1: 1/2 - 4 zeta'(-1).
double log_det_laplacian_unit_sphere();

/// How the insertion kernel meets the grid. Node evaluates the kernel at grid
/// nodes. Zoom integrates it over cells and refines the field near every
/// insertion with a FieldZoom; insertion points are first moved by the fixed
/// rotation grid_frame() so that none sits on a pole of the grid.
enum class KernelRule { Zoom, Node };

struct Discretization {
  KernelRule rule = KernelRule::Zoom;
  ZoomSettings zoom;
};

/// Rotation applied to insertion points under KernelRule::Zoom.
Vec3 grid_frame(const Vec3& v);

struct CorrelatorJob {
  InsertionSet insertions;
  CFTParams params;
  SphereFieldSpec field;
  std::int64_t n_samples = 1000;
  std::uint64_t seed = 0;  // overrides field.seed
  int threads = 1;
  double log_det_laplacian = log_det_laplacian_unit_sphere();
  Discretization discretization;
};

/// Z = sum_cells exp(gamma sum_j alpha_j C(x_j, cell)) * chaos cell mass, the
/// kernel evaluated at grid nodes. Requires alpha_j < Q.
double z_random_mass(const FieldSample& sample, const InsertionSet& insertions, const CFTParams& params);

/// log of (det'/V)^{-1/2} exp(sum_i alpha_i^2/2 (ln2 - 1/2) + sum_{i<j} alpha_i alpha_j C(x_i,x_j))
double log_correlator_geometry(const CorrelatorJob& job);

/// log of gamma^{-1} mu^{-s/gamma} Gamma(s/gamma), s = sum alpha - 2Q > 0.
double log_zero_mode_factor(const InsertionSet& insertions, const CFTParams& params);

/// Per-sample values of Z^{exponent} for several insertion sets sharing one
/// field stream (common random numbers). Samples are produced in batches
/// aligned to SphereSampler::kBatch, so values do not depend on `threads`.
std::vector<std::vector<double>> z_moment_samples(const SphereFieldSpec& field, std::uint64_t seed,
                                                  const std::vector<InsertionSet>& sets, const CFTParams& params,
                                                  const std::vector<double>& exponents, std::int64_t n_samples,
                                                  int threads = 1, const Discretization& disc = {});

/// E[Z^exponent] for exponent <= 0.
MCEstimate negative_moment_mc(const CorrelatorJob& job, double exponent);

/// Correlator estimate: geometry factor * zero-mode factor * E[Z^{-s/gamma}].
/// Throws DomainError when the Seiberg bounds fail.
MCEstimate correlator_mc(const CorrelatorJob& job);

struct RatioEstimate {
  double ratio = 0;
  double std_error = 0;  // delta method over paired samples
  std::int64_t n_samples = 0;
};

/// mean(a) / mean(b) for paired per-sample values, times `scale`.
RatioEstimate paired_ratio(const std::vector<double>& a, const std::vector<double>& b, double scale = 1.0);

}  // namespace lcft
