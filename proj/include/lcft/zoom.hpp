#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "lcft/gmc.hpp"
#include "lcft/sphere.hpp"

namespace lcft {

/// int_x^inf J0(u) / u du for x > 0.
double bessel_j0_tail(double x);

/// Angle between two unit vectors, accurate for nearly equal vectors.
double geodesic_angle(const Vec3& a, const Vec3& b);

/// sum_{l=lmin+1}^{lmax} (2l+1)/(2l(l+1)) P_l(cos theta), zero when lmax <= lmin.
/// Terms with l <= max(2 lmin, 256) are summed exactly; beyond that
/// P_l(cos t) ~ sqrt(t / sin t) J0((l + 1/2) t) turns the sum into a
/// difference of bessel_j0_tail values, so lmax may be huge.
double sphere_band_covariance(int lmin, double lmax, double theta);

struct ZoomSettings {
  double radius = 1.5;          // patch radius, in latitude spacings pi / nlat
  double log_step = 0.45;       // successive ring radii differ by exp(-log_step)
  int angles = 12;              // cells per ring
  double depth = 24;            // rings cover radii radius * exp(-depth) .. radius
  double resolution = 8.5;      // field at distance r from the centre keeps modes l <= resolution / r
  double observed_radius = 3;   // conditioning grid nodes, in latitude spacings
  double kernel_radius = 10;    // cells closer than this get an integrated kernel

  /// Throws ConfigError on non-positive or inconsistent values.
  void validate() const;
};

/// Local multiscale refinement of a sphere field around fixed centres.
///
/// A disk around each centre is cut out of the grid and covered by rings of
/// cells shrinking geometrically towards the centre. The field at a ring cell
/// keeps modes up to resolution / r and is drawn from its Gaussian law
/// conditioned on the grid values near the centre, so grid and ring values of
/// one sample form a single field.
class FieldZoom {
 public:
  FieldZoom(const SphereSampler& sampler, std::vector<Vec3> centres, ZoomSettings settings = {});
  ~FieldZoom();
  FieldZoom(const FieldZoom&) = delete;
  FieldZoom& operator=(const FieldZoom&) = delete;

  const ZoomSettings& settings() const;
  std::size_t centre_count() const;
  std::size_t targets_per_centre() const;
  std::size_t target_count() const;
  /// Target t of centre t / targets_per_centre(); the last target of each
  /// centre is the centre itself and stands for the innermost disk.
  Vec3 target(std::size_t t) const;
  /// Unconditional variance of the refined field at target t.
  double target_variance(std::size_t t) const;
  /// Patch radius in radians.
  double radius() const;

  /// Field values at all targets for sample `index`, given that sample's grid
  /// values. The extra normals come from sample_stream(seed, index + 2^63).
  void refine(std::uint64_t seed, std::uint64_t index, const double* grid, double* out) const;

  /// Weights of the grid cells followed by the targets: the kernel
  /// exp(gamma sum_k alpha_k C(p_k, x)) integrated over each cell (cells cut
  /// by a disk lose the covered part) times exp(gamma^2 (c_robin - var) / 2).
  /// Every point p_k must be a centre.
  std::vector<double> weights(const std::vector<Vec3>& points, const std::vector<double>& alpha,
                              double gamma) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lcft
