#pragma once

#include <array>
#include <cmath>

#include "lcft/params.hpp"

namespace lcft {

/// Point of R^3; on the unit sphere unless stated otherwise.
struct Vec3 {
  double x = 0, y = 0, z = 0;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

/// Inverse stereographic projection onto the unit sphere. z = 0 goes to the
/// south pole (0,0,-1), infinity to the north pole.
Vec3 to_unit_sphere(const SpherePoint& p);
Vec3 to_unit_sphere(cplx z);

/// Unit vector with polar cosine ct (ct = 1 at the north pole) and longitude phi.
Vec3 from_angles(double cos_theta, double phi);

double chordal_distance(const Vec3& a, const Vec3& b);

/// Robin constant 2 pi m_g of the round unit sphere in the covariance normalisation.
inline const double kSphereRobin = std::log(2.0) - 0.5;

/// Zero-mean covariance of the GFF on the unit round sphere:
/// C(x,y) = ln(1/|x-y|) + ln 2 - 1/2. Throws DomainError when x == y.
double sphere_covariance(const Vec3& x, const Vec3& y);

/// Same covariance from the squared chordal distance (no coincidence check).
inline double sphere_covariance_d2(double chord2) { return -0.5 * std::log(chord2) + kSphereRobin; }

/// Rotation about the unit axis n by angle t (Rodrigues).
Vec3 rotate(const Vec3& v, const Vec3& n, double t);

}  // namespace lcft
