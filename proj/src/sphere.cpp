#include "lcft/sphere.hpp"

#include "lcft/errors.hpp"

namespace lcft {

Vec3 to_unit_sphere(cplx z) {
  const double r2 = std::norm(z);
  const double d = 1.0 + r2;
  return {2.0 * z.real() / d, 2.0 * z.imag() / d, (r2 - 1.0) / d};
}

Vec3 to_unit_sphere(const SpherePoint& p) {
  if (p.at_infinity) return {0.0, 0.0, 1.0};
  return to_unit_sphere(p.z);
}

Vec3 from_angles(double cos_theta, double phi) {
  const double s = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  return {s * std::cos(phi), s * std::sin(phi), cos_theta};
}

double chordal_distance(const Vec3& a, const Vec3& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

double sphere_covariance(const Vec3& x, const Vec3& y) {
  const double d = chordal_distance(x, y);
  if (!(d > 0)) throw DomainError("sphere_covariance: coincident points");
  return -std::log(d) + kSphereRobin;
}

Vec3 rotate(const Vec3& v, const Vec3& n, double t) {
  const double c = std::cos(t), s = std::sin(t);
  const double k = dot(n, v) * (1 - c);
  return {v.x * c + (n.y * v.z - n.z * v.y) * s + n.x * k, v.y * c + (n.z * v.x - n.x * v.z) * s + n.y * k,
          v.z * c + (n.x * v.y - n.y * v.x) * s + n.z * k};
}

}  // namespace lcft
