#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <boost/random/mersenne_twister.hpp>
#include <string>
#include <vector>

#include "lcft/sphere.hpp"

namespace lcft {

using SampleEngine = boost::random::mt19937_64;

/// Random stream of sample `index` in a run seeded with `seed`: a 64-bit
/// Mersenne twister initialised through std::seed_seq with the four 32-bit
/// halves (seed lo, seed hi, index lo, index hi). Streams for different
/// indices are independent of how samples are spread over threads.
SampleEngine sample_stream(std::uint64_t seed, std::uint64_t index);

/// Standard normals from boost::random::normal_distribution (ziggurat).
void fill_normals(SampleEngine& engine, double* out, std::size_t n);

struct CircleFieldSpec {
  int modes = 64;
  int grid_points = 0;  // 0 selects 4 * modes
  std::uint64_t seed = 0;
  bool includes_zero_mode = false;

  int grid_size() const { return grid_points > 0 ? grid_points : 4 * modes; }
  /// Throws ConfigError unless modes >= 1 and grid_size() >= 2 modes + 2.
  void validate() const;
};

struct SphereFieldSpec {
  int lmax = 32;
  int nlat = 0;  // 0 selects the smallest even count >= lmax + 1
  int nlon = 0;  // 0 selects the smallest 5-smooth multiple of 6 >= 2 lmax + 2
  std::uint64_t seed = 0;

  int lat_count() const;
  int lon_count() const;
  /// Throws ConfigError when the grid under-resolves lmax.
  void validate() const;
};

enum class Geometry { Circle, Sphere };

/// One field realisation on the grid, row-major (sphere rows are latitude
/// rings from north to south, circle has a single row).
struct FieldSample {
  Geometry geometry = Geometry::Circle;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  int rows = 1;
  int cols = 0;
  std::vector<double> values;
  std::vector<double> variance;     // analytic truncated variance at each node
  std::vector<double> cell_weight;  // circle: 1/M, total 1; sphere: total area 4 pi
  std::vector<double> row_cos_theta;  // sphere only
  std::vector<double> col_angle;      // theta on the circle, longitude on the sphere
};

/// sum_{n=1}^{N} cos(n dtheta) / n
double circle_truncated_covariance(int modes, double dtheta);
/// sum_{l=1}^{L} (2l+1) / (2 l (l+1)) P_l(cos_angle)
double sphere_truncated_covariance(int lmax, double cos_angle);
double sphere_truncated_variance(int lmax);

/// Circle field phi(theta) = sum_{n<=N} (x_n cos n theta - y_n sin n theta)/sqrt(n),
/// theta_k = 2 pi k / M. Normals are drawn as x_1, y_1, x_2, y_2, ...,
/// followed by the zero mode when it is included (adds variance 1).
class CircleSampler {
 public:
  explicit CircleSampler(CircleFieldSpec spec);
  ~CircleSampler();
  CircleSampler(const CircleSampler&) = delete;
  CircleSampler& operator=(const CircleSampler&) = delete;

  const CircleFieldSpec& spec() const { return spec_; }
  int grid_size() const { return spec_.grid_size(); }
  double theta(int k) const;
  double variance() const { return variance_; }
  /// Writes grid_size() values. Safe to call concurrently.
  void synthesize(std::uint64_t index, double* out) const;
  FieldSample sample(std::uint64_t index) const;

 private:
  CircleFieldSpec spec_;
  double variance_;
  void* plan_;
};

/// Sphere field X = sqrt(2 pi) sum_{l=1}^{L} sum_m a_lm Y_lm / sqrt(l(l+1)) with
/// real orthonormal harmonics (no Condon-Shortley phase): Y_l0 = Pbar_l0,
/// Y_lm = sqrt2 Pbar_lm cos(m phi), Y_l,-m = sqrt2 Pbar_lm sin(m phi).
/// Normals are drawn in the order l = 1..L, m = -l..l. Grid: Gauss-Legendre
/// latitudes, longitudes phi_j = 2 pi (j + 1/2) / nlon.
class SphereSampler {
 public:
  static constexpr int kBatch = 8;

  explicit SphereSampler(SphereFieldSpec spec);
  ~SphereSampler();
  SphereSampler(const SphereSampler&) = delete;
  SphereSampler& operator=(const SphereSampler&) = delete;

  const SphereFieldSpec& spec() const;
  int rows() const;
  int cols() const;
  double cos_theta(int row) const;
  double phi(int col) const;
  double cell_area(int row) const;
  Vec3 node(int row, int col) const;
  double variance() const;

  /// Fields of samples first .. first + kBatch - 1, each rows()*cols() values,
  /// written consecutively. A sample's values do not depend on which batch
  /// computed it as long as first is a multiple of kBatch.
  void synthesize_batch(std::uint64_t first, double* out) const;
  FieldSample sample(std::uint64_t index) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

FieldSample sample_circle_field(const CircleFieldSpec& spec, std::uint64_t index = 0);
FieldSample sample_sphere_field(const SphereFieldSpec& spec, std::uint64_t index = 0);

struct ChaosMeasure {
  double gamma = 0;
  std::vector<double> cell_mass;
  double total_mass = 0;
  double robin_constant = 0;
  std::string renormalization;
};

/// Cell mass exp(gamma X - gamma^2 sigma^2/2) exp(gamma^2 c_robin / 2) * cell weight,
/// c_robin = 0 on the circle and ln 2 - 1/2 on the sphere.
ChaosMeasure chaos_measure(const FieldSample& sample, double gamma);

struct MCEstimate {
  double mean = 0;
  double std_error = 0;
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
  // (sum v)^2 / sum v^2 over the per-sample values
  double effective_sample_size = 0;
};

/// Mean and standard error of per-sample values, summed in index order.
MCEstimate summarize(const std::vector<double>& values, std::uint64_t seed);

/// Runs fn(b) for b in [0, n_batches) on up to `threads` workers.
void parallel_batches(std::int64_t n_batches, int threads, const std::function<void(std::int64_t)>& fn);

/// E[M^q] for the total chaos mass. q >= 2/gamma^2 throws DomainError.
MCEstimate chaos_moment(const CircleFieldSpec& spec, double gamma, double q, std::int64_t n_samples,
                        int threads = 1);
MCEstimate chaos_moment(const SphereFieldSpec& spec, double gamma, double q, std::int64_t n_samples,
                        int threads = 1);

}  // namespace lcft
