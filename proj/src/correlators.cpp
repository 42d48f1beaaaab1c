#include "lcft/correlators.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "lcft/errors.hpp"
#include "lcft/gamma.hpp"
#include "lcft/sphere.hpp"

namespace lcft {

double log_det_laplacian_unit_sphere() { return 0.5 - 4.0 * kZetaPrimeMinusOne; }

namespace {

void require_below_q(const InsertionSet& ins, const CFTParams& params) {
  for (std::size_t j = 0; j < ins.size(); ++j)
    if (!(ins.weights()[j] < params.Q)) {
      std::ostringstream os;
      os << "insertion " << j << ": alpha = " << ins.weights()[j] << " must be < Q = " << params.Q
         << " for the insertion singularity to be integrable";
      throw DomainError(os.str());
    }
}

std::vector<Vec3> insertion_vectors(const InsertionSet& ins) {
  std::vector<Vec3> out;
  for (const auto& p : ins.points()) out.push_back(to_unit_sphere(p));
  return out;
}

// log exp(gamma sum_j alpha_j C(x_j, x)) at every node
std::vector<double> log_kernel(const SphereSampler& sampler, const InsertionSet& ins, double gamma) {
  const auto xs = insertion_vectors(ins);
  const int R = sampler.rows(), C = sampler.cols();
  std::vector<double> out(std::size_t(R) * C, 0.0);
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < C; ++j) {
      const Vec3 v = sampler.node(i, j);
      double acc = 0;
      for (std::size_t k = 0; k < xs.size(); ++k) acc += ins.weights()[k] * sphere_covariance(xs[k], v);
      out[std::size_t(i) * C + j] = gamma * acc;
    }
  return out;
}

}  // namespace

double z_random_mass(const FieldSample& sample, const InsertionSet& insertions, const CFTParams& params) {
  if (sample.geometry != Geometry::Sphere) throw DomainError("z_random_mass: needs a sphere field sample");
  require_below_q(insertions, params);
  const auto xs = insertion_vectors(insertions);
  const ChaosMeasure m = chaos_measure(sample, params.gamma);
  const int R = sample.rows, C = sample.cols;
  double z = 0;
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < C; ++j) {
      const Vec3 v = from_angles(sample.row_cos_theta[i], sample.col_angle[j]);
      double acc = 0;
      for (std::size_t k = 0; k < xs.size(); ++k) acc += insertions.weights()[k] * sphere_covariance(xs[k], v);
      z += std::exp(params.gamma * acc) * m.cell_mass[std::size_t(i) * C + j];
    }
  return z;
}

double log_correlator_geometry(const CorrelatorJob& job) {
  const auto xs = insertion_vectors(job.insertions);
  const auto& a = job.insertions.weights();
  double log_c = -0.5 * (job.log_det_laplacian - std::log(4 * M_PI));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    log_c += 0.5 * a[i] * a[i] * kSphereRobin;
    for (std::size_t j = i + 1; j < xs.size(); ++j) log_c += a[i] * a[j] * sphere_covariance(xs[i], xs[j]);
  }
  return log_c;
}

double log_zero_mode_factor(const InsertionSet& insertions, const CFTParams& params) {
  const double s = insertions.weight_sum() - 2 * params.Q;
  if (!(s > 0)) throw DomainError("zero-mode factor needs s = sum(alpha) - 2Q > 0");
  const double t = s / params.gamma;
  return -std::log(params.gamma) - t * std::log(params.mu) + std::lgamma(t);
}

Vec3 grid_frame(const Vec3& v) {
  static const Vec3 axis = [] {
    const double n = std::sqrt(14.0);
    return Vec3{1 / n, 2 / n, 3 / n};
  }();
  return rotate(v, axis, 1.0);
}

std::vector<std::vector<double>> z_moment_samples(const SphereFieldSpec& field, std::uint64_t seed,
                                                  const std::vector<InsertionSet>& sets, const CFTParams& params,
                                                  const std::vector<double>& exponents, std::int64_t n_samples,
                                                  int threads, const Discretization& disc) {
  if (sets.size() != exponents.size()) throw DomainError("z_moment_samples: one exponent per insertion set");
  for (const auto& s : sets) require_below_q(s, params);
  SphereFieldSpec spec = field;
  spec.seed = seed;
  SphereSampler sampler(spec);
  const int R = sampler.rows(), C = sampler.cols();
  const std::size_t cells = std::size_t(R) * C;
  const double gamma = params.gamma;

  std::unique_ptr<FieldZoom> zoom;
  std::vector<std::vector<double>> weight;
  if (disc.rule == KernelRule::Zoom) {
    std::vector<std::vector<Vec3>> points;
    std::vector<Vec3> centres;
    for (const auto& s : sets) {
      auto& pts = points.emplace_back();
      for (const Vec3& v : insertion_vectors(s)) {
        const Vec3 x = grid_frame(v);
        pts.push_back(x);
        bool seen = false;
        for (const Vec3& c : centres) seen = seen || chordal_distance(c, x) < 1e-12;
        if (!seen) centres.push_back(x);
      }
    }
    zoom = std::make_unique<FieldZoom>(sampler, centres, disc.zoom);
    for (std::size_t k = 0; k < sets.size(); ++k) weight.push_back(zoom->weights(points[k], sets[k].weights(), gamma));
  } else {
    const double wick = std::exp(0.5 * gamma * gamma * (kSphereRobin - sampler.variance()));
    for (const auto& s : sets) {
      auto lk = log_kernel(sampler, s, gamma);
      for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j) {
          auto& w = lk[std::size_t(i) * C + j];
          w = std::exp(w) * sampler.cell_area(i) * wick;
        }
      weight.push_back(std::move(lk));
    }
  }
  const std::size_t targets = zoom ? zoom->target_count() : 0;

  std::vector<std::vector<double>> values(sets.size(), std::vector<double>(n_samples));
  const std::int64_t B = SphereSampler::kBatch;
  parallel_batches((n_samples + B - 1) / B, threads, [&](std::int64_t b) {
    std::vector<double> field_values(cells * B);
    std::vector<double> e(cells + targets), refined(targets);
    sampler.synthesize_batch(std::uint64_t(b * B), field_values.data());
    for (std::int64_t k = 0; k < B && b * B + k < n_samples; ++k) {
      const double* f = field_values.data() + cells * k;
      for (std::size_t c = 0; c < cells; ++c) e[c] = std::exp(gamma * f[c]);
      if (zoom) {
        zoom->refine(seed, std::uint64_t(b * B + k), f, refined.data());
        for (std::size_t t = 0; t < targets; ++t) e[cells + t] = std::exp(gamma * refined[t]);
      }
      for (std::size_t s = 0; s < sets.size(); ++s) {
        const double* w = weight[s].data();
        double z = 0;
        for (std::size_t c = 0; c < cells + targets; ++c) z += w[c] * e[c];
        values[s][b * B + k] = exponents[s] == 0 ? 1.0 : std::pow(z, exponents[s]);
      }
    }
  });
  return values;
}

MCEstimate negative_moment_mc(const CorrelatorJob& job, double exponent) {
  if (exponent > 0) throw DomainError("negative_moment_mc: exponent must be <= 0");
  if (exponent == 0) {
    MCEstimate e;
    e.mean = 1;
    e.n_samples = job.n_samples;
    e.seed = job.seed;
    e.effective_sample_size = double(job.n_samples);
    return e;
  }
  const auto v = z_moment_samples(job.field, job.seed, {job.insertions}, job.params, {exponent}, job.n_samples,
                                  job.threads, job.discretization);
  return summarize(v[0], job.seed);
}

MCEstimate correlator_mc(const CorrelatorJob& job) {
  const SeibergReport rep = check_seiberg(job.insertions, job.params);
  if (!rep.pass) {
    std::ostringstream os;
    os << "correlator_mc: Seiberg bounds fail:";
    for (const auto& v : rep.violations) os << " " << v << ";";
    throw DomainError(os.str());
  }
  const double s = rep.s;
  const MCEstimate m = negative_moment_mc(job, -s / job.params.gamma);
  const double scale = std::exp(log_correlator_geometry(job) + log_zero_mode_factor(job.insertions, job.params));
  MCEstimate out = m;
  out.mean = scale * m.mean;
  out.std_error = scale * m.std_error;
  return out;
}

RatioEstimate paired_ratio(const std::vector<double>& a, const std::vector<double>& b, double scale) {
  if (a.size() != b.size() || a.size() < 2) throw DomainError("paired_ratio: need equal-length samples, n >= 2");
  const double n = double(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  const double r = ma / mb;
  // residuals of a - r b give the delta-method variance of the ratio
  double ss = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - r * b[i];
    ss += d * d;
  }
  RatioEstimate out;
  out.ratio = scale * r;
  out.std_error = std::abs(scale) * std::sqrt(ss / (n - 1) / n) / std::abs(mb);
  out.n_samples = static_cast<std::int64_t>(a.size());
  return out;
}

}  // namespace lcft
