#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>

#include "doctest_main.hpp"
#include "lcft/correlators.hpp"
#include "lcft/dozz.hpp"
#include "lcft/errors.hpp"
#include "lcft/quadrature.hpp"
#include "lcft/sphere.hpp"
#include "lcft/zoom.hpp"

using namespace lcft;
using std::numbers::pi;

namespace {

// -gamma_E - ln(x/2) + int_0^x (1 - J0(u))/u du
double j0_tail_oracle(double x) {
  auto f = [](double u) { return u < 1e-8 ? u / 4 : (1 - boost::math::cyl_bessel_j(0, u)) / u; };
  double acc = 0;
  const int panels = static_cast<int>(std::ceil(x / 2));
  for (int k = 0; k < panels; ++k)
    acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, x * k / panels, x * (k + 1) / panels, 0,
                                                                         1e-15);
  return -std::numbers::egamma - std::log(x / 2) + acc;
}

double direct_band(int lmin, int lmax, double theta) {
  const double x = std::cos(theta);
  double p0 = 1, p1 = x, s = 0;
  for (int l = 1; l <= lmax; ++l) {
    if (l > lmin) s += (2.0 * l + 1) / (2.0 * l * (l + 1)) * p1;
    const double p2 = ((2.0 * l + 1) * x * p1 - l * p0) / (l + 1);
    p0 = p1;
    p1 = p2;
  }
  return s;
}

// int over the sphere of exp(beta C(x0, x)) dA = 2 pi e^{beta c} 2^{2-beta} / (2 - beta)
double single_kernel_integral(double beta) {
  return 2 * pi * std::exp(beta * kSphereRobin) * std::pow(2.0, 2 - beta) / (2 - beta);
}

SpherePoint fin(cplx z) { return SpherePoint::finite(z); }

// SU(2) Moebius map, a rotation of the sphere
cplx su2(cplx z, cplx a, cplx b) { return (a * z + b) / (-std::conj(b) * z + std::conj(a)); }

const cplx kZ3 = std::polar(1.0, pi / 3);

}  // namespace

TEST_CASE("sphere covariance: antipodes, symmetry, zero spherical mean") {
  const Vec3 n{0, 0, 1}, s{0, 0, -1};
  CHECK(sphere_covariance(n, s) == doctest::Approx(-0.5).epsilon(1e-15));
  const Vec3 a = from_angles(0.3, 1.1), b = from_angles(-0.7, 4.0);
  CHECK(sphere_covariance(a, b) == sphere_covariance(b, a));
  CHECK_THROWS_AS(sphere_covariance(a, a), DomainError);
  // spherical mean of C(x0, .) with x0 the north pole: int_{-1}^{1} C dcos / 2;
  // cos = 1 - 2 t^4 tames the log singularity at cos = 1
  const QuadratureRule g = gauss_legendre(40, 0.0, 1.0);
  double mean = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const double t = g.nodes[i], t2 = t * t;
    mean += g.weights[i] * sphere_covariance_d2(4 * t2 * t2) * 4 * t2 * t;
  }
  CHECK(std::abs(mean) < 1e-8);
}

TEST_CASE("bessel_j0_tail against direct quadrature") {
  for (double x : {1e-3, 0.5, 3.0, 7.99, 8.01, 20.0, 77.7, 399.0, 401.0, 1000.0})
    CHECK(bessel_j0_tail(x) == doctest::Approx(j0_tail_oracle(x)).epsilon(0).scale(1).epsilon(1e-8));
  CHECK_THROWS_AS(bessel_j0_tail(0.0), DomainError);
}

TEST_CASE("sphere_band_covariance against the direct Legendre sum") {
  for (double theta : {0.0, 1e-3, 0.01, 0.05, 0.2, 1.0})
    for (int lmax : {100, 400, 3000}) {
      const double direct = direct_band(20, lmax, theta);
      CHECK(sphere_band_covariance(20, lmax, theta) == doctest::Approx(direct).epsilon(0).scale(1).epsilon(2e-4));
    }
  CHECK(sphere_band_covariance(30, 30, 0.1) == 0);
  // a huge band: direct sum to 1e6, then (2l+1)/(2l(l+1)) ~ 1/l
  const double huge = direct_band(100, 1000000, 0) + std::log(1e12 / 1e6);
  CHECK(sphere_band_covariance(100, 1e12, 0) == doctest::Approx(huge).epsilon(1e-7));
}

TEST_CASE("zoom: ring values follow the refined covariance") {
  SphereFieldSpec f;
  f.lmax = 10;
  SphereSampler sampler(f);
  const Vec3 centre = grid_frame(to_unit_sphere(cplx(0.4, 0.2)));
  ZoomSettings zs;
  zs.depth = 6;
  FieldZoom zoom(sampler, {centre}, zs);
  const std::size_t T = zoom.targets_per_centre();
  REQUIRE(zoom.target_count() == T);
  // a few targets: outer ring, middle ring, centre
  const std::vector<std::size_t> probe = {0, std::size_t(zs.angles) * 5 + 3, T - 1};
  // the grid node nearest the centre
  int bi = 0, bj = 0;
  double best = 10;
  for (int i = 0; i < sampler.rows(); ++i)
    for (int j = 0; j < sampler.cols(); ++j)
      if (geodesic_angle(sampler.node(i, j), centre) < best) best = geodesic_angle(sampler.node(i, j), centre), bi = i, bj = j;
  const std::size_t node = std::size_t(bi) * sampler.cols() + bj;

  const int n = 6000;
  std::vector<double> sum(probe.size()), sq(probe.size()), cross(probe.size());
  std::vector<double> grid(std::size_t(sampler.rows()) * sampler.cols() * SphereSampler::kBatch);
  std::vector<double> out(T);
  double node_sq = 0;
  for (int b = 0; b < n / SphereSampler::kBatch; ++b) {
    sampler.synthesize_batch(std::uint64_t(b) * SphereSampler::kBatch, grid.data());
    for (int k = 0; k < SphereSampler::kBatch; ++k) {
      const double* g = grid.data() + std::size_t(k) * sampler.rows() * sampler.cols();
      zoom.refine(7, std::uint64_t(b) * SphereSampler::kBatch + k, g, out.data());
      node_sq += g[node] * g[node];
      for (std::size_t p = 0; p < probe.size(); ++p) {
        const double v = out[probe[p]];
        sum[p] += v;
        sq[p] += v * v;
        cross[p] += v * g[node];
      }
    }
  }
  for (std::size_t p = 0; p < probe.size(); ++p) {
    const double var = zoom.target_variance(probe[p]);
    INFO("target " << probe[p]);
    CHECK(std::abs(sum[p] / n) < 3 * std::sqrt(var / n));
    CHECK(std::abs(sq[p] / n - var) < 3 * var * std::sqrt(2.0 / n));
    // the refined modes are independent of the grid field
    const double cov = sphere_truncated_covariance(f.lmax, std::cos(geodesic_angle(zoom.target(probe[p]),
                                                                                   sampler.node(bi, bj))));
    const double se = std::sqrt(var * sampler.variance() / n) * 1.5;
    CHECK(std::abs(cross[p] / n - cov) < 3 * se);
  }
  CHECK(node_sq / n == doctest::Approx(sampler.variance()).epsilon(0.05));
}

TEST_CASE("zoom: integrated kernel weights reproduce exact sphere integrals") {
  SphereFieldSpec f;
  f.lmax = 24;
  SphereSampler sampler(f);
  const Vec3 c0 = grid_frame(to_unit_sphere(cplx(0, 0))), c1 = grid_frame(to_unit_sphere(cplx(1, 0)));
  // integrate the kernel over every cell; by default far cells use node values
  ZoomSettings zs;
  zs.kernel_radius = 40;
  FieldZoom zoom(sampler, {c0, c1}, zs);
  const double gamma = 1;
  auto unnormalised_total = [&](const std::vector<double>& w) {
    const std::size_t cells = std::size_t(sampler.rows()) * sampler.cols();
    double total = 0;
    for (std::size_t c = 0; c < cells; ++c)
      total += w[c] / std::exp(0.5 * gamma * gamma * (kSphereRobin - sampler.variance()));
    for (std::size_t t = 0; t < zoom.target_count(); ++t)
      total += w[cells + t] / std::exp(0.5 * gamma * gamma * (kSphereRobin - zoom.target_variance(t)));
    return total;
  };
  CHECK(unnormalised_total(zoom.weights({c0, c1}, {0, 0}, gamma)) == doctest::Approx(4 * pi).epsilon(1e-6));
  for (double alpha : {0.5, 1.0, 1.9})
    CHECK(unnormalised_total(zoom.weights({c0}, {alpha}, gamma)) ==
          doctest::Approx(single_kernel_integral(gamma * alpha)).epsilon(2e-5));
  CHECK_THROWS_AS(zoom.weights({from_angles(0.1, 0.1)}, {1.0}, gamma), DomainError);
  CHECK_THROWS_AS(FieldZoom(sampler, {c0, rotate(c0, Vec3{0, 0, 1}, 0.05)}), ConfigError);
}

TEST_CASE("z_random_mass: zero weights, log-convex in alpha, Fubini mean") {
  const CFTParams prm = derive_params(1.0, 1.0);
  SphereFieldSpec f;
  f.lmax = 16;
  const FieldSample sample = sample_sphere_field(f, 3);
  const std::vector<SpherePoint> pts{fin(0), fin(1), fin(kZ3)};
  const InsertionSet zero(pts, {0, 0, 0}, prm);
  CHECK(z_random_mass(sample, zero, prm) == doctest::Approx(chaos_measure(sample, 1.0).total_mass).epsilon(1e-13));
  // C(x_j, .) changes sign (it is -1/2 at the antipode), so Z is not monotone
  // in alpha; as a sum of exponentials in alpha it is log-convex
  auto log_z = [&](double a) { return std::log(z_random_mass(sample, InsertionSet(pts, {1.0, 1.0, a}, prm), prm)); };
  for (double a : {0.2, 0.8, 1.4, 2.0}) CHECK(log_z(a) <= 0.5 * (log_z(a - 0.15) + log_z(a + 0.15)));
  CHECK_THROWS_AS(z_random_mass(sample, InsertionSet(pts, {1.0, 1.0, 2.6}, prm), prm), DomainError);

  // single insertion at the north pole with gamma = alpha = 1: E[Z] is the
  // kernel integral times e^{gamma^2 c / 2}, for the discretised kernel on the
  // grid and for the zoom weights alike
  const InsertionSet north({SpherePoint::infinity()}, {1.0}, prm);
  SphereSampler sampler(f);
  double grid_integral = 0;
  for (int i = 0; i < sampler.rows(); ++i)
    for (int j = 0; j < sampler.cols(); ++j)
      grid_integral += std::exp(sphere_covariance(Vec3{0, 0, 1}, sampler.node(i, j))) * sampler.cell_area(i);
  const int n = 4000;
  std::vector<double> zs;
  for (int k = 0; k < n; ++k) zs.push_back(z_random_mass(sample_sphere_field(f, k), north, prm));
  const MCEstimate node = summarize(zs, 0);
  CHECK(std::abs(node.mean - grid_integral * std::exp(0.5 * kSphereRobin)) < 3 * node.std_error);

  const auto v = z_moment_samples(f, 11, {north}, prm, {1.0}, n);
  const MCEstimate zoomed = summarize(v[0], 11);
  const double exact = single_kernel_integral(1.0) * std::exp(0.5 * kSphereRobin);
  CHECK(std::abs(zoomed.mean - exact) < 3 * zoomed.std_error);
}

TEST_CASE("negative moments: q = 0, Jensen, disjoint batches, determinism") {
  const CFTParams prm = derive_params(1.0, 1.0);
  SphereFieldSpec f;
  f.lmax = 16;
  const InsertionSet ins({fin(0), fin(1), fin(kZ3)}, {1.9, 1.9, 1.9}, prm);
  CorrelatorJob job{ins, prm, f};
  job.n_samples = 1200;
  job.seed = 1;
  const MCEstimate q0 = negative_moment_mc(job, 0.0);
  CHECK(q0.mean == 1.0);
  CHECK(q0.std_error == 0.0);
  CHECK_THROWS_AS(negative_moment_mc(job, 0.5), DomainError);

  const double q = ins.weight_sum() - 2 * prm.Q;
  const auto v = z_moment_samples(f, 1, {ins, ins}, prm, {-q, 1.0}, job.n_samples);
  for (double x : v[0]) CHECK_MESSAGE((x > 0 && std::isfinite(x)), "every Z^{-q} is finite and positive");
  const MCEstimate neg = summarize(v[0], 1), pos = summarize(v[1], 1);
  const double jensen = std::pow(pos.mean, -q);
  const double jensen_se = q * jensen / pos.mean * pos.std_error;
  CHECK(neg.mean >= jensen - 3 * std::hypot(neg.std_error, jensen_se));

  const MCEstimate a = negative_moment_mc(job, -q);
  job.seed = 2;
  const MCEstimate b = negative_moment_mc(job, -q);
  CHECK(std::abs(a.mean - b.mean) < 3 * std::hypot(a.std_error, b.std_error));
  job.seed = 1;
  job.threads = 3;
  const MCEstimate c = negative_moment_mc(job, -q);
  CHECK(c.mean == a.mean);
  CHECK(c.std_error == a.std_error);
  CHECK(a.mean == v[0].size() / double(v[0].size()) * summarize(v[0], 1).mean);
}

TEST_CASE("correlator: Seiberg check, prefactors, mu scaling, rotation invariance") {
  const CFTParams prm = derive_params(0.8, 1.0);
  SphereFieldSpec f;
  f.lmax = 16;
  const std::vector<SpherePoint> four{fin(0), fin(1), fin(cplx(0.3, 1.2)), fin(cplx(-1.5, -0.4))};
  const InsertionSet ins(four, {1.7, 1.6, 1.5, 1.4}, prm);
  const double s = ins.weight_sum() - 2 * prm.Q;
  REQUIRE(s > 0);
  CorrelatorJob job{ins, prm, f};
  job.n_samples = 400;
  job.seed = 5;
  const MCEstimate base = correlator_mc(job);
  CHECK(base.mean > 0);
  CHECK(log_zero_mode_factor(ins, prm) ==
        doctest::Approx(-std::log(0.8) - s / 0.8 * std::log(1.0) + std::lgamma(s / 0.8)).epsilon(1e-14));

  CorrelatorJob doubled = job;
  doubled.params = derive_params(0.8, 2.0);
  doubled.insertions = InsertionSet(four, {1.7, 1.6, 1.5, 1.4}, doubled.params);
  CHECK(correlator_mc(doubled).mean / base.mean == doctest::Approx(std::pow(2.0, -s / 0.8)).epsilon(1e-12));

  CorrelatorJob bad = job;
  bad.insertions = InsertionSet(four, {0.2, 0.2, 0.2, 0.2}, prm);
  CHECK_THROWS_AS(correlator_mc(bad), DomainError);

  // geometry factor: determinant term plus pairwise covariances
  CorrelatorJob two{InsertionSet({fin(0), SpherePoint::infinity()}, {1.0, 2.0}, prm), prm, f};
  const double expect = -0.5 * (log_det_laplacian_unit_sphere() - std::log(4 * pi)) +
                        0.5 * (1.0 + 4.0) * kSphereRobin + 2.0 * (-std::log(2.0) + kSphereRobin);
  CHECK(log_correlator_geometry(two) == doctest::Approx(expect).epsilon(1e-14));

  // a common rotation of all points leaves the correlator unchanged
  const cplx ra = std::polar(std::cos(0.7), 0.4), rb = std::polar(std::sin(0.7), -1.3);
  std::vector<SpherePoint> turned;
  for (const auto& p : four) turned.push_back(fin(su2(p.z, ra, rb)));
  CorrelatorJob rotated = job;
  rotated.insertions = InsertionSet(turned, {1.7, 1.6, 1.5, 1.4}, prm);
  job.n_samples = rotated.n_samples = 3000;
  const MCEstimate e1 = correlator_mc(job), e2 = correlator_mc(rotated);
  CHECK(std::abs(e1.mean - e2.mean) < 3 * std::hypot(e1.std_error, e2.std_error));
}

TEST_CASE("correlator: DOZZ ratio at small lmax and alpha close to Q") {
  const CFTParams prm = derive_params(1.0, 1.0);
  SphereFieldSpec f;
  f.lmax = 24;
  const std::vector<SpherePoint> pts{fin(0), fin(1), fin(kZ3)};
  const InsertionSet a(pts, {1.9, 1.9, 1.9}, prm), b(pts, {1.9, 1.9, 1.7}, prm);
  const double sa = a.weight_sum() - 2 * prm.Q, sb = b.weight_sum() - 2 * prm.Q;
  const auto v = z_moment_samples(f, 9, {a, b}, prm, {-sa, -sb}, 6000);
  CorrelatorJob ja{a, prm, f}, jb{b, prm, f};
  const double scale = std::exp(log_correlator_geometry(ja) + log_zero_mode_factor(a, prm) -
                                log_correlator_geometry(jb) - log_zero_mode_factor(b, prm));
  const RatioEstimate r = paired_ratio(v[0], v[1], scale);
  UpsilonEvaluator ev(1.0);
  const double exact = (three_point_fixed(0, 1, kZ3, 1.9, 1.9, 1.9, prm, ev) /
                        three_point_fixed(0, 1, kZ3, 1.9, 1.9, 1.7, prm, ev))
                           .real();
  INFO("MC ratio " << r.ratio << " +- " << r.std_error << ", DOZZ " << exact);
  CHECK(std::abs(r.ratio - exact) < 3 * r.std_error + 0.01 * exact);

  // alpha_3 = Q - 0.1: the kernel is no longer area-integrable but Z stays finite
  const InsertionSet near_q(pts, {1.9, 1.9, prm.Q - 0.1}, prm);
  CorrelatorJob jq{near_q, prm, f};
  jq.n_samples = 500;
  const MCEstimate e = correlator_mc(jq);
  CHECK(std::isfinite(e.mean));
  CHECK(e.mean > 0);
  CHECK(std::isfinite(e.std_error));
}

TEST_CASE("paired_ratio and the node rule") {
  const RatioEstimate r = paired_ratio({2, 4, 6}, {1, 2, 3}, 0.5);
  CHECK(r.ratio == doctest::Approx(1.0));
  CHECK(r.std_error == doctest::Approx(0.0));
  CHECK_THROWS_AS(paired_ratio({1}, {1}), DomainError);

  // the node rule evaluates the kernel at grid nodes: same numbers as z_random_mass
  const CFTParams prm = derive_params(1.0, 1.0);
  SphereFieldSpec f;
  f.lmax = 12;
  const InsertionSet ins({fin(cplx(0.2, 0.1)), fin(1), fin(kZ3)}, {1.2, 1.3, 1.4}, prm);
  Discretization node;
  node.rule = KernelRule::Node;
  const auto v = z_moment_samples(f, 4, {ins}, prm, {1.0}, 16, 1, node);
  f.seed = 4;
  for (int k = 0; k < 16; ++k)
    CHECK(v[0][k] == doctest::Approx(z_random_mass(sample_sphere_field(f, k), ins, prm)).epsilon(1e-12));
}
