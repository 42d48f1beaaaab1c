#include "lcft/zoom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include "lcft/errors.hpp"
#include "lcft/quadrature.hpp"

namespace lcft {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTableStart = 8, kTableEnd = 400, kTableStep = 1.0 / 64;

double j0_tail_series(double x) {
  // -gamma_E - ln(x/2) + sum_{k>=1} (-1)^{k+1} (x/2)^{2k} / (2k (k!)^2)
  const double y = 0.25 * x * x;
  double term = 1, s = 0;
  for (int k = 1; k < 200; ++k) {
    term *= -y / (double(k) * k);
    const double add = -term / (2.0 * k);
    s += add;
    if (std::abs(add) < 1e-18 * std::max(1.0, std::abs(s))) break;
  }
  return -std::numbers::egamma - std::log(0.5 * x) + s;
}

double j0_tail_asymptotic(double x) {
  const double chi = x - 0.25 * kPi;
  return std::sqrt(2 / kPi) * (-std::sin(chi) / (x * std::sqrt(x)) + 13.0 / 8 * std::cos(chi) / (x * x * std::sqrt(x)));
}

struct TailTable {
  std::vector<double> value, slope;
  TailTable() {
    const int n = static_cast<int>(std::lround((kTableEnd - kTableStart) / kTableStep)) + 1;
    value.resize(n);
    slope.resize(n);
    const QuadratureRule& gl = gauss_legendre(10);
    auto j0 = [](double u) { return boost::math::cyl_bessel_j(0, u); };
    value[0] = j0_tail_series(kTableStart);
    for (int i = 0; i < n; ++i) {
      const double x = kTableStart + i * kTableStep;
      slope[i] = -j0(x) / x;
      if (i + 1 < n) {
        double seg = 0;
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
          const double u = x + 0.5 * kTableStep * (gl.nodes[q] + 1);
          seg += gl.weights[q] * j0(u) / u;
        }
        value[i + 1] = value[i] - 0.5 * kTableStep * seg;
      }
    }
  }
};

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

Vec3 normalized(const Vec3& v) {
  const double n = std::sqrt(dot(v, v));
  return {v.x / n, v.y / n, v.z / n};
}

Vec3 combine(double a, const Vec3& u, double b, const Vec3& v, double c, const Vec3& w) {
  return {a * u.x + b * v.x + c * w.x, a * u.y + b * v.y + c * w.y, a * u.z + b * v.z + c * w.z};
}

// sum_{l=1}^{L} and sum_{l=L+1}^{top} of (2l+1)/(2l(l+1)) P_l(cos theta)
void legendre_sums(int L, long top, double theta, double& low, double& high) {
  const double s = std::sin(0.5 * theta);
  const double x = 1 - 2 * s * s;
  double p0 = 1, p1 = x;
  low = high = 0;
  for (long l = 1; l <= top; ++l) {
    const double t = (2.0 * l + 1) / (2.0 * l * (l + 1)) * p1;
    (l <= L ? low : high) += t;
    const double p2 = ((2.0 * l + 1) * x * p1 - l * p0) / (l + 1);
    p0 = p1;
    p1 = p2;
  }
}

// sum_{l=a+1}^{b} (2l+1)/(2l(l+1)) for b possibly huge
double harmonic_band(double a, double b) {
  using boost::math::digamma;
  return 0.5 * (digamma(b + 1) - digamma(a + 1)) + 0.5 * (digamma(b + 2) - digamma(a + 2));
}

long exact_cap(int lmin) { return std::max<long>(2L * lmin, 256); }

// continuation of the band sum above `top` (exclusive) up to lmax
double band_tail(long top, double lmax, double theta) {
  const double m = std::floor(lmax);
  if (m <= double(top)) return 0;
  if (theta == 0) return harmonic_band(double(top), m);
  return std::sqrt(theta / std::sin(theta)) * (bessel_j0_tail((top + 1) * theta) - bessel_j0_tail((m + 1) * theta));
}

// C_L(theta) + band(L, lcut, theta) in one recurrence
double refined_covariance(int L, double lcut, double theta) {
  const long top = static_cast<long>(std::floor(std::min(lcut, double(exact_cap(L)))));
  double low, high;
  legendre_sums(L, std::max<long>(top, L), theta, low, high);
  return low + high + band_tail(std::max<long>(top, L), lcut, theta);
}

}  // namespace

double bessel_j0_tail(double x) {
  if (!(x > 0)) throw DomainError("bessel_j0_tail: x must be positive");
  if (x <= kTableStart) return j0_tail_series(x);
  if (x >= kTableEnd) return j0_tail_asymptotic(x);
  static const TailTable table;
  const double u = (x - kTableStart) / kTableStep;
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), table.value.size() - 2);
  const double t = u - double(i), h = kTableStep;
  // cubic Hermite on [x_i, x_{i+1}]
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * table.value[i] + (t3 - 2 * t2 + t) * h * table.slope[i] +
         (-2 * t3 + 3 * t2) * table.value[i + 1] + (t3 - t2) * h * table.slope[i + 1];
}

double geodesic_angle(const Vec3& a, const Vec3& b) {
  const Vec3 c = cross(a, b);
  return std::atan2(std::sqrt(dot(c, c)), dot(a, b));
}

double sphere_band_covariance(int lmin, double lmax, double theta) {
  if (lmin < 0) throw DomainError("sphere_band_covariance: lmin must be >= 0");
  if (lmax <= lmin) return 0;
  const long top = static_cast<long>(std::floor(std::min(lmax, double(exact_cap(lmin)))));
  double low, high;
  legendre_sums(lmin, top, theta, low, high);
  return high + band_tail(top, lmax, theta);
}

void ZoomSettings::validate() const {
  auto bad = [](const char* what) { throw ConfigError(std::string("zoom settings: ") + what); };
  if (!(radius > 0)) bad("radius must be positive");
  if (!(log_step > 0) || !(depth >= log_step)) bad("need 0 < log_step <= depth");
  if (angles < 3) bad("angles must be >= 3");
  if (!(resolution > 0)) bad("resolution must be positive");
  if (!(observed_radius > radius)) bad("observed_radius must exceed radius");
  if (!(kernel_radius > radius)) bad("kernel_radius must exceed radius");
}

struct FieldZoom::Impl {
  ZoomSettings s;
  int L = 0, R = 0, C = 0;
  double spacing = 0, r0 = 0, grid_variance = 0;
  std::vector<double> bound;  // cos(theta) cell boundaries, north to south
  std::vector<double> area;   // per row
  std::vector<double> ct, phi;  // node coordinates
  int rings = 0;
  std::vector<double> radii;  // rings + 1 boundaries, decreasing
  std::vector<Vec3> centres;
  std::vector<std::array<Vec3, 2>> frames;
  std::size_t per_centre = 0;
  std::vector<Vec3> targets;
  std::vector<double> target_var;
  std::vector<std::vector<std::size_t>> observed;
  std::vector<Eigen::MatrixXd> gain, factor;

  double ring_angle(int k, int m) const { return 2 * kPi * (m + 0.5 + 0.5 * (k % 2)) / s.angles; }
  Vec3 at(std::size_t c, double r, double psi) const {
    return combine(std::cos(r), centres[c], std::sin(r) * std::cos(psi), frames[c][0], std::sin(r) * std::sin(psi),
                   frames[c][1]);
  }
};

FieldZoom::FieldZoom(const SphereSampler& sampler, std::vector<Vec3> centres, ZoomSettings settings)
    : impl_(std::make_unique<Impl>()) {
  settings.validate();
  Impl& d = *impl_;
  d.s = settings;
  d.L = sampler.spec().lmax;
  d.R = sampler.rows();
  d.C = sampler.cols();
  d.grid_variance = sampler.variance();
  d.spacing = kPi / d.R;
  d.r0 = settings.radius * d.spacing;
  d.bound.resize(d.R + 1);
  d.bound[0] = 1;
  for (int i = 0; i < d.R; ++i) {
    d.area.push_back(sampler.cell_area(i));
    d.ct.push_back(sampler.cos_theta(i));
    d.bound[i + 1] = d.bound[i] - sampler.cell_area(i) * d.C / (2 * kPi);
  }
  d.bound[d.R] = -1;
  for (int j = 0; j < d.C; ++j) d.phi.push_back(sampler.phi(j));

  for (std::size_t a = 0; a < centres.size(); ++a)
    for (std::size_t b = a + 1; b < centres.size(); ++b)
      if (geodesic_angle(centres[a], centres[b]) < 2.2 * d.r0) {
        std::ostringstream os;
        os << "zoom: centres " << a << " and " << b << " are closer than 2.2 patch radii ("
           << geodesic_angle(centres[a], centres[b]) << " rad); raise lmax";
        throw ConfigError(os.str());
      }
  d.centres = std::move(centres);
  for (const Vec3& x : d.centres) {
    const Vec3 ref = std::abs(x.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    const Vec3 e1 = normalized(cross(ref, x));
    d.frames.push_back({e1, cross(x, e1)});
  }

  d.rings = static_cast<int>(std::ceil(settings.depth / settings.log_step));
  for (int k = 0; k <= d.rings; ++k) d.radii.push_back(d.r0 * std::exp(-settings.log_step * k));
  d.per_centre = std::size_t(d.rings) * settings.angles + 1;

  // mode cutoff and position of every target of one centre (the same for all centres)
  std::vector<double> cut, rad, ang;
  for (int k = 0; k < d.rings; ++k)
    for (int m = 0; m < settings.angles; ++m) {
      rad.push_back(std::sqrt(d.radii[k] * d.radii[k + 1]));
      ang.push_back(d.ring_angle(k, m));
    }
  rad.push_back(0);
  ang.push_back(0);
  for (double r : rad)
    cut.push_back(std::max(double(d.L), settings.resolution / (r > 0 ? r : 0.5 * d.radii.back())));

  const std::size_t T = d.per_centre;
  for (std::size_t c = 0; c < d.centres.size(); ++c) {
    for (std::size_t t = 0; t < T; ++t) {
      d.targets.push_back(d.at(c, rad[t], ang[t]));
      d.target_var.push_back(d.grid_variance + harmonic_band(d.L, std::floor(cut[t])));
    }
    // grid nodes used for conditioning
    std::vector<std::size_t> obs;
    const double reach = settings.observed_radius * d.spacing;
    for (int i = 0; i < d.R; ++i)
      for (int j = 0; j < d.C; ++j)
        if (geodesic_angle(sampler.node(i, j), d.centres[c]) < reach) obs.push_back(std::size_t(i) * d.C + j);
    const std::size_t O = obs.size();
    std::vector<Vec3> onode;
    for (std::size_t o : obs) onode.push_back(sampler.node(int(o / d.C), int(o % d.C)));

    Eigen::MatrixXd soo(O, O), sto(T, O), stt(T, T);
    for (std::size_t a = 0; a < O; ++a)
      for (std::size_t b = a; b < O; ++b)
        soo(a, b) = soo(b, a) = sphere_truncated_covariance(d.L, std::cos(geodesic_angle(onode[a], onode[b])));
    const Vec3* tv = d.targets.data() + c * T;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t o = 0; o < O; ++o)
        sto(t, o) = sphere_truncated_covariance(d.L, std::cos(geodesic_angle(tv[t], onode[o])));
    for (std::size_t a = 0; a < T; ++a)
      for (std::size_t b = a; b < T; ++b) {
        // the angle from the centre is exact for targets on the same ray
        const double th = (a + 1 == T || b + 1 == T) ? std::abs(rad[a] - rad[b]) : geodesic_angle(tv[a], tv[b]);
        stt(a, b) = stt(b, a) = refined_covariance(d.L, std::min(cut[a], cut[b]), th);
      }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(soo);
    const Eigen::VectorXd lam = eig.eigenvalues();
    Eigen::VectorXd inv(O);
    for (std::size_t i = 0; i < O; ++i) inv[i] = lam[i] > 1e-12 * lam.maxCoeff() ? 1 / lam[i] : 0;
    const Eigen::MatrixXd pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    Eigen::MatrixXd g = sto * pinv;
    Eigen::MatrixXd cond = stt - g * sto.transpose();
    cond = 0.5 * (cond + cond.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(cond);
    double jitter = 1e-12 * cond.diagonal().mean();
    while (llt.info() != Eigen::Success) {
      cond.diagonal().array() += jitter;
      jitter *= 10;
      llt.compute(cond);
      if (jitter > 1e-4) throw AccuracyError("zoom: conditional covariance is not positive definite");
    }
    d.observed.push_back(std::move(obs));
    d.gain.push_back(std::move(g));
    d.factor.push_back(llt.matrixL());
  }
}

FieldZoom::~FieldZoom() = default;

const ZoomSettings& FieldZoom::settings() const { return impl_->s; }
std::size_t FieldZoom::centre_count() const { return impl_->centres.size(); }
std::size_t FieldZoom::targets_per_centre() const { return impl_->per_centre; }
std::size_t FieldZoom::target_count() const { return impl_->targets.size(); }
Vec3 FieldZoom::target(std::size_t t) const { return impl_->targets.at(t); }
double FieldZoom::target_variance(std::size_t t) const { return impl_->target_var.at(t); }
double FieldZoom::radius() const { return impl_->r0; }

void FieldZoom::refine(std::uint64_t seed, std::uint64_t index, const double* grid, double* out) const {
  const Impl& d = *impl_;
  SampleEngine engine = sample_stream(seed, index + (std::uint64_t(1) << 63));
  const std::size_t T = d.per_centre;
  Eigen::VectorXd xi(T), o;
  for (std::size_t c = 0; c < d.centres.size(); ++c) {
    fill_normals(engine, xi.data(), T);
    const auto& obs = d.observed[c];
    o.resize(Eigen::Index(obs.size()));
    for (std::size_t i = 0; i < obs.size(); ++i) o[Eigen::Index(i)] = grid[obs[i]];
    Eigen::Map<Eigen::VectorXd> y(out + c * T, Eigen::Index(T));
    y.noalias() = d.gain[c] * o;
    y.noalias() += d.factor[c].triangularView<Eigen::Lower>() * xi;
  }
}

std::vector<double> FieldZoom::weights(const std::vector<Vec3>& points, const std::vector<double>& alpha,
                                       double gamma) const {
  const Impl& d = *impl_;
  if (points.size() != alpha.size()) throw DomainError("zoom weights: one alpha per point");
  // centre index of every point
  std::vector<std::size_t> owner;
  for (const Vec3& p : points) {
    std::size_t best = 0;
    double da = 1e300;
    for (std::size_t c = 0; c < d.centres.size(); ++c) {
      const double a = geodesic_angle(p, d.centres[c]);
      if (a < da) da = a, best = c;
    }
    if (da > 1e-9) throw DomainError("zoom weights: insertion point is not a zoom centre");
    owner.push_back(best);
  }
  // centre_alpha[c] = total weight sitting at centre c
  std::vector<double> centre_alpha(d.centres.size(), 0.0);
  for (std::size_t k = 0; k < points.size(); ++k) centre_alpha[owner[k]] += alpha[k];

  // log kernel at x; `own` is a centre at known angle `r` from x (or npos)
  const std::size_t npos = d.centres.size();
  auto log_kernel = [&](const Vec3& x, std::size_t own, double r) {
    double acc = 0;
    for (std::size_t c = 0; c < d.centres.size(); ++c) {
      if (centre_alpha[c] == 0) continue;
      const double chord = c == own ? 2 * std::sin(0.5 * r) : std::sqrt(std::max(0.0, 2 - 2 * dot(x, d.centres[c])));
      acc += centre_alpha[c] * (-std::log(chord) + kSphereRobin);
    }
    return gamma * acc;
  };

  const double half_g2 = 0.5 * gamma * gamma;
  std::vector<double> w(std::size_t(d.R) * d.C + d.targets.size(), 0.0);
  const QuadratureRule& g4 = gauss_legendre(4);

  // integral of the kernel over a (cos theta, phi) rectangle outside every disk
  constexpr int kMaxDepth = 8;
  auto rect = [&](auto&& self, double ct_hi, double ct_lo, double p0, double p1, int depth) -> double {
    const double th0 = std::acos(std::clamp(ct_hi, -1.0, 1.0)), th1 = std::acos(std::clamp(ct_lo, -1.0, 1.0));
    const double smax = (th0 <= 0.5 * kPi && th1 >= 0.5 * kPi) ? 1.0 : std::max(std::sin(th0), std::sin(th1));
    const double diam = std::hypot(th1 - th0, smax * (p1 - p0));
    const Vec3 mid = from_angles(0.5 * (ct_hi + ct_lo), 0.5 * (p0 + p1));
    double lower = 1e300;
    bool crosses = false;
    for (const Vec3& x : d.centres) {
      const double a = geodesic_angle(mid, x);
      if (a + 0.6 * diam < d.r0) return 0.0;
      if (a - 0.6 * diam < d.r0) crosses = true;
      lower = std::min(lower, a - 0.6 * diam);
    }
    const bool smooth = !crosses && lower >= 3 * diam;
    if (!smooth && depth < kMaxDepth) {
      const double cm = 0.5 * (ct_hi + ct_lo), pm = 0.5 * (p0 + p1);
      return self(self, ct_hi, cm, p0, pm, depth + 1) + self(self, ct_hi, cm, pm, p1, depth + 1) +
             self(self, cm, ct_lo, p0, pm, depth + 1) + self(self, cm, ct_lo, pm, p1, depth + 1);
    }
    double acc = 0;
    for (std::size_t a = 0; a < g4.nodes.size(); ++a)
      for (std::size_t b = 0; b < g4.nodes.size(); ++b) {
        const double ct = 0.5 * (ct_hi + ct_lo) + 0.5 * (ct_hi - ct_lo) * g4.nodes[a];
        const double ph = 0.5 * (p0 + p1) + 0.5 * (p1 - p0) * g4.nodes[b];
        const Vec3 x = from_angles(ct, ph);
        bool inside = false;
        for (const Vec3& c : d.centres) inside = inside || geodesic_angle(x, c) < d.r0;
        if (!inside) acc += g4.weights[a] * g4.weights[b] * std::exp(log_kernel(x, npos, 0));
      }
    return 0.25 * (ct_hi - ct_lo) * (p1 - p0) * acc;
  };

  const double grid_wick = std::exp(half_g2 * (kSphereRobin - d.grid_variance));
  const double near = d.s.kernel_radius * d.spacing;
  for (int i = 0; i < d.R; ++i) {
    const double p_width = 2 * kPi / d.C;
    for (int j = 0; j < d.C; ++j) {
      const Vec3 node = from_angles(d.ct[i], d.phi[j]);
      double closest = 1e300;
      for (const Vec3& c : d.centres) closest = std::min(closest, geodesic_angle(node, c));
      double kint;
      if (closest < near)
        kint = rect(rect, d.bound[i], d.bound[i + 1], j * p_width, (j + 1) * p_width, 0);
      else
        kint = std::exp(log_kernel(node, npos, 0)) * d.area[i];
      w[std::size_t(i) * d.C + j] = kint * grid_wick;
    }
  }

  // ring cells
  const std::size_t T = d.per_centre, base = std::size_t(d.R) * d.C;
  const double dpsi = 2 * kPi / d.s.angles;
  for (std::size_t c = 0; c < d.centres.size(); ++c) {
    for (int k = 0; k < d.rings; ++k) {
      const double u0 = std::log(d.radii[k + 1]), u1 = std::log(d.radii[k]);
      for (int m = 0; m < d.s.angles; ++m) {
        const double psi0 = d.ring_angle(k, m) - 0.5 * dpsi;
        double acc = 0;
        for (std::size_t a = 0; a < g4.nodes.size(); ++a)
          for (std::size_t b = 0; b < g4.nodes.size(); ++b) {
            const double r = std::exp(0.5 * (u0 + u1) + 0.5 * (u1 - u0) * g4.nodes[a]);
            const double psi = psi0 + 0.5 * dpsi * (g4.nodes[b] + 1);
            acc += g4.weights[a] * g4.weights[b] * std::exp(log_kernel(d.at(c, r, psi), c, r)) * std::sin(r) * r;
          }
        const std::size_t t = c * T + std::size_t(k) * d.s.angles + m;
        w[base + t] = 0.25 * (u1 - u0) * dpsi * acc * std::exp(half_g2 * (kSphereRobin - d.target_var[t]));
      }
    }
    // innermost disk: conditional mean when the kernel is integrable there
    const double beta = gamma * centre_alpha[c];
    const std::size_t t = c * T + T - 1;
    if (beta < 2) {
      double other = 0;
      for (std::size_t o = 0; o < d.centres.size(); ++o)
        if (o != c && centre_alpha[o] != 0)
          other += centre_alpha[o] * sphere_covariance_d2(2 - 2 * dot(d.centres[c], d.centres[o]));
      const double b = d.radii.back();
      const double kint = 2 * kPi * std::exp(gamma * other + beta * kSphereRobin) * std::pow(b, 2 - beta) / (2 - beta);
      w[base + t] = kint * std::exp(half_g2 * (kSphereRobin - d.target_var[t]));
    }
  }
  return w;
}

}  // namespace lcft
