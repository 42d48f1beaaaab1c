#include "lcft/gmc.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "lcft/errors.hpp"
#include "lcft/quadrature.hpp"

namespace lcft {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
std::unique_ptr<T[], FftwFree> fftw_array(std::size_t n) {
  return std::unique_ptr<T[], FftwFree>(static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1))));
}

}  // namespace

SampleEngine sample_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return SampleEngine(seq);
}

void fill_normals(SampleEngine& engine, double* out, std::size_t n) {
  boost::random::normal_distribution<double> normal;
  for (std::size_t i = 0; i < n; ++i) out[i] = normal(engine);
}

// ------------------------------------------------------------------- specs

void CircleFieldSpec::validate() const {
  if (modes < 1) throw ConfigError("circle field: modes must be >= 1");
  if (grid_size() < 2 * modes + 2) {
    std::ostringstream os;
    os << "circle field: grid of " << grid_size() << " points cannot resolve " << modes
       << " modes (need >= " << 2 * modes + 2 << ")";
    throw ConfigError(os.str());
  }
}

int SphereFieldSpec::lat_count() const {
  if (nlat > 0) return nlat;
  return (lmax + 2) / 2 * 2;
}

namespace {

bool five_smooth(int n) {
  for (int p : {2, 3, 5})
    while (n % p == 0) n /= p;
  return n == 1;
}

}  // namespace

int SphereFieldSpec::lon_count() const {
  if (nlon > 0) return nlon;
  int n = (2 * lmax + 2 + 5) / 6 * 6;
  while (!five_smooth(n)) n += 6;
  return n;
}

void SphereFieldSpec::validate() const {
  if (lmax < 1) throw ConfigError("sphere field: lmax must be >= 1");
  std::ostringstream os;
  if (lat_count() < lmax + 1 || lat_count() % 2 != 0)
    os << "sphere field: need an even number of latitude rings >= lmax + 1 = " << lmax + 1 << ", got "
       << lat_count();
  else if (lon_count() < 2 * lmax + 2 || lon_count() % 2 != 0)
    os << "sphere field: need an even number of longitudes >= 2 lmax + 2 = " << 2 * lmax + 2 << ", got "
       << lon_count();
  if (!os.str().empty()) throw ConfigError(os.str());
}

// ------------------------------------------------------ analytic covariance

double circle_truncated_covariance(int modes, double dtheta) {
  double s = 0;
  for (int n = modes; n >= 1; --n) s += std::cos(n * dtheta) / n;
  return s;
}

double sphere_truncated_covariance(int lmax, double x) {
  // upward Legendre recurrence, terms summed as they appear
  double p0 = 1, p1 = x, s = 0;
  for (int l = 1; l <= lmax; ++l) {
    s += (2.0 * l + 1) / (2.0 * l * (l + 1)) * p1;
    const double p2 = ((2.0 * l + 1) * x * p1 - l * p0) / (l + 1);
    p0 = p1;
    p1 = p2;
  }
  return s;
}

double sphere_truncated_variance(int lmax) {
  double s = 0;
  for (int l = lmax; l >= 1; --l) s += (2.0 * l + 1) / (2.0 * l * (l + 1));
  return s;
}

// ------------------------------------------------------------------ circle

CircleSampler::CircleSampler(CircleFieldSpec spec) : spec_(spec), plan_(nullptr) {
  spec_.validate();
  variance_ = 0;
  for (int n = spec_.modes; n >= 1; --n) variance_ += 1.0 / n;
  if (spec_.includes_zero_mode) variance_ += 1.0;
  const int M = spec_.grid_size();
  auto in = fftw_array<fftw_complex>(M / 2 + 1);
  auto out = fftw_array<double>(M);
  std::lock_guard lock(planner_mutex());
  plan_ = fftw_plan_dft_c2r_1d(M, in.get(), out.get(), FFTW_ESTIMATE);
}

CircleSampler::~CircleSampler() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
}

double CircleSampler::theta(int k) const { return 2 * std::numbers::pi * k / grid_size(); }

void CircleSampler::synthesize(std::uint64_t index, double* out) const {
  const int M = grid_size(), N = spec_.modes;
  auto eng = sample_stream(spec_.seed, index);
  std::vector<double> normals(2 * N + (spec_.includes_zero_mode ? 1 : 0));
  fill_normals(eng, normals.data(), normals.size());
  auto in = fftw_array<fftw_complex>(M / 2 + 1);
  auto buf = fftw_array<double>(M);
  for (int m = 0; m <= M / 2; ++m) in[m][0] = in[m][1] = 0;
  // out_k = 2 Re sum_n C_n e^{i n theta_k}; C_n = (x_n + i y_n) / (2 sqrt n)
  for (int n = 1; n <= N; ++n) {
    const double s = 0.5 / std::sqrt(double(n));
    in[n][0] = s * normals[2 * n - 2];
    in[n][1] = s * normals[2 * n - 1];
  }
  if (spec_.includes_zero_mode) in[0][0] = normals.back();
  fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_), in.get(), buf.get());
  std::copy(buf.get(), buf.get() + M, out);
}

FieldSample CircleSampler::sample(std::uint64_t index) const {
  FieldSample s;
  s.geometry = Geometry::Circle;
  s.seed = spec_.seed;
  s.index = index;
  s.rows = 1;
  s.cols = grid_size();
  s.values.resize(s.cols);
  synthesize(index, s.values.data());
  s.variance.assign(s.cols, variance_);
  s.cell_weight.assign(s.cols, 1.0 / s.cols);
  for (int k = 0; k < s.cols; ++k) s.col_angle.push_back(theta(k));
  return s;
}

// ------------------------------------------------------------------ sphere

struct SphereSampler::Impl {
  SphereFieldSpec spec;
  int L = 0, nlat = 0, nlon = 0, half = 0;
  std::vector<double> north_x;  // cos(theta) of northern rings, north to south
  std::vector<double> north_w;  // Gauss-Legendre weights of those rings
  double variance = 0;
  // per m: scaled normalised Legendre tables on the northern rings, split by parity of l + m
  std::vector<Eigen::MatrixXd> even, odd;
  std::vector<std::vector<int>> even_l, odd_l;
  fftw_plan plan = nullptr;

  static std::size_t coeff_offset(int l, int m) { return static_cast<std::size_t>(l * l - 1 + (m + l)); }
};

SphereSampler::SphereSampler(SphereFieldSpec spec) : impl_(std::make_unique<Impl>()) {
  spec.validate();
  Impl& d = *impl_;
  d.spec = spec;
  d.L = spec.lmax;
  d.nlat = spec.lat_count();
  d.nlon = spec.lon_count();
  d.half = d.nlat / 2;
  d.variance = sphere_truncated_variance(d.L);

  const QuadratureRule& gl = gauss_legendre(d.nlat);
  std::vector<std::pair<double, double>> nodes;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) nodes.emplace_back(gl.nodes[i], gl.weights[i]);
  std::sort(nodes.begin(), nodes.end(), [](auto a, auto b) { return a.first > b.first; });
  for (int i = 0; i < d.half; ++i) {
    d.north_x.push_back(nodes[i].first);
    d.north_w.push_back(0.5 * (nodes[i].second + nodes[d.nlat - 1 - i].second));
  }

  const int L = d.L;
  d.even.resize(L + 1);
  d.odd.resize(L + 1);
  d.even_l.resize(L + 1);
  d.odd_l.resize(L + 1);
  for (int m = 0; m <= L; ++m)
    for (int l = std::max(1, m); l <= L; ++l) ((l + m) % 2 == 0 ? d.even_l[m] : d.odd_l[m]).push_back(l);
  for (int m = 0; m <= L; ++m) {
    d.even[m].setZero(d.half, static_cast<Eigen::Index>(d.even_l[m].size()));
    d.odd[m].setZero(d.half, static_cast<Eigen::Index>(d.odd_l[m].size()));
  }
  // normalised associated Legendre functions by the standard three-term recurrence
  std::vector<double> col(L + 1);
  for (int i = 0; i < d.half; ++i) {
    const double x = d.north_x[i];
    const double s = std::sqrt((1 - x) * (1 + x));
    double pmm = 1.0 / std::sqrt(4 * std::numbers::pi);
    for (int m = 0; m <= L; ++m) {
      if (m > 0) pmm *= std::sqrt((2.0 * m + 1) / (2.0 * m)) * s;
      if (std::abs(pmm) < 1e-280) pmm = 0;
      col[m] = pmm;
      if (m + 1 <= L) col[m + 1] = std::sqrt(2.0 * m + 3) * x * pmm;
      for (int l = m + 2; l <= L; ++l) {
        const double a = std::sqrt((4.0 * l * l - 1) / (double(l) * l - double(m) * m));
        const double b = std::sqrt(((l - 1.0) * (l - 1.0) - double(m) * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1));
        col[l] = a * (x * col[l - 1] - b * col[l - 2]);
      }
      const double mfac = m == 0 ? 1.0 : std::sqrt(2.0);
      std::size_t ie = 0, io = 0;
      for (int l = std::max(1, m); l <= L; ++l) {
        const double v = col[l] * mfac * std::sqrt(2 * std::numbers::pi / (double(l) * (l + 1)));
        if ((l + m) % 2 == 0)
          d.even[m](i, ie++) = v;
        else
          d.odd[m](i, io++) = v;
      }
    }
  }

  const int hc = d.nlon / 2 + 1;
  const int howmany = kBatch * d.nlat;
  auto in = fftw_array<fftw_complex>(std::size_t(howmany) * hc);
  auto out = fftw_array<double>(std::size_t(howmany) * d.nlon);
  int n = d.nlon;
  std::lock_guard lock(planner_mutex());
  d.plan = fftw_plan_many_dft_c2r(1, &n, howmany, in.get(), nullptr, 1, hc, out.get(), nullptr, 1, d.nlon,
                                  FFTW_ESTIMATE);
}

SphereSampler::~SphereSampler() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(impl_->plan);
}

const SphereFieldSpec& SphereSampler::spec() const { return impl_->spec; }
int SphereSampler::rows() const { return impl_->nlat; }
int SphereSampler::cols() const { return impl_->nlon; }
double SphereSampler::variance() const { return impl_->variance; }

double SphereSampler::cos_theta(int row) const {
  const Impl& d = *impl_;
  return row < d.half ? d.north_x[row] : -d.north_x[d.nlat - 1 - row];
}

double SphereSampler::phi(int col) const { return 2 * std::numbers::pi * (col + 0.5) / impl_->nlon; }

double SphereSampler::cell_area(int row) const {
  const Impl& d = *impl_;
  const int r = row < d.half ? row : d.nlat - 1 - row;
  return d.north_w[r] * 2 * std::numbers::pi / d.nlon;
}

Vec3 SphereSampler::node(int row, int col) const { return from_angles(cos_theta(row), phi(col)); }

void SphereSampler::synthesize_batch(std::uint64_t first, double* out) const {
  const Impl& d = *impl_;
  const int L = d.L, B = kBatch, hc = d.nlon / 2 + 1, half = d.half;
  // coefficient matrices per m and parity; columns 2b / 2b+1 hold the cos / sin
  // coefficients of sample b
  std::vector<Eigen::MatrixXd> ce(L + 1), co(L + 1);
  for (int m = 0; m <= L; ++m) {
    ce[m].setZero(static_cast<Eigen::Index>(d.even_l[m].size()), 2 * B);
    co[m].setZero(static_cast<Eigen::Index>(d.odd_l[m].size()), 2 * B);
  }
  const std::size_t ncoef = std::size_t(L + 1) * (L + 1) - 1;
  std::vector<double> a(ncoef);
  for (int b = 0; b < B; ++b) {
    auto eng = sample_stream(d.spec.seed, first + b);
    fill_normals(eng, a.data(), ncoef);
    std::size_t k = 0;
    for (int l = 1; l <= L; ++l)
      for (int m = -l; m <= l; ++m, ++k) {
        const int am = std::abs(m);
        const int row = (l - std::max(1, am)) / 2;
        auto& target = (l + am) % 2 == 0 ? ce[am] : co[am];
        target(row, 2 * b + (m < 0 ? 1 : 0)) = a[k];
      }
  }
  // ring sums for all m: north/south = even +- odd
  Eigen::MatrixXd re, ro;
  std::vector<std::complex<double>> ring(std::size_t(L + 1) * 2 * half * B);
  auto ring_at = [&](int m, int b, int row) -> std::complex<double>& {
    return ring[(std::size_t(b) * d.nlat + row) * (L + 1) + m];
  };
  for (int m = 0; m <= L; ++m) {
    re.noalias() = d.even[m] * ce[m];
    ro.noalias() = d.odd[m] * co[m];
    // X = Re sum_m (A_c - i A_s) e^{i m phi}; c2r doubles m > 0 terms, and the
    // half-cell longitude offset becomes a phase
    const double scale = m == 0 ? 1.0 : 0.5;
    const std::complex<double> phase = std::polar(scale, std::numbers::pi * m / d.nlon);
    for (int b = 0; b < B; ++b)
      for (int i = 0; i < half; ++i) {
        const double ec = re(i, 2 * b), es = re(i, 2 * b + 1);
        const double oc = ro(i, 2 * b), os = ro(i, 2 * b + 1);
        ring_at(m, b, i) = phase * std::complex<double>(ec + oc, -(es + os));
        ring_at(m, b, d.nlat - 1 - i) = phase * std::complex<double>(ec - oc, -(es - os));
      }
  }
  auto in = fftw_array<fftw_complex>(std::size_t(B) * d.nlat * hc);
  for (std::size_t r = 0; r < std::size_t(B) * d.nlat; ++r) {
    fftw_complex* dst = in.get() + r * hc;
    const std::complex<double>* src = ring.data() + r * (L + 1);
    dst[0][0] = src[0].real();
    dst[0][1] = 0.0;
    for (int m = 1; m <= L; ++m) {
      dst[m][0] = src[m].real();
      dst[m][1] = src[m].imag();
    }
    for (int m = L + 1; m < hc; ++m) dst[m][0] = dst[m][1] = 0.0;
  }
  auto buf = fftw_array<double>(std::size_t(B) * d.nlat * d.nlon);
  fftw_execute_dft_c2r(d.plan, in.get(), buf.get());
  std::copy(buf.get(), buf.get() + std::size_t(B) * d.nlat * d.nlon, out);
}

FieldSample SphereSampler::sample(std::uint64_t index) const {
  const Impl& d = *impl_;
  const std::uint64_t first = index / kBatch * kBatch;
  const std::size_t cells = std::size_t(d.nlat) * d.nlon;
  std::vector<double> batch(cells * kBatch);
  synthesize_batch(first, batch.data());
  FieldSample s;
  s.geometry = Geometry::Sphere;
  s.seed = d.spec.seed;
  s.index = index;
  s.rows = d.nlat;
  s.cols = d.nlon;
  const double* src = batch.data() + cells * (index - first);
  s.values.assign(src, src + cells);
  s.variance.assign(cells, d.variance);
  s.cell_weight.resize(cells);
  for (int i = 0; i < d.nlat; ++i) std::fill_n(s.cell_weight.begin() + std::size_t(i) * d.nlon, d.nlon, cell_area(i));
  for (int i = 0; i < d.nlat; ++i) s.row_cos_theta.push_back(cos_theta(i));
  for (int j = 0; j < d.nlon; ++j) s.col_angle.push_back(phi(j));
  return s;
}

FieldSample sample_circle_field(const CircleFieldSpec& spec, std::uint64_t index) {
  return CircleSampler(spec).sample(index);
}

FieldSample sample_sphere_field(const SphereFieldSpec& spec, std::uint64_t index) {
  return SphereSampler(spec).sample(index);
}

// ------------------------------------------------------------------- chaos

namespace {

void check_gamma(double gamma) {
  if (!(gamma >= 0) || !(gamma < 2)) {
    std::ostringstream os;
    os << "chaos: gamma must lie in [0, 2), got " << gamma;
    throw DomainError(os.str());
  }
}

double robin_for(Geometry g) { return g == Geometry::Sphere ? kSphereRobin : 0.0; }

}  // namespace

ChaosMeasure chaos_measure(const FieldSample& sample, double gamma) {
  check_gamma(gamma);
  ChaosMeasure cm;
  cm.gamma = gamma;
  cm.robin_constant = robin_for(sample.geometry);
  cm.renormalization = sample.geometry == Geometry::Sphere
                           ? "wick(truncated variance) * exp(gamma^2/2 * (ln2 - 1/2))"
                           : "wick(truncated variance)";
  const double g2 = 0.5 * gamma * gamma;
  cm.cell_mass.resize(sample.values.size());
  double total = 0;
  for (std::size_t i = 0; i < sample.values.size(); ++i) {
    const double m = gamma == 0 ? sample.cell_weight[i]
                                : std::exp(gamma * sample.values[i] - g2 * sample.variance[i] + g2 * cm.robin_constant) *
                                      sample.cell_weight[i];
    cm.cell_mass[i] = m;
    total += m;
  }
  cm.total_mass = total;
  return cm;
}

MCEstimate summarize(const std::vector<double>& values, std::uint64_t seed) {
  MCEstimate e;
  e.seed = seed;
  e.n_samples = static_cast<std::int64_t>(values.size());
  if (values.empty()) return e;
  double sum = 0, sum2 = 0;
  for (double v : values) {
    sum += v;
    sum2 += v * v;
  }
  const double n = double(values.size());
  e.mean = sum / n;
  double ss = 0;
  for (double v : values) ss += (v - e.mean) * (v - e.mean);
  e.std_error = values.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
  e.effective_sample_size = sum2 > 0 ? sum * sum / sum2 : n;
  return e;
}

void parallel_batches(std::int64_t n_batches, int threads, const std::function<void(std::int64_t)>& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || n_batches <= 1) {
    for (std::int64_t b = 0; b < n_batches; ++b) fn(b);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      try {
        for (std::int64_t b; (b = next.fetch_add(1)) < n_batches;) fn(b);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n_batches;
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace {

void check_moment(double gamma, double q) {
  check_gamma(gamma);
  if (q > 0 && q * gamma * gamma >= 2) {
    std::ostringstream os;
    os << "chaos_moment: E[M^q] is infinite for q >= 2/gamma^2 = " << 2 / (gamma * gamma) << " (got q = " << q
       << ")";
    throw DomainError(os.str());
  }
}

}  // namespace

MCEstimate chaos_moment(const CircleFieldSpec& spec, double gamma, double q, std::int64_t n_samples, int threads) {
  check_moment(gamma, q);
  if (q == 0) {
    MCEstimate e;
    e.mean = 1;
    e.n_samples = n_samples;
    e.seed = spec.seed;
    e.effective_sample_size = double(n_samples);
    return e;
  }
  CircleSampler sampler(spec);
  const int M = sampler.grid_size();
  const double g2 = 0.5 * gamma * gamma * sampler.variance();
  std::vector<double> values(n_samples);
  constexpr std::int64_t chunk = 256;
  parallel_batches((n_samples + chunk - 1) / chunk, threads, [&](std::int64_t b) {
    std::vector<double> field(M);
    for (std::int64_t i = b * chunk; i < std::min(n_samples, (b + 1) * chunk); ++i) {
      sampler.synthesize(std::uint64_t(i), field.data());
      double total = 0;
      for (double x : field) total += std::exp(gamma * x - g2);
      values[i] = std::pow(total / M, q);
    }
  });
  return summarize(values, spec.seed);
}

MCEstimate chaos_moment(const SphereFieldSpec& spec, double gamma, double q, std::int64_t n_samples, int threads) {
  check_moment(gamma, q);
  if (q == 0) {
    MCEstimate e;
    e.mean = 1;
    e.n_samples = n_samples;
    e.seed = spec.seed;
    e.effective_sample_size = double(n_samples);
    return e;
  }
  SphereSampler sampler(spec);
  const int R = sampler.rows(), C = sampler.cols();
  const std::size_t cells = std::size_t(R) * C;
  const double g2 = 0.5 * gamma * gamma;
  const double norm = std::exp(-g2 * sampler.variance() + g2 * kSphereRobin);
  std::vector<double> values(n_samples);
  const std::int64_t B = SphereSampler::kBatch;
  parallel_batches((n_samples + B - 1) / B, threads, [&](std::int64_t b) {
    std::vector<double> field(cells * B);
    sampler.synthesize_batch(std::uint64_t(b * B), field.data());
    for (std::int64_t k = 0; k < B && b * B + k < n_samples; ++k) {
      const double* f = field.data() + cells * k;
      double total = 0;
      for (int i = 0; i < R; ++i) {
        double ring = 0;
        for (int j = 0; j < C; ++j) ring += std::exp(gamma * f[std::size_t(i) * C + j]);
        total += ring * sampler.cell_area(i);
      }
      values[b * B + k] = std::pow(total * norm, q);
    }
  });
  return summarize(values, spec.seed);
}

}  // namespace lcft
