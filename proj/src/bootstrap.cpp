#include "lcft/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "lcft/dozz.hpp"
#include "lcft/errors.hpp"
#include "lcft/virasoro.hpp"

namespace lcft {

namespace {

void gauss_rule(int order, std::vector<double>& x, std::vector<double>& w) {
  // symmetric rule on [-1, 1] from Boost's tabulated half-rules
  auto expand = [&](const auto& abscissa, const auto& weight) {
    x.clear();
    w.clear();
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      if (abscissa[i] == 0) {
        x.push_back(0);
        w.push_back(weight[i]);
      } else {
        x.push_back(-abscissa[i]);
        w.push_back(weight[i]);
        x.push_back(abscissa[i]);
        w.push_back(weight[i]);
      }
    }
  };
  using namespace boost::math::quadrature;
  switch (order) {
    case 4: expand(gauss<double, 4>::abscissa(), gauss<double, 4>::weights()); break;
    case 8: expand(gauss<double, 8>::abscissa(), gauss<double, 8>::weights()); break;
    case 16: expand(gauss<double, 16>::abscissa(), gauss<double, 16>::weights()); break;
    default: throw ConfigError("spectral quadrature: panel order must be 4, 8 or 16");
  }
}

void check_admissible(const FourAlphas& a, const CFTParams& params, const char* what) {
  std::ostringstream msg;
  for (int j = 0; j < 4; ++j)
    if (!(a[j] < params.Q)) msg << " alpha_" << j + 1 << " = " << a[j] << " >= Q;";
  if (!(a[0] + a[1] > params.Q)) msg << " alpha_1 + alpha_2 <= Q;";
  if (!(a[2] + a[3] > params.Q)) msg << " alpha_3 + alpha_4 <= Q;";
  if (!msg.str().empty()) throw DomainError(std::string(what) + ": inadmissible channel:" + msg.str());
}

BlockKey block_key(double p, const FourAlphas& alphas, const CFTParams& params) {
  return {params.Q * params.Q / 4 + p * p / 4, conformal_weight(alphas[0], params),
          conformal_weight(alphas[1], params), conformal_weight(alphas[2], params),
          conformal_weight(alphas[3], params)};
}


using Series = std::vector<cplx>;

Series mul(const Series& a, const Series& b, std::size_t n) {
  Series out(n, 0.0);
  for (std::size_t i = 0; i < std::min(a.size(), n); ++i)
    for (std::size_t j = 0; j < std::min(b.size(), n - i); ++j) out[i + j] += a[i] * b[j];
  return out;
}

// a^e for a series with a[0] = 1, from the recurrence of a (a^e)' = e a' a^e
Series power(const Series& a, cplx e, std::size_t n) {
  Series out(n, 0.0);
  out[0] = 1;
  for (std::size_t k = 1; k < n; ++k) {
    cplx acc = 0;
    for (std::size_t j = 1; j <= k && j < a.size(); ++j) acc += (e * double(j) - double(k - j)) * a[j] * out[k - j];
    out[k] = acc / double(k);
  }
  return out;
}

// sum_k c_k x(q)^k for x(q) = O(q)
Series compose(const std::vector<double>& c, const Series& x, std::size_t n) {
  Series out(n, 0.0), xk(n, 0.0);
  xk[0] = 1;
  for (std::size_t k = 0; k < std::min(c.size(), n); ++k) {
    for (std::size_t i = 0; i < n; ++i) out[i] += c[k] * xk[i];
    xk = mul(xk, x, n);
  }
  return out;
}

// theta_3(q) = 1 + 2 sum q^{n^2} and the series z(q) / (16 q) = (sum q^{n(n+1)})^4 / theta_3^4
Series theta3_series(std::size_t n) {
  Series t(n, 0.0);
  for (std::size_t k = 0; k * k < n; ++k) t[k * k] += k == 0 ? 1.0 : 2.0;
  return t;
}

Series lambda_over_16q(std::size_t n) {
  Series a(n, 0.0);
  for (std::size_t k = 0; k * (k + 1) < n; ++k) a[k * (k + 1)] = 1;
  return mul(power(a, 4.0, n), power(theta3_series(n), -4.0, n), n);
}

cplx agm(cplx a, cplx b) {
  for (int i = 0; i < 64; ++i) {
    const cplx m = 0.5 * (a + b);
    cplx g = std::sqrt(a * b);
    if (std::abs(m - g) > std::abs(m + g)) g = -g;
    a = m;
    b = g;
    if (std::abs(a - b) <= 1e-16 * std::abs(a)) break;
  }
  return a;
}

cplx theta3(cplx q) {
  cplx sum = 1, term;
  for (int k = 1; k < 64; ++k) {
    term = 2.0 * std::pow(q, double(k * k));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

cplx elliptic_nome(cplx z) {
  if (!(std::abs(z) < 1) || z == 0.0) throw DomainError("elliptic_nome: need 0 < |z| < 1");
  // K(m) = pi / (2 agm(1, sqrt(1 - m)))
  const cplx k = 1.0 / agm(1.0, std::sqrt(1.0 - z));
  const cplx kp = 1.0 / agm(1.0, std::sqrt(z));
  return std::exp(-M_PI * kp / k);
}

SpectralQuadrature SpectralQuadrature::gauss_panels(double p_max, int panels, int order, int level,
                                                    BlockExpansion expansion) {
  if (!(p_max > 0) || panels < 1) throw ConfigError("spectral quadrature: need p_max > 0 and panels >= 1");
  if (level < 0) throw ConfigError("spectral quadrature: level must be >= 0");
  std::vector<double> x, w;
  gauss_rule(order, x, w);
  SpectralQuadrature q;
  q.p_max = p_max;
  q.level = level;
  q.expansion = expansion;
  const double h = p_max / panels;
  for (int k = 0; k < panels; ++k)
    for (std::size_t i = 0; i < x.size(); ++i) {
      q.nodes.push_back(h * (k + 0.5 * (x[i] + 1)));
      q.weights.push_back(0.5 * h * w[i]);
    }
  std::vector<std::size_t> order_idx(q.nodes.size());
  for (std::size_t i = 0; i < order_idx.size(); ++i) order_idx[i] = i;
  std::sort(order_idx.begin(), order_idx.end(), [&](auto a, auto b) { return q.nodes[a] < q.nodes[b]; });
  std::vector<double> n2, w2;
  for (auto i : order_idx) {
    n2.push_back(q.nodes[i]);
    w2.push_back(q.weights[i]);
  }
  q.nodes = std::move(n2);
  q.weights = std::move(w2);
  q.validate();
  return q;
}

void SpectralQuadrature::validate() const {
  if (nodes.empty() || nodes.size() != weights.size())
    throw ConfigError("spectral quadrature: need matching, non-empty nodes and weights");
  if (!(p_max > 0)) throw ConfigError("spectral quadrature: p_max must be positive");
  if (level < 0) throw ConfigError("spectral quadrature: level must be >= 0");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!(nodes[i] > 0 && nodes[i] <= p_max)) throw ConfigError("spectral quadrature: node outside (0, p_max]");
    if (!(weights[i] > 0)) throw ConfigError("spectral quadrature: weights must be positive");
  }
}

SpectralContext::SpectralContext(const CFTParams& params, std::shared_ptr<BlockCoefficientCache> disk)
    : params_(params), ev_(params.gamma), disk_(std::move(disk)) {}

cplx SpectralContext::dozz_line(double p, double a, double b) const {
  if (a > b) std::swap(a, b);
  const std::array<double, 3> key{p, a, b};
  {
    std::lock_guard lock(mutex_);
    if (auto it = dozz_memo_.find(key); it != dozz_memo_.end()) return it->second;
  }
  const DozzValue d = dozz(cplx(params_.Q, p), a, b, params_, ev_);
  if (d.is_pole || d.is_zero || !std::isfinite(d.value.real()) || !std::isfinite(d.value.imag())) {
    std::ostringstream msg;
    msg << "DOZZ(Q + " << p << " i, " << a << ", " << b << ") is not a finite non-zero value on the spectrum line";
    throw DomainError(msg.str());
  }
  std::lock_guard lock(mutex_);
  dozz_memo_.emplace(key, d.value);
  return d.value;
}

std::vector<double> SpectralContext::block_coefficients(double p, const FourAlphas& alphas, int level) const {
  const BlockKey key = block_key(p, alphas, params_);
  {
    std::lock_guard lock(mutex_);
    auto it = block_memo_.lower_bound({key, level});
    if (it != block_memo_.end() && it->first.first == key)
      return std::vector<double>(it->second.begin(), it->second.begin() + level + 1);
  }
  std::vector<double> c;
  if (disk_)
    if (auto hit = disk_->find(params_.gamma, level, key)) c = std::move(*hit);
  if (c.empty()) {
    c = lcft::block_coefficients<double>(key[0], params_.c_L, {key[1], key[2], key[3], key[4]}, level);
    if (disk_) disk_->insert(params_.gamma, key, c);
  }
  std::lock_guard lock(mutex_);
  block_memo_.emplace(std::make_pair(key, level), c);
  return c;
}

IntegrandValue spectral_integrand(double p, cplx z, const FourAlphas& alphas, const SpectralQuadrature& quad,
                                  const SpectralContext& ctx) {
  const CFTParams& params = ctx.params();
  check_admissible(alphas, params, "spectral_integrand");
  const double r = std::abs(z);
  if (!(r > 0 && r < 1)) throw DomainError("spectral_integrand: need 0 < |z| < 1");
  if (quad.level < 0) throw ConfigError("spectral_integrand: level must be >= 0");
  p = std::abs(p);

  const cplx structure = std::conj(ctx.dozz_line(p, alphas[0], alphas[1])) * ctx.dozz_line(p, alphas[2], alphas[3]);
  const auto c = ctx.block_coefficients(p, alphas, quad.level);
  const BlockKey d = block_key(p, alphas, params);
  const double log_lead = 2 * (d[0] - d[1] - d[2]) * std::log(r);

  // |F|^2 = exp(log_norm) |sum_n a_n x^n|^2
  Series a(c.begin(), c.end());
  cplx x = z;
  double log_norm = log_lead;
  if (quad.expansion == BlockExpansion::Nome) {
    const std::size_t n = c.size();
    const double h = params.Q * params.Q / 4;
    const double e_lambda = d[0] - h;
    const double e_one = h - d[2] - d[3];
    const double e_theta = 12 * h - 4 * (d[1] + d[2] + d[3] + d[4]);
    const Series lam = lambda_over_16q(n);
    Series zq(n, 0.0), one_minus(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) zq[i] = 16.0 * lam[i - 1];
    for (std::size_t i = 0; i < n; ++i) one_minus[i] = (i == 0 ? 1.0 : 0.0) - zq[i];
    a = compose(c, zq, n);
    a = mul(a, power(lam, e_lambda, n), n);
    a = mul(a, power(one_minus, -e_one, n), n);
    a = mul(a, power(theta3_series(n), -e_theta, n), n);
    x = elliptic_nome(z);
    log_norm += 2 * (e_lambda * std::log(std::abs(16.0 * x / z)) + e_one * std::log(std::abs(1.0 - z)) +
                     e_theta * std::log(std::abs(theta3(x))));
  }
  cplx series = 0;
  for (std::size_t k = a.size(); k-- > 0;) series = series * x + a[k];
  const double block_sq = std::exp(log_norm) * std::norm(series);

  IntegrandValue out;
  out.p = p;
  out.value = structure.real() * block_sq;
  out.imag = structure.imag() * block_sq;
  double last = 0;
  for (std::size_t k = a.size() >= 2 ? a.size() - 2 : 0; k < a.size(); ++k) last += std::abs(a[k] * std::pow(x, double(k)));
  out.block_tail = std::abs(series) > 0 ? last / std::abs(series) : 0;
  return out;
}

BootstrapResult four_point_bootstrap(cplx z, const FourAlphas& alphas, const SpectralQuadrature& quad,
                                     const SpectralContext& ctx, int threads, double tail_tolerance) {
  quad.validate();
  check_admissible(alphas, ctx.params(), "four_point_bootstrap");
  const double r = std::abs(z);
  if (!(r > 0 && r < 1)) throw DomainError("four_point_bootstrap: need 0 < |z| < 1");

  BootstrapResult out;
  out.z = z;
  out.alphas = alphas;
  out.samples.resize(quad.nodes.size());
  parallel_batches(std::int64_t(quad.nodes.size()), threads, [&](std::int64_t i) {
    out.samples[i] = spectral_integrand(quad.nodes[i], z, alphas, quad, ctx);
  });

  double sum = 0;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    const auto& s = out.samples[i];
    sum += quad.weights[i] * s.value;
    if (s.value != 0) out.max_imag_ratio = std::max(out.max_imag_ratio, std::abs(s.imag / s.value));
  }
  // the integrand is even in p: (1/2 pi) int_R = (1/pi) int_0^inf
  out.value = sum / M_PI;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i)
    if (quad.weights[i] * std::abs(out.samples[i].value) > 1e-8 * std::abs(sum))
      out.max_block_tail = std::max(out.max_block_tail, out.samples[i].block_tail);

  // beyond p_max the block factor |z|^{p^2/2} dominates, so the tail is about
  // |f(p_max)| / (p_max |ln |z||)
  const double log_r = -std::log(r);
  const IntegrandValue edge = spectral_integrand(quad.p_max, z, alphas, quad, ctx);
  const double tail = std::abs(edge.value) / (quad.p_max * log_r) / M_PI;
  out.tail_estimate = tail == 0 ? 0 : tail / std::abs(out.value);
  if (out.tail_estimate > tail_tolerance) {
    const double p_new = std::sqrt(quad.p_max * quad.p_max + 2 * std::log(out.tail_estimate / tail_tolerance) / log_r);
    std::ostringstream msg;
    msg << "four_point_bootstrap: tail beyond p_max = " << quad.p_max << " is " << out.tail_estimate
        << " of the value (tolerance " << tail_tolerance << "); p_max >= " << std::ceil(p_new * 10) / 10
        << " should suffice";
    throw AccuracyError(msg.str());
  }
  return out;
}

double round_metric_four_point(const BootstrapResult& r, const CFTParams& params) {
  return r.value * std::pow(round_metric(r.z), -conformal_weight(r.alphas[1], params));
}

CrossingReport crossing_check(cplx z, const FourAlphas& alphas, const SpectralQuadrature& quad,
                              const SpectralContext& ctx, int threads) {
  const FourAlphas crossed{alphas[2], alphas[1], alphas[0], alphas[3]};
  check_admissible(alphas, ctx.params(), "crossing_check (direct channel)");
  check_admissible(crossed, ctx.params(), "crossing_check (crossed channel)");
  CrossingReport rep;
  rep.direct = four_point_bootstrap(z, alphas, quad, ctx, threads);
  rep.crossed = four_point_bootstrap(1.0 - z, crossed, quad, ctx, threads);
  rep.discrepancy = std::abs(rep.direct.value - rep.crossed.value) / std::abs(rep.direct.value);
  return rep;
}

RatioEstimate mc_four_point_ratio(cplx z, cplx z_prime, const FourAlphas& alphas, const CFTParams& params,
                                  const SphereFieldSpec& field, std::int64_t n_samples, std::uint64_t seed,
                                  int threads, const Discretization& disc) {
  const std::vector<double> weights(alphas.begin(), alphas.end());
  auto make = [&](cplx w) {
    return InsertionSet({SpherePoint::finite(0), SpherePoint::finite(w), SpherePoint::finite(1), SpherePoint::infinity()},
                        weights, params);
  };
  const InsertionSet a = make(z), b = make(z_prime);
  const double s = a.weight_sum() - 2 * params.Q;
  if (!(s > 0)) throw DomainError("mc_four_point_ratio: Seiberg bound sum(alpha) > 2Q fails");
  const CorrelatorJob ja{a, params, field, n_samples, seed, threads, log_det_laplacian_unit_sphere(), disc};
  const CorrelatorJob jb{b, params, field, n_samples, seed, threads, log_det_laplacian_unit_sphere(), disc};
  const double scale = std::exp(log_correlator_geometry(ja) - log_correlator_geometry(jb));
  const double q = -s / params.gamma;
  const auto v = z_moment_samples(field, seed, {a, b}, params, {q, q}, n_samples, threads, disc);
  return paired_ratio(v[0], v[1], scale);
}

}  // namespace lcft
