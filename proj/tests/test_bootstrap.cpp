#include <boost/math/special_functions/ellint_1.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest_main.hpp"
#include "json.hpp"
#include "lcft/bootstrap.hpp"
#include "lcft/dozz.hpp"
#include "lcft/errors.hpp"
#include "lcft/virasoro.hpp"

using lcft::BlockExpansion;
using lcft::cplx;
using lcft::FourAlphas;
using lcft::SpectralQuadrature;

namespace {

const lcft::CFTParams& unit_params() {
  static const lcft::CFTParams p = lcft::derive_params(1.0, 1.0);
  return p;
}

// shared so that DOZZ values computed by one test case serve the others
const lcft::SpectralContext& unit_context() {
  static const lcft::SpectralContext ctx(unit_params());
  return ctx;
}

// theta_2^4 / theta_3^4 by direct sums
cplx lambda_from_nome(cplx q) {
  cplx t2 = 0, t3 = 1;
  for (int n = 0; n < 30; ++n) t2 += 2.0 * std::pow(q, (n + 0.5) * (n + 0.5));
  for (int n = 1; n < 30; ++n) t3 += 2.0 * std::pow(q, double(n * n));
  return std::pow(t2 / t3, 4.0);
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("lcft_test_" + name);
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("elliptic nome: real axis against Boost K, complex points invert the modular lambda") {
  for (double z : {1e-4, 0.1, 0.3, 0.5, 0.7, 0.95}) {
    const double k = boost::math::ellint_1(std::sqrt(z)), kp = boost::math::ellint_1(std::sqrt(1 - z));
    const cplx q = lcft::elliptic_nome(z);
    CHECK(q.real() == doctest::Approx(std::exp(-M_PI * kp / k)).epsilon(1e-13));
    CHECK(std::abs(q.imag()) < 1e-15);
  }
  CHECK(lcft::elliptic_nome(1e-6).real() == doctest::Approx(1e-6 / 16 + 8 * std::pow(1e-6 / 16, 2)).epsilon(1e-12));
  for (cplx z : {cplx(0.3, 0.2), cplx(-0.5, 0.1), cplx(0.1, -0.8), cplx(0.6, 0.6)}) {
    const cplx q = lcft::elliptic_nome(z);
    CHECK(std::abs(q) < 1);
    CHECK(std::abs(lambda_from_nome(q) - z) < 1e-12);
  }
  CHECK_THROWS_AS(lcft::elliptic_nome(1.0), lcft::DomainError);
  CHECK_THROWS_AS(lcft::elliptic_nome(0.0), lcft::DomainError);
}

TEST_CASE("spectral quadrature: Gauss panels integrate polynomials, validation") {
  const auto q = SpectralQuadrature::gauss_panels(6, 3, 8, 4);
  CHECK(q.nodes.size() == 24);
  double s0 = 0, s5 = 0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    s0 += q.weights[i];
    s5 += q.weights[i] * std::pow(q.nodes[i], 5);
    if (i > 0) CHECK(q.nodes[i] > q.nodes[i - 1]);
  }
  CHECK(s0 == doctest::Approx(6).epsilon(1e-14));
  CHECK(s5 == doctest::Approx(std::pow(6.0, 6) / 6).epsilon(1e-13));
  CHECK_THROWS_AS(SpectralQuadrature::gauss_panels(6, 3, 5, 4), lcft::ConfigError);
  CHECK_THROWS_AS(SpectralQuadrature::gauss_panels(-1, 3, 8, 4), lcft::ConfigError);
  auto bad = q;
  bad.weights[3] = -1;
  CHECK_THROWS_AS(bad.validate(), lcft::ConfigError);
  bad = q;
  bad.nodes[0] = 0;
  CHECK_THROWS_AS(bad.validate(), lcft::ConfigError);
}

TEST_CASE("spectral integrand: DOZZ pairing, reality, decay, admissibility") {
  const auto& params = unit_params();
  const auto& ctx = unit_context();
  auto quad = SpectralQuadrature::gauss_panels(10, 1, 8, 8, BlockExpansion::Z);

  // diagonal channel from an independent DOZZ call at Q - ip
  const FourAlphas diag{1.6, 1.4, 1.6, 1.4};
  const double p = 1.3;
  const cplx cm = lcft::dozz(cplx(params.Q, -p), 1.6, 1.4, params, ctx.upsilon()).value;
  const cplx z(0.3, 0.1);
  const auto be = lcft::block(p, {lcft::conformal_weight(1.6, params), lcft::conformal_weight(1.4, params),
                                  lcft::conformal_weight(1.6, params), lcft::conformal_weight(1.4, params)},
                              z, 8, params);
  const double expect = std::norm(cm) * std::norm(be.value);
  const auto v = lcft::spectral_integrand(p, z, diag, quad, ctx);
  CHECK(v.value == doctest::Approx(expect).epsilon(1e-10));
  CHECK(lcft::spectral_integrand(-p, z, diag, quad, ctx).value == v.value);

  // the product of the two channel constants is real for real weights
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1.3, 2.4);
  for (int t = 0; t < 4; ++t) {
    const FourAlphas a{u(rng), u(rng), u(rng), u(rng)};
    const auto w = lcft::spectral_integrand(0.5 + 2 * t, 0.35, a, quad, ctx);
    CHECK(std::abs(w.imag) <= 1e-12 * std::abs(w.value));
  }

  const FourAlphas acc{1.9, 1.8, 1.7, 1.9};
  const double f2 = std::abs(lcft::spectral_integrand(2, 0.3, acc, quad, ctx).value);
  const double f20 = std::abs(lcft::spectral_integrand(20, 0.3, acc, quad, ctx).value);
  CHECK(f20 < 1e-3 * f2);

  CHECK_THROWS_AS(lcft::spectral_integrand(1, 0.3, {1.0, 1.0, 1.9, 1.9}, quad, ctx), lcft::DomainError);
  CHECK_THROWS_AS(lcft::spectral_integrand(1, 0.3, {2.6, 1.0, 1.9, 1.9}, quad, ctx), lcft::DomainError);
  CHECK_THROWS_AS(lcft::spectral_integrand(1, 1.2, acc, quad, ctx), lcft::DomainError);
}

TEST_CASE("block expansions: nome and z series agree where both converge") {
  const auto& ctx = unit_context();
  const FourAlphas a{1.9, 1.8, 1.7, 1.9};
  const auto qz = SpectralQuadrature::gauss_panels(10, 1, 8, 12, BlockExpansion::Z);
  const auto qn = SpectralQuadrature::gauss_panels(10, 1, 8, 12, BlockExpansion::Nome);
  for (double p : {0.4, 2.0, 5.0}) {
    const double vz = lcft::spectral_integrand(p, cplx(0.05, 0.02), a, qz, ctx).value;
    const double vn = lcft::spectral_integrand(p, cplx(0.05, 0.02), a, qn, ctx).value;
    CHECK(vn == doctest::Approx(vz).epsilon(1e-12));
  }
  // at level 0 the nome form keeps the prefactor, which is already a fair approximation at z = 0.3
  const auto q0 = SpectralQuadrature::gauss_panels(10, 1, 8, 0, BlockExpansion::Nome);
  const auto q12 = SpectralQuadrature::gauss_panels(10, 1, 8, 12, BlockExpansion::Nome);
  const double v0 = lcft::spectral_integrand(1.0, 0.3, a, q0, ctx).value;
  const double v12 = lcft::spectral_integrand(1.0, 0.3, a, q12, ctx).value;
  CHECK(std::abs(v0 / v12 - 1) < 1e-3);
}

TEST_CASE("four-point bootstrap: positivity, quadrature doubling, metric factor, tail control") {
  const auto& params = unit_params();
  const auto& ctx = unit_context();
  const FourAlphas diag{1.9, 1.8, 1.9, 1.8};
  const auto q = SpectralQuadrature::gauss_panels(10, 5, 8, 8);
  const auto r = lcft::four_point_bootstrap(0.4, diag, q, ctx);
  CHECK(r.value > 0);
  for (const auto& s : r.samples) CHECK(s.value >= 0);
  CHECK(r.tail_estimate < 1e-8);
  CHECK(r.max_block_tail < 1e-6);

  const auto q2 = SpectralQuadrature::gauss_panels(10, 10, 8, 8);
  const auto r2 = lcft::four_point_bootstrap(0.4, diag, q2, ctx);
  CHECK(std::abs(r2.value / r.value - 1) < 1e-4);

  const double g = 4 / std::pow(1 + 0.16, 2);
  CHECK(lcft::round_metric_four_point(r, params) ==
        doctest::Approx(r.value * std::pow(g, -lcft::conformal_weight(1.8, params))).epsilon(1e-14));

  const auto short_grid = SpectralQuadrature::gauss_panels(2, 2, 8, 8);
  try {
    lcft::four_point_bootstrap(0.4, diag, short_grid, ctx);
    FAIL("expected AccuracyError");
  } catch (const lcft::AccuracyError& e) {
    CHECK(std::string(e.what()).find("p_max >=") != std::string::npos);
  }
}

TEST_CASE("crossing: exact for coincident channels, converging in the level otherwise") {
  const auto& ctx = unit_context();
  const auto q = SpectralQuadrature::gauss_panels(12, 6, 8, 8);
  const FourAlphas sym{1.7, 1.8, 1.7, 1.9};
  const auto same = lcft::crossing_check(0.5, sym, q, ctx);
  CHECK(same.discrepancy == 0.0);

  const FourAlphas a{1.9, 1.8, 1.7, 1.9};
  const auto nome = lcft::crossing_check(0.4, a, q, ctx);
  CHECK(nome.discrepancy < 1e-5);

  double last = 1;
  for (int level : {4, 6, 8}) {
    const auto qz = SpectralQuadrature::gauss_panels(12, 6, 8, level, BlockExpansion::Z);
    const auto rep = lcft::crossing_check(0.4, a, qz, ctx);
    CHECK(rep.discrepancy < last);
    last = rep.discrepancy;
  }
  CHECK(last < 0.05);

  CHECK_THROWS_AS(lcft::crossing_check(0.4, {1.9, 0.5, 1.7, 1.9}, q, ctx), lcft::DomainError);
  // direct channel fine, crossed pair (alpha_1, alpha_4) too light
  CHECK_THROWS_AS(lcft::crossing_check(0.4, {1.0, 1.9, 1.9, 1.0}, q, ctx), lcft::DomainError);
}

TEST_CASE("block coefficient cache: round trip, prefixes, rejection of foreign files") {
  const auto path = scratch("blocks.json");
  const lcft::BlockKey key{3.1, 1.2, 1.1, 1.0, 1.3};
  {
    lcft::BlockCoefficientCache cache(path.string());
    CHECK(cache.size() == 0);
    CHECK_FALSE(cache.find(1.0, 2, key).has_value());
    cache.insert(1.0, key, {1, 0.5, 0.25, 0.125});
    cache.insert(1.0, key, {1, 0.5});  // shorter entry does not replace
    cache.insert(0.8, key, {2, 3});
    cache.save();
  }
  lcft::BlockCoefficientCache back(path.string());
  CHECK(back.size() == 2);
  const auto hit = back.find(1.0, 2, key);
  REQUIRE(hit.has_value());
  CHECK(*hit == std::vector<double>{1, 0.5, 0.25});
  CHECK_FALSE(back.find(1.0, 4, key).has_value());
  CHECK(back.find(0.8, 1, key)->at(1) == 3);
  CHECK(lcft::BlockCoefficientCache::hash(1.0, key) != lcft::BlockCoefficientCache::hash(0.8, key));

  nlohmann::json doc;
  std::ifstream(path) >> doc;
  doc["version"] = 99;
  std::ofstream(path) << doc.dump();
  CHECK_THROWS_AS(lcft::BlockCoefficientCache(path.string()), lcft::ConfigError);
  doc["version"] = lcft::BlockCoefficientCache::kVersion;
  doc["entries"][0]["hash"] = "0000000000000000";
  std::ofstream(path) << doc.dump();
  CHECK_THROWS_AS(lcft::BlockCoefficientCache(path.string()), lcft::ConfigError);
  std::ofstream(path) << "{not json";
  CHECK_THROWS_AS(lcft::BlockCoefficientCache(path.string()), lcft::ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("spectral context: memoised and disk-cached coefficients equal direct ones") {
  const auto& params = unit_params();
  const auto path = scratch("ctx_blocks.json");
  const FourAlphas a{1.9, 1.8, 1.7, 1.9};
  const std::array<double, 4> d{lcft::conformal_weight(1.9, params), lcft::conformal_weight(1.8, params),
                                lcft::conformal_weight(1.7, params), lcft::conformal_weight(1.9, params)};
  const double p = 2.5, delta = params.Q * params.Q / 4 + p * p / 4;
  const auto direct = lcft::block_coefficients<double>(delta, params.c_L, d, 6);
  {
    auto disk = std::make_shared<lcft::BlockCoefficientCache>(path.string());
    lcft::SpectralContext ctx(params, disk);
    CHECK(ctx.block_coefficients(p, a, 6) == direct);
    CHECK(ctx.block_coefficients(p, a, 3) == std::vector<double>(direct.begin(), direct.begin() + 4));
    CHECK(disk->size() == 1);
    disk->save();
  }
  auto disk = std::make_shared<lcft::BlockCoefficientCache>(path.string());
  lcft::SpectralContext warm(params, disk);
  CHECK(warm.block_coefficients(p, a, 5) == std::vector<double>(direct.begin(), direct.begin() + 6));
  std::filesystem::remove(path);
}

TEST_CASE("Monte Carlo position ratio agrees with the bootstrap ratio") {
  const auto& params = unit_params();
  const auto& ctx = unit_context();
  const FourAlphas a{1.9, 1.8, 1.7, 1.9};
  const auto q = SpectralQuadrature::gauss_panels(12, 6, 8, 8);
  const double rb = lcft::round_metric_four_point(lcft::four_point_bootstrap(0.35, a, q, ctx), params) /
                    lcft::round_metric_four_point(lcft::four_point_bootstrap(0.45, a, q, ctx), params);
  lcft::SphereFieldSpec field;
  field.lmax = 64;
  const auto mc = lcft::mc_four_point_ratio(0.35, 0.45, a, params, field, 3000, 11);
  CHECK(std::abs(mc.ratio - rb) < 3 * mc.std_error);
  CHECK(mc.std_error < 0.05);
  CHECK_THROWS_AS(lcft::mc_four_point_ratio(0.35, 0.45, {1.0, 1.0, 1.0, 1.0}, params, field, 16, 1),
                  lcft::DomainError);
}
