#include "harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lcft/bootstrap.hpp"
#include "lcft/correlators.hpp"
#include "lcft/dozz.hpp"
#include "lcft/errors.hpp"
#include "lcft/gmc.hpp"
#include "lcft/virasoro.hpp"

namespace lcft::harness {

namespace {

enum class Type { Number, Integer, String, Array, Value };

struct Field {
  Type type;
  std::optional<json> fallback;  // absent means required
};

using Schema = std::map<std::string, Field>;

Field req(Type t) { return {t, std::nullopt}; }
Field opt(Type t, json v) { return {t, std::move(v)}; }

Schema quadrature_fields() {
  return {{"p_max", opt(Type::Number, 12.0)},   {"panels", opt(Type::Integer, 12)},
          {"order", opt(Type::Integer, 8)},     {"level", opt(Type::Integer, 10)},
          {"expansion", opt(Type::String, "nome")}, {"block_cache", opt(Type::String, "")}};
}

Schema merge(Schema a, const Schema& b) {
  a.insert(b.begin(), b.end());
  return a;
}

struct KindSpec {
  Schema parameters;
  std::map<std::string, double> tolerances;
};

const std::map<std::string, KindSpec>& kinds() {
  static const std::map<std::string, KindSpec> k = [] {
    const Schema coupling{{"gamma", req(Type::Number)}, {"mu", opt(Type::Number, 1.0)}};
    const Schema mc{{"lmax", opt(Type::Integer, 64)}, {"samples", opt(Type::Integer, 10000)},
                    {"rule", opt(Type::String, "zoom")}};
    std::map<std::string, KindSpec> m;
    m["dozz-table"] = {merge(coupling, {{"rows", req(Type::Array)}, {"golden", opt(Type::String, "")}}), {}};
    m["gmc-moments"] = {merge(coupling, {{"geometry", opt(Type::String, "circle")},
                                         {"resolution", opt(Type::Integer, 64)},
                                         {"q", opt(Type::Array, json::array({1.0, 2.0}))},
                                         {"samples", opt(Type::Integer, 10000)}}),
                        {{"sigmas", 3.0}}};
    m["block"] = {merge(coupling, {{"p", req(Type::Number)},
                                   {"alphas", req(Type::Array)},
                                   {"z", req(Type::Value)},
                                   {"level", opt(Type::Integer, 10)}}),
                  {}};
    m["correlator"] = {merge(merge(coupling, mc), {{"points", req(Type::Array)}, {"alphas", req(Type::Array)}}),
                       {{"relative", 0.05}, {"sigmas", 3.0}}};
    m["bootstrap4pt"] = {merge(merge(coupling, quadrature_fields()), {{"alphas", req(Type::Array)}, {"z", req(Type::Value)}}),
                         {{"tail", 1e-8}}};
    m["crossing"] = {merge(merge(coupling, quadrature_fields()), {{"alphas", req(Type::Array)},
                                                                  {"z", req(Type::Value)},
                                                                  {"levels", opt(Type::Array, json::array())}}),
                     {{"discrepancy", 0.02}, {"floor", 1e-9}}};
    m["mc-vs-dozz"] = {merge(merge(coupling, mc), {{"points", req(Type::Array)},
                                                   {"alphas_a", req(Type::Array)},
                                                   {"alphas_b", req(Type::Array)}}),
                       {{"relative", 0.05}, {"sigmas", 3.0}}};
    m["mc-vs-bootstrap"] = {merge(merge(merge(coupling, mc), quadrature_fields()),
                                  {{"alphas", req(Type::Array)}, {"z", req(Type::Value)}, {"z_prime", req(Type::Value)}}),
                            {{"relative", 0.10}}};
    return m;
  }();
  return k;
}

bool has_type(const json& v, Type t) {
  switch (t) {
    case Type::Number: return v.is_number();
    case Type::Integer: return v.is_number_integer();
    case Type::String: return v.is_string();
    case Type::Array: return v.is_array();
    case Type::Value: return !v.is_null();
  }
  return false;
}

const char* type_name(Type t) {
  switch (t) {
    case Type::Number: return "a number";
    case Type::Integer: return "an integer";
    case Type::String: return "a string";
    case Type::Array: return "an array";
    case Type::Value: return "a value";
  }
  return "";
}

template <class T>
T field(const json& params, const std::string& key) {
  try {
    return params.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("parameters." + key + ": " + e.what());
  }
}

cplx complex_value(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError(where + ": expected a number or [re, im]");
}

std::vector<double> real_list(const json& params, const std::string& key, std::size_t n) {
  auto v = field<std::vector<double>>(params, key);
  if (n && v.size() != n) throw ConfigError("parameters." + key + ": expected " + std::to_string(n) + " values");
  return v;
}

FourAlphas four_alphas(const json& params, const std::string& key) {
  const auto v = real_list(params, key, 4);
  return {v[0], v[1], v[2], v[3]};
}

SpherePoint point_value(const json& v, const std::string& where) {
  if (v.is_string() && v.get<std::string>() == "inf") return SpherePoint::infinity();
  return SpherePoint::finite(complex_value(v, where));
}

CFTParams coupling(const json& params) { return derive_params(field<double>(params, "gamma"), field<double>(params, "mu")); }

Discretization discretization(const json& params) {
  const auto rule = field<std::string>(params, "rule");
  Discretization d;
  if (rule == "zoom") d.rule = KernelRule::Zoom;
  else if (rule == "node") d.rule = KernelRule::Node;
  else throw ConfigError("parameters.rule: expected \"zoom\" or \"node\"");
  return d;
}

SphereFieldSpec sphere_field(const json& params, std::uint64_t seed) {
  SphereFieldSpec f;
  f.lmax = field<int>(params, "lmax");
  f.seed = seed;
  f.validate();
  return f;
}

std::int64_t sample_count(const json& params) {
  const auto n = field<std::int64_t>(params, "samples");
  if (n < 2) throw ConfigError("parameters.samples: need at least 2");
  return n;
}

SpectralQuadrature quadrature(const json& params) {
  const auto e = field<std::string>(params, "expansion");
  BlockExpansion ex;
  if (e == "nome") ex = BlockExpansion::Nome;
  else if (e == "z") ex = BlockExpansion::Z;
  else throw ConfigError("parameters.expansion: expected \"nome\" or \"z\"");
  return SpectralQuadrature::gauss_panels(field<double>(params, "p_max"), field<int>(params, "panels"),
                                          field<int>(params, "order"), field<int>(params, "level"), ex);
}

std::shared_ptr<BlockCoefficientCache> block_cache(const json& params, const std::string& base) {
  const auto path = field<std::string>(params, "block_cache");
  if (path.empty()) return nullptr;
  const std::filesystem::path p(path);
  return std::make_shared<BlockCoefficientCache>((p.is_absolute() ? p : std::filesystem::path(base) / p).string());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

json scalar(double v) { return {{"value", v}}; }
json estimate(double v, double se) { return {{"value", v}, {"std_error", se}}; }

struct Context {
  const ExperimentConfig& cfg;
  RunRecord& rec;
  double tol(const std::string& key) const { return cfg.tolerances.at(key).get<double>() * cfg.tolerance_scale; }
  void check(const std::string& name, double value, double reference, double tolerance, bool pass) {
    rec.checks.push_back({name, value, reference, tolerance, pass});
  }
  void write(const std::string& name, const std::string& text) {
    if (cfg.output.empty()) return;
    std::filesystem::create_directories(cfg.output);
    const auto path = std::filesystem::path(cfg.output) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    rec.files.push_back(path.string());
  }
};

std::string dozz_table_csv(const json& params) {
  const CFTParams p = coupling(params);
  const UpsilonEvaluator ev(p.gamma);
  std::ostringstream csv;
  csv << "a1_re,a1_im,a2_re,a2_im,a3_re,a3_im,value_re,value_im,pole\n";
  const json& rows = params.at("rows");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string where = "parameters.rows[" + std::to_string(i) + "]";
    if (!rows[i].is_array() || rows[i].size() != 3) throw ConfigError(where + ": expected three weights");
    std::array<cplx, 3> a;
    for (int j = 0; j < 3; ++j) a[j] = complex_value(rows[i][j], where);
    const DozzValue d = dozz(a[0], a[1], a[2], p, ev);
    for (const cplx& x : a) csv << fmt(x.real()) << ',' << fmt(x.imag()) << ',';
    if (d.is_pole) csv << "inf,inf,1\n";
    else csv << fmt(d.value.real()) << ',' << fmt(d.value.imag()) << ",0\n";
  }
  return csv.str();
}

void run_dozz_table(Context& c) {
  const json& params = c.cfg.parameters;
  const std::string csv = dozz_table_csv(params);
  c.write("dozz.csv", csv);
  c.rec.outputs["rows"] = scalar(double(params.at("rows").size()));
  c.rec.outputs["table"] = csv;
  const auto golden = field<std::string>(params, "golden");
  if (!golden.empty()) {
    std::filesystem::path g(golden);
    if (g.is_relative()) g = std::filesystem::path(c.cfg.base_dir()) / g;
    std::ifstream in(g, std::ios::binary);
    if (!in) throw ConfigError("parameters.golden: cannot read " + g.string());
    std::ostringstream ref;
    ref << in.rdbuf();
    c.check("golden_identical", csv == ref.str() ? 1 : 0, 1, 0, csv == ref.str());
  }
}

double fyodorov_bouchaud(double gamma, double q) {
  const double g2 = gamma * gamma;
  return std::exp(std::lgamma(1 - q * g2 / 2) - q * std::lgamma(1 - g2 / 2));
}

void run_gmc_moments(Context& c) {
  const json& params = c.cfg.parameters;
  const double gamma = field<double>(params, "gamma");
  const auto geometry = field<std::string>(params, "geometry");
  const int resolution = field<int>(params, "resolution");
  const auto qs = real_list(params, "q", 0);
  const auto n = sample_count(params);
  std::ostringstream csv;
  csv << "q,estimate,std_error,samples,reference\n";
  for (double q : qs) {
    MCEstimate e;
    double reference = NAN;
    if (geometry == "circle") {
      CircleFieldSpec spec;
      spec.modes = resolution;
      spec.seed = c.cfg.seed;
      e = chaos_moment(spec, gamma, q, n, c.cfg.threads);
      if (q * gamma * gamma < 2) reference = fyodorov_bouchaud(gamma, q);
    } else if (geometry == "sphere") {
      SphereFieldSpec spec;
      spec.lmax = resolution;
      spec.seed = c.cfg.seed;
      e = chaos_moment(spec, gamma, q, n, c.cfg.threads);
      if (q == 0) reference = 1;
    } else {
      throw ConfigError("parameters.geometry: expected \"circle\" or \"sphere\"");
    }
    char key_buf[48];
    std::snprintf(key_buf, sizeof key_buf, "moment_q%g", q);
    const std::string key = key_buf;
    c.rec.outputs[key] = estimate(e.mean, e.std_error);
    csv << fmt(q) << ',' << fmt(e.mean) << ',' << fmt(e.std_error) << ',' << e.n_samples << ','
        << (std::isnan(reference) ? "" : fmt(reference)) << '\n';
    if (!std::isnan(reference)) {
      const double tol = q == 0 ? 0 : c.tol("sigmas") * e.std_error;
      c.check(key, e.mean, reference, tol, std::abs(e.mean - reference) <= tol);
    }
  }
  c.write("moments.csv", csv.str());
}

void run_block(Context& c) {
  const json& params = c.cfg.parameters;
  const CFTParams p = coupling(params);
  const auto a = four_alphas(params, "alphas");
  const std::array<double, 4> d{conformal_weight(a[0], p), conformal_weight(a[1], p), conformal_weight(a[2], p),
                                conformal_weight(a[3], p)};
  const BlockEval b = block(field<double>(params, "p"), d, complex_value(params.at("z"), "parameters.z"),
                            field<int>(params, "level"), p);
  std::ostringstream csv;
  csv << "level,coefficient\n";
  for (std::size_t k = 0; k < b.coefficients.size(); ++k) csv << k << ',' << fmt(b.coefficients[k].real()) << '\n';
  c.write("block.csv", csv.str());
  c.rec.outputs["value_re"] = scalar(b.value.real());
  c.rec.outputs["value_im"] = scalar(b.value.imag());
  c.rec.outputs["tail_estimate"] = scalar(b.tail_estimate);
}

std::vector<SpherePoint> points(const json& params, std::size_t n) {
  const json& v = params.at("points");
  if (n && v.size() != n) throw ConfigError("parameters.points: expected " + std::to_string(n) + " points");
  std::vector<SpherePoint> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(point_value(v[i], "parameters.points[" + std::to_string(i) + "]"));
  return out;
}

void run_correlator(Context& c) {
  const json& params = c.cfg.parameters;
  const CFTParams p = coupling(params);
  const auto pts = points(params, 0);
  const auto alphas = real_list(params, "alphas", pts.size());
  CorrelatorJob job{InsertionSet(pts, alphas, p), p, sphere_field(params, c.cfg.seed), sample_count(params),
                    c.cfg.seed, c.cfg.threads, log_det_laplacian_unit_sphere(), discretization(params)};
  const MCEstimate e = correlator_mc(job);
  c.rec.outputs["correlator"] = estimate(e.mean, e.std_error);
  c.rec.outputs["effective_sample_size"] = scalar(e.effective_sample_size);
  if (pts.size() == 3 && !pts[0].at_infinity && !pts[1].at_infinity && !pts[2].at_infinity) {
    const UpsilonEvaluator ev(p.gamma);
    const double ref = three_point_fixed(pts[0].z, pts[1].z, pts[2].z, alphas[0], alphas[1], alphas[2], p, ev).real();
    c.rec.outputs["three_point_fixed"] = scalar(ref);
    const double tol = std::max(c.tol("relative") * std::abs(ref), c.tol("sigmas") * e.std_error);
    c.check("correlator_vs_dozz", e.mean, ref, tol, std::abs(e.mean - ref) <= tol);
  }
  std::ostringstream csv;
  csv << "estimate,std_error,samples,effective_sample_size\n"
      << fmt(e.mean) << ',' << fmt(e.std_error) << ',' << e.n_samples << ',' << fmt(e.effective_sample_size) << '\n';
  c.write("correlator.csv", csv.str());
}

std::string samples_csv(const BootstrapResult& r, const SpectralQuadrature& q) {
  std::ostringstream csv;
  csv << "p,weight,integrand,imag,block_tail\n";
  for (std::size_t i = 0; i < r.samples.size(); ++i)
    csv << fmt(r.samples[i].p) << ',' << fmt(q.weights[i]) << ',' << fmt(r.samples[i].value) << ','
        << fmt(r.samples[i].imag) << ',' << fmt(r.samples[i].block_tail) << '\n';
  return csv.str();
}

void run_bootstrap4pt(Context& c) {
  const json& params = c.cfg.parameters;
  const CFTParams p = coupling(params);
  const auto cache = block_cache(params, c.cfg.base_dir());
  const SpectralContext ctx(p, cache);
  const auto q = quadrature(params);
  const auto r = four_point_bootstrap(complex_value(params.at("z"), "parameters.z"), four_alphas(params, "alphas"), q,
                                      ctx, c.cfg.threads, c.tol("tail"));
  if (cache) cache->save();
  c.rec.outputs["value"] = scalar(r.value);
  c.rec.outputs["round_value"] = scalar(round_metric_four_point(r, p));
  c.rec.outputs["tail_estimate"] = scalar(r.tail_estimate);
  c.rec.outputs["max_block_tail"] = scalar(r.max_block_tail);
  c.rec.outputs["max_imag_ratio"] = scalar(r.max_imag_ratio);
  c.check("tail", r.tail_estimate, 0, c.tol("tail"), r.tail_estimate <= c.tol("tail"));
  c.write("integrand.csv", samples_csv(r, q));
}

void run_crossing(Context& c) {
  const json& params = c.cfg.parameters;
  const CFTParams p = coupling(params);
  const auto cache = block_cache(params, c.cfg.base_dir());
  const SpectralContext ctx(p, cache);
  const auto q = quadrature(params);
  const cplx z = complex_value(params.at("z"), "parameters.z");
  const auto a = four_alphas(params, "alphas");
  const auto rep = crossing_check(z, a, q, ctx, c.cfg.threads);
  c.rec.outputs["direct"] = scalar(rep.direct.value);
  c.rec.outputs["crossed"] = scalar(rep.crossed.value);
  c.rec.outputs["discrepancy"] = scalar(rep.discrepancy);
  c.check("discrepancy", rep.discrepancy, 0, c.tol("discrepancy"), rep.discrepancy <= c.tol("discrepancy"));

  std::ostringstream csv;
  csv << "level,direct,crossed,discrepancy\n";
  csv << q.level << ',' << fmt(rep.direct.value) << ',' << fmt(rep.crossed.value) << ',' << fmt(rep.discrepancy) << '\n';
  const auto levels = field<std::vector<int>>(params, "levels");
  double worst_rise = -INFINITY, previous = NAN;
  for (int level : levels) {
    auto ql = q;
    ql.level = level;
    const auto r = crossing_check(z, a, ql, ctx, c.cfg.threads);
    csv << level << ',' << fmt(r.direct.value) << ',' << fmt(r.crossed.value) << ',' << fmt(r.discrepancy) << '\n';
    c.rec.outputs["discrepancy_L" + std::to_string(level)] = scalar(r.discrepancy);
    if (!std::isnan(previous)) worst_rise = std::max(worst_rise, r.discrepancy - previous);
    previous = r.discrepancy;
  }
  if (levels.size() >= 2)
    c.check("monotone_in_level", worst_rise, 0, c.tol("floor"), worst_rise <= c.tol("floor"));
  if (cache) cache->save();
  c.write("crossing.csv", csv.str());
}

void run_mc_vs_dozz(Context& c) {
  const json& params = c.cfg.parameters;
  const CFTParams p = coupling(params);
  const auto pts = points(params, 3);
  for (const auto& x : pts)
    if (x.at_infinity) throw ConfigError("parameters.points: mc-vs-dozz needs finite points");
  const auto aa = real_list(params, "alphas_a", 3), ab = real_list(params, "alphas_b", 3);
  const InsertionSet A(pts, aa, p), B(pts, ab, p);
  const auto field_spec = sphere_field(params, c.cfg.seed);
  const auto n = sample_count(params);
  const double sa = A.weight_sum() - 2 * p.Q, sb = B.weight_sum() - 2 * p.Q;
  if (!(sa > 0 && sb > 0)) throw DomainError("mc-vs-dozz: Seiberg bound sum(alpha) > 2Q fails");
  const CorrelatorJob ja{A, p, field_spec, n, c.cfg.seed, c.cfg.threads, log_det_laplacian_unit_sphere(), discretization(params)};
  const CorrelatorJob jb{B, p, field_spec, n, c.cfg.seed, c.cfg.threads, log_det_laplacian_unit_sphere(), discretization(params)};
  const auto v = z_moment_samples(field_spec, c.cfg.seed, {A, B}, p, {-sa / p.gamma, -sb / p.gamma}, n, c.cfg.threads,
                                  ja.discretization);
  const double scale = std::exp(log_correlator_geometry(ja) + log_zero_mode_factor(A, p) - log_correlator_geometry(jb) -
                                log_zero_mode_factor(B, p));
  const RatioEstimate r = paired_ratio(v[0], v[1], scale);
  const UpsilonEvaluator ev(p.gamma);
  const double ref = (three_point_fixed(pts[0].z, pts[1].z, pts[2].z, aa[0], aa[1], aa[2], p, ev) /
                      three_point_fixed(pts[0].z, pts[1].z, pts[2].z, ab[0], ab[1], ab[2], p, ev))
                         .real();
  c.rec.outputs["mc_ratio"] = estimate(r.ratio, r.std_error);
  c.rec.outputs["dozz_ratio"] = scalar(ref);
  const double tol = std::max(c.tol("relative") * std::abs(ref), c.tol("sigmas") * r.std_error);
  c.check("ratio", r.ratio, ref, tol, std::abs(r.ratio - ref) <= tol);
  std::ostringstream csv;
  csv << "mc_ratio,std_error,dozz_ratio,samples\n"
      << fmt(r.ratio) << ',' << fmt(r.std_error) << ',' << fmt(ref) << ',' << r.n_samples << '\n';
  c.write("mc_vs_dozz.csv", csv.str());
}

void run_mc_vs_bootstrap(Context& c) {
  const json& params = c.cfg.parameters;
  const CFTParams p = coupling(params);
  const auto a = four_alphas(params, "alphas");
  const cplx z = complex_value(params.at("z"), "parameters.z");
  const cplx zp = complex_value(params.at("z_prime"), "parameters.z_prime");
  const auto cache = block_cache(params, c.cfg.base_dir());
  const SpectralContext ctx(p, cache);
  const auto q = quadrature(params);
  const auto b1 = four_point_bootstrap(z, a, q, ctx, c.cfg.threads);
  const auto b2 = four_point_bootstrap(zp, a, q, ctx, c.cfg.threads);
  if (cache) cache->save();
  const double ref = round_metric_four_point(b1, p) / round_metric_four_point(b2, p);
  const auto r = mc_four_point_ratio(z, zp, a, p, sphere_field(params, c.cfg.seed), sample_count(params), c.cfg.seed,
                                     c.cfg.threads, discretization(params));
  c.rec.outputs["mc_ratio"] = estimate(r.ratio, r.std_error);
  c.rec.outputs["bootstrap_ratio"] = scalar(ref);
  const double tol = c.tol("relative") * std::abs(ref);
  c.check("ratio", r.ratio, ref, tol, std::abs(r.ratio - ref) <= tol);
  std::ostringstream csv;
  csv << "mc_ratio,std_error,bootstrap_ratio,samples\n"
      << fmt(r.ratio) << ',' << fmt(r.std_error) << ',' << fmt(ref) << ',' << r.n_samples << '\n';
  c.write("mc_vs_bootstrap.csv", csv.str());
}

std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

const char* code_version() { return LCFT_VERSION; }

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : kinds()) v.push_back(k);
    return v;
  }();
  return names;
}

std::string ExperimentConfig::base_dir() const { return base_dir_.empty() ? "." : base_dir_; }

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::set<std::string> top{"kind", "seed", "output", "threads", "tolerance_scale", "parameters", "tolerances"};
  for (const auto& [k, _] : doc.items())
    if (!top.count(k)) throw ConfigError("config: unknown key \"" + k + "\"");
  ExperimentConfig c;
  try {
    c.kind = doc.at("kind").get<std::string>();
  } catch (const json::exception&) {
    throw ConfigError("config.kind: required string");
  }
  const auto it = kinds().find(c.kind);
  if (it == kinds().end()) throw ConfigError("config.kind: unknown experiment kind \"" + c.kind + "\"");
  const KindSpec& spec = it->second;
  auto top_field = [&](const char* key, auto& dst) {
    if (!doc.contains(key)) return;
    try {
      dst = doc.at(key).get<std::decay_t<decltype(dst)>>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config.") + key + ": " + e.what());
    }
  };
  if (doc.contains("seed") && !doc.at("seed").is_number_unsigned())
    throw ConfigError("config.seed: expected an unsigned 64-bit integer");
  top_field("seed", c.seed);
  top_field("output", c.output);
  top_field("threads", c.threads);
  top_field("tolerance_scale", c.tolerance_scale);
  if (c.threads < 1) throw ConfigError("config.threads: must be >= 1");
  if (!(c.tolerance_scale > 0)) throw ConfigError("config.tolerance_scale: must be positive");

  const json params = doc.value("parameters", json::object());
  if (!params.is_object()) throw ConfigError("config.parameters: expected an object");
  for (const auto& [k, v] : params.items()) {
    const auto f = spec.parameters.find(k);
    if (f == spec.parameters.end()) throw ConfigError("parameters." + k + ": unknown for kind " + c.kind);
    if (!has_type(v, f->second.type)) throw ConfigError("parameters." + k + ": expected " + type_name(f->second.type));
    c.parameters[k] = v;
  }
  for (const auto& [k, f] : spec.parameters) {
    if (c.parameters.contains(k)) continue;
    if (!f.fallback) throw ConfigError("parameters." + k + ": required for kind " + c.kind);
    c.parameters[k] = *f.fallback;
  }

  const json tols = doc.value("tolerances", json::object());
  if (!tols.is_object()) throw ConfigError("config.tolerances: expected an object");
  for (const auto& [k, v] : spec.tolerances) c.tolerances[k] = v;
  for (const auto& [k, v] : tols.items()) {
    if (!spec.tolerances.count(k)) throw ConfigError("tolerances." + k + ": unknown for kind " + c.kind);
    if (!v.is_number() || !(v.get<double>() >= 0)) throw ConfigError("tolerances." + k + ": expected a number >= 0");
    c.tolerances[k] = v;
    c.overridden.push_back(k);
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  ExperimentConfig c = from_json(doc);
  c.base_dir_ = std::filesystem::path(path).parent_path().string();
  return c;
}

json ExperimentConfig::to_json() const {
  json j{{"kind", kind},           {"seed", seed},           {"output", output}, {"threads", threads},
         {"tolerance_scale", tolerance_scale}, {"parameters", parameters}, {"tolerances", tolerances}};
  return j;
}

std::string ExperimentConfig::hash() const {
  json j = to_json();
  j.erase("output");
  j.erase("threads");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

bool RunRecord::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

json RunRecord::to_json() const {
  json checks_json = json::array();
  for (const auto& c : checks)
    checks_json.push_back(
        {{"name", c.name}, {"value", c.value}, {"reference", c.reference}, {"tolerance", c.tolerance}, {"pass", c.pass}});
  return {{"format", "lcft-run-record"},
          {"kind", config.kind},
          {"config", config.to_json()},
          {"config_hash", config.hash()},
          {"code_version", code_version},
          {"seed", config.seed},
          {"wall_seconds", wall_seconds},
          {"tolerance_overrides", config.overridden},
          {"outputs", outputs},
          {"checks", checks_json},
          {"files", files},
          {"pass", pass()}};
}

RunRecord run(const ExperimentConfig& config) {
  RunRecord rec;
  rec.config = config;
  rec.code_version = code_version();
  Context c{config, rec};
  const auto t0 = std::chrono::steady_clock::now();
  static const std::map<std::string, void (*)(Context&)> table{
      {"dozz-table", run_dozz_table},       {"gmc-moments", run_gmc_moments},   {"block", run_block},
      {"correlator", run_correlator},       {"bootstrap4pt", run_bootstrap4pt}, {"crossing", run_crossing},
      {"mc-vs-dozz", run_mc_vs_dozz},       {"mc-vs-bootstrap", run_mc_vs_bootstrap}};
  table.at(config.kind)(c);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!config.output.empty()) {
    const auto path = std::filesystem::path(config.output) / "record.json";
    rec.files.push_back(path.string());
    std::filesystem::create_directories(config.output);
    std::ofstream(path) << rec.to_json().dump(2) << '\n';
  }
  return rec;
}

ComparisonReport compare(const json& a, const json& b, double rtol, double sigmas) {
  if (a.value("format", "") != "lcft-run-record" || b.value("format", "") != "lcft-run-record")
    throw ConfigError("compare: both files must be run records");
  if (a.at("kind") != b.at("kind"))
    throw ConfigError("compare: kind mismatch (" + a.at("kind").get<std::string>() + " vs " +
                      b.at("kind").get<std::string>() + ")");
  ComparisonReport rep;
  json fields = json::array();
  const json& oa = a.at("outputs");
  const json& ob = b.at("outputs");
  auto fail_field = [&](const std::string& name, const std::string& why) {
    fields.push_back({{"name", name}, {"pass", false}, {"reason", why}});
    rep.pass = false;
  };
  for (const auto& [name, va] : oa.items()) {
    if (!ob.contains(name)) {
      fail_field(name, "missing in second record");
      continue;
    }
    const json& vb = ob.at(name);
    if (va.is_object() && vb.is_object() && va.contains("value") && vb.contains("value")) {
      const double x = va.at("value").get<double>(), y = vb.at("value").get<double>();
      json entry{{"name", name}, {"a", x}, {"b", y}, {"abs_diff", std::abs(x - y)}};
      bool ok;
      if (va.contains("std_error") && vb.contains("std_error")) {
        const double se = std::hypot(va.at("std_error").get<double>(), vb.at("std_error").get<double>());
        entry["combined_std_error"] = se;
        entry["sigmas"] = se > 0 ? std::abs(x - y) / se : (x == y ? 0.0 : INFINITY);
        ok = std::abs(x - y) <= sigmas * se;
      } else {
        const double rel = std::abs(x - y) / std::max(std::abs(x), std::abs(y));
        entry["rel_diff"] = x == y ? 0.0 : rel;
        ok = x == y || rel <= rtol;
      }
      entry["pass"] = ok;
      rep.pass = rep.pass && ok;
      fields.push_back(entry);
    } else {
      const bool ok = va == vb;
      fields.push_back({{"name", name}, {"pass", ok}, {"reason", ok ? "identical" : "differs"}});
      rep.pass = rep.pass && ok;
    }
  }
  for (const auto& [name, _] : ob.items())
    if (!oa.contains(name)) fail_field(name, "missing in first record");
  rep.report = {{"kind", a.at("kind")}, {"rtol", rtol}, {"sigmas", sigmas}, {"fields", fields}, {"pass", rep.pass}};
  return rep;
}

}  // namespace lcft::harness
