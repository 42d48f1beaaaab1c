#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "harness.hpp"
#include "lcft/errors.hpp"

using lcft::harness::json;

namespace {

enum Exit { kPass = 0, kToleranceFail = 1, kUsage = 2, kNumerical = 3 };

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  std::optional<double> tolerance_scale;
};

// "0.3" -> 0.3, "0.3,0.2" -> [0.3, 0.2], "inf" -> "inf"
json complex_arg(const std::string& s) {
  if (s == "inf") return s;
  const auto comma = s.find(',');
  try {
    if (comma == std::string::npos) return std::stod(s);
    return json::array({std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))});
  } catch (const std::exception&) {
    throw lcft::ConfigError("cannot parse complex number \"" + s + "\"");
  }
}

// points separated by ';', each "re", "re,im" or "inf"
json points_arg(const std::string& s) {
  json out = json::array();
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) out.push_back(complex_arg(item));
  return out;
}

int finish(const lcft::harness::RunRecord& rec) {
  json summary{{"kind", rec.config.kind},   {"config_hash", rec.config.hash()}, {"seed", rec.config.seed},
               {"outputs", rec.outputs},    {"wall_seconds", rec.wall_seconds}, {"pass", rec.pass()},
               {"files", rec.files}};
  if (summary["outputs"].contains("table")) summary["outputs"].erase("table");
  json checks = json::array();
  for (const auto& c : rec.checks)
    checks.push_back({{"name", c.name}, {"value", c.value}, {"reference", c.reference}, {"tolerance", c.tolerance},
                      {"pass", c.pass}});
  summary["checks"] = checks;
  std::cout << summary.dump(2) << '\n';
  if (rec.config.kind == "dozz-table" && rec.config.output.empty())
    std::cout << rec.outputs.at("table").get<std::string>();
  return rec.pass() ? kPass : kToleranceFail;
}

int execute(json doc, const Globals& g) {
  if (g.seed) doc["seed"] = *g.seed;
  if (!g.out.empty()) doc["output"] = g.out;
  if (g.threads) doc["threads"] = *g.threads;
  if (g.tolerance_scale) doc["tolerance_scale"] = *g.tolerance_scale;
  return finish(lcft::harness::run(lcft::harness::ExperimentConfig::from_json(doc)));
}

int execute_file(const Globals& g) {
  auto cfg = lcft::harness::ExperimentConfig::load(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.output = g.out;
  if (g.threads) {
    if (*g.threads < 1) throw lcft::ConfigError("--threads must be >= 1");
    cfg.threads = *g.threads;
  }
  if (g.tolerance_scale) {
    if (!(*g.tolerance_scale > 0)) throw lcft::ConfigError("--tolerance-scale must be positive");
    cfg.tolerance_scale = *g.tolerance_scale;
  }
  return finish(lcft::harness::run(cfg));
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lcft::ConfigError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw lcft::ConfigError(path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Liouville CFT workbench: DOZZ, conformal blocks, GMC Monte Carlo and the four-point bootstrap"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "64-bit seed (overrides the config)");
  app.add_option("--out", g.out, "output directory for CSV data and record.json");
  app.add_option("--threads", g.threads, "worker threads");
  app.add_option("--tolerance-scale", g.tolerance_scale, "multiplies every tolerance");
  app.fallthrough();

  json doc;
  double gamma = 1, mu = 1;
  auto coupling = [&](CLI::App* s) {
    s->add_option("--gamma", gamma, "coupling, 0 < gamma < 2")->required();
    s->add_option("--mu", mu, "cosmological constant")->capture_default_str();
  };

  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", g.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);

  std::vector<std::string> alphas_s;
  std::vector<double> alphas;
  auto* dozz = app.add_subcommand("dozz", "DOZZ structure constant of one weight triple");
  coupling(dozz);
  dozz->add_option("--alphas", alphas_s, "three weights, each re or re,im")->required()->expected(3)->delimiter(' ');

  double p = 0;
  std::string z_s = "0.5", zp_s = "0.6";
  int level = 10;
  auto* blk = app.add_subcommand("block", "conformal block coefficients and value at (0, z, 1, inf)");
  coupling(blk);
  blk->add_option("--p", p, "internal momentum, Delta = Q^2/4 + p^2/4")->required();
  blk->add_option("--alphas", alphas, "four external weights")->required()->expected(4)->delimiter(',');
  blk->add_option("--z", z_s, "cross-ratio, re or re,im")->required();
  blk->add_option("--level", level, "truncation level")->capture_default_str();

  std::string geometry = "circle";
  int resolution = 64;
  std::vector<double> qs{1, 2};
  std::int64_t samples = 10000;
  auto* gmc = app.add_subcommand("gmc-moments", "moments of the total chaos mass");
  gmc->add_option("--gamma", gamma, "coupling")->required();
  gmc->add_option("--geometry", geometry, "circle or sphere")->capture_default_str();
  gmc->add_option("--resolution", resolution, "circle modes or sphere lmax")->capture_default_str();
  gmc->add_option("--q", qs, "moment exponents")->delimiter(',');
  gmc->add_option("--samples", samples, "Monte Carlo samples")->capture_default_str();

  std::string points_s, rule = "zoom";
  int lmax = 64;
  auto* cor = app.add_subcommand("correlator", "Monte Carlo correlator on the round sphere");
  coupling(cor);
  cor->add_option("--points", points_s, "points separated by ';', each re, re,im or inf")->required();
  cor->add_option("--alphas", alphas, "weights")->required()->delimiter(',');
  cor->add_option("--lmax", lmax, "field band limit")->capture_default_str();
  cor->add_option("--samples", samples, "Monte Carlo samples")->capture_default_str();
  cor->add_option("--rule", rule, "zoom or node")->capture_default_str();

  double p_max = 12;
  int panels = 12;
  std::string expansion = "nome", cache;
  std::vector<int> levels;
  auto spectral = [&](CLI::App* s) {
    coupling(s);
    s->add_option("--alphas", alphas, "four weights")->required()->expected(4)->delimiter(',');
    s->add_option("--z", z_s, "cross-ratio, re or re,im")->required();
    s->add_option("--p-max", p_max, "spectral cutoff")->capture_default_str();
    s->add_option("--panels", panels, "Gauss-Legendre panels of 8 nodes")->capture_default_str();
    s->add_option("--level", level, "block truncation level")->capture_default_str();
    s->add_option("--expansion", expansion, "nome or z")->capture_default_str();
    s->add_option("--block-cache", cache, "block coefficient cache file");
  };
  auto* boot = app.add_subcommand("bootstrap4pt", "four-point function from the spectral integral");
  spectral(boot);
  auto* cross = app.add_subcommand("crossing", "crossing-symmetry check G_1234(z) = G_3214(1 - z)");
  spectral(cross);
  cross->add_option("--levels", levels, "extra levels for the convergence table")->delimiter(',');

  std::string rec_a, rec_b;
  double rtol = 1e-9, sigmas = 3;
  auto* cmp = app.add_subcommand("compare", "compare two run records");
  cmp->add_option("a", rec_a, "first record.json")->required()->check(CLI::ExistingFile);
  cmp->add_option("b", rec_b, "second record.json")->required()->check(CLI::ExistingFile);
  cmp->add_option("--rtol", rtol, "relative tolerance for deterministic outputs")->capture_default_str();
  cmp->add_option("--sigmas", sigmas, "combined standard errors allowed for estimates")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    const json base{{"gamma", gamma}, {"mu", mu}};
    if (*run) return execute_file(g);
    if (*dozz) {
      json row = json::array();
      for (const auto& a : alphas_s) row.push_back(complex_arg(a));
      json params = base;
      params["rows"] = json::array({row});
      return execute({{"kind", "dozz-table"}, {"parameters", params}}, g);
    }
    if (*blk) {
      json params = base;
      params.update({{"p", p}, {"alphas", alphas}, {"z", complex_arg(z_s)}, {"level", level}});
      return execute({{"kind", "block"}, {"parameters", params}}, g);
    }
    if (*gmc) {
      return execute({{"kind", "gmc-moments"},
                      {"parameters",
                       {{"gamma", gamma}, {"geometry", geometry}, {"resolution", resolution}, {"q", qs}, {"samples", samples}}}},
                     g);
    }
    if (*cor) {
      json params = base;
      params.update({{"points", points_arg(points_s)}, {"alphas", alphas}, {"lmax", lmax}, {"samples", samples}, {"rule", rule}});
      return execute({{"kind", "correlator"}, {"parameters", params}}, g);
    }
    if (*boot || *cross) {
      json params = base;
      params.update({{"alphas", alphas}, {"z", complex_arg(z_s)}, {"p_max", p_max}, {"panels", panels},
                     {"level", level}, {"expansion", expansion}, {"block_cache", cache}});
      if (*cross) params["levels"] = levels;
      return execute({{"kind", *cross ? "crossing" : "bootstrap4pt"}, {"parameters", params}}, g);
    }
    if (*cmp) {
      const auto rep = lcft::harness::compare(read_json(rec_a), read_json(rec_b), rtol, sigmas);
      std::cout << rep.report.dump(2) << '\n';
      return rep.pass ? kPass : kToleranceFail;
    }
  } catch (const lcft::ConfigError& e) {
    std::cerr << "lcft: " << e.what() << '\n';
    return kUsage;
  } catch (const lcft::DomainError& e) {
    std::cerr << "lcft: " << e.what() << '\n';
    return kUsage;
  } catch (const lcft::AccuracyError& e) {
    std::cerr << "lcft: accuracy: " << e.what() << '\n';
    return kNumerical;
  } catch (const lcft::DegeneracyError& e) {
    std::cerr << "lcft: degeneracy: " << e.what() << '\n';
    return kNumerical;
  } catch (const lcft::ResourceError& e) {
    std::cerr << "lcft: resource: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
