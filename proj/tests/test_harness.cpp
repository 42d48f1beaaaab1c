#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "doctest_main.hpp"
#include "harness.hpp"
#include "lcft/errors.hpp"

namespace fs = std::filesystem;
using lcft::harness::ExperimentConfig;
using lcft::harness::json;

namespace {

json gmc_doc(std::uint64_t seed) {
  return {{"kind", "gmc-moments"},
          {"seed", seed},
          {"parameters", {{"gamma", 0.5}, {"resolution", 32}, {"q", {0.0, 1.0, 2.0}}, {"samples", 4000}}}};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("lcft_harness_" + name);
  fs::remove_all(p);
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(LCFT_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config: strict parsing with field-level errors") {
  CHECK_NOTHROW(ExperimentConfig::from_json(gmc_doc(1)));
  auto bad = gmc_doc(1);
  bad["colour"] = "red";
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(bad), doctest::Contains("colour"), lcft::ConfigError);
  bad = gmc_doc(1);
  bad["parameters"]["gama"] = 0.5;
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(bad), doctest::Contains("parameters.gama"), lcft::ConfigError);
  bad = gmc_doc(1);
  bad["parameters"]["samples"] = "many";
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(bad), doctest::Contains("parameters.samples"), lcft::ConfigError);
  bad = gmc_doc(1);
  bad["parameters"].erase("gamma");
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(bad), doctest::Contains("parameters.gamma"), lcft::ConfigError);
  bad = gmc_doc(1);
  bad["kind"] = "tarot";
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), lcft::ConfigError);
  bad = gmc_doc(1);
  bad["tolerances"] = {{"relative", 0.1}};
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(bad), doctest::Contains("tolerances.relative"), lcft::ConfigError);
  bad = gmc_doc(1);
  bad["seed"] = -4;
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), lcft::ConfigError);
}

TEST_CASE("config: lossless round trip and a hash of the meaning") {
  const auto c = ExperimentConfig::from_json(gmc_doc(7));
  const auto back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());

  // defaults spelled out, keys reordered, output and threads changed: same experiment
  json spelled = gmc_doc(7);
  spelled["parameters"]["mu"] = 1.0;
  spelled["parameters"]["geometry"] = "circle";
  spelled["output"] = "/tmp/elsewhere";
  spelled["threads"] = 4;
  CHECK(ExperimentConfig::from_json(spelled).hash() == c.hash());
  CHECK(ExperimentConfig::from_json(gmc_doc(8)).hash() != c.hash());
  CHECK(c.hash().size() == 16);
}

TEST_CASE("run: gmc moments, exact q = 0, determinism, tolerance echo") {
  auto doc = gmc_doc(3);
  doc["tolerances"] = {{"sigmas", 4.0}};
  doc["tolerance_scale"] = 2.0;
  const auto cfg = ExperimentConfig::from_json(doc);
  const auto a = lcft::harness::run(cfg);
  const auto b = lcft::harness::run(cfg);
  CHECK(a.outputs == b.outputs);
  CHECK(a.outputs["moment_q0"]["value"].get<double>() == 1.0);
  CHECK(a.pass());
  const json rec = a.to_json();
  CHECK(rec["tolerance_overrides"] == json::array({"sigmas"}));
  CHECK(rec["config"]["tolerances"]["sigmas"] == 4.0);
  const auto& check = a.checks.at(1);
  CHECK(check.tolerance == doctest::Approx(8 * a.outputs["moment_q1"]["std_error"].get<double>()));
}

TEST_CASE("run: golden DOZZ table is reproduced byte for byte") {
  const auto out = scratch("golden");
  auto cfg = ExperimentConfig::load(std::string(LCFT_SOURCE_DIR) + "/data/dozz_golden.json");
  cfg.output = out.string();
  const auto rec = lcft::harness::run(cfg);
  REQUIRE(rec.checks.size() == 1);
  CHECK(rec.checks[0].pass);
  CHECK(rec.outputs["rows"]["value"] == 50);
  CHECK(fs::exists(out / "dozz.csv"));
  CHECK(fs::exists(out / "record.json"));

  // a perturbed golden file fails the check
  std::string text;
  {
    std::ifstream in(std::string(LCFT_SOURCE_DIR) + "/data/dozz_golden.csv");
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  text[text.find("e-01")] = '7';
  const auto fake = out / "golden_perturbed.csv";
  std::ofstream(fake) << text;
  json doc = cfg.to_json();
  doc["parameters"]["golden"] = fake.string();
  doc["output"] = "";
  const auto bad = lcft::harness::run(ExperimentConfig::from_json(doc));
  CHECK_FALSE(bad.pass());
  fs::remove_all(out);
}

TEST_CASE("compare: identity, statistical agreement of two seeds, injected faults") {
  const json a = lcft::harness::run(ExperimentConfig::from_json(gmc_doc(1))).to_json();
  const json b = lcft::harness::run(ExperimentConfig::from_json(gmc_doc(2))).to_json();
  const auto self = lcft::harness::compare(a, a, 1e-12, 3);
  CHECK(self.pass);
  for (const auto& f : self.report["fields"]) CHECK(f["abs_diff"] == 0.0);

  const auto seeds = lcft::harness::compare(a, b, 1e-12, 3);
  CHECK(seeds.pass);

  json c = a;
  c["outputs"]["moment_q2"]["value"] = a["outputs"]["moment_q2"]["value"].get<double>() + 1;
  const auto fault = lcft::harness::compare(a, c, 1e-12, 3);
  CHECK_FALSE(fault.pass);
  bool named = false;
  for (const auto& f : fault.report["fields"])
    if (f["name"] == "moment_q2") named = !f["pass"].get<bool>();
  CHECK(named);

  json d = a;
  d["outputs"].erase("moment_q1");
  CHECK_FALSE(lcft::harness::compare(a, d, 1e-12, 3).pass);

  json e = a;
  e["kind"] = "block";
  CHECK_THROWS_AS(lcft::harness::compare(a, e, 1e-12, 3), lcft::ConfigError);
}

TEST_CASE("cli: exit codes") {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  CHECK(cli("run --config " + std::string(LCFT_SOURCE_DIR) + "/data/dozz_golden.json") == 0);
  CHECK(cli("dozz --gamma 1 --alphas 1.9 1.9 1.7") == 0);
  CHECK(cli("dozz --gamma 1") == 2);
  CHECK(cli("dozz --gamma 3 --alphas 1 1 1") == 2);
  std::ofstream(dir / "bad.json") << R"({"kind": "block", "parameters": {"gamma": 1, "p": 1, "z": 0.3}})";
  CHECK(cli("run --config " + (dir / "bad.json").string()) == 2);
  // tail beyond a tiny cutoff: numerical accuracy error
  CHECK(cli("bootstrap4pt --gamma 1 --alphas 1.9,1.8,1.9,1.8 --z 0.4 --p-max 1 --panels 1 --level 2") == 3);
  // a tolerance no estimate can meet
  std::ofstream(dir / "strict.json") << gmc_doc(1).dump();
  CHECK(cli("run --config " + (dir / "strict.json").string() + " --tolerance-scale 1e-9") == 1);
  CHECK(cli("run --config " + (dir / "strict.json").string() + " --out " + (dir / "a").string()) == 0);
  CHECK(cli("run --config " + (dir / "strict.json").string() + " --out " + (dir / "b").string()) == 0);
  CHECK(cli("compare " + (dir / "a/record.json").string() + " " + (dir / "b/record.json").string()) == 0);
  fs::remove_all(dir);
}
