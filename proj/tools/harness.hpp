#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace lcft::harness {

using json = nlohmann::json;

/// Experiment kinds understood by run().
const std::vector<std::string>& experiment_kinds();

/// A validated experiment description. `parameters` and `tolerances` hold
/// every key of the kind, defaults filled in, so that two files meaning the
/// same experiment have the same canonical form and hash.
struct ExperimentConfig {
  std::string kind;
  std::uint64_t seed = 0;
  std::string output;  // directory; empty writes nothing
  int threads = 1;
  double tolerance_scale = 1.0;
  json parameters = json::object();
  json tolerances = json::object();
  std::vector<std::string> overridden;  // tolerance keys set by the file

  /// Strict parse: unknown keys and ill-typed values throw ConfigError
  /// naming the field.
  static ExperimentConfig from_json(const json& doc);
  /// Relative paths inside the file (golden, block_cache) resolve against
  /// the file's directory.
  static ExperimentConfig load(const std::string& path);
  json to_json() const;
  /// 64-bit FNV-1a of the canonical dump without output and threads, hex.
  std::string hash() const;
  std::string base_dir() const;

 private:
  std::string base_dir_;
};

struct Check {
  std::string name;
  double value = 0;
  double reference = 0;
  double tolerance = 0;  // after tolerance_scale
  bool pass = false;
};

struct RunRecord {
  ExperimentConfig config;
  std::string code_version;
  double wall_seconds = 0;
  json outputs = json::object();  // name -> {"value": v[, "std_error": s]} or structured data
  std::vector<Check> checks;
  std::vector<std::string> files;
  bool pass() const;
  json to_json() const;
};

/// Runs the experiment and writes its files (CSV data and record.json) when
/// config.output is set. Library exceptions propagate unchanged.
RunRecord run(const ExperimentConfig& config);

struct ComparisonReport {
  bool pass = true;
  json report;
};

/// Field-wise comparison of two record files of the same kind. Outputs with
/// standard errors on both sides pass within sigmas combined s.e.; others
/// within relative tolerance rtol.
ComparisonReport compare(const json& a, const json& b, double rtol, double sigmas);

const char* code_version();

}  // namespace lcft::harness
