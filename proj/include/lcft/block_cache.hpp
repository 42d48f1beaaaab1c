#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace lcft {

/// Internal weight followed by the four external weights.
using BlockKey = std::array<double, 5>;

/// On-disk store of real block coefficients c_0..c_L keyed by (gamma, level,
/// hash of the weight tuple). The file is JSON:
///
///   {"format": "lcft-block-coefficients", "version": 1,
///    "entries": [{"gamma": g, "level": L, "hash": "<16 hex digits>",
///                 "deltas": [D, D1, D2, D3, D4], "coefficients": [c_0, ..., c_L]}]}
///
/// The hash is 64-bit FNV-1a over the IEEE bit patterns of gamma and the five
/// weights; lookups compare the stored doubles exactly. An entry of level L
/// also answers requests for any level below L. Safe for concurrent use.
class BlockCoefficientCache {
 public:
  static constexpr int kVersion = 1;

  /// Loads `path` when it exists. Throws ConfigError on a malformed file or a
  /// version mismatch.
  explicit BlockCoefficientCache(std::string path);

  std::optional<std::vector<double>> find(double gamma, int level, const BlockKey& deltas) const;
  /// Keeps the entry with the larger level when one is already present.
  void insert(double gamma, const BlockKey& deltas, std::vector<double> coefficients);
  /// Writes the whole store (temporary file, then rename).
  void save() const;
  std::size_t size() const;
  const std::string& path() const { return path_; }

  static std::uint64_t hash(double gamma, const BlockKey& deltas);

 private:
  struct Entry {
    double gamma;
    BlockKey deltas;
    std::vector<double> coefficients;
  };
  std::string path_;
  mutable std::mutex mutex_;
  std::multimap<std::uint64_t, Entry> entries_;
};

}  // namespace lcft
