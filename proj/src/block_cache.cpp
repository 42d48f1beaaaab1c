#include "lcft/block_cache.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "lcft/errors.hpp"

namespace lcft {

namespace {

constexpr const char* kFormat = "lcft-block-coefficients";

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

std::uint64_t BlockCoefficientCache::hash(double gamma, const BlockKey& deltas) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](double x) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(gamma);
  for (double d : deltas) mix(d);
  return h;
}

BlockCoefficientCache::BlockCoefficientCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("block cache " + path_ + ": " + e.what());
  }
  if (doc.value("format", "") != kFormat) throw ConfigError("block cache " + path_ + ": unknown format");
  if (doc.value("version", 0) != kVersion)
    throw ConfigError("block cache " + path_ + ": version " + std::to_string(doc.value("version", 0)) +
                      ", expected " + std::to_string(kVersion));
  try {
    for (const auto& e : doc.at("entries")) {
      Entry entry{e.at("gamma").get<double>(), e.at("deltas").get<BlockKey>(),
                  e.at("coefficients").get<std::vector<double>>()};
      if (int(entry.coefficients.size()) != e.at("level").get<int>() + 1)
        throw ConfigError("block cache " + path_ + ": level and coefficient count disagree");
      const std::uint64_t h = hash(entry.gamma, entry.deltas);
      if (e.at("hash").get<std::string>() != hex(h)) throw ConfigError("block cache " + path_ + ": hash mismatch");
      entries_.emplace(h, std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("block cache " + path_ + ": " + e.what());
  }
}

std::optional<std::vector<double>> BlockCoefficientCache::find(double gamma, int level, const BlockKey& deltas) const {
  std::lock_guard lock(mutex_);
  auto [lo, hi] = entries_.equal_range(hash(gamma, deltas));
  for (auto it = lo; it != hi; ++it) {
    const Entry& e = it->second;
    if (e.gamma == gamma && e.deltas == deltas && int(e.coefficients.size()) > level)
      return std::vector<double>(e.coefficients.begin(), e.coefficients.begin() + level + 1);
  }
  return std::nullopt;
}

void BlockCoefficientCache::insert(double gamma, const BlockKey& deltas, std::vector<double> coefficients) {
  std::lock_guard lock(mutex_);
  const std::uint64_t h = hash(gamma, deltas);
  auto [lo, hi] = entries_.equal_range(h);
  for (auto it = lo; it != hi; ++it) {
    Entry& e = it->second;
    if (e.gamma == gamma && e.deltas == deltas) {
      if (coefficients.size() > e.coefficients.size()) e.coefficients = std::move(coefficients);
      return;
    }
  }
  entries_.emplace(h, Entry{gamma, deltas, std::move(coefficients)});
}

void BlockCoefficientCache::save() const {
  nlohmann::json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["entries"] = nlohmann::json::array();
  {
    std::lock_guard lock(mutex_);
    for (const auto& [h, e] : entries_)
      doc["entries"].push_back({{"gamma", e.gamma},
                                {"level", int(e.coefficients.size()) - 1},
                                {"hash", hex(h)},
                                {"deltas", e.deltas},
                                {"coefficients", e.coefficients}});
  }
  const std::string tmp = path_ + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError("block cache: cannot write " + tmp);
    out << doc.dump(1) << '\n';
  }
  std::filesystem::rename(tmp, path_);
}

std::size_t BlockCoefficientCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace lcft
