#include "lcft/young.hpp"

#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lcft {

YoungDiagram::YoungDiagram(std::vector<int> parts) : parts_(std::move(parts)) {
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (parts_[i] <= 0) throw std::invalid_argument("YoungDiagram: parts must be positive");
    if (i > 0 && parts_[i] > parts_[i - 1]) {
      throw std::invalid_argument("YoungDiagram: parts must be weakly decreasing");
    }
  }
  level_ = std::accumulate(parts_.begin(), parts_.end(), 0);
}

YoungDiagram YoungDiagram::tail() const {
  if (parts_.empty()) return {};
  return YoungDiagram(std::vector<int>(parts_.begin() + 1, parts_.end()));
}

std::string YoungDiagram::str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < parts_.size(); ++i) os << (i ? "," : "") << parts_[i];
  os << ')';
  return os.str();
}

std::vector<YoungDiagram> diagrams_at_level(int N) {
  if (N < 0) throw std::invalid_argument("diagrams_at_level: N must be >= 0");
  std::vector<YoungDiagram> out;
  std::vector<int> cur;
  std::function<void(int, int)> rec = [&](int remaining, int max_part) {
    if (remaining == 0) {
      out.emplace_back(cur);
      return;
    }
    for (int k = std::min(remaining, max_part); k >= 1; --k) {
      cur.push_back(k);
      rec(remaining - k, k);
      cur.pop_back();
    }
  };
  rec(N, N);
  return out;
}

LevelIndex::LevelIndex(int N) : level_(N), basis_(diagrams_at_level(N)) {
  for (std::size_t i = 0; i < basis_.size(); ++i) index_.emplace(basis_[i], static_cast<int>(i));
}

int LevelIndex::index(const YoungDiagram& d) const {
  const auto it = index_.find(d);
  if (it == index_.end()) throw std::out_of_range("LevelIndex: diagram " + d.str() + " not at this level");
  return it->second;
}

}  // namespace lcft
