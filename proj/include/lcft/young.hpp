#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

namespace lcft {

/// A partition nu = (nu_1 >= nu_2 >= ... > 0) labelling the descendant
/// L_{-nu_1} ... L_{-nu_k} of a highest-weight state.
class YoungDiagram {
 public:
  YoungDiagram() = default;
  /// Throws std::invalid_argument unless parts are positive and weakly decreasing.
  explicit YoungDiagram(std::vector<int> parts);

  const std::vector<int>& parts() const { return parts_; }
  int level() const { return level_; }
  bool empty() const { return parts_.empty(); }
  std::size_t length() const { return parts_.size(); }
  /// nu without its first (largest) part.
  YoungDiagram tail() const;
  std::string str() const;

  auto operator<=>(const YoungDiagram&) const = default;

 private:
  std::vector<int> parts_;
  int level_ = 0;
};

/// All partitions of N, lexicographically descending: (N), (N-1,1), (N-2,2), ...
std::vector<YoungDiagram> diagrams_at_level(int N);

/// Position of each diagram of level N in diagrams_at_level(N).
class LevelIndex {
 public:
  explicit LevelIndex(int N);
  int level() const { return level_; }
  const std::vector<YoungDiagram>& basis() const { return basis_; }
  int index(const YoungDiagram& d) const;
  std::size_t size() const { return basis_.size(); }

 private:
  int level_;
  std::vector<YoungDiagram> basis_;
  std::map<YoungDiagram, int> index_;
};

}  // namespace lcft
