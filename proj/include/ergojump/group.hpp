#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ergojump/common.hpp"

namespace ergojump {

enum class GroupKind {
  lattice,              // Z^d, standard generators
  lattice_quotient,     // (Z/N)^d
  heisenberg,           // H3(Z), generators a^{+-1}, b^{+-1}
  heisenberg_quotient,  // H3(Z/N)
};

struct GroupSpec {
  GroupKind kind = GroupKind::lattice;
  int rank = 1;                // lattices only, 1..3
  std::int64_t modulus = 0;    // quotients only, >= 4

  bool finite() const {
    return kind == GroupKind::lattice_quotient || kind == GroupKind::heisenberg_quotient;
  }
  std::string name() const;

  // Accepts "Z", "Z^2", "Z_64", "Z_32^2", "H3", "H3_8".
  static GroupSpec parse(const std::string& text);
};

// Up to three integer coordinates. Lattice elements use the first `rank`
// coordinates; Heisenberg elements are (x, y, z) with
// (x,y,z)(x',y',z') = (x+x', y+y', z+z'+x y').
using Element = std::array<std::int64_t, 3>;

class FinGroup {
 public:
  explicit FinGroup(GroupSpec spec);
  // Custom generating set; must be symmetric and exclude the identity.
  FinGroup(GroupSpec spec, std::vector<Element> generators);

  const GroupSpec& spec() const { return spec_; }
  bool finite() const { return spec_.finite(); }
  std::uint64_t order() const;  // 0 for infinite groups

  Element identity() const { return {0, 0, 0}; }
  Element multiply(const Element& a, const Element& b) const;
  Element invert(const Element& a) const;
  std::span<const Element> generators() const { return generators_; }

  // Injective 63-bit key; throws CapacityError outside the encodable range.
  std::uint64_t pack(const Element& e) const;

  static constexpr std::int64_t kCoordinateLimit = std::int64_t{1} << 20;

 private:
  Element reduce(Element e) const;
  void validate_generators() const;

  GroupSpec spec_;
  std::vector<Element> generators_;
};

// Sorted-key lookup from packed elements to positions.
class ElementIndex {
 public:
  ElementIndex() = default;
  ElementIndex(const FinGroup& group, std::span<const Element> elements);
  std::optional<std::uint32_t> find(std::uint64_t key) const;
  std::size_t size() const { return keys_.size(); }

 private:
  std::vector<std::uint64_t> keys_;
  std::vector<std::uint32_t> positions_;
};

// Breadth-first enumeration of the word ball B_R around the identity.
struct WordBall {
  std::vector<Element> elements;      // nondecreasing word length, BFS discovery order
  std::vector<std::uint32_t> length;  // word length per element
  std::vector<std::size_t> ball_end;  // ball_end[r] = #elements with length <= r
  int radius = 0;
  ElementIndex index;

  std::optional<std::uint32_t> find(const FinGroup& g, const Element& e) const;
  std::size_t volume(int r) const;
};

// Enumerates B_R; for a finite group the enumeration stops early once the
// whole group is reached. Throws CapacityError past `capacity` elements.
WordBall word_ball(const FinGroup& group, int radius, std::size_t capacity = std::size_t{1} << 25);

}  // namespace ergojump
