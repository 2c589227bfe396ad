#include "ergojump/group.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace ergojump {

std::string GroupSpec::name() const {
  switch (kind) {
    case GroupKind::lattice:
      return rank == 1 ? "Z" : "Z^" + std::to_string(rank);
    case GroupKind::lattice_quotient:
      return "Z_" + std::to_string(modulus) + (rank == 1 ? "" : "^" + std::to_string(rank));
    case GroupKind::heisenberg:
      return "H3";
    case GroupKind::heisenberg_quotient:
      return "H3_" + std::to_string(modulus);
  }
  return "?";
}

GroupSpec GroupSpec::parse(const std::string& text) {
  GroupSpec s;
  auto fail = [&] { return ValidationError("unrecognized group '" + text + "'"); };
  auto to_int = [&](const std::string& t) -> std::int64_t {
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) throw fail();
    return std::stoll(t);
  };
  if (text.rfind("H3", 0) == 0) {
    if (text == "H3") {
      s.kind = GroupKind::heisenberg;
    } else if (text.size() > 3 && text[2] == '_') {
      s.kind = GroupKind::heisenberg_quotient;
      s.modulus = to_int(text.substr(3));
    } else {
      throw fail();
    }
    s.rank = 3;
    return s;
  }
  if (text.empty() || text[0] != 'Z') throw fail();
  std::string rest = text.substr(1);
  const auto caret = rest.find('^');
  std::string mod_part = rest.substr(0, caret);
  if (caret != std::string::npos) s.rank = static_cast<int>(to_int(rest.substr(caret + 1)));
  if (mod_part.empty()) {
    s.kind = GroupKind::lattice;
  } else if (mod_part[0] == '_') {
    s.kind = GroupKind::lattice_quotient;
    s.modulus = to_int(mod_part.substr(1));
  } else {
    throw fail();
  }
  if (s.rank < 1 || s.rank > 3) throw ValidationError("lattice rank must be 1..3 in '" + text + "'");
  return s;
}

namespace {

std::vector<Element> standard_generators(const GroupSpec& spec) {
  std::vector<Element> gens;
  const bool heis = spec.kind == GroupKind::heisenberg || spec.kind == GroupKind::heisenberg_quotient;
  const int dims = heis ? 2 : spec.rank;
  for (int d = 0; d < dims; ++d) {
    Element plus{0, 0, 0}, minus{0, 0, 0};
    plus[d] = 1;
    minus[d] = -1;
    gens.push_back(plus);
    gens.push_back(minus);
  }
  return gens;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw CapacityError("group element coordinate overflow");
  return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw CapacityError("group element coordinate overflow");
  return r;
}

std::int64_t mod(std::int64_t a, std::int64_t n) {
  const std::int64_t r = a % n;
  return r < 0 ? r + n : r;
}

}  // namespace

FinGroup::FinGroup(GroupSpec spec) : FinGroup(spec, standard_generators(spec)) {}

FinGroup::FinGroup(GroupSpec spec, std::vector<Element> generators) : spec_(spec) {
  const bool heis = spec_.kind == GroupKind::heisenberg || spec_.kind == GroupKind::heisenberg_quotient;
  if (heis) spec_.rank = 3;
  if (!heis && (spec_.rank < 1 || spec_.rank > 3))
    throw ValidationError("lattice rank must be in 1..3");
  if (spec_.finite() && spec_.modulus < 4)
    throw ValidationError("quotient modulus must be >= 4, got " + std::to_string(spec_.modulus));
  if (spec_.finite() && spec_.modulus > kCoordinateLimit)
    throw CapacityError("quotient modulus exceeds the element encoding");
  generators_.reserve(generators.size());
  for (auto& g : generators) generators_.push_back(reduce(g));
  validate_generators();
}

void FinGroup::validate_generators() const {
  if (generators_.empty()) throw ValidationError("generator list is empty");
  for (const auto& g : generators_) {
    if (g == identity()) throw ValidationError("identity must not be a generator");
    const Element inv = invert(g);
    if (std::find(generators_.begin(), generators_.end(), inv) == generators_.end())
      throw ValidationError("generator list is not symmetric");
  }
}

std::uint64_t FinGroup::order() const {
  if (!finite()) return 0;
  std::uint64_t n = 1;
  for (int d = 0; d < spec_.rank; ++d) n *= static_cast<std::uint64_t>(spec_.modulus);
  return n;
}

Element FinGroup::reduce(Element e) const {
  for (int d = spec_.rank; d < 3; ++d) e[d] = 0;
  if (finite())
    for (int d = 0; d < spec_.rank; ++d) e[d] = mod(e[d], spec_.modulus);
  return e;
}

Element FinGroup::multiply(const Element& a, const Element& b) const {
  Element r{checked_add(a[0], b[0]), checked_add(a[1], b[1]), checked_add(a[2], b[2])};
  if (spec_.kind == GroupKind::heisenberg || spec_.kind == GroupKind::heisenberg_quotient)
    r[2] = checked_add(r[2], checked_mul(a[0], b[1]));
  return reduce(r);
}

Element FinGroup::invert(const Element& a) const {
  Element r{-a[0], -a[1], -a[2]};
  if (spec_.kind == GroupKind::heisenberg || spec_.kind == GroupKind::heisenberg_quotient)
    r[2] = checked_add(r[2], checked_mul(a[0], a[1]));
  return reduce(r);
}

std::uint64_t FinGroup::pack(const Element& e) const {
  std::uint64_t key = 0;
  for (int d = 0; d < 3; ++d) {
    if (e[d] <= -kCoordinateLimit || e[d] >= kCoordinateLimit)
      throw CapacityError("group element coordinate outside the 21-bit encoding");
    key = (key << 21) | static_cast<std::uint64_t>(e[d] + kCoordinateLimit);
  }
  return key;
}

ElementIndex::ElementIndex(const FinGroup& group, std::span<const Element> elements) {
  std::vector<std::pair<std::uint64_t, std::uint32_t>> pairs;
  pairs.reserve(elements.size());
  for (std::size_t i = 0; i < elements.size(); ++i)
    pairs.emplace_back(group.pack(elements[i]), static_cast<std::uint32_t>(i));
  std::sort(pairs.begin(), pairs.end());
  keys_.reserve(pairs.size());
  positions_.reserve(pairs.size());
  for (const auto& [k, p] : pairs) {
    if (!keys_.empty() && keys_.back() == k) throw ValidationError("duplicate element in index");
    keys_.push_back(k);
    positions_.push_back(p);
  }
}

std::optional<std::uint32_t> ElementIndex::find(std::uint64_t key) const {
  const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return std::nullopt;
  return positions_[static_cast<std::size_t>(it - keys_.begin())];
}

std::optional<std::uint32_t> WordBall::find(const FinGroup& g, const Element& e) const {
  std::uint64_t key;
  try {
    key = g.pack(e);
  } catch (const CapacityError&) {
    return std::nullopt;
  }
  return index.find(key);
}

std::size_t WordBall::volume(int r) const {
  if (r < 0) return 0;
  if (r >= static_cast<int>(ball_end.size())) return elements.size();
  return ball_end[static_cast<std::size_t>(r)];
}

WordBall word_ball(const FinGroup& group, int radius, std::size_t capacity) {
  if (radius < 0) throw ValidationError("word ball radius must be nonnegative");
  WordBall ball;
  ball.radius = radius;
  std::unordered_map<std::uint64_t, std::uint32_t> seen;
  seen.reserve(1024);
  ball.elements.push_back(group.identity());
  ball.length.push_back(0);
  seen.emplace(group.pack(group.identity()), 0);
  ball.ball_end.push_back(1);
  std::size_t frontier_begin = 0;
  for (int r = 1; r <= radius; ++r) {
    const std::size_t frontier_end = ball.elements.size();
    for (std::size_t i = frontier_begin; i < frontier_end; ++i) {
      for (const auto& s : group.generators()) {
        const Element h = group.multiply(ball.elements[i], s);
        const auto key = group.pack(h);
        if (seen.contains(key)) continue;
        if (ball.elements.size() >= capacity)
          throw CapacityError("word ball exceeds capacity of " + std::to_string(capacity) + " elements");
        seen.emplace(key, static_cast<std::uint32_t>(ball.elements.size()));
        ball.elements.push_back(h);
        ball.length.push_back(static_cast<std::uint32_t>(r));
      }
    }
    frontier_begin = frontier_end;
    ball.ball_end.push_back(ball.elements.size());
    if (frontier_begin == ball.elements.size()) {
      // finite group exhausted; later spheres are empty
      ball.ball_end.pop_back();
      ball.radius = r - 1;
      break;
    }
  }
  ball.index = ElementIndex(group, ball.elements);
  return ball;
}

}  // namespace ergojump
