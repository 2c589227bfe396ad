#include <cmath>
#include <set>

#include "doctest.h"
#include "ergojump/cubes.hpp"

using namespace ergojump;

namespace {

FiniteSpace cycle(int n) { return build_group_space(GroupSpec{GroupKind::lattice_quotient, 1, n}).space; }

}  // namespace

TEST_CASE("admissibility of HK parameters") {
  HKParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.a0() == doctest::Approx(1.0 / 3.0));
  CHECK(p.C1() == 4.0);
  HKParams bad;
  bad.delta = 20;
  try {
    bad.validate();
    FAIL("inadmissible parameters accepted");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("18*C0/delta <= c0") != std::string::npos);
  }
  HKParams inverted;
  inverted.c0 = 3.0;
  CHECK_THROWS_AS(inverted.validate(), ValidationError);
}

TEST_CASE("boundary constants for K = 1, eps = 1, r0 = 1") {
  const auto c = boundary_constants(HKParams{}, 1.0, 1.0, 1.0);
  // 12/c0 = 12 < 36, 36 r0/c0 = 36, 4 C0 + 1 = 9 < 36
  CHECK(c.L0 == 1);
  CHECK(c.L1 == 2);
  CHECK(c.L2 == 1);
  // (K+1)^2 (72 C0/c0)^2 = 4 * 144^2 = 82944
  CHECK(c.L3 == 2 * 82944 + 1 + 1);
  CHECK(c.C2 == 4.0 * 82944);
  // (K+1)(3 C1/a0) = 2 * 36
  CHECK(c.C2_prime == doctest::Approx(72.0).epsilon(1e-14));
  CHECK(c.eta == doctest::Approx(std::log(2.0) / std::log(36.0) / 165890).epsilon(1e-14));
  CHECK(c.K_eps == 5.0);
  CHECK(c.n0 == 1);
  CHECK(c.n1 == 1);
  CHECK(c.k1 == -1);
  CHECK_THROWS_AS(boundary_constants(HKParams{}, 1.0, 1.5, 1.0), ValidationError);
}

TEST_CASE("nets on small spaces") {
  const auto one = FiniteSpace::from_matrix(1, {0.0});
  HKParams p;
  p.k_min = 0;
  p.k_max = 1;
  const auto n1 = select_nets(one, p);
  for (const auto& c : n1.centers) CHECK(c == std::vector<Index>{0});

  const auto z64 = cycle(64);
  const auto nets = select_nets(z64, {});
  CHECK(nets.k_min == 0);
  CHECK(nets.at(0).size() == 64);
  for (int k = 1; k <= nets.k_max; ++k) CHECK(nets.at(k).size() == 1);  // 36^k >= diameter 32

  HKParams clipped;
  clipped.k_min = -3;
  clipped.k_max = 9;
  const auto nc = select_nets(z64, clipped);
  CHECK(nc.k_min == 0);
  CHECK(nc.k_max == nets.k_max);
  CHECK(nc.warnings.size() == 2);
}

TEST_CASE("nets are separated, covering and nested on random points") {
  const auto s = random_point_space(200, 400, 17);
  HKParams p;
  const auto nets = select_nets(s, p);
  for (int k = nets.k_min; k <= nets.k_max; ++k) {
    const double sep = p.c0 * std::pow(p.delta, k);
    const auto& c = nets.at(k);
    for (std::size_t a = 0; a < c.size(); ++a)
      for (std::size_t b = a + 1; b < c.size(); ++b) CHECK(s.dist(c[a], c[b]) >= sep);
    for (Index x = 0; x < s.size(); ++x) {
      double best = 1e300;
      for (Index z : c) best = std::min(best, s.dist(x, z));
      CHECK(best < p.C0 * std::pow(p.delta, k));
    }
    if (k > nets.k_min) {
      const auto& fine = nets.at(k - 1);
      for (Index z : c) CHECK(std::binary_search(fine.begin(), fine.end(), z));
    }
  }
}

TEST_CASE("cubes on Z_64") {
  const auto z64 = cycle(64);
  const auto sys = build_cubes(z64);
  CHECK(sys.finest_separates_points());
  const auto& l0 = sys.level(0);
  const auto& l1 = sys.level(1);
  for (const auto& c : l0.cubes) {
    int containing = 0;
    for (const auto& big : l1.cubes) {
      std::set<Index> m(big.members.begin(), big.members.end());
      bool all = true;
      for (Index x : c.members) all = all && m.count(x);
      containing += all;
    }
    CHECK(containing == 1);
  }
  const auto rep = verify_cube_axioms(sys, z64);
  CHECK(rep.ok());
  CHECK(rep.sandwich_failures == 0);
  CHECK(rep.sandwich_safe_cubes == rep.cubes);
  // single-cube level: Q is the whole space and the diameter 32 <= C1 * 36
  CHECK(l1.cubes.size() == 1);
}

TEST_CASE("one-level system gives Voronoi cells") {
  const auto s = random_point_space(60, 200, 4);
  HKParams p;
  p.k_min = 1;
  p.k_max = 1;
  const auto sys = build_cubes(s, p);
  const auto& lv = sys.level(1);
  for (Index x = 0; x < s.size(); ++x) {
    Index best = 0;
    double bd = 1e300;
    for (const auto& c : lv.cubes)
      if (s.dist(x, c.center) < bd) {
        bd = s.dist(x, c.center);
        best = c.center;
      }
    CHECK(lv.cubes[lv.label[x]].center == best);
  }
}

TEST_CASE("axioms hold exactly on random point spaces and group quotients") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = random_point_space(200, 300, seed);
    const auto rep = verify_cube_axioms(build_cubes(s), s);
    CHECK(rep.partition_failures == 0);
    CHECK(rep.nesting_failures == 0);
    CHECK(rep.parent_failures == 0);
    CHECK(rep.separation_failures == 0);
    CHECK(rep.covering_failures == 0);
  }
  for (const char* g : {"Z_32^2", "H3_8", "Z_4096"}) {
    const auto s = build_group_space(GroupSpec::parse(g)).space;
    const auto rep = verify_cube_axioms(build_cubes(s), s);
    CHECK_MESSAGE(rep.ok(), g);
  }
}

TEST_CASE("corrupted membership is reported") {
  const auto z64 = cycle(64);
  auto sys = build_cubes(z64);
  auto& cubes = sys.levels[0].cubes;
  std::swap(cubes[3].members, cubes[40].members);
  cubes[3].members.push_back(4);
  const auto rep = verify_cube_axioms(sys, z64);
  CHECK(!rep.ok());
  CHECK(rep.partition_failures + rep.nesting_failures > 0);
  CHECK(!rep.messages.empty());
}

TEST_CASE("boundary layers") {
  const auto z64 = cycle(64);
  const auto sys = build_cubes(z64);
  const auto top = layer_measures(sys, z64, sys.k_max, 5.0);
  CHECK(top.inner[0] == 0.0);  // complement empty
  const auto fine = layer_measures(sys, z64, 0, 100.0);
  for (std::size_t c = 0; c < fine.inner.size(); ++c)
    CHECK(fine.inner[c] == sys.level(0).cubes[c].measure);

  // nondecreasing in t
  const auto s = random_point_space(150, 300, 8);
  const auto rs = build_cubes(s);
  const int k = rs.k_min + 1;
  std::vector<double> prev_in(rs.level(k).cubes.size(), 0.0), prev_out = prev_in;
  for (double t : {1.0, 2.0, 5.0, 10.0, 30.0, 100.0, 1000.0}) {
    const auto lm = layer_measures(rs, s, k, t);
    for (std::size_t c = 0; c < prev_in.size(); ++c) {
      CHECK(lm.inner[c] >= prev_in[c]);
      CHECK(lm.outer[c] >= prev_out[c]);
    }
    prev_in = lm.inner;
    prev_out = lm.outer;
  }
}

TEST_CASE("boundary report on Z_4096 stays below the layer bounds") {
  const auto s = cycle(4096);
  const auto sys = build_cubes(s);
  const auto bc = boundary_constants(sys.params, 1.0, 1.0, 1.0);
  const auto rep = boundary_layer_report(sys, s, bc);
  std::size_t in = 0;
  for (const auto& l : rep.layers) {
    if (!l.in_hypotheses) continue;
    ++in;
    // exhaustive count: points of the cube within t of another cube
    CHECK(l.inner <= l.inner_bound);
    CHECK(l.outer <= l.outer_bound);
  }
  CHECK(in > 0);
  CHECK(rep.violations == 0);
  CHECK(rep.outside_hypotheses > 0);
  for (const auto& h : rep.halos) CHECK(h.halo <= h.cube_measure);
}

TEST_CASE("cube systems are deterministic and serialize") {
  const auto s = random_point_space(120, 200, 21);
  const auto a = system_to_json(build_cubes(s)).dump();
  const auto b = system_to_json(build_cubes(s)).dump();
  CHECK(a == b);
  const auto back = system_from_json(nlohmann::json::parse(a));
  CHECK(system_to_json(back).dump() == a);
  CHECK(verify_cube_axioms(back, s).exact_ok());
}
