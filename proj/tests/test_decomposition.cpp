#include <cmath>
#include <random>

#include "doctest.h"
#include "ergojump/decomposition.hpp"

using namespace ergojump;

namespace {

// Two clusters of four points on a line: 0..3 and 100..103.
FiniteSpace two_clusters() {
  const double pos[] = {0, 1, 2, 3, 100, 101, 102, 103};
  std::vector<double> d(64);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) d[i * 8 + j] = std::abs(pos[i] - pos[j]);
  return FiniteSpace::from_matrix(8, d);
}

double global_abs_mean(std::span<const double> f, std::span<const double> w) {
  double s = 0.0, m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    s += w[i] * std::abs(f[i]);
    m += w[i];
  }
  return s / m;
}

// Point id of the residue v on a Z_N word space, where ids follow BFS order.
Index residue(const FiniteSpace& line, int v) {
  const int n = static_cast<int>(line.size());
  v = ((v % n) + n) % n;
  const int a = std::min(v, n - v), b = std::min(std::abs(v - 1), n - std::abs(v - 1));
  const Index one = [&] {
    for (Index x = 0; x < line.size(); ++x)
      if (line.dist(x, 0) == 1) return x;
    return Index{0};
  }();
  for (Index x = 0; x < line.size(); ++x)
    if (line.dist(x, 0) == a && line.dist(x, one) == b) return x;
  return Index{0};
}

}  // namespace

TEST_CASE("g constant") {
  CHECK(gundy_g_constant(2.0) == doctest::Approx(12 * std::sqrt(6.0)).epsilon(1e-14));
  CHECK(gundy_g_constant(1.0) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK_THROWS_AS(gundy_g_constant(0.5), ValidationError);
}

TEST_CASE("hand-computed decomposition on two clusters") {
  const auto s = two_clusters();
  HKParams p;
  p.k_min = 1;
  p.k_max = 2;
  const auto sys = build_cubes(s, p);
  REQUIRE(sys.level(1).cubes.size() == 2);
  REQUIRE(sys.level(2).cubes.size() == 1);
  const std::vector<double> f{8, 0, 0, 0, 0, 0, 0, 0};
  const auto r = gundy_decompose(f, sys, 1.5);
  REQUIRE(r.stops.size() == 1);
  CHECK(r.stops[0].k == 1);
  CHECK(sys.level(1).cubes[r.stops[0].id].members == std::vector<Index>{0, 1, 2, 3});
  CHECK(r.stops[0].average == 2.0);
  CHECK(r.stops[0].parent_average == 1.0);
  const std::vector<double> g{1.5, 1.5, 1.5, 1.5, 0.5, 0.5, 0.5, 0.5};
  const std::vector<double> b{6, -2, -2, -2, 0, 0, 0, 0};
  const std::vector<double> xi{0.5, 0.5, 0.5, 0.5, -0.5, -0.5, -0.5, -0.5};
  for (int i = 0; i < 8; ++i) {
    CHECK(r.g[i] == g[i]);
    CHECK(r.b[i] == b[i]);
    CHECK(r.xi[i] == xi[i]);
  }
  CHECK(r.b_l1 == 12.0);
  CHECK(r.xi_l1 == 4.0);
  CHECK(r.g_pp == 10.0);
  CHECK(r.ok());
}

TEST_CASE("threshold above the maximum leaves f untouched") {
  const auto s = build_group_space(GroupSpec::parse("Z_128")).space;
  const auto sys = build_cubes(s);
  std::mt19937_64 rng(4);
  const auto f = random_function(128, Ensemble::gaussian, rng);
  const auto r = gundy_decompose(f, sys, 100.0);
  CHECK(r.stops.empty());
  for (std::size_t i = 0; i < 128; ++i) {
    CHECK(r.g[i] == f[i]);
    CHECK(r.b[i] == 0.0);
    CHECK(r.xi[i] == 0.0);
  }
}

TEST_CASE("errors") {
  const auto s = build_group_space(GroupSpec::parse("Z_64")).space;
  const auto sys = build_cubes(s);
  const std::vector<double> ones(64, 1.0);
  try {
    gundy_decompose(ones, sys, 0.5);
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("gamma below global average") != std::string::npos);
  }
  CHECK_THROWS_AS(gundy_decompose(ones, sys, 0.0), ValidationError);
  HKParams one;
  one.k_min = 1;
  one.k_max = 1;
  CHECK_THROWS_AS(gundy_decompose(ones, build_cubes(s, one), 2.0), ValidationError);
}

TEST_CASE("decomposition bounds on random instances") {
  std::vector<std::pair<FiniteSpace, DyadicSystem>> cases;
  for (const char* spec : {"Z_512", "Z_24^2", "H3_6"}) {
    auto sp = build_group_space(GroupSpec::parse(spec)).space;
    auto sys = build_cubes(sp);
    cases.emplace_back(std::move(sp), std::move(sys));
  }
  {
    auto sp = random_point_space(200, 500, 17);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    std::vector<double> w(sp.size());
    for (auto& x : w) x = u(rng);
    sp = sp.with_weights(w);
    auto sys = build_cubes(sp);
    cases.emplace_back(std::move(sp), std::move(sys));
  }
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> factor(1.01, 3.0);
  std::size_t with_stops = 0;
  for (const auto& [sp, sys] : cases)
    for (int t = 0; t < 40; ++t) {
      const auto f = random_function(sp.size(), static_cast<Ensemble>(t % 3), rng);
      const double gamma = factor(rng) * global_abs_mean(f, sp.weights());
      for (double p : {1.0, 1.5, 2.0, 3.0}) {
        const auto r = gundy_decompose(f, sys, gamma, p);
        CHECK(r.ok());
        CHECK(r.reconstruction_error <= 1e-12);
        CHECK(r.b_l1 <= 2 * r.f_l1 * (1 + 1e-9));
        CHECK(r.xi_l1 <= 4 * r.f_l1 * (1 + 1e-9));
        CHECK(r.g_pp <= r.g_bound * (1 + 1e-9));
        if (p == 2.0 && !r.stops.empty()) ++with_stops;
        for (std::size_t i = 0; i < r.stops.size(); ++i) {
          CHECK(r.stops[i].abs_average > gamma);
          for (std::size_t j = i + 1; j < r.stops.size(); ++j) {
            // disjoint: no stopping cube contains another
            const auto& a = r.stops[i];
            const auto& b = r.stops[j];
            const auto& qb = sys.level(b.k).cubes[b.id];
            CHECK(sys.level(a.k).label[qb.members.front()] != a.id);
          }
        }
      }
    }
  CHECK(with_stops > 100);
}

TEST_CASE("decomposition json") {
  const auto s = two_clusters();
  HKParams p;
  p.k_min = 1;
  p.k_max = 2;
  const auto r = gundy_decompose(std::vector<double>{8, 0, 0, 0, 0, 0, 0, 0}, build_cubes(s, p), 1.5);
  const auto j = gundy_to_json(r);
  CHECK(j["stopping_cubes"].size() == 1);
  CHECK(j["bounds"]["b_l1"] == 12.0);
  CHECK(j["ok"] == true);
}

TEST_CASE("vitali selection") {
  const auto line = build_group_space(GroupSpec::parse("Z_64")).space;
  const std::vector<Ball> same(5, Ball{3, 2.0});
  CHECK(vitali_select(line, same) == std::vector<std::size_t>{0});

  std::vector<Ball> apart;
  for (int c = 0; c < 64; c += 8) apart.push_back({residue(line, c), 2.0});
  CHECK(vitali_select(line, apart).size() == apart.size());
  CHECK_THROWS_AS(vitali_select(line, std::vector<Ball>{{0, 0.0}}), ValidationError);

  const auto plane = build_group_space(GroupSpec::parse("Z_256^2")).space;
  std::mt19937_64 rng(256);
  std::uniform_int_distribution<Index> pt(0, static_cast<Index>(plane.size() - 1));
  std::uniform_int_distribution<int> rad(1, 24);
  std::vector<Ball> balls;
  for (int i = 0; i < 100; ++i) balls.push_back({pt(rng), static_cast<double>(rad(rng))});
  const auto kept = vitali_select(plane, balls);
  const auto check = verify_vitali(plane, balls, kept);
  CHECK(check.overlapping_pairs == 0);
  CHECK(check.unabsorbed == 0);
  CHECK(check.uncovered_points == 0);
  CHECK(kept.size() < balls.size());
  for (std::size_t i = 1; i < kept.size(); ++i) CHECK(balls[kept[i - 1]].radius >= balls[kept[i]].radius);
}

TEST_CASE("ball intersection in a discrete space") {
  // on Z, B(0,1) and B(3,1) are disjoint although 3 <= 1 + 1 + 1
  const auto line = build_group_space(GroupSpec::parse("Z_64")).space;
  CHECK_FALSE(balls_intersect(line, {residue(line, 0), 1.0}, {residue(line, 3), 1.0}));
  CHECK(balls_intersect(line, {residue(line, 0), 1.0}, {residue(line, 2), 1.0}));
}
