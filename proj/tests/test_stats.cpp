#include <cmath>
#include <random>

#include "doctest.h"
#include "ergojump/stats.hpp"
#include "oracles.hpp"

using namespace ergojump;

using namespace oracle;

TEST_CASE("jump count examples") {
  const std::vector<double> constant(7, 3.0);
  CHECK(jump_count(constant, 0.1) == 0);
  const std::vector<double> a{0, 2, 0, 2};
  CHECK(jump_count(a, 1.0) == 3);
  CHECK(jump_count_oracle(a, 1.0) == 3);
  const std::vector<double> b{0, 0.6, 0};
  CHECK(jump_count(b, 0.5) == 2);
  CHECK(jump_count({}, 1.0) == 0);
  CHECK(jump_count_oracle(std::vector<double>{4.0}, 0.5) == 0);
  CHECK_THROWS_AS(jump_count(a, 0.0), ValidationError);
  CHECK_THROWS_AS(jump_count_oracle(std::vector<double>(21, 0.0), 1.0), ValidationError);
}

TEST_CASE("restarted greedy undercounts where the exact count does not") {
  const std::vector<double> v{0, 0.6, 1.0, 0.4};
  CHECK(greedy_all_starts(v, 0.5) == 1);
  CHECK(jump_count_oracle(v, 0.5) == 2);
  CHECK(jump_count(v, 0.5) == 2);
}

TEST_CASE("jump count agrees with the exhaustive oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> len(0, 12);
  std::uniform_real_distribution<double> lam(0.01, 1.0);
  for (int t = 0; t < 2000; ++t) {
    const auto v = random_sequence(rng, len(rng), t % 2 == 1);
    const double l = lam(rng);
    CHECK(jump_count(v, l) == jump_count_oracle(v, l));
  }
}

TEST_CASE("variation examples and exhaustive agreement") {
  const std::vector<double> v{0, 1, 0};
  CHECK(variation(v, 1.0) == 2.0);
  CHECK(variation(v, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(variation(std::vector<double>{3, 1, 4}, kInfinity) == 3.0);
  CHECK(variation({}, 2.0) == 0.0);
  CHECK_THROWS_AS(variation(v, 0.5), ValidationError);

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> len(0, 10);
  for (int t = 0; t < 300; ++t) {
    const auto a = random_sequence(rng, len(rng), t % 3 == 0);
    for (double q : {1.0, 1.5, 2.0, 3.0, kInfinity})
      CHECK(std::abs(variation(a, q) - variation_brute(a, q)) <= 1e-12 * std::max(1.0, variation_brute(a, q)));
  }
}

TEST_CASE("upcrossings") {
  CHECK(upcrossing_count(std::vector<double>(5, 1.0), 0.0, 2.0) == 0);
  CHECK(upcrossing_count(std::vector<double>{0, 1, 0, 1}, 0.25, 0.75) == 2);
  CHECK(upcrossing_count(std::vector<double>{1, 0}, 0.25, 0.75) == 0);
  CHECK_THROWS_AS(upcrossing_count(std::vector<double>{1}, 1.0, 1.0), ValidationError);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> len(0, 12);
  for (int t = 0; t < 500; ++t) {
    const auto v = random_sequence(rng, len(rng), false);
    CHECK(upcrossing_count(v, 0.3, 0.7) == upcrossing_brute(v, 0.3, 0.7));
  }
}

TEST_CASE("jump functional") {
  const std::vector<double> constant(4, 1.0);
  const std::vector<double> grid{0.1, 1.0};
  CHECK(jump_functional(constant, grid).value == 0.0);
  const std::vector<double> a{0, 2, 0, 2};
  const std::vector<double> one{1.0};
  CHECK(jump_functional(a, one).value == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
  CHECK_THROWS_AS(jump_functional(a, {}), ValidationError);
}

TEST_CASE("domination relations on random sequences") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> len(1, 30);
  for (int t = 0; t < 1000; ++t) {
    const auto a = random_sequence(rng, len(rng), t % 2 == 0);
    const double v2 = variation(a, 2.0);
    const auto grid = lambda_grid(a, 12);
    if (!grid.empty()) CHECK(jump_functional(a, grid).value <= v2 + 1e-12);
    double sup = 0.0;
    for (double x : a) sup = std::max(sup, std::abs(x));
    for (double x : a) CHECK(sup <= std::abs(x) + variation(a, 1.5) + 1e-12);
    CHECK(upcrossing_count(a, 0.2, 0.6) <= 2 * jump_count(a, 0.2));
  }
}

TEST_CASE("scale invariance") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto a = random_sequence(rng, 15, false);
    auto b = a;
    for (auto& x : b) x *= 4.0;
    CHECK(jump_count(b, 4.0 * 0.3) == jump_count(a, 0.3));
    CHECK(variation(b, 2.0) == doctest::Approx(4.0 * variation(a, 2.0)).epsilon(1e-13));
  }
}

TEST_CASE("lambda grids") {
  const auto g = log_grid(0.5, 8.0, 5);
  CHECK(g.size() == 5);
  CHECK(g.front() == 0.5);
  CHECK(g.back() == 8.0);
  CHECK(g[2] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(lambda_grid(std::vector<double>(3, 1.0), 4).empty());
  const auto lg = lambda_grid(std::vector<double>{0.0, 0.25, 1.0}, 3);
  CHECK(lg.front() == 0.25);
  CHECK(lg.back() == 1.0);
  CHECK_THROWS_AS(log_grid(0.0, 1.0, 3), ValidationError);
}

TEST_CASE("scale sequence validation") {
  ScaleSequence s{{1, 2, 2}, {0, 0, 0}};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  ScaleSequence ok{{1, 2, 3}, {0, 1, 0}};
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("fast jump count matches the quadratic recursion on long sequences") {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<std::size_t> len(33, 200);
  std::uniform_real_distribution<double> lam(0.005, 0.8);
  std::uniform_int_distribution<int> coarse(0, 6);
  for (int t = 0; t < 500; ++t) {
    auto v = random_sequence(rng, len(rng), t % 2 == 0);
    if (t % 5 == 0)
      for (auto& x : v) x = coarse(rng) * 0.25;  // many ties and gaps equal to lambda
    const double l = t % 5 == 0 ? 0.25 : lam(rng);
    CHECK(jump_count(v, l) == jump_count_quadratic(v, l));
  }
}
