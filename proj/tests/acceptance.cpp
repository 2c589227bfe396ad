// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "ergojump/cubes.hpp"
#include "ergojump/decomposition.hpp"
#include "ergojump/dynamics.hpp"
#include "ergojump/martingale.hpp"
#include "ergojump/operators.hpp"
#include "ergojump/space.hpp"
#include "ergojump/stats.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"

using namespace ergojump;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const char* kSpaces[] = {"Z_64", "Z_32^2", "H3_8"};
// Z_4096 adds a level with 36-point cubes, so b and xi have nontrivial parts.
const char* kMartingaleSpaces[] = {"Z_64", "Z_32^2", "H3_8", "Z_4096"};

// Conditional expectation computed straight from cube membership.
SampleFunction expectation_oracle(const SampleFunction& f, const DyadicSystem& sys, int k) {
  SampleFunction e(f.size());
  for (const auto& cube : sys.level(k).cubes) {
    double mass = 0.0, integral = 0.0;
    for (Index x : cube.members) {
      mass += sys.weights[x];
      integral += sys.weights[x] * f[x];
    }
    for (Index x : cube.members) e[x] = integral / mass;
  }
  return e;
}

double sq_norm(const SampleFunction& f, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i] * f[i];
  return s;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> len(1, 12);
  std::size_t disagreements = 0;
  for (int t = 0; t < 10000; ++t) {
    const auto v = oracle::random_sequence(rng, len(rng), t % 2 == 1);
    std::uniform_real_distribution<double> lam(0.01, t % 2 ? 2.0 : 0.8);
    const double l = lam(rng);
    if (jump_count(v, l) != jump_count_oracle(v, l)) ++disagreements;
  }
  double worst = 0.0;
  std::uniform_int_distribution<std::size_t> len10(1, 10);
  for (int t = 0; t < 1000; ++t) {
    const auto v = oracle::random_sequence(rng, len10(rng), t % 2 == 1);
    for (double q : {1.0, 1.5, 2.0, 3.0}) worst = std::max(worst, std::abs(variation(v, q) - oracle::variation_brute(v, q)));
  }
  const double secs = seconds_since(t0);
  return {disagreements == 0 && worst <= 1e-12 && secs <= 60.0,
          fmt("jump disagreements %zu/10000, variation max error %.3g (tol 1e-12), %.2fs (limit 60s)", disagreements,
              worst, secs)};
}

Outcome criterion2() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> len(1, 64);
  std::size_t jump_v = 0, max_v = 0, up_v = 0, checks = 0;
  for (int t = 0; t < 10000; ++t) {
    const auto v = oracle::random_sequence(rng, len(rng), t % 2 == 1);
    const double v2 = variation(v, 2.0);
    for (double l : lambda_grid(v, 6)) {
      ++checks;
      if (l * std::sqrt(double(jump_count(v, l))) > v2 + 1e-12) ++jump_v;
    }
    double sup = 0.0;
    for (double x : v) sup = std::max(sup, std::abs(x));
    for (double q : {1.0, 1.5, 2.0, 3.0, kInfinity}) {
      ++checks;
      if (sup > std::abs(v.front()) + variation(v, q) + 1e-12) ++max_v;
    }
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 3; ++k) {
      double a = u(rng), b = u(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      ++checks;
      if (upcrossing_count(v, a, b) > 2 * jump_count(v, (b - a) / 2)) ++up_v;
    }
  }
  return {jump_v + max_v + up_v == 0,
          fmt("%zu checks; violations: jump %zu, maximal %zu, upcrossing %zu", checks, jump_v, max_v, up_v)};
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  Outcome o;
  for (const char* name : kSpaces) {
    const auto gs = build_group_space(GroupSpec::parse(name));
    const auto sys = build_cubes(gs.space, HKParams{});
    const auto r = verify_cube_axioms(sys, gs.space);
    const std::size_t exact = r.partition_failures + r.nesting_failures + r.parent_failures + r.separation_failures +
                              r.covering_failures;
    const double rate = 1.0 - double(r.sandwich_failures) / double(r.cubes);
    o.pass = o.pass && exact == 0 && r.sandwich_safe_failures == 0;
    o.detail += fmt("%s: %zu cubes, (i)-(iii) failures %zu, (iv) pass rate %.4f, (iv) within safe radius %zu/%zu; ",
                    name, r.cubes, exact, rate, r.sandwich_safe_cubes - r.sandwich_safe_failures,
                    r.sandwich_safe_cubes);
  }
  const double secs = seconds_since(t0);
  o.pass = o.pass && secs <= 120.0;
  o.detail += fmt("%.2fs (limit 120s)", secs);
  return o;
}

Outcome criterion4() {
  Outcome o;
  for (const char* name : kMartingaleSpaces) {
    const auto gs = build_group_space(GroupSpec::parse(name));
    const auto sys = build_cubes(gs.space, HKParams{});
    double tower = 0.0, parseval = 0.0;
    for (int t = 0; t < 100; ++t) {
      std::mt19937_64 rng(derive_seed(404, static_cast<std::uint64_t>(t)));
      const auto f = random_function(sys.size(), static_cast<Ensemble>(t % 3), rng);
      double scale = 1.0;
      for (double x : f) scale = std::max(scale, std::abs(x));
      for (int j = sys.k_min; j <= sys.k_max; ++j)
        for (int k = sys.k_min; k <= sys.k_max; ++k) {
          const auto lhs = expectation(expectation(f, sys, j), sys, k);
          const auto rhs = expectation_oracle(f, sys, std::max(j, k));
          for (std::size_t x = 0; x < f.size(); ++x) tower = std::max(tower, std::abs(lhs[x] - rhs[x]) / scale);
        }
      // ||f||^2 = ||E_max f||^2 + sum ||E_{k-1} f - E_k f||^2 + ||f - E_min f||^2
      double parts = sq_norm(expectation_oracle(f, sys, sys.k_max), sys.weights);
      for (int k = sys.k_min + 1; k <= sys.k_max; ++k) {
        const auto fine = expectation_oracle(f, sys, k - 1), coarse = expectation_oracle(f, sys, k);
        SampleFunction d(f.size());
        for (std::size_t x = 0; x < f.size(); ++x) d[x] = fine[x] - coarse[x];
        parts += sq_norm(d, sys.weights);
      }
      const auto finest = expectation_oracle(f, sys, sys.k_min);
      SampleFunction res(f.size());
      for (std::size_t x = 0; x < f.size(); ++x) res[x] = f[x] - finest[x];
      parts += sq_norm(res, sys.weights);
      // the library decomposition must telescope to the same total
      const auto md = differences(f, sys);
      double lib = sq_norm(md.coarse, sys.weights) + sq_norm(md.finest_residual, sys.weights);
      for (const auto& d : md.D) lib += sq_norm(d, sys.weights);
      const double total = sq_norm(f, sys.weights);
      parseval = std::max({parseval, std::abs(total - parts) / total, std::abs(total - lib) / total});
    }
    o.pass = o.pass && tower <= 1e-12 && parseval <= 1e-10;
    o.detail += fmt("%s: tower max error %.3g (tol 1e-12), Parseval rel error %.3g (tol 1e-10); ", name, tower,
                    parseval);
  }
  return o;
}

Outcome criterion5() {
  Outcome o;
  const double g_const = 3.0 * 4.0 * std::sqrt(6.0);
  for (const char* name : kMartingaleSpaces) {
    const auto gs = build_group_space(GroupSpec::parse(name));
    const auto sys = build_cubes(gs.space, HKParams{});
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> factor(1.01, 3.0);
    std::size_t failures = 0, stops = 0;
    double worst_rec = 0.0, worst_cancel = 0.0, worst_b = 0.0, worst_xi = 0.0, worst_g = 0.0;
    for (int t = 0; t < 200; ++t) {
      const auto f = random_function(sys.size(), static_cast<Ensemble>(t % 3), rng);
      double f_l1 = 0.0, mass = 0.0, f_inf = 0.0;
      for (std::size_t x = 0; x < f.size(); ++x) {
        f_l1 += sys.weights[x] * std::abs(f[x]);
        mass += sys.weights[x];
        f_inf = std::max(f_inf, std::abs(f[x]));
      }
      const double gamma = factor(rng) * f_l1 / mass;
      const auto r = gundy_decompose(f, sys, gamma, 2.0);
      stops += r.stops.size();
      double rec = 0.0, int_b = 0.0, int_xi = 0.0, g_pp = 0.0;
      for (std::size_t x = 0; x < f.size(); ++x) {
        rec = std::max(rec, std::abs(f[x] - r.g[x] - r.b[x] - r.xi[x]));
        int_b += sys.weights[x] * r.b[x];
        int_xi += sys.weights[x] * r.xi[x];
        g_pp += sys.weights[x] * r.g[x] * r.g[x];
      }
      rec /= std::max(1.0, f_inf);
      const double cancel = std::max({std::abs(int_b), std::abs(int_xi), r.max_b_integral, r.max_xi_integral}) / f_l1;
      const double g_bound = g_const * gamma * f_l1;
      const bool ok = r.ok() && rec <= 1e-12 && cancel <= 1e-12 && r.b_l1 <= 2 * f_l1 * (1 + 1e-9) &&
                      r.xi_l1 <= 4 * f_l1 * (1 + 1e-9) && g_pp <= g_bound * (1 + 1e-9);
      if (!ok) ++failures;
      worst_rec = std::max(worst_rec, rec);
      worst_cancel = std::max(worst_cancel, cancel);
      worst_b = std::max(worst_b, r.b_l1 / f_l1);
      worst_xi = std::max(worst_xi, r.xi_l1 / f_l1);
      worst_g = std::max(worst_g, g_pp / g_bound);
    }
    o.pass = o.pass && failures == 0 && stops > 0;
    o.detail += fmt("%s: %zu/200 failing, %zu stopping cubes, reconstruction %.2g, cancellation %.2g, "
                    "|b|/|f| %.3f (<=2), |xi|/|f| %.3f (<=4), g ratio %.3g (<=1); ",
                    name, failures, stops, worst_rec, worst_cancel, worst_b, worst_xi, worst_g);
  }
  return o;
}

Outcome criterion6() {
  const auto gs = build_group_space(GroupSpec::parse("Z_4096"));
  const auto sys = build_cubes(gs.space, HKParams{});
  const auto cfg = make_operator_config(gs.space, sys, 1.0, 24);
  const OperatorEvaluator ev(gs.space, sys, cfg);
  std::size_t pre = 0, fin = 0, dy = 0, points = 0;
  for (int t = 0; t < 100; ++t) {
    std::mt19937_64 rng(derive_seed(606, static_cast<std::uint64_t>(t)));
    const auto f = random_function(gs.space.size(), static_cast<Ensemble>(t % 3), rng);
    for (const auto& r : ev.domination(f, std::vector<double>{0.1, 0.5, 1.0})) {
      points += r.points;
      pre += r.precursor_violations;
      dy += r.dyadic_violations;
      fin += r.final_violations;
    }
  }
  return {pre + dy + fin == 0,
          fmt("Z_4096, 100 f x 3 lambdas, %zu point checks; violations: precursor %zu, final %zu, dyadic step %zu",
              points, pre, fin, dy)};
}

Outcome criterion7() {
  Outcome o;
  for (const char* name : {"H3_4", "Z_64"}) {
    const auto spec = GroupSpec::parse(name);
    const auto sys = build_system(SystemSpec{SystemKind::regular, spec, 0, 1, 1});
    std::vector<int> radii;
    for (int r = 0; r <= static_cast<int>(sys.safe_radius()); ++r) radii.push_back(r);
    double worst = 0.0;
    std::size_t mismatches = 0;
    for (int t = 0; t < 10; ++t) {
      std::mt19937_64 rng(derive_seed(707, static_cast<std::uint64_t>(t)));
      const auto f = random_function(sys.size(), static_cast<Ensemble>(t % 3), rng);
      for (double lambda : {0.1, 0.5, 1.0}) {
        const auto r = transference_check(spec, f, radii, lambda);
        worst = std::max(worst, r.max_discrepancy);
        mismatches += r.jump_mismatches;
      }
    }
    o.pass = o.pass && worst <= 1e-12 && mismatches == 0;
    o.detail += fmt("%s: max |action - translation| %.3g (tol 1e-12), N_lambda mismatches %zu; ", name, worst,
                    mismatches);
  }
  return o;
}

Outcome criterion8() {
  Outcome o;
  // Z volumes
  const auto z = build_group_space(GroupSpec::parse("Z"), 128, false);
  std::size_t bad_volumes = 0;
  for (int r = 0; r <= 128; ++r)
    if (z.table.volume[static_cast<std::size_t>(r)] != 2.0 * r + 1) ++bad_volumes;
  o.pass = bad_volumes == 0;
  o.detail += fmt("Z volumes off 2r+1: %zu/129; ", bad_volumes);

  const int R = 24;
  for (auto [name, lo, hi] : {std::tuple{"Z^2", 1.8, 2.2}, std::tuple{"H3", 3.7, 4.3}}) {
    const auto g = build_group_space(GroupSpec::parse(name), R, false);
    const auto fit = fit_growth_exponent(g.table.restricted(R / 4, R));
    const bool in = fit.D_G >= lo && fit.D_G <= hi;
    o.pass = o.pass && in;
    o.detail += fmt("%s D_G %.4f in [%.1f, %.1f] over r in [%d, %d]; ", name, fit.D_G, lo, hi, fit.r_min, fit.r_max);
  }

  // annular bound |B_{r+s}| - |B_r| <= K (s/r)^eps |B_r| with K = eps = 1, exhaustively
  std::size_t annular_bad = 0, annular_checks = 0;
  for (int r = 1; r <= 64; ++r)
    for (int s = 1; s <= 64; ++s) {
      const double grow = z.space.ball_measure(0, r + s) - z.space.ball_measure(0, r);
      ++annular_checks;
      if (grow > (double(s) / r) * z.space.ball_measure(0, r) * (1 + 1e-15)) ++annular_bad;
    }
  o.pass = o.pass && annular_bad == 0;
  o.detail += fmt("Z annular K=1 eps=1: %zu/%zu violations; ", annular_bad, annular_checks);

  double means[2];
  int i = 0;
  for (const char* name : {"Z_1024", "Z_2048"}) {
    const auto gs = build_group_space(GroupSpec::parse(name));
    const auto sys = build_cubes(gs.space, HKParams{});
    const auto cfg = make_operator_config(gs.space, sys, 1.0, 24);
    const OperatorEvaluator ev(gs.space, sys, cfg);
    ProbeSettings st;
    st.op = OperatorTag::S;
    st.p = 2.0;
    st.trials = 200;
    st.seed = 808;
    means[i++] = norm_probe(ev, gs.space, st).strong.mean;
  }
  const double change = std::abs(means[0] - means[1]) / std::max(means[0], means[1]);
  o.pass = o.pass && change < 0.2;
  o.detail += fmt("S strong ratio mean %.4f (N=1024) vs %.4f (N=2048), relative change %.3f (< 0.2)", means[0],
                  means[1], change);
  return o;
}

Outcome criterion9() {
  const auto sys = build_system(SystemSpec::parse("rotation:Z_1024:a=1"));
  std::mt19937_64 rng(909);
  const auto f = balanced_signs(sys.size(), rng);
  std::vector<int> radii;
  for (int r = 1; r <= 511; ++r) radii.push_back(r);
  TailStatistic stat;
  stat.lambda = 0.5;
  const auto rep = tail_experiment(sys, f, radii, stat);
  bool monotone = true;
  for (std::size_t n = 1; n < rep.tail.size(); ++n) monotone = monotone && rep.tail[n] <= rep.tail[n - 1];
  const bool negative = rep.fit.valid && rep.fit.slope < 0;
  return {monotone && negative,
          fmt("tail length %zu, non-increasing %s, slope %.4f over %zu points, R^2 %.4f", rep.tail.size(),
              monotone ? "yes" : "no", rep.fit.slope, rep.fit.points, rep.fit.r2)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion10() {
  const std::string config = R"({
    "seed": 1010,
    "space": {"group": "Z_32^2"},
    "verify": {"suites": ["axioms", "boundary", "martingale", "gundy", "domination", "transference"],
               "trials": 4, "gundy_instances": 10},
    "probe": {"operators": ["S", "SV", "A", "Md"], "trials": 10, "D": 5},
    "experiment": {"system": "rotation:Z_1024:a=1", "radii": {"from": 1, "to": 127},
                   "convergence_radii": [1, 8, 64]}
  })";
  const auto c = cli::parse_config(config, "acceptance.json", std::nullopt);
  const auto base = fs::temp_directory_path() / ("ergojump_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  std::size_t files = 0, differing = 0;
  for (const char* command : {"space", "cubes", "verify", "probe", "experiment", "run"}) {
    const auto a = base / command / "a", b = base / command / "b";
    const auto ra = cli::run_command(command, c, a);
    const auto rb = cli::run_command(command, c, b);
    if (ra.files != rb.files) ++differing;
    for (const auto& name : ra.files) {
      ++files;
      if (slurp(a / name) != slurp(b / name)) ++differing;
    }
  }
  fs::remove_all(base);
  return {differing == 0 && files > 0, fmt("%zu files over 6 commands, %zu differ", files, differing)};
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9, criterion10};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %zu: %s %s [%.1fs]\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
