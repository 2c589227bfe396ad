#include "ergojump/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ergojump/stats.hpp"

namespace ergojump {

namespace {

void check_size(std::span<const double> f, const DyadicSystem& s) {
  if (f.size() != s.size())
    throw ValidationError("function has " + std::to_string(f.size()) + " values, system has " +
                          std::to_string(s.size()) + " points");
}

}  // namespace

std::vector<double> cube_averages(std::span<const double> f, const DyadicSystem& s, int k) {
  check_size(f, s);
  const auto& lv = s.level(k);
  std::vector<double> avg(lv.cubes.size(), 0.0);
  for (std::size_t c = 0; c < lv.cubes.size(); ++c) {
    double sum = 0.0;
    for (Index x : lv.cubes[c].members) sum += s.weights[x] * f[x];
    avg[c] = sum / lv.cubes[c].measure;
  }
  return avg;
}

SampleFunction expectation(std::span<const double> f, const DyadicSystem& s, int k) {
  const auto avg = cube_averages(f, s, k);
  const auto& lv = s.level(k);
  SampleFunction out(f.size());
  for (std::size_t x = 0; x < f.size(); ++x) out[x] = avg[lv.label[x]];
  return out;
}

SampleFunction MartingaleDifferences::reconstruct() const {
  SampleFunction f = coarse;
  for (const auto& d : D)
    for (std::size_t x = 0; x < f.size(); ++x) f[x] += d[x];
  for (std::size_t x = 0; x < f.size(); ++x) f[x] += finest_residual[x];
  return f;
}

MartingaleDifferences differences(std::span<const double> f, const DyadicSystem& s) {
  if (s.levels.size() < 2) throw ValidationError("martingale differences need at least two levels");
  MartingaleDifferences md;
  md.exact = s.finest_separates_points();
  SampleFunction finer = expectation(f, s, s.k_min);
  md.finest_residual.resize(f.size());
  for (std::size_t x = 0; x < f.size(); ++x) md.finest_residual[x] = f[x] - finer[x];
  for (int k = s.k_min + 1; k <= s.k_max; ++k) {
    SampleFunction coarser = expectation(f, s, k);
    SampleFunction d(f.size());
    for (std::size_t x = 0; x < f.size(); ++x) d[x] = finer[x] - coarser[x];
    md.levels.push_back(k);
    md.D.push_back(std::move(d));
    finer = std::move(coarser);
  }
  md.coarse = std::move(finer);
  return md;
}

SampleFunction dyadic_maximal(std::span<const double> f, const DyadicSystem& s) {
  check_size(f, s);
  SampleFunction abs_f(f.begin(), f.end());
  for (auto& v : abs_f) v = std::abs(v);
  SampleFunction m(f.size(), 0.0);
  for (int k = s.k_min; k <= s.k_max; ++k) {
    const auto e = expectation(abs_f, s, k);
    for (std::size_t x = 0; x < f.size(); ++x) m[x] = std::max(m[x], e[x]);
  }
  return m;
}

double weighted_median(std::span<const double> values, std::span<const double> weights) {
  if (values.empty() || values.size() != weights.size())
    throw ValidationError("weighted median needs matching nonempty inputs");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b] || (values[a] == values[b] && a < b);
  });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double cum = 0.0;
  for (std::size_t i : order) {
    cum += weights[i];
    if (cum >= total / 2) return values[i];
  }
  return values[order.back()];
}

SharpMaximal sharp_maximal_bmo(std::span<const double> f, const DyadicSystem& s) {
  check_size(f, s);
  SharpMaximal out;
  out.sharp.assign(f.size(), 0.0);
  for (const auto& lv : s.levels) {
    std::vector<double> osc(lv.cubes.size(), 0.0);
    parallel_for(lv.cubes.size(), [&](std::size_t b, std::size_t e) {
      std::vector<double> vals, ws;
      for (std::size_t c = b; c < e; ++c) {
        const auto& cube = lv.cubes[c];
        vals.clear();
        ws.clear();
        for (Index x : cube.members) {
          vals.push_back(f[x]);
          ws.push_back(s.weights[x]);
        }
        const double med = weighted_median(vals, ws);
        double dev = 0.0;
        for (std::size_t i = 0; i < vals.size(); ++i) dev += ws[i] * std::abs(vals[i] - med);
        osc[c] = dev / cube.measure;
      }
    });
    for (std::size_t x = 0; x < f.size(); ++x) out.sharp[x] = std::max(out.sharp[x], osc[lv.label[x]]);
  }
  for (double v : out.sharp) out.bmo = std::max(out.bmo, v);
  return out;
}

JumpProbe martingale_jump_probe(const DyadicSystem& s, Ensemble ensemble, double p, std::size_t trials,
                                std::uint64_t seed, std::size_t grid_size) {
  if (trials == 0) throw ValidationError("probe needs at least one trial");
  const std::size_t n = s.size();
  JumpProbe probe;
  probe.ratios.resize(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    std::mt19937_64 rng(derive_seed(seed, t));
    const auto f = random_function(n, ensemble, rng);
    const double fnorm = weighted_norm(f, s.weights, p);
    const double fmax = weighted_norm(f, s.weights, kInfinity);
    if (fnorm == 0.0) continue;
    // values[x][level]: the martingale along the levels at x
    std::vector<std::vector<double>> path(n, std::vector<double>(s.levels.size()));
    for (int k = s.k_min; k <= s.k_max; ++k) {
      const auto e = expectation(f, s, k);
      for (std::size_t x = 0; x < n; ++x) path[x][static_cast<std::size_t>(k - s.k_min)] = e[x];
    }
    double best = 0.0;
    for (double lambda : log_grid(1e-3 * fmax, 2.0 * fmax, grid_size)) {
      SampleFunction g(n);
      for (std::size_t x = 0; x < n; ++x)
        g[x] = lambda * std::sqrt(static_cast<double>(jump_count(path[x], lambda)));
      best = std::max(best, weighted_norm(g, s.weights, p));
    }
    probe.ratios[t] = best / fnorm;
  }
  probe.stats = summarize_ratios(probe.ratios);
  return probe;
}

}  // namespace ergojump
