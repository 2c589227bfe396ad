#include "ergojump/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ergojump/martingale.hpp"

namespace ergojump {

double gundy_g_constant(double p) {
  if (!(p >= 1.0) || std::isinf(p)) throw ValidationError("g bound needs 1 <= p < infinity");
  const double m = std::floor(p) + 1.0;
  return 3.0 * std::pow(2.0, p) * std::pow(std::tgamma(m + 1.0), (p - 1.0) / (m - 1.0));
}

bool GundyResult::ok(double rel_slack, double cancel_tol) const {
  const double cancel = cancel_tol * std::max(f_l1, 1e-300);
  return reconstruction_error <= 1e-12 && max_b_integral <= cancel && max_xi_integral <= cancel &&
         b_l1 <= 2 * f_l1 * (1 + rel_slack) && xi_l1 <= 4 * f_l1 * (1 + rel_slack) &&
         g_pp <= g_bound * (1 + rel_slack) && maximality_failures == 0;
}

GundyResult gundy_decompose(std::span<const double> f, const DyadicSystem& system, double gamma, double p) {
  if (!(gamma > 0)) throw ValidationError("gamma must be positive");
  if (f.size() != system.size()) throw ValidationError("function size does not match the cube system");
  if (system.k_max <= system.k_min) throw ValidationError("Gundy decomposition needs at least two levels");
  const std::size_t n = f.size();
  const auto& w = system.weights;
  SampleFunction af(n);
  for (std::size_t i = 0; i < n; ++i) af[i] = std::abs(f[i]);

  GundyResult r;
  r.gamma = gamma;
  r.p = p;
  r.g_bound = gundy_g_constant(p) * std::pow(gamma, p - 1) * weighted_norm(f, w, 1.0);
  r.f_l1 = weighted_norm(f, w, 1.0);

  std::vector<std::vector<double>> abs_avgs, avgs;
  for (int k = system.k_min; k <= system.k_max; ++k) {
    abs_avgs.push_back(cube_averages(af, system, k));
    avgs.push_back(cube_averages(f, system, k));
  }
  auto at = [&](int k) { return static_cast<std::size_t>(k - system.k_min); };

  // covered[x]: x already lies in a stopping cube
  std::vector<char> covered(n, 0);
  for (int k = system.k_max; k >= system.k_min; --k) {
    const auto& lvl = system.level(k);
    const auto& abs_avg = abs_avgs[at(k)];
    const auto& avg = avgs[at(k)];
    for (std::uint32_t id = 0; id < lvl.cubes.size(); ++id) {
      const auto& q = lvl.cubes[id];
      if (covered[q.members.front()] || !(abs_avg[id] > gamma)) continue;
      if (k == system.k_max)
        throw ValidationError("gamma below global average; enlarge system or raise gamma");
      const auto& parent = system.level(k + 1).cubes[static_cast<std::size_t>(q.parent)];
      StoppingCube s;
      s.k = k;
      s.id = id;
      s.parent = static_cast<std::uint32_t>(q.parent);
      s.abs_average = abs_avg[id];
      s.average = avg[id];
      s.parent_average = avgs[at(k + 1)][s.parent];
      s.measure = q.measure;
      s.parent_measure = parent.measure;
      r.stops.push_back(s);
      for (Index x : q.members) covered[x] = 1;
    }
  }

  r.g.assign(f.begin(), f.end());
  r.b.assign(n, 0.0);
  r.xi.assign(n, 0.0);
  for (std::size_t x = 0; x < n; ++x)
    if (covered[x]) r.g[x] = 0.0;
  for (const auto& s : r.stops) {
    const auto& q = system.level(s.k).cubes[s.id];
    const auto& parent = system.level(s.k + 1).cubes[s.parent];
    const double c = s.average - s.parent_average, ratio = s.measure / s.parent_measure;
    for (Index x : q.members) {
      r.g[x] += s.parent_average;
      r.b[x] += f[x] - s.average;
      r.xi[x] += c;
    }
    for (Index x : parent.members) {
      r.g[x] += c * ratio;
      r.xi[x] -= c * ratio;
    }
  }

  // part integrals and norms, recomputed pointwise from the formulas
  parallel_for(r.stops.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      auto& s = r.stops[i];
      const auto& q = system.level(s.k).cubes[s.id];
      const auto& parent = system.level(s.k + 1).cubes[s.parent];
      const double c = s.average - s.parent_average, ratio = s.measure / s.parent_measure;
      for (Index x : q.members) {
        const double bx = f[x] - s.average;
        s.b_integral += w[x] * bx;
        s.b_l1 += w[x] * std::abs(bx);
      }
      const auto& lab = system.level(s.k).label;
      for (Index x : parent.members) {
        const double v = c * ((lab[x] == s.id ? 1.0 : 0.0) - ratio);
        s.xi_integral += w[x] * v;
        s.xi_l1 += w[x] * std::abs(v);
      }
    }
  });

  double fmax = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    fmax = std::max(fmax, std::abs(f[x]));
    r.reconstruction_error = std::max(r.reconstruction_error, std::abs(f[x] - r.g[x] - r.b[x] - r.xi[x]));
  }
  r.reconstruction_error /= std::max(1.0, fmax);
  for (const auto& s : r.stops) {
    r.max_b_integral = std::max(r.max_b_integral, std::abs(s.b_integral));
    r.max_xi_integral = std::max(r.max_xi_integral, std::abs(s.xi_integral));
    r.b_l1 += s.b_l1;
    r.xi_l1 += s.xi_l1;
  }
  for (std::size_t x = 0; x < n; ++x) r.g_pp += w[x] * std::pow(std::abs(r.g[x]), p);

  // maximality: every strict ancestor average of |f| stays <= gamma
  for (const auto& s : r.stops) {
    std::uint32_t id = s.id;
    for (int k = s.k; k < system.k_max; ++k) {
      id = static_cast<std::uint32_t>(system.level(k).cubes[id].parent);
      if (abs_avgs[at(k + 1)][id] > gamma) {
        ++r.maximality_failures;
        break;
      }
    }
  }
  return r;
}

nlohmann::json gundy_to_json(const GundyResult& r) {
  nlohmann::json stops = nlohmann::json::array();
  for (const auto& s : r.stops)
    stops.push_back({{"k", s.k},
                     {"id", s.id},
                     {"parent", s.parent},
                     {"abs_average", s.abs_average},
                     {"average", s.average},
                     {"parent_average", s.parent_average},
                     {"measure", s.measure},
                     {"parent_measure", s.parent_measure},
                     {"b_l1", s.b_l1},
                     {"b_integral", s.b_integral},
                     {"xi_l1", s.xi_l1},
                     {"xi_integral", s.xi_integral}});
  return {{"gamma", r.gamma},
          {"p", r.p},
          {"stopping_cubes", stops},
          {"f_l1", r.f_l1},
          {"bounds",
           {{"reconstruction_error", r.reconstruction_error},
            {"g_pp", r.g_pp},
            {"g_bound", r.g_bound},
            {"b_l1", r.b_l1},
            {"b_bound", 2 * r.f_l1},
            {"max_b_integral", r.max_b_integral},
            {"xi_l1", r.xi_l1},
            {"xi_bound", 4 * r.f_l1},
            {"max_xi_integral", r.max_xi_integral},
            {"maximality_failures", r.maximality_failures}}},
          {"ok", r.ok()}};
}

bool balls_intersect(const FiniteSpace& space, const Ball& a, const Ball& b) {
  const double d = space.dist(a.center, b.center);
  if (d <= std::max(a.radius, b.radius)) return true;  // one center lies in the other ball
  if (d > a.radius + b.radius) return false;
  const Ball& small = a.radius <= b.radius ? a : b;
  const Ball& other = a.radius <= b.radius ? b : a;
  for (Index y : space.ball(small.center, small.radius))
    if (space.dist(y, other.center) <= other.radius) return true;
  return false;
}

std::vector<std::size_t> vitali_select(const FiniteSpace& space, std::span<const Ball> balls) {
  std::vector<std::size_t> order(balls.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (const auto& b : balls) {
    if (!(b.radius > 0)) throw ValidationError("ball radii must be positive");
    if (b.center >= space.size()) throw ValidationError("ball center outside the space");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return balls[i].radius > balls[j].radius; });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    bool free = true;
    for (std::size_t j : kept)
      if (balls_intersect(space, balls[i], balls[j])) {
        free = false;
        break;
      }
    if (free) kept.push_back(i);
  }
  return kept;
}

VitaliCheck verify_vitali(const FiniteSpace& space, std::span<const Ball> balls, std::span<const std::size_t> kept) {
  VitaliCheck c;
  for (std::size_t a = 0; a < kept.size(); ++a)
    for (std::size_t b = a + 1; b < kept.size(); ++b)
      if (balls_intersect(space, balls[kept[a]], balls[kept[b]])) ++c.overlapping_pairs;
  for (const auto& ball : balls) {
    bool absorbed = false;
    for (std::size_t j : kept)
      if (balls[j].radius >= ball.radius && balls_intersect(space, ball, balls[j])) {
        absorbed = true;
        break;
      }
    if (!absorbed) ++c.unabsorbed;
  }
  std::vector<char> in_union(space.size(), 0), in_dilate(space.size(), 0);
  for (const auto& ball : balls)
    for (Index y : space.ball(ball.center, ball.radius)) in_union[y] = 1;
  for (std::size_t j : kept)
    for (Index y : space.ball(balls[j].center, 3 * balls[j].radius)) in_dilate[y] = 1;
  for (std::size_t y = 0; y < space.size(); ++y)
    if (in_union[y] && !in_dilate[y]) ++c.uncovered_points;
  return c;
}

}  // namespace ergojump
