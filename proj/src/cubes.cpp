#include "ergojump/cubes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ergojump {

void HKParams::validate() const {
  if (!(delta > 1.0)) throw ValidationError("HKParams: delta must exceed 1");
  if (!(c0 > 0.0) || !(C0 > c0)) throw ValidationError("HKParams: need 0 < c0 < C0");
  if (18.0 * C0 / delta > c0 * (1 + 1e-12))
    throw ValidationError("HKParams inadmissible: 18*C0/delta <= c0 fails (18*" + std::to_string(C0) +
                          "/" + std::to_string(delta) + " > " + std::to_string(c0) + ")");
  if (k_min && k_max && *k_min > *k_max) throw ValidationError("HKParams: k_min exceeds k_max");
}

BoundaryConstants boundary_constants(const HKParams& p, double K, double epsilon, double r0) {
  p.validate();
  if (!(K > 0.0)) throw ValidationError("annular constant K must be positive");
  if (!(epsilon > 0.0) || epsilon > 1.0) throw ValidationError("annular exponent must lie in (0, 1]");
  if (!(r0 > 0.0)) throw ValidationError("r0 must be positive");
  BoundaryConstants c;
  c.K = K;
  c.epsilon = epsilon;
  c.r0 = r0;
  const double d = p.delta;
  c.L0 = floor_log(d, 12.0 / p.c0) + 1;
  c.L1 = floor_log(d, 36.0 * r0 / p.c0) + 1;
  c.L2 = floor_log(d, 4.0 * p.C0 + 1.0) + 1;
  const double core = (K + 1) * (K + 1) * std::pow(72.0 * p.C0 / p.c0, 2.0 * epsilon);
  c.L3 = static_cast<int>(std::floor(2.0 * core)) + c.L0 + c.L2;
  c.eta = (std::log(2.0) / std::log(d)) / c.L3;
  c.C2 = 4.0 * core;
  c.C2_prime = (K + 1) * std::pow(3.0 * p.C1() / p.a0(), epsilon);
  c.K_eps = (std::pow(2.0, epsilon) + 1.0) * K + std::pow(2.0, epsilon);
  c.n0 = std::max(c.L1 - c.L0, 0);
  c.n1 = ceil_log(d, 2.0 * r0);
  c.k1 = floor_log(d, 1.0 / p.C1());
  return c;
}

const std::vector<Index>& NetLevels::at(int k) const {
  if (k < k_min || k > k_max) throw ValidationError("net level " + std::to_string(k) + " not available");
  return centers[static_cast<std::size_t>(k - k_min)];
}

std::pair<int, int> meaningful_levels(const FiniteSpace& space, const HKParams& params) {
  if (space.size() == 0) throw ValidationError("cannot build cubes on an empty space");
  int lo = 0, hi = 1;
  if (space.size() > 1) {
    lo = ceil_log(params.delta, space.resolution());
    hi = ceil_log(params.delta, space.diameter()) + 1;
  }
  return {lo, hi};
}

namespace {

std::pair<int, int> level_range(const FiniteSpace& space, const HKParams& params,
                                std::vector<std::string>& warnings) {
  auto [lo, hi] = meaningful_levels(space, params);
  int k_lo = params.k_min.value_or(lo);
  int k_hi = params.k_max.value_or(hi);
  if (k_lo < lo) {
    warnings.push_back("levels " + std::to_string(k_lo) + ".." + std::to_string(lo - 1) +
                       " clipped: scale below the minimal positive distance");
    k_lo = lo;
  }
  if (k_hi > hi) {
    warnings.push_back("levels " + std::to_string(hi + 1) + ".." + std::to_string(k_hi) +
                       " clipped: scale above the diameter");
    k_hi = hi;
  }
  if (k_lo > k_hi) throw ValidationError("requested cube levels lie outside the meaningful range");
  return {k_lo, k_hi};
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nearest member of `centers` to x (ties by smaller id), searching within `radius`.
std::pair<Index, double> nearest_center(const FiniteSpace& space, Index x,
                                        const std::vector<Index>& centers,
                                        const std::vector<char>& is_center, double radius) {
  Index best = 0;
  double best_d = kInf;
  auto consider = [&](Index c, double d) {
    if (d < best_d || (d == best_d && c < best)) {
      best = c;
      best_d = d;
    }
  };
  if (centers.size() <= 64) {
    for (Index c : centers) consider(c, space.dist(x, c));
  } else {
    const auto nb = space.neighborhood(x, radius);
    for (std::size_t i = 0; i < nb.points.size(); ++i)
      if (is_center[nb.points[i]]) consider(nb.points[i], nb.dist[i]);
  }
  return {best, best_d};
}

void index_level(DyadicLevel& lv, const std::vector<double>& w) {
  lv.label.assign(w.size(), std::numeric_limits<std::uint32_t>::max());
  for (std::size_t c = 0; c < lv.cubes.size(); ++c) {
    auto& cube = lv.cubes[c];
    cube.measure = 0.0;
    for (Index x : cube.members) {
      lv.label[x] = static_cast<std::uint32_t>(c);
      cube.measure += w[x];
    }
  }
}

void link_children(DyadicSystem& s) {
  for (auto& lv : s.levels)
    for (auto& c : lv.cubes) c.children.clear();
  for (std::size_t i = 0; i + 1 < s.levels.size(); ++i)
    for (std::size_t c = 0; c < s.levels[i].cubes.size(); ++c) {
      const int p = s.levels[i].cubes[c].parent;
      if (p >= 0 && static_cast<std::size_t>(p) < s.levels[i + 1].cubes.size())
        s.levels[i + 1].cubes[static_cast<std::size_t>(p)].children.push_back(static_cast<int>(c));
    }
}

}  // namespace

NetLevels select_nets(const FiniteSpace& space, const HKParams& params) {
  params.validate();
  NetLevels nets;
  std::tie(nets.k_min, nets.k_max) = level_range(space, params, nets.warnings);
  const std::size_t n = space.size();
  std::vector<Index> previous;
  for (int k = nets.k_min; k <= nets.k_max; ++k) {
    const double sep = params.c0 * std::pow(params.delta, k);
    std::vector<char> blocked(n, 0), offered(n, 0);
    std::vector<Index> order;
    order.reserve(n);
    for (Index p : previous) {
      order.push_back(p);
      offered[p] = 1;
    }
    for (Index p = 0; p < n; ++p)
      if (!offered[p]) order.push_back(p);
    std::vector<Index> chosen;
    for (Index p : order) {
      if (blocked[p]) continue;
      chosen.push_back(p);
      const auto nb = space.neighborhood(p, sep);
      for (std::size_t i = 0; i < nb.points.size(); ++i)
        if (nb.dist[i] < sep) blocked[nb.points[i]] = 1;
    }
    std::sort(chosen.begin(), chosen.end());
    nets.centers.push_back(chosen);
    previous = std::move(chosen);
  }
  return nets;
}

const DyadicLevel& DyadicSystem::level(int k) const {
  if (!has_level(k)) throw ValidationError("cube level " + std::to_string(k) + " not in system");
  return levels[static_cast<std::size_t>(k - k_min)];
}

bool DyadicSystem::finest_separates_points() const {
  if (levels.empty()) return false;
  for (const auto& c : levels.front().cubes)
    if (c.members.size() != 1) return false;
  return true;
}

DyadicSystem build_cubes(const FiniteSpace& space, const HKParams& params, const NetLevels& nets) {
  params.validate();
  const std::size_t n = space.size();
  DyadicSystem sys;
  sys.params = params;
  sys.k_min = nets.k_min;
  sys.k_max = nets.k_max;
  sys.warnings = nets.warnings;
  sys.weights.assign(space.weights().begin(), space.weights().end());
  const std::size_t L = nets.centers.size();
  if (L == 0) throw ConstructionError("no cube levels");

  // owner[i][x]: center claiming x at level k_min + i
  std::vector<std::vector<Index>> owner(L, std::vector<Index>(n));
  {
    const auto& centers = nets.centers[0];
    std::vector<char> is_center(n, 0);
    for (Index c : centers) is_center[c] = 1;
    const double radius = params.C0 * std::pow(params.delta, nets.k_min);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t x = b; x < e; ++x) {
        const auto [c, d] = nearest_center(space, static_cast<Index>(x), centers, is_center, radius);
        if (!(d < radius))
          throw ConstructionError("point " + std::to_string(x) + " has no center within C0*delta^k");
        owner[0][x] = c;
      }
    });
  }
  for (std::size_t i = 1; i < L; ++i) {
    const int k = nets.k_min + static_cast<int>(i);
    const auto& parents = nets.centers[i];
    std::vector<char> is_parent(n, 0);
    for (Index c : parents) is_parent[c] = 1;
    const double radius = params.C0 * std::pow(params.delta, k);
    std::vector<Index> parent_of(n, 0);
    for (Index z : nets.centers[i - 1]) {
      const auto [c, d] = nearest_center(space, z, parents, is_parent, radius);
      if (!(d <= radius))
        throw ConstructionError("center " + std::to_string(z) + " at level " + std::to_string(k - 1) +
                                " has no parent within C0*delta^" + std::to_string(k));
      parent_of[z] = c;
    }
    for (std::size_t x = 0; x < n; ++x) owner[i][x] = parent_of[owner[i - 1][x]];
  }

  sys.levels.resize(L);
  for (std::size_t i = 0; i < L; ++i) {
    auto& lv = sys.levels[i];
    lv.k = nets.k_min + static_cast<int>(i);
    std::vector<std::uint32_t> slot(n, std::numeric_limits<std::uint32_t>::max());
    for (Index c : nets.centers[i]) {
      slot[c] = static_cast<std::uint32_t>(lv.cubes.size());
      lv.cubes.push_back(Cube{c, {}, -1, {}, 0.0});
    }
    for (Index x = 0; x < n; ++x) lv.cubes[slot[owner[i][x]]].members.push_back(x);
    // a center with no claimed points would leave an empty cube
    lv.cubes.erase(std::remove_if(lv.cubes.begin(), lv.cubes.end(),
                                  [](const Cube& c) { return c.members.empty(); }),
                   lv.cubes.end());
    index_level(lv, sys.weights);
  }
  for (std::size_t i = 0; i + 1 < L; ++i)
    for (auto& c : sys.levels[i].cubes)
      c.parent = static_cast<int>(sys.levels[i + 1].label[c.members.front()]);
  link_children(sys);
  return sys;
}

DyadicSystem build_cubes(const FiniteSpace& space, const HKParams& params) {
  return build_cubes(space, params, select_nets(space, params));
}

AxiomReport verify_cube_axioms(const DyadicSystem& sys, const FiniteSpace& space) {
  AxiomReport rep;
  const std::size_t n = sys.size();
  const auto& p = sys.params;
  const std::size_t L = sys.levels.size();
  auto note = [&](std::string m) {
    if (rep.messages.size() < 20) rep.messages.push_back(std::move(m));
  };
  constexpr auto kNone = std::numeric_limits<std::uint32_t>::max();

  std::vector<std::vector<std::uint32_t>> label(L, std::vector<std::uint32_t>(n, kNone));
  for (std::size_t i = 0; i < L; ++i) {
    const auto& lv = sys.levels[i];
    rep.cubes += lv.cubes.size();
    std::vector<int> count(n, 0);
    for (std::size_t c = 0; c < lv.cubes.size(); ++c)
      for (Index x : lv.cubes[c].members) {
        if (x >= n) {
          ++rep.partition_failures;
          note("level " + std::to_string(lv.k) + ": member id out of range");
          continue;
        }
        ++count[x];
        label[i][x] = static_cast<std::uint32_t>(c);
      }
    for (std::size_t x = 0; x < n; ++x)
      if (count[x] != 1) {
        ++rep.partition_failures;
        note("(i) level " + std::to_string(lv.k) + ": point " + std::to_string(x) + " lies in " +
             std::to_string(count[x]) + " cubes");
      }
  }

  for (std::size_t i = 0; i < L; ++i) {
    const auto& lv = sys.levels[i];
    for (std::size_t c = 0; c < lv.cubes.size(); ++c) {
      const auto& cube = lv.cubes[c];
      if (cube.members.empty()) {
        ++rep.partition_failures;
        note("(i) level " + std::to_string(lv.k) + ": empty cube");
        continue;
      }
      for (std::size_t j = i + 1; j < L; ++j) {
        const auto first = label[j][cube.members.front()];
        bool same = true;
        for (Index x : cube.members)
          if (x < n && label[j][x] != first) same = false;
        if (!same) {
          ++rep.nesting_failures;
          note("(ii) cube " + std::to_string(c) + " of level " + std::to_string(lv.k) +
               " is split by level " + std::to_string(sys.levels[j].k));
        }
      }
      const int expected = i + 1 < L ? static_cast<int>(label[i + 1][cube.members.front()]) : -1;
      if (cube.parent != expected) {
        ++rep.parent_failures;
        note("(iii) cube " + std::to_string(c) + " of level " + std::to_string(lv.k) +
             " has parent " + std::to_string(cube.parent) + ", membership says " +
             std::to_string(expected));
      }
    }
  }

  for (std::size_t i = 0; i < L; ++i) {
    const auto& lv = sys.levels[i];
    const double scale = std::pow(p.delta, lv.k);
    const double inner_r = p.a0() * scale, outer_r = p.C1() * scale;
    std::vector<char> fail(lv.cubes.size(), 0), safe(lv.cubes.size(), 0);
    parallel_for(lv.cubes.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t c = b; c < e; ++c) {
        const auto& cube = lv.cubes[c];
        safe[c] = space.is_interior(cube.center, outer_r);
        for (Index x : space.ball(cube.center, inner_r))
          if (label[i][x] != c) fail[c] = 1;
        for (Index x : cube.members)
          if (x < n && space.dist(cube.center, x) > outer_r) fail[c] = 1;
      }
    });
    for (std::size_t c = 0; c < lv.cubes.size(); ++c) {
      if (safe[c]) ++rep.sandwich_safe_cubes;
      if (!fail[c]) continue;
      ++rep.sandwich_failures;
      if (safe[c]) ++rep.sandwich_safe_failures;
      note("(iv) cube " + std::to_string(c) + " of level " + std::to_string(lv.k) +
           " violates B(z, a0 delta^k) <= Q <= B(z, C1 delta^k)");
    }

    std::vector<char> is_center(n, 0);
    std::vector<Index> centers;
    for (const auto& cube : lv.cubes)
      if (cube.center < n) {
        is_center[cube.center] = 1;
        centers.push_back(cube.center);
      }
    const double sep = p.c0 * scale, cover = p.C0 * scale;
    for (Index z : centers) {
      const auto nb = space.neighborhood(z, sep);
      for (std::size_t t = 0; t < nb.points.size(); ++t)
        if (nb.points[t] != z && is_center[nb.points[t]] && nb.dist[t] < sep) {
          ++rep.separation_failures;
          note("centers " + std::to_string(z) + " and " + std::to_string(nb.points[t]) +
               " closer than c0 delta^" + std::to_string(lv.k));
          break;
        }
    }
    std::vector<char> uncovered(n, 0);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t x = b; x < e; ++x)
        uncovered[x] = !(nearest_center(space, static_cast<Index>(x), centers, is_center, cover).second < cover);
    });
    for (std::size_t x = 0; x < n; ++x)
      if (uncovered[x]) {
        ++rep.covering_failures;
        note("point " + std::to_string(x) + " is not within C0 delta^" + std::to_string(lv.k) +
             " of a center");
      }
  }
  return rep;
}

LayerMeasures layer_measures(const DyadicSystem& sys, const FiniteSpace& space, int k, double t) {
  const auto& lv = sys.level(k);
  const std::size_t n = sys.size();
  const std::size_t nc = lv.cubes.size();
  LayerMeasures out{std::vector<double>(nc, 0.0), std::vector<double>(nc, 0.0)};
  if (t < space.resolution() || nc == 1) return out;
  // per point: whether it sees another cube, and which other cubes it sees
  std::vector<char> near_other(n, 0);
  std::vector<std::vector<std::uint32_t>> seen(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t x = b; x < e; ++x) {
      const auto own = lv.label[x];
      auto& s = seen[x];
      for (Index y : space.ball(static_cast<Index>(x), t))
        if (lv.label[y] != own) s.push_back(lv.label[y]);
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
      near_other[x] = !s.empty();
    }
  });
  for (std::size_t x = 0; x < n; ++x) {
    if (near_other[x]) out.inner[lv.label[x]] += sys.weights[x];
    for (auto c : seen[x]) out.outer[c] += sys.weights[x];
  }
  return out;
}

BoundaryReport boundary_layer_report(const DyadicSystem& sys, const FiniteSpace& space,
                                     const BoundaryConstants& bc, std::vector<int> L_values,
                                     std::vector<std::pair<int, int>> halo_nk) {
  const double d = sys.params.delta;
  if (L_values.empty())
    for (int L = bc.L0 + 1; L <= bc.L0 + 3; ++L) L_values.push_back(L);
  if (halo_nk.empty())
    for (int l = sys.k_min; l <= sys.k_max; ++l)
      for (int nn = bc.n0 + 1; nn <= bc.n0 + 2; ++nn)
        if (l - nn >= 1) halo_nk.emplace_back(nn, l - nn);

  BoundaryReport rep;
  auto flag = [&](bool in, bool bad) {
    if (!in) ++rep.outside_hypotheses;
    else if (bad) ++rep.violations;
  };
  for (int k = sys.k_min; k <= sys.k_max; ++k) {
    const auto& lv = sys.level(k);
    for (int L : L_values) {
      const double t = std::pow(d, k - L);
      const auto lm = layer_measures(sys, space, k, t);
      const double decay = std::pow(d, -L * bc.eta);
      const bool in = bc.L0 < L && L < k + bc.L0 - bc.L1;
      for (std::size_t c = 0; c < lv.cubes.size(); ++c) {
        LayerSample s;
        s.k = k;
        s.cube = static_cast<std::uint32_t>(c);
        s.L = L;
        s.t = t;
        s.cube_measure = lv.cubes[c].measure;
        s.inner = lm.inner[c];
        s.outer = lm.outer[c];
        s.inner_bound = bc.C2 * decay * s.cube_measure;
        s.outer_bound = bc.C2 * bc.C2_prime * decay * s.cube_measure;
        s.in_hypotheses = in;
        flag(in, s.inner > s.inner_bound * (1 + 1e-12) || s.outer > s.outer_bound * (1 + 1e-12));
        rep.layers.push_back(s);
      }
    }
  }
  for (const auto& [nn, k] : halo_nk) {
    if (!sys.has_level(nn + k)) continue;
    const auto& lv = sys.level(nn + k);
    const auto lm = layer_measures(sys, space, nn + k, std::pow(d, nn));
    const double decay = std::pow(d, -k * bc.eta);
    const bool in = nn > bc.n0 && k > bc.L0;
    for (std::size_t c = 0; c < lv.cubes.size(); ++c) {
      HaloSample h;
      h.n = nn;
      h.k = k;
      h.cube = static_cast<std::uint32_t>(c);
      h.cube_measure = lv.cubes[c].measure;
      h.halo = lm.inner[c];
      h.outer_halo = lm.outer[c];
      h.bound = bc.C2 * decay * h.cube_measure;
      h.outer_bound = bc.C2 * bc.C2_prime * decay * h.cube_measure;
      h.in_hypotheses = in;
      flag(in, h.halo > h.bound * (1 + 1e-12) || h.outer_halo > h.outer_bound * (1 + 1e-12));
      rep.halos.push_back(h);
    }
  }
  return rep;
}

nlohmann::json params_to_json(const HKParams& p) {
  nlohmann::json j{{"delta", p.delta}, {"c0", p.c0}, {"C0", p.C0}};
  if (p.k_min) j["k_min"] = *p.k_min;
  if (p.k_max) j["k_max"] = *p.k_max;
  return j;
}

HKParams params_from_json(const nlohmann::json& j) {
  HKParams p;
  p.delta = j.value("delta", p.delta);
  p.c0 = j.value("c0", p.c0);
  p.C0 = j.value("C0", p.C0);
  if (j.contains("k_min")) p.k_min = j.at("k_min").get<int>();
  if (j.contains("k_max")) p.k_max = j.at("k_max").get<int>();
  return p;
}

nlohmann::json constants_to_json(const BoundaryConstants& c) {
  return {{"L0", c.L0}, {"L1", c.L1}, {"L2", c.L2}, {"L3", c.L3}, {"eta", c.eta},
          {"C2", c.C2}, {"C2_prime", c.C2_prime}, {"K_eps", c.K_eps}, {"k1", c.k1},
          {"n0", c.n0}, {"n1", c.n1}, {"K", c.K}, {"epsilon", c.epsilon}, {"r0", c.r0}};
}

nlohmann::json system_to_json(const DyadicSystem& s) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& lv : s.levels) {
    nlohmann::json cubes = nlohmann::json::array();
    for (const auto& c : lv.cubes)
      cubes.push_back({{"center", c.center}, {"parent", c.parent}, {"members", c.members}});
    levels.push_back({{"k", lv.k}, {"cubes", cubes}});
  }
  return {{"format", "ergojump-cubes"}, {"version", 1},       {"params", params_to_json(s.params)},
          {"k_min", s.k_min},           {"k_max", s.k_max},   {"weights", s.weights},
          {"levels", levels},           {"warnings", s.warnings}};
}

DyadicSystem system_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "ergojump-cubes" || j.value("version", 0) != 1)
    throw ValidationError("not an ergojump-cubes version 1 document");
  DyadicSystem s;
  s.params = params_from_json(j.at("params"));
  s.k_min = j.at("k_min").get<int>();
  s.k_max = j.at("k_max").get<int>();
  s.weights = j.at("weights").get<std::vector<double>>();
  s.warnings = j.value("warnings", std::vector<std::string>{});
  for (const auto& lj : j.at("levels")) {
    DyadicLevel lv;
    lv.k = lj.at("k").get<int>();
    for (const auto& cj : lj.at("cubes"))
      lv.cubes.push_back(Cube{cj.at("center").get<Index>(), cj.at("members").get<std::vector<Index>>(),
                              cj.at("parent").get<int>(), {}, 0.0});
    for (auto& c : lv.cubes)
      for (Index x : c.members)
        if (x >= s.weights.size()) throw ValidationError("cube member id out of range");
    index_level(lv, s.weights);
    s.levels.push_back(std::move(lv));
  }
  if (static_cast<int>(s.levels.size()) != s.k_max - s.k_min + 1)
    throw ValidationError("level count does not match k_min..k_max");
  link_children(s);
  return s;
}

}  // namespace ergojump
