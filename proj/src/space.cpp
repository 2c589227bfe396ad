#include "ergojump/space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace ergojump {

namespace {

constexpr int kWholeGroup = 1 << 30;

void check_weights(const std::vector<double>& w, std::size_t n) {
  if (w.size() != n)
    throw ValidationError("weight count " + std::to_string(w.size()) + " != point count " +
                          std::to_string(n));
  for (double x : w)
    if (!(x > 0.0) || !std::isfinite(x)) throw ValidationError("weights must be finite and positive");
}

}  // namespace

FiniteSpace FiniteSpace::from_matrix(std::size_t n, std::vector<double> dist,
                                     std::vector<double> weights, double r0, std::string label) {
  if (n == 0) throw ValidationError("space must have at least one point");
  if (dist.size() != n * n) throw ValidationError("distance matrix must be n*n");
  if (!(r0 > 0.0)) throw ValidationError("r0 must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i * n + i] != 0.0) throw ValidationError("dist(i,i) must be 0");
    for (std::size_t j = 0; j < n; ++j) {
      const double d = dist[i * n + j];
      if (!(d >= 0.0) || !std::isfinite(d)) throw ValidationError("distances must be finite and >= 0");
      if (d != dist[j * n + i]) throw ValidationError("distance matrix is not symmetric");
      if (i != j && d == 0.0) throw ValidationError("distinct points at distance 0");
    }
  }
  // Triangle inequality: exhaustive for small spaces, a fixed sample otherwise.
  auto check = [&](std::size_t i, std::size_t j, std::size_t k) {
    if (dist[i * n + k] > dist[i * n + j] + dist[j * n + k] + 1e-12 * (1 + dist[i * n + k]))
      throw ValidationError("triangle inequality fails at (" + std::to_string(i) + "," +
                            std::to_string(j) + "," + std::to_string(k) + ")");
  };
  if (n <= 128) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) check(i, j, k);
  } else {
    std::mt19937_64 rng(0x5eed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int t = 0; t < 200000; ++t) check(pick(rng), pick(rng), pick(rng));
  }

  FiniteSpace s;
  s.n_ = n;
  s.weights_ = weights.empty() ? std::vector<double>(n, 1.0) : std::move(weights);
  check_weights(s.weights_, n);
  s.r0_ = r0;
  s.label_ = std::move(label);
  s.provenance_.source = "matrix";
  double diam = 0.0, res = std::numeric_limits<double>::infinity();
  for (double d : dist) {
    diam = std::max(diam, d);
    if (d > 0.0) res = std::min(res, d);
  }
  s.diameter_ = diam;
  s.resolution_ = std::isinf(res) ? 1.0 : res;
  s.matrix_ = std::make_shared<const std::vector<double>>(std::move(dist));
  s.finalize_weights();
  return s;
}

FiniteSpace FiniteSpace::from_group(std::shared_ptr<const FinGroup> group, int radius,
                                    bool with_distances) {
  auto wm = std::make_shared<WordMetric>();
  wm->group = group;
  FiniteSpace s;
  if (group->finite()) {
    wm->table = word_ball(*group, kWholeGroup);
    wm->points = wm->table.elements;
    wm->point_index = wm->table.index;
    wm->point_length = wm->table.length;
    s.diameter_ = wm->table.radius;
  } else {
    if (radius < 1) throw ValidationError("truncation radius must be >= 1");
    wm->table = word_ball(*group, with_distances ? 2 * radius : radius);
    const std::size_t count = wm->table.volume(radius);
    wm->points.assign(wm->table.elements.begin(), wm->table.elements.begin() + static_cast<long>(count));
    wm->point_length.assign(wm->table.length.begin(), wm->table.length.begin() + static_cast<long>(count));
    wm->point_index = ElementIndex(*group, wm->points);
    wm->truncation = radius;
    s.diameter_ = 2.0 * radius;
  }
  s.n_ = wm->points.size();
  s.weights_.assign(s.n_, 1.0);
  s.r0_ = 1.0;
  s.resolution_ = 1.0;
  s.label_ = group->spec().name() + (group->finite() ? "" : "/B" + std::to_string(radius));
  s.provenance_.source = "group";
  s.provenance_.group = group->spec().name();
  s.provenance_.radius = group->finite() ? 0 : radius;
  s.word_ = std::move(wm);
  s.finalize_weights();
  return s;
}

void FiniteSpace::finalize_weights() {
  total_weight_ = 0.0;
  for (double w : weights_) total_weight_ += w;
}

FiniteSpace FiniteSpace::with_weights(std::vector<double> weights) const {
  check_weights(weights, n_);
  FiniteSpace s = *this;
  s.weights_ = std::move(weights);
  s.finalize_weights();
  return s;
}

FiniteSpace FiniteSpace::with_r0(double r0) const {
  if (!(r0 > 0.0)) throw ValidationError("r0 must be positive");
  FiniteSpace s = *this;
  s.r0_ = r0;
  return s;
}

FiniteSpace FiniteSpace::with_provenance(Provenance p) const {
  FiniteSpace s = *this;
  s.provenance_ = std::move(p);
  return s;
}

bool FiniteSpace::uniform_weights() const {
  return std::all_of(weights_.begin(), weights_.end(), [&](double w) { return w == weights_[0]; });
}

double FiniteSpace::dist(Index i, Index j) const {
  if (matrix_) return (*matrix_)[static_cast<std::size_t>(i) * n_ + j];
  const auto& g = *word_->group;
  const Element e = g.multiply(g.invert(word_->points[i]), word_->points[j]);
  const auto pos = word_->table.find(g, e);
  if (!pos) throw CapacityError("distance exceeds the enumerated word-length table");
  return word_->table.length[*pos];
}

double FiniteSpace::safe_radius() const {
  if (word_ && word_->truncation > 0) return word_->truncation / 4.0;
  return diameter_;
}

bool FiniteSpace::is_interior(Index center, double r) const {
  if (!word_ || word_->truncation < 0) return true;
  return word_->point_length[center] + r <= word_->truncation;
}

std::vector<double> FiniteSpace::distinct_distances() const {
  std::vector<double> out;
  if (word_) {
    const int top = static_cast<int>(diameter_);
    for (int r = 0; r <= top; ++r) out.push_back(r);
    return out;
  }
  out = *matrix_;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Neighborhood FiniteSpace::neighborhood(Index center, double r_max) const {
  Neighborhood nb;
  if (word_) {
    const auto& g = *word_->group;
    const auto& t = word_->table;
    const Element& c = word_->points[center];
    for (std::size_t k = 0; k < t.elements.size(); ++k) {
      if (t.length[k] > r_max) break;
      const auto key = g.pack(g.multiply(c, t.elements[k]));
      if (auto p = word_->point_index.find(key)) {
        nb.points.push_back(*p);
        nb.dist.push_back(t.length[k]);
      }
    }
    return nb;
  }
  const double* row = matrix_->data() + static_cast<std::size_t>(center) * n_;
  std::vector<Index> idx;
  for (Index j = 0; j < n_; ++j)
    if (row[j] <= r_max) idx.push_back(j);
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return row[a] < row[b]; });
  nb.points = std::move(idx);
  nb.dist.reserve(nb.points.size());
  for (Index j : nb.points) nb.dist.push_back(row[j]);
  return nb;
}

std::vector<Index> FiniteSpace::ball(Index center, double r) const {
  return neighborhood(center, r).points;
}

double FiniteSpace::ball_measure(Index center, double r) const {
  double m = 0.0;
  for (Index j : ball(center, r)) m += weights_[j];
  return m;
}

BallTable BallTable::restricted(int r_lo, int r_hi) const {
  BallTable t;
  t.center = center;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < r_lo || radii[i] > r_hi) continue;
    t.radii.push_back(radii[i]);
    t.members.push_back(members[i]);
    t.volume.push_back(volume[i]);
  }
  return t;
}

BallTable ball_table(const FiniteSpace& space, Index center, std::span<const int> radii) {
  if (!std::is_sorted(radii.begin(), radii.end()) ||
      std::adjacent_find(radii.begin(), radii.end()) != radii.end())
    throw ValidationError("ball table radii must be strictly increasing");
  BallTable t;
  t.center = center;
  if (radii.empty()) return t;
  const Neighborhood nb = space.neighborhood(center, radii.back());
  std::size_t k = 0;
  double vol = 0.0;
  std::vector<Index> acc;
  for (int r : radii) {
    while (k < nb.points.size() && nb.dist[k] <= r) {
      acc.push_back(nb.points[k]);
      vol += space.weight(nb.points[k]);
      ++k;
    }
    t.radii.push_back(r);
    t.members.push_back(acc);
    t.volume.push_back(vol);
  }
  return t;
}

GroupSpace build_group_space(const GroupSpec& spec, int radius, bool with_distances) {
  GroupSpace gs;
  gs.group = std::make_shared<const FinGroup>(spec);
  gs.space = FiniteSpace::from_group(gs.group, radius, with_distances);
  const int top = gs.group->finite() ? static_cast<int>(gs.space.diameter()) : radius;
  std::vector<int> radii(static_cast<std::size_t>(top) + 1);
  std::iota(radii.begin(), radii.end(), 0);
  gs.table = ball_table(gs.space, 0, radii);
  return gs;
}

FiniteSpace random_point_space(std::size_t n, int side, std::uint64_t seed) {
  if (side < 1 || n > static_cast<std::size_t>(side) * static_cast<std::size_t>(side))
    throw ValidationError("cannot place " + std::to_string(n) + " distinct points in the square");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coord(0, side - 1);
  std::set<std::pair<int, int>> used;
  std::vector<std::pair<int, int>> pts;
  while (pts.size() < n) {
    const std::pair<int, int> p{coord(rng), coord(rng)};
    if (used.insert(p).second) pts.push_back(p);
  }
  std::vector<double> d(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      d[i * n + j] = std::hypot(double(pts[i].first - pts[j].first), double(pts[i].second - pts[j].second));
  FiniteSpace s = FiniteSpace::from_matrix(n, std::move(d), {}, 1.0, "random_points");
  return s.with_provenance({"random_points", "", side, seed});
}

namespace {

// Cumulative measure of closed balls around one center.
struct RadialMeasure {
  std::vector<double> dist;
  std::vector<double> cumulative;
  double operator()(double r) const {
    const auto it = std::upper_bound(dist.begin(), dist.end(), r);
    const auto k = static_cast<std::size_t>(it - dist.begin());
    return k == 0 ? 0.0 : cumulative[k - 1];
  }
};

RadialMeasure radial_measure(const FiniteSpace& space, Index center, double r_max) {
  const Neighborhood nb = space.neighborhood(center, r_max);
  RadialMeasure m;
  m.dist = nb.dist;
  m.cumulative.resize(nb.points.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < nb.points.size(); ++k) {
    acc += space.weight(nb.points[k]);
    m.cumulative[k] = acc;
  }
  return m;
}

}  // namespace

AnnularProfile annular_decay_profile(const FiniteSpace& space, std::span<const Index> centers,
                                     std::span<const double> r_values,
                                     std::span<const double> s_values, double epsilon) {
  if (centers.empty() || r_values.empty() || s_values.empty())
    throw ValidationError("annular decay profile needs nonempty centers, r and s samples");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon must be in (0,1]");
  AnnularProfile prof;
  prof.epsilon = epsilon;
  const double r_top = *std::max_element(r_values.begin(), r_values.end());
  const double s_top = *std::max_element(s_values.begin(), s_values.end());
  for (Index c : centers) {
    if (c >= space.size()) throw ValidationError("center out of range");
    if (!space.is_interior(c, r_top + s_top))
      throw ValidationError("sampled ball around point " + std::to_string(c) +
                            " reaches the truncation boundary");
    const RadialMeasure m = radial_measure(space, c, r_top + s_top);
    for (double r : r_values) {
      if (!(r > 0.0)) throw ValidationError("annular radii must be positive");
      const double mr = m(r);
      for (double s : s_values) {
        if (!(s > 0.0)) throw ValidationError("annular widths must be positive");
        if (s > r) continue;
        const double scale = std::pow(s / r, epsilon) * mr;
        prof.K_hat = std::max(prof.K_hat, (m(r + s) - mr) / scale);
        ++prof.samples;
        if (r >= 2.0 * space.r0()) {
          prof.K_eps_hat = std::max(prof.K_eps_hat, (m(r + s) - m(r - s)) / scale);
          ++prof.two_sided_samples;
        }
      }
    }
  }
  if (prof.samples == 0) throw ValidationError("no (r,s) pair with s <= r in the sample");
  const double two_eps = std::pow(2.0, epsilon);
  prof.K_eps_bound = (two_eps + 1.0) * prof.K_hat + two_eps;
  return prof;
}

std::size_t greedy_cover_count(const FiniteSpace& space, std::span<const Index> targets, double r) {
  if (targets.empty()) return 0;
  std::vector<Index> candidates;
  for (Index t : targets)
    for (Index c : space.ball(t, r)) candidates.push_back(c);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<std::vector<std::uint32_t>> covers(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c)
    for (std::size_t t = 0; t < targets.size(); ++t)
      if (space.dist(candidates[c], targets[t]) <= r) covers[c].push_back(static_cast<std::uint32_t>(t));

  std::vector<char> covered(targets.size(), 0);
  std::size_t remaining = targets.size();
  std::size_t count = 0;
  while (remaining > 0) {
    std::size_t best = 0, best_gain = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      std::size_t gain = 0;
      for (auto t : covers[c]) gain += covered[t] ? 0 : 1;
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    for (auto t : covers[best]) {
      if (!covered[t]) {
        covered[t] = 1;
        --remaining;
      }
    }
    ++count;
  }
  return count;
}

DoublingReport geometric_doubling_check(const FiniteSpace& space, std::size_t D0, double r0,
                                        std::span<const Index> centers) {
  if (D0 < 1) throw ValidationError("D0 must be >= 1");
  DoublingReport rep;
  std::vector<double> radii;
  for (double d : space.distinct_distances())
    if (d > 0.0 && d <= 4.0 * r0) radii.push_back(d);
  if (radii.size() > 16) {
    std::vector<double> picked;
    for (std::size_t i = 0; i < 16; ++i) picked.push_back(radii[i * (radii.size() - 1) / 15]);
    radii = std::move(picked);
  }
  if (radii.empty()) {
    // Single-point space or r0 below the resolution: every ball is one point.
    for (Index c : centers) rep.half_covers.push_back({c, 0.0, 0.0, 1, double(D0)});
    rep.max_cover = centers.empty() ? 0 : 1;
    return rep;
  }
  for (Index c : centers) {
    for (double r : radii) {
      if (!space.is_interior(c, 1.5 * r)) continue;
      const auto members = space.ball(c, r);
      const std::size_t cnt = greedy_cover_count(space, members, r / 2.0);
      rep.half_covers.push_back({c, r, r / 2.0, cnt, double(D0)});
      rep.max_cover = std::max(rep.max_cover, cnt);
      if (cnt > D0) ++rep.violations;
    }
    for (double big : radii) {
      if (!space.is_interior(c, 2.0 * big)) continue;
      const auto members = space.ball(c, big);
      for (double small : radii) {
        if (small > big) break;
        const std::size_t cnt = greedy_cover_count(space, members, small);
        const double bound = std::pow(double(D0), std::floor(std::log2(big / small)) + 1.0);
        rep.general_covers.push_back({c, big, small, cnt, bound});
        if (double(cnt) > bound) ++rep.general_violations;
      }
    }
  }
  return rep;
}

GrowthFit fit_growth_exponent(const BallTable& table) {
  std::vector<double> xs, ys;
  GrowthFit fit;
  for (std::size_t i = 0; i < table.radii.size(); ++i) {
    if (table.radii[i] < 1) continue;
    if (xs.empty()) fit.r_min = table.radii[i];
    fit.r_max = table.radii[i];
    xs.push_back(std::log(double(table.radii[i])));
    ys.push_back(std::log(table.volume[i]));
  }
  if (xs.size() < 2) throw ValidationError("growth fit needs at least 2 radii >= 1");
  const double n = double(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.D_G = sxy / sxx;
  fit.C_V = 1.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double model = std::exp(fit.D_G * xs[i]);
    const double vol = std::exp(ys[i]);
    fit.C_V = std::max({fit.C_V, vol / model, model / vol});
  }
  return fit;
}

WordMetricConstants word_metric_constants(double C_V, double D_G) {
  if (!(C_V > 0.0) || !(D_G > 0.0)) throw ValidationError("C_V and D_G must be positive");
  if (C_V < 1.0) throw ValidationError("C_V must be >= 1");
  const double u = 1.0 / (C_V * C_V * std::pow(10.0, D_G));
  return {std::log1p(u) / std::log(2.0), std::pow(1.0 + u, 3)};
}

std::size_t doubling_constant(std::size_t D0, double K, double epsilon) {
  const double implied = std::floor(std::pow(9.0, epsilon) * (K + 1.0)) + 1.0;
  return std::max(D0, static_cast<std::size_t>(implied));
}

nlohmann::json space_to_json(const FiniteSpace& space) {
  nlohmann::json j;
  j["format"] = "ergojump-space";
  j["version"] = 1;
  j["points"] = space.size();
  j["r0"] = space.r0();
  j["label"] = space.label();
  if (space.uniform_weights() && space.weight(0) == 1.0)
    j["weights"] = "uniform";
  else
    j["weights"] = std::vector<double>(space.weights().begin(), space.weights().end());
  if (const auto* wm = space.word_metric()) {
    j["metric"] = {{"kind", "word"},
                   {"group", wm->group->spec().name()},
                   {"radius", wm->truncation < 0 ? 0 : wm->truncation},
                   {"distances", wm->truncation < 0 || wm->table.radius >= 2 * wm->truncation}};
  } else {
    j["metric"] = {{"kind", "matrix"}, {"data", *space.matrix()}};
  }
  const auto& p = space.provenance();
  j["provenance"] = {{"source", p.source}, {"group", p.group}, {"radius", p.radius}, {"seed", p.seed}};
  return j;
}

FiniteSpace space_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "ergojump-space") throw ValidationError("not an ergojump space file");
    if (j.at("version") != 1) throw ValidationError("unsupported space file version");
    const auto& m = j.at("metric");
    const std::size_t n = j.at("points").get<std::size_t>();
    FiniteSpace s;
    if (m.at("kind") == "word") {
      auto group = std::make_shared<const FinGroup>(GroupSpec::parse(m.at("group").get<std::string>()));
      s = FiniteSpace::from_group(group, m.at("radius").get<int>(), m.value("distances", true));
    } else if (m.at("kind") == "matrix") {
      s = FiniteSpace::from_matrix(n, m.at("data").get<std::vector<double>>(), {}, 1.0,
                                   j.value("label", "matrix"));
    } else {
      throw ValidationError("unknown metric kind");
    }
    if (s.size() != n) throw ValidationError("point count does not match the metric");
    if (j.at("weights").is_array()) s = s.with_weights(j.at("weights").get<std::vector<double>>());
    return s.with_r0(j.at("r0").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed space file: ") + e.what());
  }
}

}  // namespace ergojump
