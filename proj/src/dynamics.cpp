#include "ergojump/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "ergojump/operators.hpp"
#include "ergojump/stats.hpp"

namespace ergojump {

namespace {

std::int64_t mod(std::int64_t v, std::int64_t n) { return ((v % n) + n) % n; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) out.push_back(part);
  return out;
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("bad integer for " + what + ": '" + s + "'");
  }
}

}  // namespace

std::string SystemSpec::name() const {
  switch (kind) {
    case SystemKind::regular:
      return "regular:" + group.name();
    case SystemKind::rotation:
      return "rotation:Z_" + std::to_string(modulus) + ":a=" + std::to_string(a);
    case SystemKind::rotation2:
      return "rotation2:Z_" + std::to_string(modulus) + ":a=" + std::to_string(a) + ",b=" + std::to_string(b);
  }
  return "?";
}

SystemSpec SystemSpec::parse(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() < 2 || parts.size() > 3)
    throw ValidationError("system spec '" + text + "' must look like kind:group[:a=..,b=..]");
  SystemSpec s;
  if (parts[0] == "regular") {
    s.kind = SystemKind::regular;
    s.group = GroupSpec::parse(parts[1]);
    if (!s.group.finite()) throw ValidationError("regular actions need a finite quotient, got " + parts[1]);
    if (parts.size() == 3) throw ValidationError("regular actions take no shift parameters");
    return s;
  }
  if (parts[0] == "rotation")
    s.kind = SystemKind::rotation;
  else if (parts[0] == "rotation2")
    s.kind = SystemKind::rotation2;
  else
    throw ValidationError("unknown system kind '" + parts[0] + "' (expected regular, rotation or rotation2)");
  const auto g = GroupSpec::parse(parts[1]);
  if (g.kind != GroupKind::lattice_quotient)
    throw ValidationError("rotations act on Z_N or Z_N^2, got " + parts[1]);
  s.modulus = g.modulus;
  s.group = g;
  if (parts.size() == 3)
    for (const auto& kv : split(parts[2], ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("expected key=value, got '" + kv + "'");
      const auto key = kv.substr(0, eq);
      const auto v = parse_int(kv.substr(eq + 1), key);
      if (key == "a")
        s.a = v;
      else if (key == "b" && s.kind == SystemKind::rotation2)
        s.b = v;
      else
        throw ValidationError("unknown rotation parameter '" + key + "'");
    }
  return s;
}

void validate_generator_maps(const std::vector<std::vector<Index>>& maps, std::span<const double> mu) {
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto& m = maps[i];
    if (m.size() != mu.size()) throw ValidationError("generator map " + std::to_string(i) + " has the wrong size");
    std::vector<char> hit(m.size(), 0);
    for (std::size_t x = 0; x < m.size(); ++x) {
      if (m[x] >= m.size() || hit[m[x]])
        throw ValidationError("generator map " + std::to_string(i) + " is not a bijection");
      hit[m[x]] = 1;
      if (mu[m[x]] != mu[x])
        throw ValidationError("generator map " + std::to_string(i) + " does not preserve the measure");
    }
  }
}

MPSystem MPSystem::build(const SystemSpec& spec, std::vector<double> mu) {
  MPSystem s;
  s.spec_ = spec;
  std::size_t n = 0;
  switch (spec.kind) {
    case SystemKind::regular: {
      if (!spec.group.finite()) throw ValidationError("regular actions need a finite quotient");
      s.quotient_ = std::make_shared<FinGroup>(spec.group);
      s.acting_ = s.quotient_;
      auto ball = word_ball(*s.quotient_, 1 << 20);
      s.states_ = std::move(ball.elements);
      s.state_index_ = ElementIndex(*s.quotient_, s.states_);
      s.safe_radius_ = ball.radius;
      n = s.states_.size();
      break;
    }
    case SystemKind::rotation:
    case SystemKind::rotation2: {
      if (spec.modulus < 1) throw ValidationError("rotation modulus must be positive");
      const int rank = spec.kind == SystemKind::rotation ? 1 : 2;
      s.acting_ = std::make_shared<FinGroup>(GroupSpec{GroupKind::lattice, rank, 0});
      n = static_cast<std::size_t>(spec.modulus);
      if (rank == 2) n *= n;
      break;
    }
  }
  if (mu.empty()) mu.assign(n, 1.0 / static_cast<double>(n));
  if (mu.size() != n) throw ValidationError("measure has " + std::to_string(mu.size()) + " entries, expected " +
                                            std::to_string(n));
  double total = 0.0;
  for (double w : mu) {
    if (!(w > 0) || !std::isfinite(w)) throw ValidationError("measure weights must be positive and finite");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("measure must be a probability (sum " + fmt(total) + ")");
  s.mu_ = std::move(mu);
  for (const auto& g : s.acting_->generators()) {
    std::vector<Index> m(n);
    for (std::size_t x = 0; x < n; ++x) m[x] = s.act(g, static_cast<Index>(x));
    s.maps_.push_back(std::move(m));
  }
  validate_generator_maps(s.maps_, s.mu_);
  if (!check_homomorphism(s, 16, 0x5eed)) throw ConstructionError("action is not a homomorphism");
  return s;
}

Index MPSystem::act(const Element& g, Index x) const {
  switch (spec_.kind) {
    case SystemKind::regular: {
      const auto& q = *quotient_;
      const auto i = state_index_.find(q.pack(q.multiply(g, states_[x])));
      if (!i) throw ConstructionError("group product left the state set");
      return *i;
    }
    case SystemKind::rotation:
      return static_cast<Index>(mod(static_cast<std::int64_t>(x) + spec_.a * g[0], spec_.modulus));
    case SystemKind::rotation2: {
      const std::int64_t N = spec_.modulus;
      const std::int64_t u = x / N, v = x % N;
      return static_cast<Index>(mod(u + spec_.a * g[0], N) * N + mod(v + spec_.b * g[1], N));
    }
  }
  return x;
}

const Element& MPSystem::state_element(Index x) const {
  if (spec_.kind != SystemKind::regular) throw ValidationError("state elements exist only for regular actions");
  return states_.at(x);
}

std::optional<Index> MPSystem::state_of(const Element& e) const {
  if (spec_.kind != SystemKind::regular) throw ValidationError("state elements exist only for regular actions");
  return state_index_.find(quotient_->pack(e));
}

bool check_homomorphism(const MPSystem& system, std::size_t pairs, std::uint64_t seed) {
  const auto& G = system.acting();
  const auto gens = G.generators();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, gens.size() - 1), len(0, 4);
  auto word = [&] {
    Element e = G.identity();
    for (std::size_t i = len(rng); i > 0; --i) e = G.multiply(e, gens[pick(rng)]);
    return e;
  };
  const std::size_t n = system.size();
  for (std::size_t x = 0; x < n; ++x)
    if (system.act(G.identity(), static_cast<Index>(x)) != x) return false;
  for (std::size_t t = 0; t < pairs; ++t) {
    const Element g = word(), h = word(), gh = G.multiply(g, h);
    for (std::size_t x = 0; x < n; ++x) {
      const auto xi = static_cast<Index>(x);
      if (system.act(gh, xi) != system.act(g, system.act(h, xi))) return false;
    }
  }
  return true;
}

std::vector<SampleFunction> action_averages(const MPSystem& system, std::span<const double> f,
                                            std::span<const int> radii) {
  const std::size_t n = system.size();
  if (f.size() != n) throw ValidationError("function size does not match the system");
  if (radii.empty()) return {};
  std::vector<std::size_t> order(radii.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return radii[i] < radii[j]; });
  const int rmax = radii[order.back()];
  if (radii[order.front()] < 0) throw ValidationError("radii must be nonnegative");
  if (rmax > system.safe_radius())
    throw ValidationError("radius " + std::to_string(rmax) + " exceeds the safe radius " + fmt(system.safe_radius()));
  const auto& G = system.acting();
  const auto ball = word_ball(G, rmax);
  std::vector<Element> inv(ball.elements.size());
  for (std::size_t k = 0; k < inv.size(); ++k) inv[k] = G.invert(ball.elements[k]);
  std::vector<SampleFunction> out(radii.size(), SampleFunction(n));
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t x = lo; x < hi; ++x) {
      double s = 0.0;
      std::size_t k = 0;
      for (std::size_t i : order) {
        const std::size_t end = ball.volume(radii[i]);
        for (; k < end; ++k) s += f[system.act(inv[k], static_cast<Index>(x))];
        out[i][x] = s / static_cast<double>(end);
      }
    }
  });
  return out;
}

SampleFunction action_average(const MPSystem& system, std::span<const double> f, int r) {
  const int radii[] = {r};
  return std::move(action_averages(system, f, radii).front());
}

std::vector<Index> orbit_labels(const MPSystem& system) {
  const std::size_t n = system.size();
  std::vector<Index> parent(n);
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& m : system.generator_maps())
    for (std::size_t x = 0; x < n; ++x) {
      const Index a = find(static_cast<Index>(x)), b = find(m[x]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  std::vector<Index> label(n);
  for (std::size_t x = 0; x < n; ++x) label[x] = find(static_cast<Index>(x));
  return label;
}

SampleFunction orbit_mean(const MPSystem& system, std::span<const double> f) {
  const auto label = orbit_labels(system);
  const auto mu = system.mu();
  std::vector<double> num(f.size(), 0.0), den(f.size(), 0.0);
  for (std::size_t x = 0; x < f.size(); ++x) {
    num[label[x]] += mu[x] * f[x];
    den[label[x]] += mu[x];
  }
  SampleFunction out(f.size());
  for (std::size_t x = 0; x < f.size(); ++x) out[x] = num[label[x]] / den[label[x]];
  return out;
}

TransferenceReport transference_check(const GroupSpec& quotient, std::span<const double> f,
                                      std::span<const int> radii, double lambda) {
  SystemSpec spec;
  spec.kind = SystemKind::regular;
  spec.group = quotient;
  const auto sys = MPSystem::build(spec);
  const auto gs = build_group_space(quotient);
  const auto& space = gs.space;
  const auto* wm = space.word_metric();
  if (f.size() != sys.size()) throw ValidationError("function size does not match the quotient");

  // x = h^{-1}, F(h) = f(h^{-1}) = f(x)
  const std::size_t n = space.size();
  std::vector<Index> x_of(n);
  SampleFunction F(n);
  for (std::size_t h = 0; h < n; ++h) {
    const auto x = sys.state_of(gs.group->invert(wm->points[h]));
    if (!x) throw ConstructionError("quotient element missing from the state set");
    x_of[h] = *x;
    F[h] = f[*x];
  }
  TransferenceReport rep;
  rep.group = quotient.name();
  rep.radii.assign(radii.begin(), radii.end());
  rep.lambda = lambda;
  const auto A = action_averages(sys, f, radii);
  const std::vector<double> rd(radii.begin(), radii.end());
  const auto Ap = translation_averages(space, F, rd);
  std::vector<double> sa(radii.size()), st(radii.size());
  for (std::size_t h = 0; h < n; ++h) {
    for (std::size_t i = 0; i < radii.size(); ++i) {
      sa[i] = A[i][x_of[h]];
      st[i] = Ap[i][h];
      rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(sa[i] - st[i]));
    }
    const std::size_t na = jump_count(sa, lambda), nt = jump_count(st, lambda);
    if (na != nt) ++rep.jump_mismatches;
    for (auto [hist, v] : {std::pair{&rep.histogram_action, na}, std::pair{&rep.histogram_translation, nt}}) {
      if (hist->size() <= v) hist->resize(v + 1, 0);
      ++(*hist)[v];
    }
  }
  const std::size_t len = std::max(rep.histogram_action.size(), rep.histogram_translation.size());
  rep.histogram_action.resize(len, 0);
  rep.histogram_translation.resize(len, 0);
  return rep;
}

TailFit fit_exponential_tail(std::span<const double> tail) {
  TailFit fit;
  std::vector<double> xs, ys;
  for (std::size_t n = 0; n < tail.size(); ++n)
    if (tail[n] > 0) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log(tail[n]));
    }
  fit.points = xs.size();
  if (xs.size() < 3) return fit;
  const double k = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.valid = true;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  fit.c1 = std::exp(fit.intercept);
  fit.c2 = fit.slope < 0 ? std::exp(fit.slope) : 0.0;
  return fit;
}

TailReport tail_experiment(const MPSystem& system, std::span<const double> f, std::vector<int> radii,
                           const TailStatistic& statistic) {
  if (f.size() != system.size()) throw ValidationError("function size does not match the system");
  if (statistic.upcrossings ? !(statistic.a < statistic.b) : !(statistic.lambda > 0))
    throw ValidationError(statistic.upcrossings ? "upcrossings need a < b" : "lambda must be positive");
  TailReport rep;
  rep.system = system.spec().name();
  rep.statistic = statistic;
  SampleFunction g(f.begin(), f.end());
  std::size_t clipped = 0;
  for (auto& v : g)
    if (std::abs(v) > 1.0) {
      v = std::clamp(v, -1.0, 1.0);
      ++clipped;
    }
  if (clipped) rep.notes.push_back("clipped " + std::to_string(clipped) + " values of f to [-1, 1]");
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  const auto keep = std::partition_point(radii.begin(), radii.end(),
                                         [&](int r) { return r <= system.safe_radius(); });
  if (keep != radii.end()) {
    rep.notes.push_back("dropped " + std::to_string(radii.end() - keep) + " radii past the safe radius " +
                        fmt(system.safe_radius()));
    radii.erase(keep, radii.end());
  }
  if (radii.empty()) throw ValidationError("no radii within the safe radius");
  rep.notes.push_back("radius grid " + std::to_string(radii.front()) + ".." + std::to_string(radii.back()) +
                      " (" + std::to_string(radii.size()) + " radii), safe radius " + fmt(system.safe_radius()));
  rep.radii = radii;
  const auto A = action_averages(system, g, radii);
  const std::size_t n = system.size();
  rep.counts.assign(n, 0);
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> seq(radii.size());
    for (std::size_t x = lo; x < hi; ++x) {
      for (std::size_t i = 0; i < radii.size(); ++i) seq[i] = A[i][x];
      rep.counts[x] = statistic.upcrossings ? upcrossing_count(seq, statistic.a, statistic.b)
                                            : jump_count(seq, statistic.lambda);
    }
  });
  const std::size_t nmax = *std::max_element(rep.counts.begin(), rep.counts.end());
  rep.tail.assign(nmax + 1, 0.0);
  const auto mu = system.mu();
  // mass at each count, then strict suffix sums
  std::vector<double> at(nmax + 1, 0.0);
  for (std::size_t x = 0; x < n; ++x) at[rep.counts[x]] += mu[x];
  double above = 0.0;
  for (std::size_t k = nmax + 1; k-- > 0;) {
    rep.tail[k] = above;
    above += at[k];
  }
  rep.fit = fit_exponential_tail(rep.tail);
  if (nmax == 0) rep.notes.push_back("all tails zero; no fit");
  else if (!rep.fit.valid) rep.notes.push_back("fewer than three positive tail values; no fit");
  return rep;
}

std::string TailReport::csv() const {
  std::ostringstream os;
  os << "n,tail\n";
  for (std::size_t n = 0; n < tail.size(); ++n) os << n << ',' << fmt(tail[n]) << '\n';
  return os.str();
}

nlohmann::json TailReport::summary() const {
  nlohmann::json stat = statistic.upcrossings
                            ? nlohmann::json{{"kind", "upcrossings"}, {"a", statistic.a}, {"b", statistic.b}}
                            : nlohmann::json{{"kind", "jumps"}, {"lambda", statistic.lambda}};
  nlohmann::json fitj{{"valid", fit.valid}, {"points", fit.points}};
  if (fit.valid) {
    fitj["slope"] = fit.slope;
    fitj["intercept"] = fit.intercept;
    fitj["r2"] = fit.r2;
    fitj["log_c1"] = fit.intercept;
    if (fit.slope < 0) fitj["log_c2"] = fit.slope;
  }
  bool monotone = true;
  for (std::size_t k = 1; k < tail.size(); ++k) monotone = monotone && tail[k] <= tail[k - 1];
  return {{"system", system},  {"statistic", stat},     {"radii", radii.size()},
          {"max_count", tail.empty() ? 0 : tail.size() - 1},
          {"tail", tail},      {"non_increasing", monotone}, {"fit", fitj}, {"notes", notes}};
}

ConvergenceReport convergence_probe(const MPSystem& system, std::span<const double> f, std::span<const int> radii) {
  ConvergenceReport rep;
  rep.radii.assign(radii.begin(), radii.end());
  const auto A = action_averages(system, f, radii);
  const auto om = orbit_mean(system, f);
  const auto label = orbit_labels(system);
  std::vector<Index> roots(label.begin(), label.end());
  std::sort(roots.begin(), roots.end());
  rep.orbits = static_cast<std::size_t>(std::unique(roots.begin(), roots.end()) - roots.begin());
  for (const auto& a : A) {
    double d = 0.0;
    for (std::size_t x = 0; x < a.size(); ++x) d = std::max(d, std::abs(a[x] - om[x]));
    rep.distance.push_back(d);
  }
  return rep;
}

SampleFunction balanced_signs(std::size_t n, std::mt19937_64& rng) {
  SampleFunction f(n, -1.0);
  std::fill(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(n / 2), 1.0);
  // Fisher-Yates with the engine directly, so the permutation is platform independent
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(f[i - 1], f[j]);
  }
  return f;
}

}  // namespace ergojump
