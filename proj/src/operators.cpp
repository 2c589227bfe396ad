#include "ergojump/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "ergojump/martingale.hpp"
#include "ergojump/stats.hpp"

namespace ergojump {

int n_r0_for(double delta, double r0) {
  if (!(delta > 1.0) || !(r0 > 0.0)) throw ValidationError("n_r0 needs delta > 1 and r0 > 0");
  return ceil_log(delta, r0) - 1;
}

std::vector<double> OperatorConfig::union_radii() const {
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.radii.begin(), b.radii.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> OperatorConfig::dyadic_levels(const DyadicSystem& system) const {
  std::vector<int> out;
  for (int n = n_r0 + 1; n <= n_max; ++n)
    if (system.has_level(n)) out.push_back(n);
  return out;
}

OperatorConfig make_operator_config(const FiniteSpace& space, const DyadicSystem& system, double r0,
                                    std::size_t block_cap, double p) {
  if (block_cap < 2) throw ValidationError("block cap must be at least 2");
  OperatorConfig cfg;
  cfg.delta = system.params.delta;
  cfg.r0 = r0;
  cfg.n_r0 = n_r0_for(cfg.delta, r0);
  cfg.n_max = system.k_max;
  cfg.p = p;
  cfg.block_cap = block_cap;
  const double diam = space.diameter();
  std::vector<double> dists = space.distinct_distances();
  for (int n = cfg.n_r0; n <= cfg.n_max; ++n) {
    RadiusBlock block{n, {}};
    const double anchor = std::pow(cfg.delta, n);
    const double lo = std::max(anchor, r0), hi = std::pow(cfg.delta, n + 1);
    if (anchor >= r0) block.radii.push_back(anchor);
    if (anchor > diam) {
      cfg.notes.push_back("block " + std::to_string(n) + " lies past the diameter; anchor radius only");
    } else {
      for (auto it = std::lower_bound(dists.begin(), dists.end(), lo); it != dists.end() && *it < hi; ++it)
        if (*it > 0.0 && *it != anchor) block.radii.push_back(*it);
      std::sort(block.radii.begin(), block.radii.end());
    }
    if (block.radii.size() > block_cap) {
      const std::size_t m = block.radii.size();
      std::vector<double> kept;
      for (std::size_t i = 0; i < block_cap; ++i) {
        const auto idx = static_cast<std::size_t>(
            std::llround(static_cast<double>(i) * static_cast<double>(m - 1) / static_cast<double>(block_cap - 1)));
        kept.push_back(block.radii[idx]);
      }
      kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
      cfg.notes.push_back("block " + std::to_string(n) + ": " + std::to_string(m) + " radii subsampled to " +
                          std::to_string(kept.size()));
      block.radii = std::move(kept);
    }
    if (block.radii.empty()) cfg.notes.push_back("block " + std::to_string(n) + " is empty (all radii below r0)");
    cfg.blocks.push_back(std::move(block));
  }
  return cfg;
}

bool within_safe_radius(const FiniteSpace& space, double r) { return r <= space.safe_radius(); }

SampleFunction translation_average(const FiniteSpace& space, std::span<const double> f, double r) {
  if (f.size() != space.size()) throw ValidationError("function size does not match the space");
  SampleFunction out(f.size());
  parallel_for(f.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t x = b; x < e; ++x) {
      double s = 0.0, m = 0.0;
      for (Index y : space.ball(static_cast<Index>(x), r)) {
        s += space.weight(y) * f[y];
        m += space.weight(y);
      }
      out[x] = s / m;
    }
  });
  return out;
}

std::vector<SampleFunction> translation_averages(const FiniteSpace& space, std::span<const double> f,
                                                 std::span<const double> radii) {
  if (f.size() != space.size()) throw ValidationError("function size does not match the space");
  std::vector<SampleFunction> out(radii.size(), SampleFunction(f.size()));
  if (radii.empty()) return out;
  std::vector<std::size_t> order(radii.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return radii[i] < radii[j]; });
  const double rmax = radii[order.back()];
  parallel_for(f.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t x = b; x < e; ++x) {
      const Neighborhood nb = space.neighborhood(static_cast<Index>(x), rmax);
      double s = 0.0, m = 0.0;
      std::size_t j = 0;
      for (std::size_t i : order) {
        for (; j < nb.points.size() && nb.dist[j] <= radii[i]; ++j) {
          s += space.weight(nb.points[j]) * f[nb.points[j]];
          m += space.weight(nb.points[j]);
        }
        out[i][x] = s / m;
      }
    }
  });
  return out;
}

BallAverager::BallAverager(const FiniteSpace& space, std::vector<double> radii)
    : n_(space.size()), radii_(std::move(radii)), weights_(space.weights().begin(), space.weights().end()) {
  if (!std::is_sorted(radii_.begin(), radii_.end())) throw ValidationError("averager radii must be sorted");
  const double diam = space.diameter();
  full_from_ = static_cast<std::size_t>(std::lower_bound(radii_.begin(), radii_.end(), diam) - radii_.begin());
  const std::size_t partial = full_from_;
  std::vector<std::vector<Index>> nb(n_);
  std::vector<std::vector<std::uint32_t>> cuts(n_);
  if (partial > 0) {
    const double rcap = radii_[partial - 1];
    parallel_for(n_, [&](std::size_t b, std::size_t e) {
      for (std::size_t x = b; x < e; ++x) {
        auto h = space.neighborhood(static_cast<Index>(x), rcap);
        auto& c = cuts[x];
        c.resize(partial);
        std::size_t j = 0;
        for (std::size_t i = 0; i < partial; ++i) {
          while (j < h.dist.size() && h.dist[j] <= radii_[i]) ++j;
          c[i] = static_cast<std::uint32_t>(j);
        }
        nb[x] = std::move(h.points);
      }
    });
  }
  start_.assign(n_ + 1, 0);
  for (std::size_t x = 0; x < n_; ++x) start_[x + 1] = start_[x] + nb[x].size();
  nbr_.reserve(start_[n_]);
  cut_.reserve(n_ * partial);
  for (std::size_t x = 0; x < n_; ++x) {
    nbr_.insert(nbr_.end(), nb[x].begin(), nb[x].end());
    cut_.insert(cut_.end(), cuts[x].begin(), cuts[x].end());
  }
  measures_.assign(radii_.size(), SampleFunction(n_, 0.0));
  for (std::size_t x = 0; x < n_; ++x) {
    double m = 0.0;
    std::size_t j = start_[x];
    for (std::size_t i = 0; i < partial; ++i) {
      const std::size_t end = start_[x] + cut_[x * partial + i];
      for (; j < end; ++j) m += weights_[nbr_[j]];
      measures_[i][x] = m;
    }
    for (std::size_t i = partial; i < radii_.size(); ++i) measures_[i][x] = space.total_weight();
  }
}

std::vector<SampleFunction> BallAverager::apply(std::span<const double> f) const {
  if (f.size() != n_) throw ValidationError("function size does not match the averager");
  std::vector<SampleFunction> out(radii_.size(), SampleFunction(n_, 0.0));
  const std::size_t partial = full_from_;
  parallel_for(n_, [&](std::size_t b, std::size_t e) {
    for (std::size_t x = b; x < e; ++x) {
      double s = 0.0;
      std::size_t j = start_[x];
      for (std::size_t i = 0; i < partial; ++i) {
        const std::size_t end = start_[x] + cut_[x * partial + i];
        for (; j < end; ++j) s += weights_[nbr_[j]] * f[nbr_[j]];
        out[i][x] = s / measures_[i][x];
      }
    }
  });
  if (partial < radii_.size()) {
    const double mean = weighted_sum(f, weights_) / measures_[partial][0];
    for (std::size_t i = partial; i < radii_.size(); ++i) std::fill(out[i].begin(), out[i].end(), mean);
  }
  return out;
}

OperatorEvaluator::OperatorEvaluator(const FiniteSpace& space, const DyadicSystem& system, OperatorConfig config)
    : space_(&space), system_(&system), config_(std::move(config)) {
  if (config_.delta != system.params.delta)
    throw ValidationError("operator delta differs from the cube system's delta");
  if (space.size() != system.size()) throw ValidationError("space and cube system differ in size");
  dyadic_ = config_.dyadic_levels(system);
  radii_ = config_.union_radii();
  for (int n : dyadic_) {
    const double a = std::pow(config_.delta, n);
    if (!std::binary_search(radii_.begin(), radii_.end(), a)) radii_.insert(std::upper_bound(radii_.begin(), radii_.end(), a), a);
  }
  for (int n : dyadic_) {
    const double a = std::pow(config_.delta, n);
    anchor_.push_back(static_cast<std::size_t>(std::lower_bound(radii_.begin(), radii_.end(), a) - radii_.begin()));
  }
  for (const auto& b : config_.blocks) {
    std::vector<std::size_t> idx;
    for (double r : b.radii)
      idx.push_back(static_cast<std::size_t>(std::lower_bound(radii_.begin(), radii_.end(), r) - radii_.begin()));
    block_index_.push_back(std::move(idx));
  }
  averager_ = std::make_unique<BallAverager>(space, radii_);
}

SampleFunction OperatorEvaluator::square_function(std::span<const double> f) const {
  if (dyadic_.empty()) throw ValidationError("no cube levels above n_r0 for the square function");
  const auto A = averager_->apply(f);
  SampleFunction s(f.size(), 0.0);
  for (std::size_t i = 0; i < dyadic_.size(); ++i) {
    const auto e = expectation(f, *system_, dyadic_[i]);
    for (std::size_t x = 0; x < f.size(); ++x) s[x] += std::pow(A[anchor_[i]][x] - e[x], 2);
  }
  for (auto& v : s) v = std::sqrt(v);
  return s;
}

std::vector<SampleFunction> OperatorEvaluator::block_variations(std::span<const double> f) const {
  const auto A = averager_->apply(f);
  std::vector<SampleFunction> out(block_index_.size(), SampleFunction(f.size(), 0.0));
  parallel_for(f.size(), [&](std::size_t b, std::size_t e) {
    std::vector<double> seq;
    for (std::size_t x = b; x < e; ++x)
      for (std::size_t k = 0; k < block_index_.size(); ++k) {
        seq.clear();
        for (std::size_t i : block_index_[k]) seq.push_back(A[i][x]);
        out[k][x] = variation(seq, 2.0);
      }
  });
  return out;
}

SampleFunction OperatorEvaluator::short_variation(std::span<const double> f) const {
  const auto blocks = block_variations(f);
  SampleFunction s(f.size(), 0.0);
  for (const auto& b : blocks)
    for (std::size_t x = 0; x < f.size(); ++x) s[x] += b[x] * b[x];
  for (auto& v : s) v = std::sqrt(v);
  return s;
}

std::vector<DominationReport> OperatorEvaluator::domination(std::span<const double> f,
                                                            std::span<const double> lambdas) const {
  const std::size_t n = f.size();
  const auto A = averager_->apply(f);
  std::vector<SampleFunction> E;
  for (int k : dyadic_) E.push_back(expectation(f, *system_, k));
  const auto S = dyadic_.empty() ? SampleFunction(n, 0.0) : square_function(f);
  const auto SV = short_variation(f);
  std::vector<DominationReport> reports;
  const double r2 = std::sqrt(2.0);
  for (double lambda : lambdas) {
    if (!(lambda > 0)) throw ValidationError("lambda must be positive");
    DominationReport rep;
    rep.lambda = lambda;
    rep.points = n;
    rep.radii = radii_.size();
    rep.lhs.assign(n, 0.0);
    rep.dyadic_jump.assign(n, 0.0);
    rep.martingale_jump.assign(n, 0.0);
    rep.square = S;
    rep.short_var = SV;
    parallel_for(n, [&](std::size_t b, std::size_t e) {
      std::vector<double> all(radii_.size()), dy(dyadic_.size()), mart(dyadic_.size());
      for (std::size_t x = b; x < e; ++x) {
        for (std::size_t i = 0; i < radii_.size(); ++i) all[i] = A[i][x];
        for (std::size_t i = 0; i < dyadic_.size(); ++i) {
          dy[i] = A[anchor_[i]][x];
          mart[i] = E[i][x];
        }
        rep.lhs[x] = lambda * std::sqrt(static_cast<double>(jump_count(all, lambda)));
        rep.dyadic_jump[x] = 2 * lambda * std::sqrt(static_cast<double>(jump_count(dy, lambda / 6)));
        rep.martingale_jump[x] = 2 * r2 * lambda * std::sqrt(static_cast<double>(jump_count(mart, lambda / 24)));
      }
    });
    for (std::size_t x = 0; x < n; ++x) {
      if (rep.lhs[x] > rep.dyadic_jump[x] + 16 * SV[x]) ++rep.precursor_violations;
      if (rep.dyadic_jump[x] > 96 * r2 * S[x] + rep.martingale_jump[x]) ++rep.dyadic_violations;
      if (rep.lhs[x] > 96 * r2 * S[x] + 16 * SV[x] + rep.martingale_jump[x]) ++rep.final_violations;
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

SampleFunction square_function(const FiniteSpace& space, std::span<const double> f, const DyadicSystem& system,
                               const OperatorConfig& config) {
  return OperatorEvaluator(space, system, config).square_function(f);
}

SampleFunction short_variation(const FiniteSpace& space, std::span<const double> f, const DyadicSystem& system,
                               const OperatorConfig& config) {
  return OperatorEvaluator(space, system, config).short_variation(f);
}

DominationReport domination_check(const FiniteSpace& space, std::span<const double> f, const DyadicSystem& system,
                                  const OperatorConfig& config, double lambda) {
  const double l[] = {lambda};
  return std::move(OperatorEvaluator(space, system, config).domination(f, l).front());
}

const char* operator_name(OperatorTag t) {
  switch (t) {
    case OperatorTag::S:
      return "S";
    case OperatorTag::SV:
      return "SV";
    case OperatorTag::A:
      return "A";
    case OperatorTag::Md:
      return "Md";
  }
  return "?";
}

OperatorTag parse_operator(const std::string& name) {
  for (OperatorTag t : {OperatorTag::S, OperatorTag::SV, OperatorTag::A, OperatorTag::Md})
    if (name == operator_name(t)) return t;
  throw ValidationError("unknown operator '" + name + "' (expected S, SV, A or Md)");
}

namespace {

// sup over gamma > 0 of gamma * m{|g| > gamma}, attained in the limit gamma -> |g(x)|.
double weak_sup(std::span<const double> g, std::span<const double> w) {
  std::vector<std::size_t> order(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(g[a]) > std::abs(g[b]) || (std::abs(g[a]) == std::abs(g[b]) && a < b);
  });
  double best = 0.0, mass = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    mass += w[order[k]];
    // close a run of equal values before evaluating
    if (k + 1 < order.size() && std::abs(g[order[k + 1]]) == std::abs(g[order[k]])) continue;
    best = std::max(best, std::abs(g[order[k]]) * mass);
  }
  return best;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ProbeReport norm_probe(const OperatorEvaluator& eval, const FiniteSpace& space, const ProbeSettings& st) {
  if (st.trials == 0) throw ValidationError("probe needs at least one trial");
  if (st.ensembles.empty()) throw ValidationError("probe needs at least one ensemble");
  const auto& sys = eval.system();
  const auto w = space.weights();
  ProbeReport rep;
  rep.settings = st;
  std::unique_ptr<BallAverager> single;
  if (st.op == OperatorTag::A) {
    single = std::make_unique<BallAverager>(space, std::vector<double>{st.radius});
    if (!within_safe_radius(space, st.radius))
      rep.notes.push_back("radius " + fmt(st.radius) + " exceeds the safe radius; averages see the truncation");
  }
  std::vector<double> strong, weak, bmo;
  for (std::size_t t = 0; t < st.trials; ++t)
    for (std::size_t ei = 0; ei < st.ensembles.size(); ++ei) {
      const std::uint64_t seed = derive_seed(st.seed, t * st.ensembles.size() + ei);
      std::mt19937_64 rng(seed);
      const auto f = random_function(space.size(), st.ensembles[ei], rng);
      SampleFunction g;
      switch (st.op) {
        case OperatorTag::S:
          g = eval.square_function(f);
          break;
        case OperatorTag::SV:
          g = eval.short_variation(f);
          break;
        case OperatorTag::A:
          g = single->apply(f).front();
          break;
        case OperatorTag::Md:
          g = dyadic_maximal(f, sys);
          break;
      }
      const std::string op = operator_name(st.op), ens = ensemble_name(st.ensembles[ei]);
      const double fp = weighted_norm(f, w, st.p), f1 = weighted_norm(f, w, 1.0),
                   finf = weighted_norm(f, w, kInfinity);
      const double gp = weighted_norm(g, w, st.p);
      const double s_ratio = fp > 0 ? gp / fp : 0.0;
      strong.push_back(s_ratio);
      rep.rows.push_back({op, ens, "strong", st.p, t, seed, s_ratio});
      double wk = 0.0;
      if (st.gamma_grid.empty()) {
        wk = weak_sup(g, w);
      } else {
        const double unit = f1 / space.total_weight();
        for (double gm : st.gamma_grid) {
          const double gamma = gm * unit;
          double level = 0.0;
          for (std::size_t x = 0; x < g.size(); ++x)
            if (std::abs(g[x]) > gamma) level += w[x];
          wk = std::max(wk, gamma * level);
        }
      }
      const double w_ratio = f1 > 0 ? wk / f1 : 0.0;
      weak.push_back(w_ratio);
      rep.rows.push_back({op, ens, "weak", 1.0, t, seed, w_ratio});
      if (st.bmo) {
        const double b_ratio = finf > 0 ? sharp_maximal_bmo(g, sys).bmo / finf : 0.0;
        bmo.push_back(b_ratio);
        rep.rows.push_back({op, ens, "bmo", kInfinity, t, seed, b_ratio});
      }
      if (st.op == OperatorTag::A && st.doubling_D > 0) {
        ++rep.d_bound_checks;
        if (gp > std::pow(st.doubling_D, std::isinf(st.p) ? 0.0 : 1.0 / st.p) * fp * (1 + 1e-12))
          ++rep.d_bound_violations;
      }
    }
  rep.strong = summarize_ratios(strong);
  rep.weak = summarize_ratios(weak);
  rep.bmo = summarize_ratios(bmo);
  return rep;
}

std::string ProbeReport::csv() const {
  std::ostringstream os;
  os << "operator,ensemble,kind,p,trial,seed,ratio\n";
  for (const auto& r : rows)
    os << r.op << ',' << r.ensemble << ',' << r.kind << ',' << (std::isinf(r.p) ? "inf" : fmt(r.p)) << ','
       << r.trial << ',' << r.seed << ',' << fmt(r.ratio) << '\n';
  return os.str();
}

nlohmann::json ProbeReport::summary() const {
  auto stats = [](const RatioStats& s) {
    return nlohmann::json{{"count", s.count}, {"max", s.max}, {"mean", s.mean},
                          {"q50", s.q50},     {"q90", s.q90}, {"q99", s.q99}};
  };
  nlohmann::json ens = nlohmann::json::array();
  for (auto e : settings.ensembles) ens.push_back(ensemble_name(e));
  nlohmann::json j{{"operator", operator_name(settings.op)},
                   {"p", std::isinf(settings.p) ? nlohmann::json("inf") : nlohmann::json(settings.p)},
                   {"trials", settings.trials},
                   {"ensembles", ens},
                   {"seed", settings.seed},
                   {"strong", stats(strong)},
                   {"weak", stats(weak)},
                   {"notes", notes}};
  if (settings.bmo) j["bmo"] = stats(bmo);
  if (settings.op == OperatorTag::A) {
    j["radius"] = settings.radius;
    j["d_bound"] = {{"D", settings.doubling_D}, {"checks", d_bound_checks}, {"violations", d_bound_violations}};
  }
  return j;
}

}  // namespace ergojump
