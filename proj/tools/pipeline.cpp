#include "pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ergojump/decomposition.hpp"
#include "ergojump/dynamics.hpp"
#include "ergojump/martingale.hpp"
#include "ergojump/space.hpp"
#include "ergojump/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ergojump::cli {

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace {

int line_at(const std::string& text, std::size_t pos) {
  pos = std::min(pos, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

// Line of the innermost key along a path: each key is searched after the previous one.
int line_of(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  int line = 1;
  for (const auto& key : path) {
    const auto hit = text.find("\"" + key + "\"", pos);
    if (hit == std::string::npos) break;
    pos = hit + key.size() + 2;
    line = line_at(text, hit);
  }
  return line;
}

class Reader {
 public:
  Reader(const json& j, std::vector<std::string> path, const std::string& text, const std::string& file)
      : j_(j), path_(std::move(path)), text_(text), file_(file) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    auto p = path_;
    if (!key.empty()) p.push_back(key);
    std::string where;
    for (const auto& k : p) where += (where.empty() ? "" : ".") + k;
    throw ConfigError(file_, line_of(text_, p), (where.empty() ? "" : where + ": ") + msg);
  }

  void allow(std::initializer_list<const char*> keys) const {
    if (!j_.is_object()) fail("", "expected an object");
    for (const auto& [k, v] : j_.items())
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) fail(k, "unknown key");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  T get(const char* key, T def) const {
    if (!j_.contains(key)) return def;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(key, std::string("wrong type for '") + key + "'");
    }
  }

  Reader sub(const char* key) const {
    auto p = path_;
    p.emplace_back(key);
    if (!j_.at(key).is_object()) fail(key, "expected an object");
    return Reader(j_.at(key), p, text_, file_);
  }

  const json& at(const char* key) const { return j_.at(key); }

 private:
  const json& j_;
  std::vector<std::string> path_;
  const std::string& text_;
  const std::string& file_;
};

std::vector<int> parse_radii(const Reader& r, const char* key) {
  if (!r.has(key)) return {};
  const auto& v = r.at(key);
  if (v.is_array()) {
    auto out = r.get<std::vector<int>>(key, {});
    for (int x : out)
      if (x < 0) r.fail(key, "radii must be nonnegative");
    return out;
  }
  if (!v.is_object()) r.fail(key, "expected a list or {\"from\", \"to\", \"step\"}");
  const auto s = r.sub(key);
  s.allow({"from", "to", "step"});
  const int from = s.get<int>("from", 1), to = s.get<int>("to", 64), step = s.get<int>("step", 1);
  if (from < 0 || to < from || step < 1) s.fail("", "need 0 <= from <= to and step >= 1");
  std::vector<int> out;
  for (int x = from; x <= to; x += step) out.push_back(x);
  return out;
}

}  // namespace

Config parse_config(const std::string& text, const std::string& path, std::optional<std::uint64_t> seed) {
  Config c;
  c.path = path;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::string msg = e.what();
    const auto cut = msg.find("parse error");
    throw ConfigError(path, line_at(text, e.byte == 0 ? 0 : e.byte - 1),
                      cut == std::string::npos ? msg : msg.substr(cut));
  }
  const Reader top(j, {}, text, path);
  top.allow({"seed", "space", "hk", "operators", "verify", "probe", "experiment"});
  c.seed = top.get<std::uint64_t>("seed", 0);
  if (seed) c.seed = *seed;
  j["seed"] = c.seed;

  if (top.has("space")) {
    const auto s = top.sub("space");
    s.allow({"group", "radius", "random_points", "matrix", "weights", "r0"});
    const int kinds = s.has("group") + s.has("random_points") + s.has("matrix");
    if (kinds != 1) s.fail("", "give exactly one of group, random_points, matrix");
    auto& sp = c.space;
    if (s.has("group")) {
      sp.kind = "group";
      sp.group = s.get<std::string>("group", "");
      try {
        GroupSpec::parse(sp.group);
      } catch (const ValidationError& e) {
        s.fail("group", e.what());
      }
      sp.radius = s.get<int>("radius", 0);
      if (sp.radius < 0) s.fail("radius", "truncation radius must be nonnegative");
      if (!GroupSpec::parse(sp.group).finite() && sp.radius == 0)
        s.fail("group", "infinite groups need a truncation radius");
    } else if (s.has("random_points")) {
      sp.kind = "random_points";
      const auto rp = s.sub("random_points");
      rp.allow({"n", "side", "seed"});
      sp.n = rp.get<std::size_t>("n", 100);
      sp.side = rp.get<int>("side", 300);
      sp.point_seed = rp.get<std::uint64_t>("seed", 0);
      if (sp.n < 1 || sp.side < 1 || static_cast<double>(sp.n) > double(sp.side) * sp.side)
        rp.fail("", "need 1 <= n <= side^2");
    } else {
      sp.kind = "matrix";
      const auto m = s.sub("matrix");
      m.allow({"n", "dist"});
      sp.n = m.get<std::size_t>("n", 0);
      sp.dist = m.get<std::vector<double>>("dist", {});
      if (sp.dist.size() != sp.n * sp.n) m.fail("dist", "expected n*n distances");
    }
    sp.weights = s.get<std::vector<double>>("weights", {});
    sp.r0 = s.get<double>("r0", 1.0);
    if (!(sp.r0 > 0)) s.fail("r0", "r0 must be positive");
  }

  if (top.has("hk")) {
    const auto h = top.sub("hk");
    h.allow({"delta", "c0", "C0", "k_min", "k_max"});
    c.hk.delta = h.get<double>("delta", c.hk.delta);
    c.hk.c0 = h.get<double>("c0", c.hk.c0);
    c.hk.C0 = h.get<double>("C0", c.hk.C0);
    if (h.has("k_min")) c.hk.k_min = h.get<int>("k_min", 0);
    if (h.has("k_max")) c.hk.k_max = h.get<int>("k_max", 0);
    try {
      c.hk.validate();
    } catch (const ValidationError& e) {
      h.fail(h.has("C0") ? "C0" : (h.has("delta") ? "delta" : ""), e.what());
    }
  }

  if (top.has("operators")) {
    const auto o = top.sub("operators");
    o.allow({"r0", "block_cap"});
    c.operators.r0 = o.get<double>("r0", 1.0);
    c.operators.block_cap = o.get<std::size_t>("block_cap", 24);
    if (!(c.operators.r0 > 0)) o.fail("r0", "r0 must be positive");
    if (c.operators.block_cap < 2) o.fail("block_cap", "block cap must be at least 2");
  }

  if (top.has("verify")) {
    const auto v = top.sub("verify");
    v.allow({"suites", "trials", "gundy_instances", "gundy_p", "lambdas", "K", "epsilon"});
    auto& vs = c.verify;
    vs.suites = v.get<std::vector<std::string>>("suites", vs.suites);
    static const std::vector<std::string> known{"axioms", "boundary", "martingale", "gundy", "domination",
                                                "transference"};
    for (const auto& s : vs.suites)
      if (std::find(known.begin(), known.end(), s) == known.end())
        v.fail("suites", "unknown suite '" + s + "' (known: axioms, boundary, martingale, gundy, domination, "
                         "transference)");
    vs.trials = v.get<std::size_t>("trials", vs.trials);
    vs.gundy_instances = v.get<std::size_t>("gundy_instances", vs.gundy_instances);
    vs.gundy_p = v.get<double>("gundy_p", vs.gundy_p);
    vs.lambdas = v.get<std::vector<double>>("lambdas", vs.lambdas);
    vs.K = v.get<double>("K", vs.K);
    vs.epsilon = v.get<double>("epsilon", vs.epsilon);
    if (!(vs.gundy_p >= 1)) v.fail("gundy_p", "p must be at least 1");
    for (double l : vs.lambdas)
      if (!(l > 0)) v.fail("lambdas", "lambdas must be positive");
  }

  if (top.has("probe")) {
    const auto p = top.sub("probe");
    p.allow({"operators", "p", "trials", "ensembles", "gamma_grid", "radius", "D", "bmo"});
    auto& ps = c.probe;
    ps.present = true;
    ps.operators = p.get<std::vector<std::string>>("operators", ps.operators);
    for (const auto& o : ps.operators) try {
        parse_operator(o);
      } catch (const ValidationError& e) {
        p.fail("operators", e.what());
      }
    if (p.has("p")) {
      const auto& pv = p.at("p");
      if (pv.is_string() && pv.get<std::string>() == "inf")
        ps.p = kInfinity;
      else
        ps.p = p.get<double>("p", 2.0);
      if (!(ps.p >= 1)) p.fail("p", "p must be at least 1 or \"inf\"");
    }
    ps.trials = p.get<std::size_t>("trials", ps.trials);
    if (ps.trials == 0) p.fail("trials", "need at least one trial");
    if (p.has("ensembles")) {
      ps.ensembles.clear();
      for (const auto& e : p.get<std::vector<std::string>>("ensembles", {})) try {
          ps.ensembles.push_back(parse_ensemble(e));
        } catch (const ValidationError& err) {
          p.fail("ensembles", err.what());
        }
      if (ps.ensembles.empty()) p.fail("ensembles", "need at least one ensemble");
    }
    ps.gamma_grid = p.get<std::vector<double>>("gamma_grid", {});
    ps.radius = p.get<double>("radius", ps.radius);
    ps.D = p.get<double>("D", ps.D);
    ps.bmo = p.get<bool>("bmo", ps.bmo);
  }

  if (top.has("experiment")) {
    const auto e = top.sub("experiment");
    e.allow({"system", "function", "lambda", "upcrossings", "radii", "convergence_radii"});
    auto& es = c.experiment;
    es.present = true;
    es.system = e.get<std::string>("system", es.system);
    try {
      SystemSpec::parse(es.system);
    } catch (const ValidationError& err) {
      e.fail("system", err.what());
    }
    es.function = e.get<std::string>("function", es.function);
    if (es.function != "balanced") try {
        parse_ensemble(es.function);
      } catch (const ValidationError&) {
        e.fail("function", "function must be \"balanced\" or an ensemble name");
      }
    es.lambda = e.get<double>("lambda", es.lambda);
    if (!(es.lambda > 0)) e.fail("lambda", "lambda must be positive");
    if (e.has("upcrossings")) {
      const auto ab = e.get<std::vector<double>>("upcrossings", {});
      if (ab.size() != 2 || !(ab[0] < ab[1])) e.fail("upcrossings", "expected [a, b] with a < b");
      es.upcrossings = std::pair{ab[0], ab[1]};
    }
    es.radii = parse_radii(e, "radii");
    if (es.radii.empty()) {
      for (int r = 1; r <= 64; ++r) es.radii.push_back(r);
    }
    es.convergence_radii = parse_radii(e, "convergence_radii");
  }

  c.effective = j;
  c.sha256 = sha256_hex(j.dump());
  return c;
}

Config load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, 1, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path, seed);
}

namespace {

// Stream ids for derive_seed; fixed so each suite's randomness is independent of the others.
enum Stream : std::uint64_t { kMartingale = 1, kGundy, kDomination, kTransference, kProbe, kExperiment };

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

class Writer {
 public:
  Writer(const fs::path& dir, const std::string& sha, CommandResult& result) : dir_(dir), sha_(sha), result_(result) {
    fs::create_directories(dir_);
  }

  void json_file(const std::string& name, json j) {
    j["config_sha256"] = sha_;
    text(name, j.dump(2) + "\n");
  }
  void csv_file(const std::string& name, const std::string& body) {
    text(name, "# config_sha256=" + sha_ + "\n" + body);
  }
  void text(const std::string& name, const std::string& body) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir_ / name).string());
    out << body;
    if (std::find(result_.files.begin(), result_.files.end(), name) == result_.files.end())
      result_.files.push_back(name);
  }

 private:
  fs::path dir_;
  std::string sha_;
  CommandResult& result_;
};

FiniteSpace build_space(const SpaceSection& s) {
  FiniteSpace sp;
  if (s.kind == "group")
    sp = build_group_space(GroupSpec::parse(s.group), s.radius).space;
  else if (s.kind == "random_points")
    sp = random_point_space(s.n, s.side, s.point_seed);
  else
    sp = FiniteSpace::from_matrix(s.n, s.dist);
  if (!s.weights.empty()) sp = sp.with_weights(s.weights);
  if (s.r0 != 1.0) sp = sp.with_r0(s.r0);
  return sp;
}

SampleFunction draw(std::size_t n, Ensemble e, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_function(n, e, rng);
}

struct Suite {
  explicit Suite(std::string n = {}) : name(std::move(n)) {}
  std::string name;
  std::size_t checks = 0;
  std::size_t failures = 0;
  json detail = json::object();
  std::vector<std::string> messages;
  bool pass() const { return failures == 0; }
};

Suite suite_axioms(const FiniteSpace& space, const DyadicSystem& sys) {
  Suite s{"axioms"};
  const auto r = verify_cube_axioms(sys, space);
  s.checks = r.cubes;
  s.failures = r.partition_failures + r.nesting_failures + r.parent_failures + r.separation_failures +
               r.covering_failures + r.sandwich_safe_failures;
  s.detail = {{"cubes", r.cubes},
              {"partition_failures", r.partition_failures},
              {"nesting_failures", r.nesting_failures},
              {"parent_failures", r.parent_failures},
              {"separation_failures", r.separation_failures},
              {"covering_failures", r.covering_failures},
              {"sandwich_failures", r.sandwich_failures},
              {"sandwich_safe_cubes", r.sandwich_safe_cubes},
              {"sandwich_safe_failures", r.sandwich_safe_failures},
              {"sandwich_pass_rate",
               r.cubes ? 1.0 - static_cast<double>(r.sandwich_failures) / static_cast<double>(r.cubes) : 1.0}};
  s.messages = r.messages;
  return s;
}

Suite suite_boundary(const FiniteSpace& space, const DyadicSystem& sys, const Config& c) {
  Suite s{"boundary"};
  const auto constants = boundary_constants(c.hk, c.verify.K, c.verify.epsilon, space.r0());
  const auto r = boundary_layer_report(sys, space, constants);
  s.checks = r.layers.size() + r.halos.size() - r.outside_hypotheses;
  s.failures = r.violations;
  s.detail = {{"constants", constants_to_json(constants)},
              {"layer_samples", r.layers.size()},
              {"halo_samples", r.halos.size()},
              {"outside_hypotheses", r.outside_hypotheses},
              {"violations", r.violations}};
  return s;
}

Suite suite_martingale(const DyadicSystem& sys, const Config& c) {
  Suite s{"martingale"};
  if (sys.k_max <= sys.k_min) {
    s.failures = 1;
    s.messages.push_back("martingale suite needs at least two cube levels");
    return s;
  }
  double worst_tower = 0.0, worst_parseval = 0.0;
  std::size_t tower_fail = 0, parseval_fail = 0;
  for (std::size_t t = 0; t < c.verify.trials; ++t) {
    const auto f = draw(sys.size(), static_cast<Ensemble>(t % 3), derive_seed(c.seed, kMartingale * 1000003 + t));
    const double scale = std::max(1.0, weighted_norm(f, sys.weights, kInfinity));
    std::vector<SampleFunction> E;
    for (int k = sys.k_min; k <= sys.k_max; ++k) E.push_back(expectation(f, sys, k));
    for (int j = sys.k_min; j <= sys.k_max; ++j)
      for (int k = sys.k_min; k <= sys.k_max; ++k) {
        const auto ekj = expectation(E[static_cast<std::size_t>(j - sys.k_min)], sys, k);
        const auto& direct = E[static_cast<std::size_t>(std::max(j, k) - sys.k_min)];
        double err = 0.0;
        for (std::size_t x = 0; x < f.size(); ++x) err = std::max(err, std::abs(ekj[x] - direct[x]));
        worst_tower = std::max(worst_tower, err / scale);
        ++s.checks;
        if (err > 1e-12 * scale) ++tower_fail;
      }
    const auto md = differences(f, sys);
    double rhs = std::pow(weighted_norm(md.coarse, sys.weights, 2), 2) +
                 std::pow(weighted_norm(md.finest_residual, sys.weights, 2), 2);
    for (const auto& d : md.D) rhs += std::pow(weighted_norm(d, sys.weights, 2), 2);
    const double lhs = std::pow(weighted_norm(f, sys.weights, 2), 2);
    const double rel = lhs > 0 ? std::abs(lhs - rhs) / lhs : std::abs(rhs);
    worst_parseval = std::max(worst_parseval, rel);
    ++s.checks;
    if (rel > 1e-10) ++parseval_fail;
  }
  s.failures = tower_fail + parseval_fail;
  s.detail = {{"trials", c.verify.trials},
              {"tower_max_error", worst_tower},
              {"tower_tolerance", 1e-12},
              {"tower_failures", tower_fail},
              {"parseval_max_relative_error", worst_parseval},
              {"parseval_tolerance", 1e-10},
              {"parseval_failures", parseval_fail}};
  return s;
}

Suite suite_gundy(const DyadicSystem& sys, const Config& c) {
  Suite s{"gundy"};
  std::mt19937_64 rng(derive_seed(c.seed, kGundy));
  std::uniform_real_distribution<double> factor(1.01, 3.0);
  double worst_rec = 0.0, worst_b = 0.0, worst_xi = 0.0, worst_g = 0.0;
  std::size_t stops = 0;
  for (std::size_t t = 0; t < c.verify.gundy_instances; ++t) {
    const auto f = draw(sys.size(), static_cast<Ensemble>(t % 3), derive_seed(c.seed, kGundy * 1000003 + t));
    double mean = 0.0;
    for (std::size_t x = 0; x < f.size(); ++x) mean += sys.weights[x] * std::abs(f[x]);
    double total = 0.0;
    for (double w : sys.weights) total += w;
    const double gamma = factor(rng) * mean / total;
    const auto r = gundy_decompose(f, sys, gamma, c.verify.gundy_p);
    ++s.checks;
    if (!r.ok()) {
      ++s.failures;
      if (s.messages.size() < 5) s.messages.push_back("instance " + std::to_string(t) + " fails a decomposition bound");
    }
    stops += r.stops.size();
    worst_rec = std::max(worst_rec, r.reconstruction_error);
    if (r.f_l1 > 0) {
      worst_b = std::max(worst_b, r.b_l1 / r.f_l1);
      worst_xi = std::max(worst_xi, r.xi_l1 / r.f_l1);
      worst_g = std::max(worst_g, r.g_pp / r.g_bound);
    }
  }
  s.detail = {{"instances", c.verify.gundy_instances},
              {"p", c.verify.gundy_p},
              {"stopping_cubes", stops},
              {"max_reconstruction_error", worst_rec},
              {"max_b_ratio", worst_b},
              {"b_ratio_bound", 2.0},
              {"max_xi_ratio", worst_xi},
              {"xi_ratio_bound", 4.0},
              {"max_g_ratio", worst_g},
              {"g_ratio_bound", 1.0}};
  return s;
}

Suite suite_domination(const FiniteSpace& space, const DyadicSystem& sys, const Config& c) {
  Suite s{"domination"};
  const auto cfg = make_operator_config(space, sys, c.operators.r0, c.operators.block_cap);
  const OperatorEvaluator ev(space, sys, cfg);
  std::size_t pre = 0, dy = 0, fin = 0;
  for (std::size_t t = 0; t < c.verify.trials; ++t) {
    const auto f =
        draw(space.size(), static_cast<Ensemble>(t % 3), derive_seed(c.seed, kDomination * 1000003 + t));
    for (const auto& r : ev.domination(f, c.verify.lambdas)) {
      s.checks += 3 * r.points;
      pre += r.precursor_violations;
      dy += r.dyadic_violations;
      fin += r.final_violations;
    }
  }
  s.failures = pre + dy + fin;
  s.detail = {{"trials", c.verify.trials},
              {"lambdas", c.verify.lambdas},
              {"n_r0", cfg.n_r0},
              {"radii", cfg.union_radii().size()},
              {"precursor_violations", pre},
              {"dyadic_violations", dy},
              {"final_violations", fin},
              {"notes", cfg.notes}};
  return s;
}

Suite suite_transference(const Config& c) {
  Suite s{"transference"};
  if (c.space.kind != "group" || !GroupSpec::parse(c.space.group).finite()) {
    s.failures = 1;
    s.messages.push_back("transference needs a finite quotient group space");
    return s;
  }
  const auto spec = GroupSpec::parse(c.space.group);
  const auto sys = build_system(SystemSpec{SystemKind::regular, spec, 0, 1, 1});
  std::vector<int> radii;
  for (int r = 0; r <= static_cast<int>(sys.safe_radius()); ++r) radii.push_back(r);
  double worst = 0.0;
  std::size_t mismatches = 0;
  for (std::size_t t = 0; t < c.verify.trials; ++t) {
    const auto f = draw(sys.size(), Ensemble::gaussian, derive_seed(c.seed, kTransference * 1000003 + t));
    for (double lambda : c.verify.lambdas) {
      const auto r = transference_check(spec, f, radii, lambda);
      worst = std::max(worst, r.max_discrepancy);
      mismatches += r.jump_mismatches;
      s.checks += sys.size();
    }
  }
  s.failures = mismatches + (worst > 1e-12 ? 1 : 0);
  s.detail = {{"trials", c.verify.trials},
              {"radii", radii.size()},
              {"max_discrepancy", worst},
              {"tolerance", 1e-12},
              {"jump_mismatches", mismatches}};
  return s;
}

void write_summary(const fs::path& out, const std::string& sha, CommandResult& result) {
  Writer w(out, sha, result);
  w.text("summary.txt", render_report(out));
}

void cmd_space(const Config& c, const FiniteSpace& space, Writer& w) {
  json j{{"seed", c.seed},
         {"size", space.size()},
         {"diameter", space.diameter()},
         {"resolution", space.resolution()},
         {"safe_radius", space.safe_radius()},
         {"label", space.label()},
         {"space", space_to_json(space)}};
  if (c.space.kind == "group") {
    std::ostringstream csv;
    csv << "r,volume\n";
    const int rmax = static_cast<int>(space.diameter());
    std::vector<int> radii;
    for (int r = 0; r <= rmax; ++r) radii.push_back(r);
    const auto table = ball_table(space, 0, radii);
    for (std::size_t i = 0; i < radii.size(); ++i) csv << radii[i] << ',' << fmt(table.volume[i]) << '\n';
    w.csv_file("growth.csv", csv.str());
    // past a quarter of the diameter quotient balls wrap and stop growing like the group's
    if (rmax >= 8) {
      const auto fit = fit_growth_exponent(table.restricted(std::max(1, rmax / 16), rmax / 4));
      j["growth_fit"] = {{"D_G", fit.D_G}, {"C_V", fit.C_V}, {"r_min", fit.r_min}, {"r_max", fit.r_max}};
    }
  }
  w.json_file("space.json", j);
}

void cmd_cubes(const Config& c, const FiniteSpace& space, const DyadicSystem& sys, Writer& w) {
  json levels = json::array();
  for (const auto& lv : sys.levels) levels.push_back({{"k", lv.k}, {"cubes", lv.cubes.size()}});
  json j{{"seed", c.seed},
         {"params", params_to_json(c.hk)},
         {"constants", constants_to_json(boundary_constants(c.hk, c.verify.K, c.verify.epsilon, space.r0()))},
         {"levels", levels},
         {"warnings", sys.warnings},
         {"system", system_to_json(sys)}};
  w.json_file("cubes.json", j);
}

void cmd_verify(const Config& c, const FiniteSpace& space, const DyadicSystem& sys,
                const std::vector<std::string>& suites, Writer& w, CommandResult& result) {
  json all = json::object();
  std::ostringstream csv;
  csv << "suite,pass,checks,failures\n";
  for (const auto& name : suites) {
    Suite s;
    if (name == "axioms")
      s = suite_axioms(space, sys);
    else if (name == "boundary")
      s = suite_boundary(space, sys, c);
    else if (name == "martingale")
      s = suite_martingale(sys, c);
    else if (name == "gundy")
      s = suite_gundy(sys, c);
    else if (name == "domination")
      s = suite_domination(space, sys, c);
    else if (name == "transference")
      s = suite_transference(c);
    else
      throw ValidationError("unknown suite '" + name + "'");
    all[name] = {{"pass", s.pass()}, {"checks", s.checks}, {"failures", s.failures}, {"detail", s.detail},
                 {"messages", s.messages}};
    csv << name << ',' << (s.pass() ? "true" : "false") << ',' << s.checks << ',' << s.failures << '\n';
    if (!s.pass()) {
      result.exit_code = 1;
      result.failures.push_back("suite " + name + ": " + std::to_string(s.failures) + " failing checks");
      for (const auto& m : s.messages) result.failures.push_back("  " + m);
    }
  }
  json j{{"seed", c.seed}, {"suites", all}, {"order", suites}};
  w.json_file("verify.json", j);
  w.csv_file("verify.csv", csv.str());
}

void cmd_probe(const Config& c, const FiniteSpace& space, const DyadicSystem& sys,
               const std::vector<std::string>& ops, Writer& w, CommandResult& result) {
  const auto cfg = make_operator_config(space, sys, c.operators.r0, c.operators.block_cap, c.probe.p);
  const OperatorEvaluator ev(space, sys, cfg);
  for (std::size_t i = 0; i < ops.size(); ++i) {
    ProbeSettings st;
    st.op = parse_operator(ops[i]);
    st.p = c.probe.p;
    st.trials = c.probe.trials;
    st.ensembles = c.probe.ensembles;
    st.gamma_grid = c.probe.gamma_grid;
    st.radius = c.probe.radius;
    st.doubling_D = c.probe.D;
    st.bmo = c.probe.bmo;
    st.seed = derive_seed(c.seed, kProbe * 1000003 + i);
    auto rep = norm_probe(ev, space, st);
    auto j = rep.summary();
    j["operator_notes"] = cfg.notes;
    j["n_r0"] = cfg.n_r0;
    w.csv_file("probe_" + ops[i] + ".csv", rep.csv());
    w.json_file("probe_" + ops[i] + ".json", j);
    if (rep.d_bound_violations > 0) {
      result.exit_code = 1;
      result.failures.push_back("probe A: " + std::to_string(rep.d_bound_violations) + " averages exceed D^{1/p}");
    }
  }
}

void cmd_experiment(const Config& c, Writer& w, CommandResult& result) {
  const auto& e = c.experiment;
  const auto sys = build_system(SystemSpec::parse(e.system));
  std::mt19937_64 rng(derive_seed(c.seed, kExperiment));
  const SampleFunction f =
      e.function == "balanced" ? balanced_signs(sys.size(), rng) : random_function(sys.size(), parse_ensemble(e.function), rng);
  TailStatistic stat;
  stat.lambda = e.lambda;
  if (e.upcrossings) {
    stat.upcrossings = true;
    stat.a = e.upcrossings->first;
    stat.b = e.upcrossings->second;
  }
  const auto rep = tail_experiment(sys, f, e.radii, stat);
  auto j = rep.summary();
  j["seed"] = c.seed;
  j["function"] = e.function;
  w.csv_file("tail.csv", rep.csv());
  w.json_file("tail.json", j);
  if (!j["non_increasing"].get<bool>()) {
    result.exit_code = 1;
    result.failures.push_back("tail is not non-increasing");
  }
  if (!e.convergence_radii.empty()) {
    const auto conv = convergence_probe(sys, f, e.convergence_radii);
    std::ostringstream csv;
    csv << "r,distance\n";
    for (std::size_t i = 0; i < conv.radii.size(); ++i) csv << conv.radii[i] << ',' << fmt(conv.distance[i]) << '\n';
    w.csv_file("convergence.csv", csv.str());
  }
}

}  // namespace

CommandResult run_command(const std::string& command, const Config& c, const fs::path& out,
                          const std::vector<std::string>& suites) {
  static const std::vector<std::string> known{"space", "cubes", "verify", "probe", "experiment", "run"};
  if (std::find(known.begin(), known.end(), command) == known.end())
    throw ValidationError("unknown command '" + command + "'");
  CommandResult result;
  Writer w(out, c.sha256, result);
  const bool all = command == "run";
  const bool needs_space = command != "experiment";
  if (needs_space) {
    const auto space = build_space(c.space);
    if (command == "space" || all) cmd_space(c, space, w);
    if (command != "space") {
      const auto sys = build_cubes(space, c.hk);
      if (command == "cubes" || all) cmd_cubes(c, space, sys, w);
      if (command == "verify" || all)
        cmd_verify(c, space, sys, !suites.empty() && !all ? suites : c.verify.suites, w, result);
      if (command == "probe" || (all && c.probe.present))
        cmd_probe(c, space, sys, !suites.empty() && !all ? suites : c.probe.operators, w, result);
    }
  }
  if (command == "experiment" || (all && c.experiment.present)) {
    if (!c.experiment.present) throw ValidationError("config has no experiment section");
    cmd_experiment(c, w, result);
  }
  write_summary(out, c.sha256, result);
  return result;
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

struct ReportData {
  std::string text;
  std::vector<std::array<std::string, 4>> csv;  // table, name, metric, value
};

ReportData build_report(const fs::path& bundle) {
  ReportData r;
  std::ostringstream os;
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(bundle))
    if (entry.is_regular_file()) names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  bool any = false;
  std::string sha;
  auto note_sha = [&](const json& j) {
    if (sha.empty() && j.contains("config_sha256")) sha = j["config_sha256"].get<std::string>();
  };

  if (std::count(names.begin(), names.end(), "space.json")) {
    const auto j = read_json(bundle / "space.json");
    note_sha(j);
    any = true;
    os << "space: " << j["label"].get<std::string>() << ", " << j["size"] << " points, diameter "
       << short_fmt(j["diameter"].get<double>()) << ", safe radius " << short_fmt(j["safe_radius"].get<double>())
       << "\n";
    if (j.contains("growth_fit"))
      os << "  growth fit D_G = " << short_fmt(j["growth_fit"]["D_G"].get<double>()) << " over r in ["
         << j["growth_fit"]["r_min"] << ", " << j["growth_fit"]["r_max"] << "]\n";
  }
  if (std::count(names.begin(), names.end(), "cubes.json")) {
    const auto j = read_json(bundle / "cubes.json");
    note_sha(j);
    any = true;
    os << "cubes:";
    for (const auto& lv : j["levels"]) os << " k=" << lv["k"] << ":" << lv["cubes"];
    os << "\n";
    for (const auto& wmsg : j["warnings"]) os << "  warning: " << wmsg.get<std::string>() << "\n";
  }
  if (std::count(names.begin(), names.end(), "verify.json")) {
    const auto j = read_json(bundle / "verify.json");
    note_sha(j);
    any = true;
    os << "suites:\n";
    for (const auto& name : j["order"]) {
      const auto& s = j["suites"][name.get<std::string>()];
      const bool pass = s["pass"].get<bool>();
      os << "  " << pad(name.get<std::string>(), 14) << (pass ? "PASS" : "FAIL") << "  checks=" << s["checks"]
         << " failures=" << s["failures"];
      if (pass && s["checks"].get<std::size_t>() == 0) os << "  (vacuous: nothing within the hypotheses)";
      os << "\n";
      r.csv.push_back({"suites", name.get<std::string>(), "pass", pass ? "true" : "false"});
      r.csv.push_back({"suites", name.get<std::string>(), "checks", s["checks"].dump()});
      r.csv.push_back({"suites", name.get<std::string>(), "failures", s["failures"].dump()});
      if (s["detail"].contains("notes"))
        for (const auto& n : s["detail"]["notes"]) os << "    note: " << n.get<std::string>() << "\n";
    }
  }
  bool probe_header = false;
  std::set<std::string> seen_notes;  // operator notes are shared by every probe
  for (const auto& name : names) {
    if (name.rfind("probe_", 0) != 0 || name.size() < 10 || name.substr(name.size() - 4) != ".csv") continue;
    any = true;
    if (!probe_header) {
      os << "probes (ratio quantiles from raw rows):\n  " << pad("operator", 9) << pad("kind", 8) << pad("count", 7)
         << pad("q50", 12) << pad("q90", 12) << pad("q99", 12) << "max\n";
      probe_header = true;
    }
    std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
    for (const auto& row : read_csv(bundle / name))
      if (row.size() == 7) groups[{row[0], row[2]}].push_back(std::stod(row[6]));
    for (const auto& [key, vals] : groups) {
      const auto st = summarize_ratios(vals);
      os << "  " << pad(key.first, 9) << pad(key.second, 8) << pad(std::to_string(st.count), 7)
         << pad(short_fmt(st.q50), 12) << pad(short_fmt(st.q90), 12) << pad(short_fmt(st.q99), 12)
         << short_fmt(st.max) << "\n";
      const std::string id = key.first + ":" + key.second;
      r.csv.push_back({"probes", id, "count", std::to_string(st.count)});
      r.csv.push_back({"probes", id, "q50", fmt(st.q50)});
      r.csv.push_back({"probes", id, "q90", fmt(st.q90)});
      r.csv.push_back({"probes", id, "q99", fmt(st.q99)});
      r.csv.push_back({"probes", id, "max", fmt(st.max)});
    }
    const auto jn = name.substr(0, name.size() - 4) + ".json";
    if (std::count(names.begin(), names.end(), jn)) {
      const auto j = read_json(bundle / jn);
      note_sha(j);
      for (const auto& n : j["notes"]) os << "    note: " << n.get<std::string>() << "\n";
      for (const auto& n : j["operator_notes"]) {
        const auto line = n.get<std::string>();
        if (seen_notes.insert(line).second) os << "    note: " << line << "\n";
      }
    }
  }
  if (std::count(names.begin(), names.end(), "tail.json")) {
    const auto j = read_json(bundle / "tail.json");
    note_sha(j);
    any = true;
    const auto& stat = j["statistic"];
    const std::string param = stat["kind"] == "jumps"
                                  ? "lambda=" + short_fmt(stat["lambda"].get<double>())
                                  : "a=" + short_fmt(stat["a"].get<double>()) + ",b=" + short_fmt(stat["b"].get<double>());
    const auto& fit = j["fit"];
    const std::string c2 = fit.contains("log_c2") ? fmt(std::exp(fit["log_c2"].get<double>())) : "-";
    const std::string r2 = fit["valid"].get<bool>() ? fmt(fit["r2"].get<double>()) : "-";
    os << "tails:\n  " << pad("system", 24) << pad("statistic", 20) << pad("c2", 22) << "R2\n  "
       << pad(j["system"].get<std::string>(), 24) << pad(param, 20) << pad(c2, 22) << r2 << "\n";
    os << "  tail non-increasing: " << (j["non_increasing"].get<bool>() ? "yes" : "NO") << "\n";
    for (const auto& n : j["notes"]) os << "    note: " << n.get<std::string>() << "\n";
    r.csv.push_back({"tails", j["system"].get<std::string>(), "statistic", param});
    r.csv.push_back({"tails", j["system"].get<std::string>(), "c2", c2});
    r.csv.push_back({"tails", j["system"].get<std::string>(), "r2", r2});
  }
  if (!any) {
    r.text = "no suites run\n";
    return r;
  }
  r.text = "config_sha256: " + (sha.empty() ? std::string("unknown") : sha) + "\n" + os.str();
  return r;
}

}  // namespace

std::string render_report(const fs::path& bundle) { return build_report(bundle).text; }

int report(const fs::path& bundle, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(bundle)) {
    err << bundle.string() << ": error: bundle directory does not exist\n";
    return 2;
  }
  const auto r = build_report(bundle);
  out << r.text;
  if (!r.csv.empty()) {
    std::ofstream csv(bundle / "report.csv", std::ios::binary | std::ios::trunc);
    csv << "table,name,metric,value\n";
    for (const auto& row : r.csv) csv << row[0] << ',' << row[1] << ',' << row[2] << ',' << row[3] << '\n';
  }
  return 0;
}

}  // namespace ergojump::cli
