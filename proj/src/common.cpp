#include "ergojump/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace ergojump {

namespace {
std::atomic<unsigned> g_threads{1};
}

void set_thread_count(unsigned n) {
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  g_threads.store(n);
}

unsigned thread_count() { return g_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    if (n > 0) body(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, &errors, w, b, e] {
      try {
        body(b, e);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  // lowest chunk wins so the reported error does not depend on timing
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

double weighted_norm(std::span<const double> f, std::span<const double> w, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (w[i] > 0) m = std::max(m, std::abs(f[i]));
    return m;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * std::pow(std::abs(f[i]), p);
  return std::pow(s, 1.0 / p);
}

double weighted_sum(std::span<const double> f, std::span<const double> w) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
  return s;
}

double weighted_inner(std::span<const double> f, std::span<const double> g,
                      std::span<const double> w) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i] * g[i];
  return s;
}

int floor_log(double base, double x) {
  if (!(base > 1.0) || !(x > 0.0)) throw ValidationError("floor_log: need base > 1 and x > 0");
  int v = static_cast<int>(std::floor(std::log(x) / std::log(base)));
  const double tol = 1e-12;
  while (std::pow(base, v + 1) <= x * (1 + tol)) ++v;
  while (std::pow(base, v) > x * (1 + tol)) --v;
  return v;
}

int ceil_log(double base, double x) {
  if (!(base > 1.0) || !(x > 0.0)) throw ValidationError("ceil_log: need base > 1 and x > 0");
  int v = static_cast<int>(std::ceil(std::log(x) / std::log(base)));
  const double tol = 1e-12;
  while (std::pow(base, v - 1) >= x * (1 - tol)) --v;
  while (std::pow(base, v) < x * (1 - tol)) ++v;
  return v;
}

const char* ensemble_name(Ensemble e) {
  switch (e) {
    case Ensemble::gaussian:
      return "gaussian";
    case Ensemble::rademacher:
      return "rademacher";
    case Ensemble::sparse:
      return "sparse";
  }
  return "?";
}

Ensemble parse_ensemble(const std::string& name) {
  for (Ensemble e : {Ensemble::gaussian, Ensemble::rademacher, Ensemble::sparse})
    if (name == ensemble_name(e)) return e;
  throw ValidationError("unknown ensemble '" + name + "'");
}

SampleFunction random_function(std::size_t n, Ensemble e, std::mt19937_64& rng) {
  SampleFunction f(n, 0.0);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.5), rare(0.05);
  switch (e) {
    case Ensemble::gaussian:
      for (auto& v : f) v = normal(rng);
      break;
    case Ensemble::rademacher:
      for (auto& v : f) v = coin(rng) ? 1.0 : -1.0;
      break;
    case Ensemble::sparse: {
      bool any = false;
      for (auto& v : f)
        if (rare(rng)) {
          v = coin(rng) ? 1.0 : -1.0;
          any = true;
        }
      if (!any && n > 0) f[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] = 1.0;
      break;
    }
  }
  return f;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 step over the pair
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

RatioStats summarize_ratios(std::span<const double> ratios) {
  RatioStats st;
  st.count = ratios.size();
  if (ratios.empty()) return st;
  std::vector<double> v(ratios.begin(), ratios.end());
  std::sort(v.begin(), v.end());
  auto rank = [&](double q) {
    const auto r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    return v[std::min(v.size(), std::max<std::size_t>(r, 1)) - 1];
  };
  st.max = v.back();
  double s = 0.0;
  for (double x : ratios) s += x;
  st.mean = s / static_cast<double>(v.size());
  st.q50 = rank(0.5);
  st.q90 = rank(0.9);
  st.q99 = rank(0.99);
  return st;
}

}  // namespace ergojump
