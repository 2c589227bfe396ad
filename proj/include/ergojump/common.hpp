#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ergojump {

using Index = std::uint32_t;

constexpr double kInfinity = std::numeric_limits<double>::infinity();

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: violated precondition, malformed file, inadmissible parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Element encoding or enumeration exceeded a fixed capacity.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// A construction could not satisfy its own invariants with the given inputs.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// Real-valued function on the points of a space, indexed by point id.
using SampleFunction = std::vector<double>;

// Worker count used by parallel_for. 0 means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(begin, end) over contiguous chunks of [0, n). Chunks are
// disjoint so per-index writes need no synchronization; results never
// depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

// Weighted norms. p = infinity gives the max norm restricted to positive weights.
double weighted_norm(std::span<const double> f, std::span<const double> w, double p);
double weighted_sum(std::span<const double> f, std::span<const double> w);
double weighted_inner(std::span<const double> f, std::span<const double> g,
                      std::span<const double> w);

// floor(log_base(x)) computed in integers where it matters: the result v
// satisfies base^v <= x < base^(v+1) up to a relative 1e-12.
int floor_log(double base, double x);
int ceil_log(double base, double x);

enum class Ensemble { gaussian, rademacher, sparse };

const char* ensemble_name(Ensemble e);
Ensemble parse_ensemble(const std::string& name);

// Standard normal values, fair +-1 signs, or about 5% of points set to +-1
// (at least one point) with the rest 0.
SampleFunction random_function(std::size_t n, Ensemble e, std::mt19937_64& rng);

// Seeds for independent trials derived from one base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

struct RatioStats {
  std::size_t count = 0;
  double max = 0.0;
  double mean = 0.0;
  double q50 = 0.0, q90 = 0.0, q99 = 0.0;  // nearest-rank quantiles
};

RatioStats summarize_ratios(std::span<const double> ratios);

}  // namespace ergojump
