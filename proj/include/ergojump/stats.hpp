#pragma once

#include <span>
#include <vector>

#include "ergojump/common.hpp"

namespace ergojump {

// Values a_r indexed by a strictly increasing list of radii.
struct ScaleSequence {
  std::vector<double> radii;
  std::vector<double> values;

  void validate() const;
};

// Largest N such that some increasing subsequence has N consecutive gaps > lambda.
// Exact longest-chain recursion; O(n log n) with Fenwick trees over value ranks.
std::size_t jump_count(std::span<const double> values, double lambda);

// The same recursion evaluated directly in O(n^2).
std::size_t jump_count_quadratic(std::span<const double> values, double lambda);

// Exhaustive search over subsequences; refuses sequences longer than 20.
std::size_t jump_count_oracle(std::span<const double> values, double lambda);

// Supremum over increasing subsequences of (sum |a_{j+1} - a_j|^q)^{1/q}.
// q >= 1 or q = kInfinity.
double variation(std::span<const double> values, double q);

// Maximal number of alternations from a value < a to a later value > b.
std::size_t upcrossing_count(std::span<const double> values, double a, double b);

struct JumpFunctional {
  double value = 0.0;   // max over the grid of lambda * N_lambda^{1/q}
  double argmax = 0.0;  // first lambda attaining it; 0 when value is 0
};

JumpFunctional jump_functional(std::span<const double> values, std::span<const double> lambda_grid,
                               double q = 2.0);

// count points spaced geometrically over [lo, hi]; lo == hi gives one point.
std::vector<double> log_grid(double lo, double hi, std::size_t count);

// log_grid over [smallest positive gap, range] of the values. Empty when constant.
std::vector<double> lambda_grid(std::span<const double> values, std::size_t count);

}  // namespace ergojump
