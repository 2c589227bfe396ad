#include "ergojump/stats.hpp"

#include <algorithm>
#include <cmath>

namespace ergojump {

void ScaleSequence::validate() const {
  if (radii.size() != values.size()) throw ValidationError("radii and values differ in length");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw ValidationError("radii must be strictly increasing");
  for (double v : values)
    if (!std::isfinite(v)) throw ValidationError("sequence values must be finite");
}

std::size_t jump_count_quadratic(std::span<const double> values, double lambda) {
  if (!(lambda > 0)) throw ValidationError("jump threshold must be positive");
  const std::size_t n = values.size();
  // best[i]: most jumps along a subsequence ending at index i
  std::vector<std::size_t> best(n, 0);
  std::size_t answer = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(values[i] - values[j]) > lambda) best[i] = std::max(best[i], best[j] + 1);
    answer = std::max(answer, best[i]);
  }
  return answer;
}

namespace {

// Prefix maxima over positions 1..n; 0 means empty.
class MaxFenwick {
 public:
  explicit MaxFenwick(std::size_t n) : tree_(n + 1, 0) {}
  void raise(std::size_t pos, std::size_t v) {
    for (; pos < tree_.size(); pos += pos & (~pos + 1)) tree_[pos] = std::max(tree_[pos], v);
  }
  std::size_t prefix(std::size_t pos) const {
    std::size_t m = 0;
    for (; pos > 0; pos -= pos & (~pos + 1)) m = std::max(m, tree_[pos]);
    return m;
  }

 private:
  std::vector<std::size_t> tree_;
};

}  // namespace

std::size_t jump_count(std::span<const double> values, double lambda) {
  if (!(lambda > 0)) throw ValidationError("jump threshold must be positive");
  const std::size_t n = values.size();
  if (n <= 32) return jump_count_quadratic(values, lambda);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  // below: keyed by rank; above: keyed by reversed rank. Stored values are best + 1.
  MaxFenwick below(m), above(m);
  std::size_t answer = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = values[i];
    const auto lo = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v - lambda) - sorted.begin());
    const auto hi = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), v + lambda) - sorted.begin());
    // ranks [0, lo) hold values < v - lambda; ranks [hi, m) hold values > v + lambda
    // best_j + 1 counts the chain through j plus the jump to i; 0 when no j qualifies
    const std::size_t best = std::max(below.prefix(lo), above.prefix(m - hi));
    answer = std::max(answer, best);
    const auto rank = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
    below.raise(rank + 1, best + 1);
    above.raise(m - rank, best + 1);
  }
  return answer;
}

std::size_t jump_count_oracle(std::span<const double> values, double lambda) {
  if (!(lambda > 0)) throw ValidationError("jump threshold must be positive");
  const std::size_t n = values.size();
  if (n > 20) throw ValidationError("jump_count_oracle is limited to 20 values");
  std::size_t answer = 0;
  for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << n); ++mask) {
    std::size_t gaps = 0;
    bool all_large = true;
    int prev = -1;
    for (std::size_t i = 0; i < n && all_large; ++i) {
      if (!(mask >> i & 1u)) continue;
      if (prev >= 0) {
        if (std::abs(values[i] - values[static_cast<std::size_t>(prev)]) > lambda)
          ++gaps;
        else
          all_large = false;
      }
      prev = static_cast<int>(i);
    }
    if (all_large) answer = std::max(answer, gaps);
  }
  return answer;
}

double variation(std::span<const double> values, double q) {
  const std::size_t n = values.size();
  if (std::isinf(q) && q > 0) {
    if (n == 0) return 0.0;
    double best = 0.0;
    double run_min = values[0], run_max = values[0];
    for (std::size_t i = 1; i < n; ++i) {
      best = std::max({best, values[i] - run_min, run_max - values[i]});
      run_min = std::min(run_min, values[i]);
      run_max = std::max(run_max, values[i]);
    }
    return best;
  }
  if (!(q >= 1.0)) throw ValidationError("variation exponent must be >= 1 or infinity");
  std::vector<double> best(n, 0.0);
  double answer = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j)
      best[i] = std::max(best[i], best[j] + std::pow(std::abs(values[i] - values[j]), q));
    answer = std::max(answer, best[i]);
  }
  return std::pow(answer, 1.0 / q);
}

std::size_t upcrossing_count(std::span<const double> values, double a, double b) {
  if (!(b > a)) throw ValidationError("upcrossing levels need b > a");
  std::size_t count = 0;
  bool below = false;
  for (double v : values) {
    if (!below) {
      below = v < a;
    } else if (v > b) {
      ++count;
      below = false;
    }
  }
  return count;
}

JumpFunctional jump_functional(std::span<const double> values, std::span<const double> lambda_grid,
                               double q) {
  if (lambda_grid.empty()) throw ValidationError("lambda grid is empty");
  if (!(q > 0)) throw ValidationError("jump functional exponent must be positive");
  JumpFunctional out;
  for (double lambda : lambda_grid) {
    const double v = lambda * std::pow(static_cast<double>(jump_count(values, lambda)), 1.0 / q);
    if (v > out.value) {
      out.value = v;
      out.argmax = lambda;
    }
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0) || !(hi >= lo)) throw ValidationError("log grid needs 0 < lo <= hi");
  if (count == 0) throw ValidationError("log grid needs at least one point");
  if (count == 1 || lo == hi) return {lo};
  std::vector<double> grid(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) grid[i] = lo * std::exp(step * static_cast<double>(i));
  grid.back() = hi;
  return grid;
}

std::vector<double> lambda_grid(std::span<const double> values, std::size_t count) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.size() < 2) return {};
  double min_gap = kInfinity;
  for (std::size_t i = 1; i < sorted.size(); ++i) min_gap = std::min(min_gap, sorted[i] - sorted[i - 1]);
  return log_grid(min_gap, sorted.back() - sorted.front(), count);
}

}  // namespace ergojump
