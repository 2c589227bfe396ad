#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ergojump/cubes.hpp"
#include "json.hpp"

namespace ergojump {

// Radii of one delta-adic block [delta^n, delta^{n+1}), restricted to r >= r0.
struct RadiusBlock {
  int n = 0;
  std::vector<double> radii;  // strictly increasing
};

struct OperatorConfig {
  double delta = 36.0;
  double r0 = 1.0;
  int n_r0 = 0;  // delta^{n_r0} < r0 <= delta^{n_r0 + 1}
  int n_max = 0;
  double p = 2.0;
  std::size_t block_cap = 24;
  std::vector<RadiusBlock> blocks;  // n = n_r0 .. n_max
  std::vector<std::string> notes;   // subsampled or degenerate blocks

  // Sorted union of the block radii: the grid for the left-hand jump.
  std::vector<double> union_radii() const;
  // Levels n > n_r0 present in both the config and the system.
  std::vector<int> dyadic_levels(const DyadicSystem& system) const;
};

int n_r0_for(double delta, double r0);

// Blocks n_r0..system.k_max. Block radii are the distinct distances in the
// block (r >= r0) plus the anchor delta^n, subsampled evenly to block_cap
// with the anchor kept. Blocks past the diameter hold only the anchor.
OperatorConfig make_operator_config(const FiniteSpace& space, const DyadicSystem& system,
                                    double r0, std::size_t block_cap = 24, double p = 2.0);

bool within_safe_radius(const FiniteSpace& space, double r);

// A'_r f(h): weighted mean of f over B(h, r).
SampleFunction translation_average(const FiniteSpace& space, std::span<const double> f, double r);

// translation_average for each radius (any order), one neighborhood scan per point.
std::vector<SampleFunction> translation_averages(const FiniteSpace& space, std::span<const double> f,
                                                 std::span<const double> radii);

// Precomputed balls for a fixed radius list; evaluates A'_r f for all radii at once.
class BallAverager {
 public:
  BallAverager(const FiniteSpace& space, std::vector<double> radii);

  const std::vector<double>& radii() const { return radii_; }
  // out[i][x] = A'_{radii[i]} f(x)
  std::vector<SampleFunction> apply(std::span<const double> f) const;
  // Ball measures m(B(x, radii[i])), same layout as apply.
  const std::vector<SampleFunction>& measures() const { return measures_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> radii_;
  std::vector<double> weights_;
  std::size_t full_from_ = 0;               // radii at index >= full_from_ cover the whole space
  std::vector<std::size_t> start_;          // per point offset into nbr_
  std::vector<Index> nbr_;                  // neighbors sorted by distance
  std::vector<std::uint32_t> cut_;          // per point, per partial radius: neighbor count
  std::vector<SampleFunction> measures_;
};

struct DominationReport {
  double lambda = 0.0;
  std::size_t points = 0;
  std::size_t radii = 0;                     // size of the left-hand radius grid
  std::vector<double> lhs;                   // lambda sqrt(N_lambda(A' f)) over the union grid
  std::vector<double> dyadic_jump;           // 2 lambda sqrt(N_{lambda/6}(A'_{delta^n} f : n > n_r0))
  std::vector<double> square;                // S(f)
  std::vector<double> short_var;             // SV(f)
  std::vector<double> martingale_jump;       // 2 sqrt(2) lambda sqrt(N_{lambda/24}(E_n f : n > n_r0))
  std::size_t precursor_violations = 0;      // lhs > dyadic_jump + 16 SV
  std::size_t dyadic_violations = 0;         // dyadic_jump > 96 sqrt(2) S + martingale_jump
  std::size_t final_violations = 0;          // lhs > 96 sqrt(2) S + 16 SV + martingale_jump
};

// Evaluates every operator of the domination chain for one space, system
// and config, reusing the precomputed balls.
class OperatorEvaluator {
 public:
  OperatorEvaluator(const FiniteSpace& space, const DyadicSystem& system, OperatorConfig config);

  const OperatorConfig& config() const { return config_; }
  const DyadicSystem& system() const { return *system_; }

  SampleFunction square_function(std::span<const double> f) const;
  SampleFunction short_variation(std::span<const double> f) const;
  // Per-block values V_2(A'_r f(x) : r in block), indexed [block][x].
  std::vector<SampleFunction> block_variations(std::span<const double> f) const;
  std::vector<DominationReport> domination(std::span<const double> f, std::span<const double> lambdas) const;

 private:
  const FiniteSpace* space_;
  const DyadicSystem* system_;
  OperatorConfig config_;
  std::vector<int> dyadic_;           // n > n_r0
  std::vector<double> radii_;         // union grid
  std::vector<std::size_t> anchor_;   // index of delta^n in radii_ for each dyadic level
  std::vector<std::vector<std::size_t>> block_index_;  // radii_ positions of each block
  std::unique_ptr<BallAverager> averager_;
};

SampleFunction square_function(const FiniteSpace& space, std::span<const double> f,
                               const DyadicSystem& system, const OperatorConfig& config);
SampleFunction short_variation(const FiniteSpace& space, std::span<const double> f,
                               const DyadicSystem& system, const OperatorConfig& config);
DominationReport domination_check(const FiniteSpace& space, std::span<const double> f,
                                  const DyadicSystem& system, const OperatorConfig& config, double lambda);

enum class OperatorTag { S, SV, A, Md };
const char* operator_name(OperatorTag t);
OperatorTag parse_operator(const std::string& name);

struct ProbeSettings {
  OperatorTag op = OperatorTag::S;
  double p = 2.0;
  std::size_t trials = 200;
  std::vector<Ensemble> ensembles{Ensemble::gaussian, Ensemble::rademacher, Ensemble::sparse};
  // Thresholds in units of ||f||_1 / m(X). Empty takes the exact sup over all gamma > 0.
  std::vector<double> gamma_grid;
  double radius = 1.0;      // for A'_r
  double doubling_D = 0.0;  // D for the A'_r bound; 0 skips the check
  bool bmo = true;          // BMO / L^inf ratios (needs the cube system)
  std::uint64_t seed = 0;
};

struct ProbeRow {
  std::string op;
  std::string ensemble;
  std::string kind;  // "strong", "weak", "bmo"
  double p = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double ratio = 0.0;
};

struct ProbeReport {
  ProbeSettings settings;
  std::vector<ProbeRow> rows;
  RatioStats strong, weak, bmo;
  std::size_t d_bound_checks = 0;
  std::size_t d_bound_violations = 0;
  std::vector<std::string> notes;

  std::string csv() const;
  nlohmann::json summary() const;
};

ProbeReport norm_probe(const OperatorEvaluator& eval, const FiniteSpace& space, const ProbeSettings& settings);

}  // namespace ergojump
