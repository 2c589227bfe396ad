#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergojump/space.hpp"
#include "json.hpp"

namespace ergojump {

struct HKParams {
  double delta = 36.0;
  double c0 = 1.0;
  double C0 = 2.0;
  std::optional<int> k_min;  // defaults to the finest meaningful level
  std::optional<int> k_max;  // defaults to the coarsest meaningful level

  double a0() const { return c0 / 3.0; }
  double C1() const { return 2.0 * C0; }
  // Throws ValidationError unless delta > 1, 0 < c0 < C0 and 18*C0/delta <= c0.
  void validate() const;
};

struct BoundaryConstants {
  int L0 = 0, L1 = 0, L2 = 0, L3 = 0;
  double eta = 0.0, C2 = 0.0, C2_prime = 0.0, K_eps = 0.0;
  int k1 = 0, n0 = 0, n1 = 0;
  double K = 0.0, epsilon = 1.0, r0 = 1.0;
};

BoundaryConstants boundary_constants(const HKParams& params, double K, double epsilon, double r0);

struct NetLevels {
  int k_min = 0;
  int k_max = 0;
  std::vector<std::vector<Index>> centers;  // centers[k - k_min], ascending point ids
  std::vector<std::string> warnings;        // clipped levels

  const std::vector<Index>& at(int k) const;
};

// Level range [ceil log(resolution), ceil log(diameter) + 1], intersected with
// any explicit request in params.
std::pair<int, int> meaningful_levels(const FiniteSpace& space, const HKParams& params);

// Maximal c0*delta^k separated sets, finest level first. Each level offers
// the previous level's centers to the greedy pass before all other points,
// so the nets are nested.
NetLevels select_nets(const FiniteSpace& space, const HKParams& params);

struct Cube {
  Index center = 0;
  std::vector<Index> members;  // ascending
  int parent = -1;             // cube id at level k + 1, -1 at the top
  std::vector<int> children;   // cube ids at level k - 1
  double measure = 0.0;
};

struct DyadicLevel {
  int k = 0;
  std::vector<Cube> cubes;
  std::vector<std::uint32_t> label;  // point -> cube id
};

struct DyadicSystem {
  HKParams params;
  int k_min = 0;
  int k_max = 0;
  std::vector<DyadicLevel> levels;  // levels[k - k_min]
  std::vector<double> weights;
  std::vector<std::string> warnings;

  std::size_t size() const { return weights.size(); }
  bool has_level(int k) const { return k >= k_min && k <= k_max; }
  const DyadicLevel& level(int k) const;
  // True when every finest-level cube is a single point.
  bool finest_separates_points() const;
};

// Nearest finest-level center for each point, nearest parent center for each
// center (ties by smaller point id); cubes are unions along parent chains.
DyadicSystem build_cubes(const FiniteSpace& space, const HKParams& params, const NetLevels& nets);
DyadicSystem build_cubes(const FiniteSpace& space, const HKParams& params = {});

struct AxiomReport {
  std::size_t cubes = 0;
  std::size_t partition_failures = 0;   // (i) points not in exactly one cube of a level
  std::size_t nesting_failures = 0;     // (ii) cubes split by a coarser level
  std::size_t parent_failures = 0;      // (iii) parent link disagrees with membership
  std::size_t sandwich_failures = 0;    // (iv) over all cubes
  std::size_t sandwich_safe_cubes = 0;  // cubes with a0 delta^k within the safe radius
  std::size_t sandwich_safe_failures = 0;
  std::size_t separation_failures = 0;  // centers closer than c0 delta^k
  std::size_t covering_failures = 0;    // points at distance >= C0 delta^k from all centers
  std::vector<std::string> messages;    // first few failures, human readable

  bool exact_ok() const {
    return partition_failures == 0 && nesting_failures == 0 && parent_failures == 0 &&
           separation_failures == 0 && covering_failures == 0;
  }
  bool ok() const { return exact_ok() && sandwich_safe_failures == 0; }
};

// Rebuilds labels from the member lists, so corrupted memberships are detected.
AxiomReport verify_cube_axioms(const DyadicSystem& system, const FiniteSpace& space);

// Measures of {x in Q : d(x, Q^c) <= t} and {x not in Q : d(x, Q) <= t} for
// every cube of level k.
struct LayerMeasures {
  std::vector<double> inner;
  std::vector<double> outer;
};
LayerMeasures layer_measures(const DyadicSystem& system, const FiniteSpace& space, int k, double t);

struct LayerSample {
  int k = 0;
  std::uint32_t cube = 0;
  int L = 0;
  double t = 0.0;
  double cube_measure = 0.0;
  double inner = 0.0, outer = 0.0;
  double inner_bound = 0.0, outer_bound = 0.0;  // C2 delta^{-L eta} m(Q), C2 C2' delta^{-L eta} m(Q)
  bool in_hypotheses = false;                   // L0 < L < k + L0 - L1
};

struct HaloSample {
  int n = 0, k = 0;  // cube level is n + k, ball radius delta^n
  std::uint32_t cube = 0;
  double cube_measure = 0.0;
  double halo = 0.0;        // points of Q whose ball leaves Q
  double outer_halo = 0.0;  // points outside Q whose ball meets Q
  double bound = 0.0;       // C2 delta^{-k eta} m(Q)
  double outer_bound = 0.0; // C2 C2' delta^{-k eta} m(Q)
  bool in_hypotheses = false;  // n > n0 and k > L0
};

struct BoundaryReport {
  std::vector<LayerSample> layers;
  std::vector<HaloSample> halos;
  std::size_t violations = 0;            // in-hypothesis samples above their bound
  std::size_t outside_hypotheses = 0;
};

// L_values and halo (n, k) pairs default to a few values past the layer-bound thresholds.
BoundaryReport boundary_layer_report(const DyadicSystem& system, const FiniteSpace& space,
                                     const BoundaryConstants& constants,
                                     std::vector<int> L_values = {},
                                     std::vector<std::pair<int, int>> halo_nk = {});

nlohmann::json params_to_json(const HKParams& p);
HKParams params_from_json(const nlohmann::json& j);
nlohmann::json constants_to_json(const BoundaryConstants& c);
nlohmann::json system_to_json(const DyadicSystem& system);
DyadicSystem system_from_json(const nlohmann::json& j);

}  // namespace ergojump
