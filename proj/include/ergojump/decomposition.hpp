#pragma once

#include <vector>

#include "ergojump/cubes.hpp"
#include "json.hpp"

namespace ergojump {

struct StoppingCube {
  int k = 0;
  std::uint32_t id = 0;
  std::uint32_t parent = 0;     // cube id at level k + 1
  double abs_average = 0.0;     // <|f|>_Q > gamma
  double average = 0.0;         // <f>_Q
  double parent_average = 0.0;  // <f>_{parent}
  double measure = 0.0;
  double parent_measure = 0.0;
  double b_integral = 0.0, b_l1 = 0.0;
  double xi_integral = 0.0, xi_l1 = 0.0;
};

struct GundyResult {
  double gamma = 0.0;
  double p = 2.0;
  std::vector<StoppingCube> stops;  // coarse to fine, ascending id within a level
  SampleFunction g, b, xi;          // b and xi summed over their parts

  double f_l1 = 0.0;
  double reconstruction_error = 0.0;  // max |f - g - b - xi| / max(1, ||f||_inf)
  double max_b_integral = 0.0;        // max over parts of |int b_part|
  double max_xi_integral = 0.0;
  double b_l1 = 0.0;                  // sum of part norms
  double xi_l1 = 0.0;
  double g_pp = 0.0;                  // ||g||_p^p
  double g_bound = 0.0;               // 3 2^p (m!)^{(p-1)/(m-1)} gamma^{p-1} ||f||_1, m = floor(p) + 1
  std::size_t maximality_failures = 0;  // stopping cubes with an ancestor above gamma

  // All bounds with the given relative slack; integrals against slack * ||f||_1.
  bool ok(double rel_slack = 1e-9, double cancel_tol = 1e-12) const;
};

double gundy_g_constant(double p);

// Coarse-to-fine stopping-time scan. A stopping cube at the coarsest level has
// no parent and raises ValidationError.
GundyResult gundy_decompose(std::span<const double> f, const DyadicSystem& system, double gamma, double p = 2.0);

nlohmann::json gundy_to_json(const GundyResult& r);

struct Ball {
  Index center = 0;
  double radius = 0.0;
};

bool balls_intersect(const FiniteSpace& space, const Ball& a, const Ball& b);

// Greedy by descending radius, ties by input index; keeps a ball iff it is
// disjoint from everything kept so far. Returns input indices in selection order.
std::vector<std::size_t> vitali_select(const FiniteSpace& space, std::span<const Ball> balls);

struct VitaliCheck {
  std::size_t overlapping_pairs = 0;  // kept pairs that intersect
  std::size_t unabsorbed = 0;         // inputs meeting no kept ball of at least their radius
  std::size_t uncovered_points = 0;   // points of the input union outside every 3-dilate
};

VitaliCheck verify_vitali(const FiniteSpace& space, std::span<const Ball> balls, std::span<const std::size_t> kept);

}  // namespace ergojump
