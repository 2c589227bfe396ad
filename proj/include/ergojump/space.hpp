#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ergojump/common.hpp"
#include "ergojump/group.hpp"
#include "json.hpp"

namespace ergojump {

struct Provenance {
  std::string source;   // "group", "matrix", "random_points"
  std::string group;    // GroupSpec::name() for group spaces
  int radius = 0;       // truncation radius for infinite groups
  std::uint64_t seed = 0;
};

// Points sorted by distance from a center; ties keep a fixed deterministic order.
struct Neighborhood {
  std::vector<Index> points;
  std::vector<double> dist;
};

// Finite metric measure space. Metrics are either an explicit matrix or a
// word metric on a group (whole finite quotient, or a ball B_R of an
// infinite group with distances read from B_{2R}).
class FiniteSpace {
 public:
  struct WordMetric {
    std::shared_ptr<const FinGroup> group;
    std::vector<Element> points;
    ElementIndex point_index;
    std::vector<std::uint32_t> point_length;  // |point| in the word metric
    WordBall table;                           // lengths used for distance lookups
    int truncation = -1;                      // R for B_R of an infinite group
  };

  FiniteSpace() = default;

  static FiniteSpace from_matrix(std::size_t n, std::vector<double> dist,
                                 std::vector<double> weights = {}, double r0 = 1.0,
                                 std::string label = "matrix");
  // Whole quotient when the group is finite; otherwise the ball B_radius.
  // with_distances=false skips the B_{2R} table so only center-based balls work.
  static FiniteSpace from_group(std::shared_ptr<const FinGroup> group, int radius,
                                bool with_distances = true);

  FiniteSpace with_weights(std::vector<double> weights) const;
  FiniteSpace with_r0(double r0) const;
  FiniteSpace with_provenance(Provenance p) const;

  std::size_t size() const { return n_; }
  double dist(Index i, Index j) const;
  double weight(Index i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  double total_weight() const { return total_weight_; }
  double r0() const { return r0_; }
  const std::string& label() const { return label_; }
  const Provenance& provenance() const { return provenance_; }

  double diameter() const { return diameter_; }
  double resolution() const { return resolution_; }  // minimal positive distance
  // Largest radius at which statistics are free of truncation effects.
  double safe_radius() const;
  bool is_interior(Index center, double r) const;
  bool integer_metric() const { return static_cast<bool>(word_); }
  bool uniform_weights() const;

  // Sorted distinct distance values (integers 0..diameter for word metrics).
  std::vector<double> distinct_distances() const;

  Neighborhood neighborhood(Index center,
                            double r_max = std::numeric_limits<double>::infinity()) const;
  std::vector<Index> ball(Index center, double r) const;
  double ball_measure(Index center, double r) const;

  const WordMetric* word_metric() const { return word_.get(); }
  const std::vector<double>* matrix() const { return matrix_.get(); }

 private:
  void finalize_weights();

  std::size_t n_ = 0;
  std::vector<double> weights_;
  double total_weight_ = 0.0;
  double r0_ = 1.0;
  std::string label_;
  Provenance provenance_;
  double diameter_ = 0.0;
  double resolution_ = 0.0;
  std::shared_ptr<const std::vector<double>> matrix_;
  std::shared_ptr<const WordMetric> word_;
};

// Nested balls around one center.
struct BallTable {
  Index center = 0;
  std::vector<int> radii;
  std::vector<std::vector<Index>> members;
  std::vector<double> volume;

  BallTable restricted(int r_lo, int r_hi) const;
};

BallTable ball_table(const FiniteSpace& space, Index center, std::span<const int> radii);

struct GroupSpace {
  std::shared_ptr<const FinGroup> group;
  FiniteSpace space;
  BallTable table;  // around the identity (point 0), radii 0..R or 0..diameter
};

// Cayley-graph space for Z^d, Z_N^d, H3(Z) or H3 mod N. `radius` is the
// truncation radius for infinite groups and ignored for quotients.
GroupSpace build_group_space(const GroupSpec& spec, int radius = 0, bool with_distances = true);

// n distinct random points of the integer square [0, side)^2 with Euclidean distance.
FiniteSpace random_point_space(std::size_t n, int side, std::uint64_t seed);

struct AnnularProfile {
  double epsilon = 1.0;
  double K_hat = 0.0;          // minimal K for the one-sided annular bound on the sample
  double K_eps_hat = 0.0;      // minimal constant for the two-sided bound (r >= 2 r0)
  double K_eps_bound = 0.0;    // (2^eps + 1) K_hat + 2^eps
  std::size_t samples = 0;
  std::size_t two_sided_samples = 0;
  bool two_sided_within_bound() const { return K_eps_hat <= K_eps_bound * (1 + 1e-12); }
};

AnnularProfile annular_decay_profile(const FiniteSpace& space, std::span<const Index> centers,
                                     std::span<const double> r_values,
                                     std::span<const double> s_values, double epsilon);

struct CoverSample {
  Index center = 0;
  double big_radius = 0.0;
  double small_radius = 0.0;
  std::size_t count = 0;
  double bound = 0.0;
};

struct DoublingReport {
  std::size_t max_cover = 0;                // D0_hat over half-radius covers
  std::size_t violations = 0;               // half-radius covers exceeding D0
  std::vector<CoverSample> half_covers;
  std::vector<CoverSample> general_covers;  // B(x,R) by r-balls vs D^{floor(log2(R/r))+1}
  std::size_t general_violations = 0;
};

// Greedy set cover of `targets` by balls of radius `r` centered anywhere in
// the space (maximal new coverage first, ties by smaller index).
std::size_t greedy_cover_count(const FiniteSpace& space, std::span<const Index> targets, double r);

DoublingReport geometric_doubling_check(const FiniteSpace& space, std::size_t D0, double r0,
                                        std::span<const Index> centers);

struct GrowthFit {
  double D_G = 0.0;
  double C_V = 1.0;
  int r_min = 0;
  int r_max = 0;
};

GrowthFit fit_growth_exponent(const BallTable& table);

struct WordMetricConstants {
  double theta = 0.0;
  double c_V = 0.0;
};

WordMetricConstants word_metric_constants(double C_V, double D_G);

// D = max{D0, [9^eps (K+1)] + 1}: half-radius cover count implied by the
// annular bound for large balls together with D0 for small ones.
std::size_t doubling_constant(std::size_t D0, double K, double epsilon);

// Aggregate of fitted geometric constants for reports.
struct GrowthProfile {
  double D_G = 0.0;
  double C_V = 1.0;
  double epsilon = 1.0;
  double K = 0.0;
  double K_eps = 0.0;
  std::size_t D0 = 1;
};

nlohmann::json space_to_json(const FiniteSpace& space);
FiniteSpace space_from_json(const nlohmann::json& j);

}  // namespace ergojump
