#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ergojump/group.hpp"
#include "ergojump/space.hpp"
#include "json.hpp"

namespace ergojump {

enum class SystemKind {
  regular,    // a finite quotient acting on itself by left multiplication
  rotation,   // Z acting on Z_N by x -> x + a
  rotation2,  // Z^2 acting on Z_N^2 by (u, v) -> (u + a, v + b)
};

struct SystemSpec {
  SystemKind kind = SystemKind::rotation;
  GroupSpec group;           // regular: the quotient
  std::int64_t modulus = 0;  // rotations: N
  std::int64_t a = 1, b = 1;

  std::string name() const;
  // "regular:H3_4", "rotation:Z_1024:a=3", "rotation2:Z_64:a=1,b=3"
  static SystemSpec parse(const std::string& text);
};

// Measure-preserving action of a finitely generated group on a finite
// probability space. T_g f(x) = f(tau_{g^{-1}} x).
class MPSystem {
 public:
  // mu defaults to uniform; any other mu must be invariant under the action.
  static MPSystem build(const SystemSpec& spec, std::vector<double> mu = {});

  const SystemSpec& spec() const { return spec_; }
  std::size_t size() const { return mu_.size(); }
  std::span<const double> mu() const { return mu_; }
  const FinGroup& acting() const { return *acting_; }
  // Per-generator maps x -> tau_s x, in acting().generators() order.
  const std::vector<std::vector<Index>>& generator_maps() const { return maps_; }
  // Radius up to which action averages are meaningful: the Cayley diameter of
  // a regular action, unbounded for rotations.
  double safe_radius() const { return safe_radius_; }

  Index act(const Element& g, Index x) const;  // tau_g x

  // Regular actions: the group element labelling state x, and the inverse lookup.
  const Element& state_element(Index x) const;
  std::optional<Index> state_of(const Element& e) const;

 private:
  SystemSpec spec_;
  std::shared_ptr<const FinGroup> acting_;
  std::shared_ptr<const FinGroup> quotient_;  // regular only
  std::vector<double> mu_;
  std::vector<std::vector<Index>> maps_;
  std::vector<Element> states_;  // regular only
  ElementIndex state_index_;
  double safe_radius_ = kInfinity;
};

inline MPSystem build_system(const SystemSpec& spec, std::vector<double> mu = {}) {
  return MPSystem::build(spec, std::move(mu));
}

// Throws ValidationError unless every map is a bijection with mu[map[x]] == mu[x].
void validate_generator_maps(const std::vector<std::vector<Index>>& maps, std::span<const double> mu);

// tau_{gh} = tau_g tau_h on `pairs` random pairs of words of length <= 4, and tau_e = id.
bool check_homomorphism(const MPSystem& system, std::size_t pairs, std::uint64_t seed);

// out[i][x] = A_{radii[i]} f(x), counting measure on the word ball B_r of the acting group.
std::vector<SampleFunction> action_averages(const MPSystem& system, std::span<const double> f,
                                            std::span<const int> radii);
SampleFunction action_average(const MPSystem& system, std::span<const double> f, int r);

// Orbit label per state (smallest state of the orbit) and mu-weighted orbit means of f.
std::vector<Index> orbit_labels(const MPSystem& system);
SampleFunction orbit_mean(const MPSystem& system, std::span<const double> f);

struct TransferenceReport {
  std::string group;
  std::vector<int> radii;
  double lambda = 0.0;
  double max_discrepancy = 0.0;  // max over h, r of |A_r f(h^{-1}) - A'_r F(h)|
  std::size_t jump_mismatches = 0;  // points where N_lambda differs
  std::vector<std::size_t> histogram_action, histogram_translation;  // points per N_lambda value
};

// Regular action of the quotient vs translation averages on its Cayley space,
// identified by x = h^{-1} and F(g) = f(g^{-1}). f lives on the system's states.
TransferenceReport transference_check(const GroupSpec& quotient, std::span<const double> f,
                                      std::span<const int> radii, double lambda);

struct TailStatistic {
  bool upcrossings = false;
  double lambda = 0.5;       // jumps
  double a = 0.0, b = 0.0;   // upcrossings
};

struct TailFit {
  bool valid = false;  // at least three positive tail values
  std::size_t points = 0;
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  double c1 = 0.0, c2 = 0.0;  // exp(intercept), exp(slope); c2 reported only when slope < 0
};

struct TailReport {
  std::string system;
  TailStatistic statistic;
  std::vector<int> radii;
  std::vector<std::size_t> counts;  // per state N
  std::vector<double> tail;         // tail[n] = mu{N > n}, n = 0..max N
  TailFit fit;
  std::vector<std::string> notes;

  std::string csv() const;
  nlohmann::json summary() const;
};

// f is clipped to [-1, 1] (with a note) and radii past the safe radius are dropped.
TailReport tail_experiment(const MPSystem& system, std::span<const double> f, std::vector<int> radii,
                           const TailStatistic& statistic);

// Least squares of log y on x over the positive entries of y.
TailFit fit_exponential_tail(std::span<const double> tail);

struct ConvergenceReport {
  std::vector<int> radii;
  std::vector<double> distance;  // max_x |A_r f(x) - orbit mean of f at x|
  std::size_t orbits = 0;
};

ConvergenceReport convergence_probe(const MPSystem& system, std::span<const double> f, std::span<const int> radii);

// Exactly n/2 entries +1 and the rest -1 in random order.
SampleFunction balanced_signs(std::size_t n, std::mt19937_64& rng);

}  // namespace ergojump
