#pragma once

#include <vector>

#include "ergojump/cubes.hpp"

namespace ergojump {

// Weighted average of f over each cube of level k.
std::vector<double> cube_averages(std::span<const double> f, const DyadicSystem& system, int k);

// E_k f: constant on level-k cubes, equal to the cube average.
SampleFunction expectation(std::span<const double> f, const DyadicSystem& system, int k);

struct MartingaleDifferences {
  std::vector<int> levels;           // k for each entry of D, finest first
  std::vector<SampleFunction> D;     // D_k = E_{k-1} f - E_k f
  SampleFunction coarse;             // E_{k_max} f
  SampleFunction finest_residual;    // f - E_{k_min} f, zero when the finest level separates points
  bool exact = false;                // finest level separates points

  // coarse + sum of D + finest_residual, which equals f
  SampleFunction reconstruct() const;
};

// Requires at least two levels.
MartingaleDifferences differences(std::span<const double> f, const DyadicSystem& system);

// sup over levels of E_k |f|.
SampleFunction dyadic_maximal(std::span<const double> f, const DyadicSystem& system);

// Minimizer of sum w_i |v_i - c|: the lower weighted median.
double weighted_median(std::span<const double> values, std::span<const double> weights);

struct SharpMaximal {
  SampleFunction sharp;  // sup over cubes containing x of the mean deviation from the median
  double bmo = 0.0;      // max of sharp
};

SharpMaximal sharp_maximal_bmo(std::span<const double> f, const DyadicSystem& system);

struct JumpProbe {
  std::vector<double> ratios;  // per trial: sup over the grid of ||lambda sqrt(N_lambda(E f))||_p / ||f||_p
  RatioStats stats;
};

// Random f from the given ensemble; lambda grid log-spaced in units of ||f||_inf.
JumpProbe martingale_jump_probe(const DyadicSystem& system, Ensemble ensemble, double p,
                                std::size_t trials, std::uint64_t seed, std::size_t grid_size = 16);

}  // namespace ergojump
