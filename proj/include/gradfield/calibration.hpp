#pragma once

// Frozen thresholds for the symmetry diagnostics and the Monte-Carlo protocol
// that produced them (tools/calibrate.cpp reruns it).
//
// Protocol: for seed s, draw an unconstrained psi of widths [4, 16, 16, 4]
// with Gaussian 1/√fan-in weights and silu_4 activation from
// derive_seed(s, 1), and one standard-normal probe from derive_seed(s, 2).
// Frozen run, seeds 0..999: smallest residual 0.2167, 1% quantile 0.529,
// median 1.23. The asymmetry threshold sits a factor 20 below the minimum.

#include <cstdint>
#include <vector>

#include "gradfield/networks.hpp"

namespace gradfield {

/// A field counts as non-conservative at a probe above this residual.
inline constexpr double kAsymmetryThreshold = 1e-2;
/// First-layer rows count as collapsed onto one feature above this min |cos|.
inline constexpr double kCollapseThreshold = 0.99;
/// Gradient fields (∇φ, tied and parallel psi) must stay below this residual.
inline constexpr double kConservativeThreshold = 1e-8;

struct RandomPsiProtocol {
  int dim = 4;
  int width = 16;
  int hidden_layers = 2;
  Activation activation = Activation::silu(4.0);
};

struct RandomPsiSample {
  std::uint64_t seed = 0;
  double residual = 0.0;
  double min_input_cos = 0.0;
};

MlpParams random_psi(std::uint64_t seed, const RandomPsiProtocol& protocol = {});
RandomPsiSample random_psi_sample(std::uint64_t seed, const RandomPsiProtocol& protocol = {});

/// Empirical quantile (nearest rank on the sorted values), p in [0, 1].
double quantile(std::vector<double> values, double p);

}  // namespace gradfield
