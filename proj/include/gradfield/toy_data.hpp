#pragma once

// Gaussian-mixture ground truth. With Y = X + σ·Z and X a diagonal-covariance
// mixture, Y is again a mixture with every variance inflated by σ², so the
// smoothed log-density f and its score ∇f are available in closed form.

#include <cstdint>
#include <vector>

#include "gradfield/field.hpp"
#include "gradfield/json_io.hpp"

namespace gradfield {

struct GmmSpec {
  std::vector<double> weights;  // K entries on the simplex
  Matrix means;                 // K x d
  Matrix variances;             // K x d, diagonal covariance entries

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }

  /// Throws ConfigError naming the violated constraint.
  void validate() const;

  /// Two unit-variance components at ±(2, 0, …, 0) with equal weights.
  static GmmSpec benchmark(int dim = 2);
  static GmmSpec standard_normal(int dim);
};

/// The mixture of Y = X + σ·Z: every variance plus σ².
GmmSpec smooth(const GmmSpec& spec, double noise_sigma);

struct Batch {
  Matrix x_clean;
  Matrix y_noisy;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// n i.i.d. draws, one per row; deterministic in `seed`.
Matrix sample_gmm(const GmmSpec& spec, int n, std::uint64_t seed);
/// y = x + σ·Z with Z standard normal, deterministic in `seed`.
Matrix corrupt(const Matrix& x, double noise_sigma, std::uint64_t seed);
/// Clean draws from `sample_seed`, noise from a stream derived from it.
Batch make_batch(const GmmSpec& spec, int n, double noise_sigma, std::uint64_t sample_seed);

/// log Σₖ wₖ N(y; μₖ, diag(vₖ) + σ²I), log-sum-exp stabilized.
double smoothed_logpdf(const GmmSpec& spec, double noise_sigma, const Vector& y);
/// ∇_y of smoothed_logpdf: Σₖ rₖ(y) · (−(y − μₖ) / (vₖ + σ²)).
Vector smoothed_score(const GmmSpec& spec, double noise_sigma, const Vector& y);
/// Row-wise smoothed_score.
Matrix smoothed_score(const GmmSpec& spec, double noise_sigma, const Matrix& ys);

/// The smoothed score as a VectorField (finite-difference Jacobians only).
FunctionField smoothed_score_field(const GmmSpec& spec, double noise_sigma);

/// Mixes a base seed with a stream id and counter into an independent seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t counter = 0);

Json to_json(const GmmSpec& spec);
/// Strict parse; unknown keys are rejected. `where` prefixes error messages.
GmmSpec gmm_from_json(const Json& doc, const std::string& where = "gmm");

/// Header x1..xd, one row per sample.
std::string samples_to_csv(const Matrix& samples, const std::string& prefix = "x");

}  // namespace gradfield
