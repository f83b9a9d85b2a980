#pragma once

// Property suites run by `gradfield verify` and by the acceptance binary.
// Every check is deterministic: seeds are fixed arguments.

#include <cstdint>
#include <string>
#include <vector>

#include "gradfield/json_io.hpp"

namespace gradfield {

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string comparison;  // how value must relate to threshold: "<", "<=", ">" or ">="
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<Check> checks;

  bool passed() const;
};

inline constexpr int kVerifySchemaVersion = 1;

Json to_json(const Check& check);
/// {"schema_version", "kind": "verify_report", "suite", "passed", "checks": [...]}
Json to_json(const SuiteReport& report);

/// autodiff, symmetry, closed_form, oracle.
const std::vector<std::string>& suite_names();
/// Throws std::invalid_argument for an unknown name.
SuiteReport run_suite(const std::string& name);

// Building blocks. "depth" counts weight layers, so depth L has L-1 hidden layers.

/// Max over points of ‖closed form − autodiff ∇φ‖ / ‖autodiff ∇φ‖ for a phi
/// network with one (explicit_grad_l2) or two (explicit_grad_l3) hidden layers.
Check check_closed_form(int dim, const std::vector<int>& hidden, int points, std::uint64_t seed,
                        double tol);
/// Max symmetry residual of the autodiff Jacobian of ∇φ.
Check check_phi_symmetry(int dim, int depth, int width, int points, std::uint64_t seed, double tol);
Check check_tied_symmetry(int dim, int hidden, int points, std::uint64_t seed, double tol);
Check check_parallel_symmetry(int dim, int depth, int width, int points, std::uint64_t seed,
                              double tol);
/// Number of calibration-protocol seeds 0..seeds-1 whose residual exceeds
/// `threshold`; passes when at least `required` do.
Check check_random_psi_asymmetry(int seeds, int required, double threshold);
/// Norm-wise relative error between ∇_θ of the NEB loss on ∇φ and central
/// differences in parameter space with step h.
Check check_double_backprop(const std::vector<int>& hidden, double h, std::uint64_t seed,
                            double tol);
/// Max abs difference between smoothed_score and fd_gradient of
/// smoothed_logpdf over standard-normal probes scaled by 2.
Check check_score_vs_logpdf(int points, std::uint64_t seed, double tol);
/// Max abs difference between the standard-normal score and −y/(1+σ²).
Check check_gaussian_score(int dim, int points, std::uint64_t seed, double tol);
/// NEB loss of the analytic score on `samples` benchmark draws, against d·σ².
Check check_oracle_neb(int samples, double noise_sigma, std::uint64_t seed);

}  // namespace gradfield
