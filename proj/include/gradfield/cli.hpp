#pragma once

// `gradfield` subcommands: verify, train, export-field, symmetry-report.
//
// Exit codes: 0 success, 1 property violation, 2 usage or config error,
// 3 numerical divergence.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gradfield/run_config.hpp"
#include "gradfield/serialization.hpp"
#include "gradfield/training.hpp"

namespace gradfield {

enum ExitCode : int {
  kExitOk = 0,
  kExitViolation = 1,
  kExitUsage = 2,
  kExitDivergence = 3,
};

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Which of the two deep-psi outcomes a trained unconstrained network shows:
/// a non-symmetric Jacobian at the probes, or first-layer rows collapsed onto
/// one direction.
struct TheoremSignature {
  bool asymmetry = false;
  bool collapse = false;
  std::string horn;  // "asymmetry", "collapse", "both" or "none"
  bool holds() const { return asymmetry || collapse; }
};

TheoremSignature theorem_signature(const MetricsRow& row, const DiagnosticsConfig& diagnostics);

/// Relative change of the mean evaluation loss between the last two quarters
/// of the recorded history; empty with fewer than four rows.
std::optional<double> plateau_rel_change(const std::vector<MetricsRow>& history);

/// summary.json for a finished (or diverged) run.
Json run_summary(const RunConfig& config, const TrainResult& result);

struct GridSpec {
  double x_min = -4.0, x_max = 4.0;
  double y_min = -4.0, y_max = 4.0;
  int nx = 41, ny = 41;

  void validate() const;
  /// Coordinate i of n between lo and hi; n = 1 gives the midpoint.
  static double coord(double lo, double hi, int n, int i);
};

struct FieldOracle {
  GmmSpec data;
  double noise_sigma = 0.5;
};

/// Header x1,x2,psi1,psi2[,phi][,score1,score2]; rows scan x fastest, then y.
/// Throws DimensionError unless the network is two-dimensional.
std::string export_field_csv(const Network& net, const GridSpec& grid,
                             const std::optional<FieldOracle>& oracle = std::nullopt);

}  // namespace gradfield
