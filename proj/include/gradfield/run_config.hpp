#pragma once

// One JSON document per run:
//
//   {
//     "schema_version": 1,
//     "output_dir": "runs/benchmark",
//     "train": { ... TrainConfig ... },
//     "gmm": {"weights": [...], "means": [[...]], "variances": [[...]]},
//     "diagnostics": {"probe_count": 20, "fd_step": 1e-5,
//                     "symmetry_threshold": 1e-2, "collapse_threshold": 0.99,
//                     "conservative_threshold": 1e-8}
//   }
//
// Missing sections and keys take their defaults; unknown keys are errors.

#include <filesystem>
#include <string>

#include "gradfield/calibration.hpp"
#include "gradfield/diagnostics.hpp"
#include "gradfield/training.hpp"

namespace gradfield {

inline constexpr int kRunConfigSchemaVersion = 1;

struct DiagnosticsConfig {
  int probe_count = 20;
  double fd_step = kDefaultFdStep;
  double symmetry_threshold = kAsymmetryThreshold;
  double collapse_threshold = kCollapseThreshold;
  double conservative_threshold = kConservativeThreshold;

  void validate() const;
};

struct RunConfig {
  std::filesystem::path output_dir = "runs/default";
  TrainConfig train;
  GmmSpec gmm = GmmSpec::benchmark();
  DiagnosticsConfig diagnostics;

  /// Validates every section; throws ConfigError naming the field.
  void validate() const;
};

Json to_json(const DiagnosticsConfig& config);
Json to_json(const RunConfig& config);
RunConfig run_config_from_json(const Json& doc, const std::string& where = "config");
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace gradfield
