#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gradfield/diagnostics.hpp"
#include "gradfield/serialization.hpp"
#include "gradfield/toy_data.hpp"

namespace gradfield {

enum class Parametrization {
  implicit_phi,  // score = ∇φ, NEB objective, double backpropagation
  explicit_psi,  // score = ψ, NEB objective
  tied_psi,      // score = one-hidden-layer tied ψ, NEB objective
  dae_psi,       // ψ trained to reconstruct x; score read off as (ψ(y) − y)/σ²
};

std::string to_string(Parametrization p);
Parametrization parametrization_from_string(const std::string& s);

struct TrainConfig {
  double noise_sigma = 0.5;
  double lr = 0.05;
  int steps = 20000;
  int batch_size = 128;
  std::uint64_t seed = 1;
  Parametrization parametrization = Parametrization::implicit_phi;
  std::vector<int> hidden_widths{64, 64};
  Activation activation = Activation::silu(4.0);
  int eval_every = 500;
  double momentum = 0.0;
  int eval_samples = 4096;
  int probe_count = 20;

  /// Throws ConfigError naming the field.
  void validate() const;
};

Json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const Json& doc, const std::string& where = "train");

/// Loss is abandoned above this value (or when non-finite).
inline constexpr double kDivergenceLoss = 1e6;

struct MetricsRow {
  int step = 0;
  double loss = 0.0;        // objective on the fixed evaluation set
  double score_rmse = 0.0;  // against the analytic smoothed score on the same set
  double max_symmetry_residual = 0.0;  // over the fixed probe points
  double min_input_cos = 0.0;          // smallest |cos| between first-layer rows
};

std::string metrics_csv(const std::vector<MetricsRow>& history);
Json to_json(const MetricsRow& row);

struct Checkpoint {
  Network network;
  int step = 0;
  std::string config_hash;
  Json config;
  std::vector<MetricsRow> metrics;
};

Json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const Json& doc, const std::string& where = "checkpoint");

/// FNV-1a of the canonical dump of the training config and mixture.
std::string config_hash(const TrainConfig& config, const GmmSpec& data);

/// Score-estimating model for one parametrization: graphs plus current θ.
class ScoreModel {
 public:
  ScoreModel(const TrainConfig& config, int dim);

  Parametrization parametrization() const { return parametrization_; }
  /// y (n x d) -> score estimate (n x d).
  const ad::Graph& score_graph() const { return score_graph_; }
  /// Inputs (y, x) -> 1 x 1 training objective.
  const ad::Graph& loss_graph() const { return loss_graph_; }
  const GraphField& score_field() const { return score_field_; }

  const ad::ParamVector& params() const { return params_; }
  void set_params(ad::ParamVector params);

  Network network() const;
  /// Weight rows of the first layer.
  Matrix input_rows() const;

 private:
  struct Parts;
  static Parts build(const TrainConfig& config, int dim);
  ScoreModel(Parts&& parts, Parametrization p);

  Parametrization parametrization_;
  Network shape_;
  ad::Graph score_graph_;
  ad::Graph loss_graph_;
  GraphField score_field_;
  ad::ParamVector params_;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricsRow> history;
  bool diverged = false;
  std::string message;
  int steps_completed = 0;
};

/// Fixed (x, y) pairs on which the loss and score RMSE are measured.
Batch evaluation_batch(const TrainConfig& config, const GmmSpec& data);
/// Fixed draws of Y at which the Jacobian symmetry is probed.
Matrix probe_points(const TrainConfig& config, const GmmSpec& data);

/// Runs SGD on fresh batches each step and records metrics at step 0, every
/// eval_every steps, and at the last step. Deterministic in config.seed.
TrainResult train(const TrainConfig& config, const GmmSpec& data);

}  // namespace gradfield
