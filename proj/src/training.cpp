#include "gradfield/training.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "gradfield/objectives.hpp"

namespace gradfield {

namespace {

// Independent random streams derived from the config seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kEvalStream = 2;
constexpr std::uint64_t kProbeStream = 3;
constexpr std::uint64_t kBatchStream = 4;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix random_matrix(int rows, int cols, double stddev, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
  }
  return m;
}

ad::Graph dae_score_graph(const ad::Graph& psi_graph, double noise_sigma) {
  ad::Graph g(psi_graph.layout());
  const ad::NodeId y = g.input(psi_graph.input_cols(0));
  const ad::NodeId map[] = {y};
  const ad::NodeId psi = g.import(psi_graph, map)[psi_graph.output(0)];
  // Tweedie: E[X | y] = y + σ²∇log p(y)
  g.set_outputs({g.scale(g.sub(psi, y), 1.0 / (noise_sigma * noise_sigma))});
  return g;
}

}  // namespace

std::string to_string(Parametrization p) {
  switch (p) {
    case Parametrization::implicit_phi: return "implicit_phi";
    case Parametrization::explicit_psi: return "explicit_psi";
    case Parametrization::tied_psi: return "tied_psi";
    case Parametrization::dae_psi: return "dae_psi";
  }
  return "?";
}

Parametrization parametrization_from_string(const std::string& s) {
  if (s == "implicit_phi") return Parametrization::implicit_phi;
  if (s == "explicit_psi") return Parametrization::explicit_psi;
  if (s == "tied_psi") return Parametrization::tied_psi;
  if (s == "dae_psi") return Parametrization::dae_psi;
  throw std::invalid_argument("unknown parametrization '" + s + "'");
}

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate() const {
  if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) {
    throw ConfigError("train.noise_sigma: must be finite and > 0");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr: must be finite and >= 0");
  if (steps < 0) throw ConfigError("train.steps: must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
  if (eval_every < 1) throw ConfigError("train.eval_every: must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum: must be in [0, 1)");
  if (eval_samples < 1) throw ConfigError("train.eval_samples: must be >= 1");
  if (probe_count < 1) throw ConfigError("train.probe_count: must be >= 1");
  if (hidden_widths.empty()) throw ConfigError("train.hidden_widths: at least one hidden layer");
  for (std::size_t i = 0; i < hidden_widths.size(); ++i) {
    if (hidden_widths[i] < 1) {
      throw ConfigError("train.hidden_widths[" + std::to_string(i) + "]: must be >= 1");
    }
  }
  if (parametrization == Parametrization::tied_psi && hidden_widths.size() != 1) {
    throw ConfigError("train.hidden_widths: tied_psi has exactly one hidden layer");
  }
}

Json to_json(const TrainConfig& c) {
  Json doc;
  doc["parametrization"] = to_string(c.parametrization);
  doc["noise_sigma"] = c.noise_sigma;
  doc["lr"] = c.lr;
  doc["steps"] = c.steps;
  doc["batch_size"] = c.batch_size;
  doc["seed"] = c.seed;
  doc["hidden_widths"] = c.hidden_widths;
  Json act;
  act["kind"] = to_string(c.activation.kind());
  act["beta"] = c.activation.beta();
  doc["activation"] = act;
  doc["eval_every"] = c.eval_every;
  doc["momentum"] = c.momentum;
  doc["eval_samples"] = c.eval_samples;
  doc["probe_count"] = c.probe_count;
  return doc;
}

TrainConfig train_config_from_json(const Json& doc, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + ": must be an object");
  static const std::set<std::string> known{
      "parametrization", "noise_sigma", "lr",       "steps",        "batch_size",  "seed",
      "hidden_widths",   "activation",  "eval_every", "momentum", "eval_samples", "probe_count"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError(where + "." + it.key() + ": unknown key");
  }
  TrainConfig c;
  auto path = [&](const char* key) { return where + "." + key; };
  auto number = [&](const char* key, double& out) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_number()) throw ConfigError(path(key) + ": must be a number");
    out = doc[key].get<double>();
  };
  auto integer = [&](const char* key, int& out) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_number_integer()) throw ConfigError(path(key) + ": must be an integer");
    const auto v = doc[key].get<long long>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ConfigError(path(key) + ": out of range");
    }
    out = static_cast<int>(v);
  };

  if (doc.contains("parametrization")) {
    if (!doc["parametrization"].is_string()) throw ConfigError(path("parametrization") + ": must be a string");
    try {
      c.parametrization = parametrization_from_string(doc["parametrization"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path("parametrization") + ": " + e.what());
    }
  }
  number("noise_sigma", c.noise_sigma);
  number("lr", c.lr);
  integer("steps", c.steps);
  integer("batch_size", c.batch_size);
  if (doc.contains("seed")) {
    const Json& s = doc["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError(path("seed") + ": must be a non-negative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("hidden_widths")) {
    const Json& w = doc["hidden_widths"];
    if (!w.is_array()) throw ConfigError(path("hidden_widths") + ": must be an array");
    c.hidden_widths.clear();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!w[i].is_number_integer()) {
        throw ConfigError(path("hidden_widths") + "[" + std::to_string(i) + "]: must be an integer");
      }
      c.hidden_widths.push_back(w[i].get<int>());
    }
  }
  if (doc.contains("activation")) c.activation = activation_from_json(doc["activation"], path("activation"));
  integer("eval_every", c.eval_every);
  number("momentum", c.momentum);
  integer("eval_samples", c.eval_samples);
  integer("probe_count", c.probe_count);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Metrics and checkpoints

std::string metrics_csv(const std::vector<MetricsRow>& history) {
  std::ostringstream os;
  os << "step,loss,score_rmse,max_symmetry_residual,min_input_cos\n";
  for (const auto& r : history) {
    os << r.step << "," << format_double(r.loss) << "," << format_double(r.score_rmse) << ","
       << format_double(r.max_symmetry_residual) << "," << format_double(r.min_input_cos) << "\n";
  }
  return os.str();
}

Json to_json(const MetricsRow& r) {
  Json j;
  j["step"] = r.step;
  j["loss"] = r.loss;
  j["score_rmse"] = r.score_rmse;
  j["max_symmetry_residual"] = r.max_symmetry_residual;
  j["min_input_cos"] = r.min_input_cos;
  return j;
}

Json checkpoint_to_json(const Checkpoint& ckpt) {
  Json doc;
  doc["schema_version"] = 1;
  doc["kind"] = "checkpoint";
  doc["step"] = ckpt.step;
  doc["config_hash"] = ckpt.config_hash;
  doc["config"] = ckpt.config;
  doc["network"] = network_to_json(ckpt.network);
  Json metrics = Json::array();
  for (const auto& r : ckpt.metrics) metrics.push_back(to_json(r));
  doc["metrics"] = metrics;
  return doc;
}

Checkpoint checkpoint_from_json(const Json& doc, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + ": must be an object");
  static const std::set<std::string> known{"schema_version", "kind",    "step",   "config_hash",
                                           "config",         "network", "metrics"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError(where + "." + it.key() + ": unknown key");
  }
  if (!doc.contains("kind") || doc["kind"] != "checkpoint") {
    throw ConfigError(where + ".kind: expected \"checkpoint\"");
  }
  if (!doc.contains("network")) throw ConfigError(where + ".network: missing");
  Checkpoint c;
  c.network = network_from_json(doc["network"], where + ".network");
  if (doc.contains("step")) {
    if (!doc["step"].is_number_integer()) throw ConfigError(where + ".step: must be an integer");
    c.step = doc["step"].get<int>();
  }
  if (doc.contains("config_hash")) c.config_hash = doc["config_hash"].get<std::string>();
  if (doc.contains("config")) c.config = doc["config"];
  if (doc.contains("metrics")) {
    for (const auto& m : doc["metrics"]) {
      auto num = [&](const char* key) {
        return m.contains(key) && m[key].is_number() ? m[key].get<double>() : kNaN;
      };
      MetricsRow r;
      r.step = m.value("step", 0);
      r.loss = num("loss");
      r.score_rmse = num("score_rmse");
      r.max_symmetry_residual = num("max_symmetry_residual");
      r.min_input_cos = num("min_input_cos");
      c.metrics.push_back(r);
    }
  }
  return c;
}

std::string config_hash(const TrainConfig& config, const GmmSpec& data) {
  Json doc;
  doc["train"] = to_json(config);
  doc["gmm"] = to_json(data);
  const std::string text = dump_json(doc);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Model

struct ScoreModel::Parts {
  Network shape;
  ad::Graph score_graph;
  ad::Graph loss_graph;
  ad::ParamVector params;
};

ScoreModel::Parts ScoreModel::build(const TrainConfig& c, int dim) {
  c.validate();
  const std::uint64_t init_seed = derive_seed(c.seed, kInitStream);
  Parts parts;
  switch (c.parametrization) {
    case Parametrization::implicit_phi: {
      MlpParams phi = MlpParams::random(mlp_widths(dim, c.hidden_widths, NetMode::phi),
                                        NetMode::phi, c.activation, init_seed);
      // φ is differentiated in x first; the loss then sees ∇ₓφ as a forward graph.
      parts.score_graph = ad::grad_input_graph(mlp_graph(phi));
      parts.loss_graph = neb_loss_graph(parts.score_graph, c.noise_sigma);
      parts.params = mlp_param_vector(phi);
      parts.shape = std::move(phi);
      break;
    }
    case Parametrization::explicit_psi:
    case Parametrization::dae_psi: {
      MlpParams psi = MlpParams::random(mlp_widths(dim, c.hidden_widths, NetMode::psi),
                                        NetMode::psi, c.activation, init_seed);
      const ad::Graph psi_graph = mlp_graph(psi);
      if (c.parametrization == Parametrization::explicit_psi) {
        parts.score_graph = psi_graph;
        parts.loss_graph = neb_loss_graph(psi_graph, c.noise_sigma);
      } else {
        parts.score_graph = dae_score_graph(psi_graph, c.noise_sigma);
        parts.loss_graph = dae_loss_graph(psi_graph);
      }
      parts.params = mlp_param_vector(psi);
      parts.shape = std::move(psi);
      break;
    }
    case Parametrization::tied_psi: {
      const int hidden = c.hidden_widths.front();
      TiedPsiNet net = tie_weights(
          random_matrix(hidden, dim, 1.0 / std::sqrt(static_cast<double>(dim)), init_seed),
          random_matrix(hidden, 1, 1.0 / std::sqrt(static_cast<double>(hidden)),
                        derive_seed(init_seed, 1))
              .col(0),
          c.activation);
      parts.score_graph = tied_graph(net);
      parts.loss_graph = neb_loss_graph(parts.score_graph, c.noise_sigma);
      parts.params = tied_param_vector(net);
      parts.shape = std::move(net);
      break;
    }
  }
  return parts;
}

ScoreModel::ScoreModel(const TrainConfig& config, int dim)
    : ScoreModel(build(config, dim), config.parametrization) {}

ScoreModel::ScoreModel(Parts&& parts, Parametrization p)
    : parametrization_(p),
      shape_(std::move(parts.shape)),
      score_graph_(std::move(parts.score_graph)),
      loss_graph_(std::move(parts.loss_graph)),
      score_field_(score_graph_, parts.params),
      params_(std::move(parts.params)) {}

void ScoreModel::set_params(ad::ParamVector params) {
  score_field_ = score_field_.with_params(params);
  params_ = std::move(params);
}

Network ScoreModel::network() const {
  if (const auto* mlp = std::get_if<MlpParams>(&shape_)) return mlp_from_param_vector(*mlp, params_);
  return tied_from_param_vector(std::get<TiedPsiNet>(shape_), params_);
}

Matrix ScoreModel::input_rows() const { return params_.block(0); }

// ---------------------------------------------------------------------------
// Training loop

Batch evaluation_batch(const TrainConfig& config, const GmmSpec& data) {
  return make_batch(data, config.eval_samples, config.noise_sigma,
                    derive_seed(config.seed, kEvalStream));
}

Matrix probe_points(const TrainConfig& config, const GmmSpec& data) {
  return make_batch(data, config.probe_count, config.noise_sigma,
                    derive_seed(config.seed, kProbeStream))
      .y_noisy;
}

TrainResult train(const TrainConfig& config, const GmmSpec& data) {
  config.validate();
  data.validate();
  const int dim = data.dim();
  ScoreModel model(config, dim);

  const Batch eval_set = evaluation_batch(config, data);
  const Matrix oracle = smoothed_score(data, config.noise_sigma, eval_set.y_noisy);
  const Matrix probes = probe_points(config, data);
  const Matrix eval_inputs[] = {eval_set.y_noisy, eval_set.x_clean};

  auto measure = [&](int step) {
    MetricsRow row;
    row.step = step;
    row.loss = ad::eval(model.loss_graph(), eval_inputs, model.params())(0, 0);
    const Matrix scores = model.score_field().values(eval_set.y_noisy);
    row.score_rmse =
        std::sqrt((scores - oracle).squaredNorm() / static_cast<double>(scores.rows()));
    double worst = 0.0;
    for (const Matrix& J : model.score_field().jacobians(probes)) {
      const double r = symmetry_residual(J);
      worst = std::isnan(r) ? r : std::max(worst, r);
      if (std::isnan(worst)) break;
    }
    row.max_symmetry_residual = worst;
    try {
      row.min_input_cos = min_abs_cosine(model.input_rows());
    } catch (const NumericalError&) {
      row.min_input_cos = kNaN;
    }
    return row;
  };
  auto bad_loss = [](double v) { return !std::isfinite(v) || v > kDivergenceLoss; };

  TrainResult result;
  result.history.push_back(measure(0));

  ad::ParamVector last_good = model.params();
  int last_good_step = 0;
  if (bad_loss(result.history.back().loss)) {
    result.diverged = true;
    result.message = "initial loss is not finite";
  }

  SgdOptimizer optimizer(config.lr, config.momentum);
  for (int step = 1; step <= config.steps && !result.diverged; ++step) {
    const Batch batch = make_batch(data, config.batch_size, config.noise_sigma,
                                   derive_seed(config.seed, kBatchStream, static_cast<std::uint64_t>(step)));
    const Matrix inputs[] = {batch.y_noisy, batch.x_clean};
    const ad::ParamGradient g = ad::grad_params(model.loss_graph(), inputs, model.params());
    if (bad_loss(g.value)) {
      result.diverged = true;
      result.message = "batch loss " + format_double(g.value) + " at step " + std::to_string(step);
      break;
    }
    try {
      model.set_params(optimizer.step(model.params(), g.gradient));
    } catch (const NumericalError& e) {
      result.diverged = true;
      result.message = std::string(e.what()) + " at step " + std::to_string(step);
      break;
    }

    if (step % config.eval_every == 0 || step == config.steps) {
      MetricsRow row = measure(step);
      if (bad_loss(row.loss)) {
        result.diverged = true;
        result.message = "evaluation loss " + format_double(row.loss) + " at step " + std::to_string(step);
        result.history.push_back(row);
        break;
      }
      result.history.push_back(row);
    }
    last_good = model.params();
    last_good_step = step;
  }

  model.set_params(last_good);
  result.steps_completed = last_good_step;
  result.checkpoint.network = model.network();
  result.checkpoint.step = last_good_step;
  result.checkpoint.config_hash = config_hash(config, data);
  result.checkpoint.config["train"] = to_json(config);
  result.checkpoint.config["gmm"] = to_json(data);
  result.checkpoint.metrics = result.history;
  return result;
}

}  // namespace gradfield
