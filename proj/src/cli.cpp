#include "gradfield/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>

#include "gradfield/calibration.hpp"
#include "gradfield/diagnostics.hpp"
#include "gradfield/errors.hpp"
#include "gradfield/objectives.hpp"
#include "gradfield/verify.hpp"

namespace fs = std::filesystem;

namespace gradfield {

TheoremSignature theorem_signature(const MetricsRow& row, const DiagnosticsConfig& diagnostics) {
  TheoremSignature sig;
  sig.asymmetry = row.max_symmetry_residual > diagnostics.symmetry_threshold;
  sig.collapse = row.min_input_cos > diagnostics.collapse_threshold;
  sig.horn = sig.asymmetry && sig.collapse ? "both"
             : sig.asymmetry               ? "asymmetry"
             : sig.collapse                ? "collapse"
                                           : "none";
  return sig;
}

std::optional<double> plateau_rel_change(const std::vector<MetricsRow>& history) {
  const std::size_t n = history.size();
  if (n < 4) return std::nullopt;
  const std::size_t q = n / 4;
  auto mean = [&](std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += history[i].loss;
    return s / static_cast<double>(to - from);
  };
  const double last = mean(n - q, n);
  const double before = mean(n - 2 * q, n - q);
  return std::abs(last - before) / std::max(std::abs(last), kResidualFloor);
}

namespace {

bool unconstrained_deep_psi(const TrainConfig& c) {
  const bool psi = c.parametrization == Parametrization::explicit_psi ||
                   c.parametrization == Parametrization::dae_psi;
  return psi && c.hidden_widths.size() >= 2;
}

bool conservative_by_construction(const TrainConfig& c) {
  return c.parametrization == Parametrization::implicit_phi ||
         c.parametrization == Parametrization::tied_psi;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json parallelism_json(const Network& net) {
  ParallelismStats stats;
  try {
    stats = std::visit([](const auto& n) { return weight_parallelism(n); }, net);
  } catch (const NumericalError&) {
    // every first-layer row is zero: no directions to compare
    return Json{{"min_input_cos", nullptr}, {"min_output_cos", nullptr},
                {"zero_input_rows", nullptr}, {"zero_output_cols", nullptr}};
  }
  Json doc;
  doc["min_input_cos"] = stats.min_input_cos;
  doc["min_output_cos"] = optional_number(stats.min_output_cos);
  doc["zero_input_rows"] = stats.zero_input_rows;
  doc["zero_output_cols"] = stats.zero_output_cols;
  return doc;
}

double oracle_loss(const TrainConfig& c, const GmmSpec& data) {
  const Batch b = evaluation_batch(c, data);
  const Matrix score = smoothed_score(data, c.noise_sigma, b.y_noisy);
  if (c.parametrization == Parametrization::dae_psi) {
    const double s2 = c.noise_sigma * c.noise_sigma;
    return dae_loss(b.x_clean, b.y_noisy + s2 * score);
  }
  return neb_loss(b.x_clean, b.y_noisy, score, c.noise_sigma);
}

}  // namespace

Json run_summary(const RunConfig& config, const TrainResult& result) {
  const auto& h = result.history;
  Json doc;
  doc["schema_version"] = 1;
  doc["kind"] = "run_summary";
  doc["parametrization"] = to_string(config.train.parametrization);
  doc["seed"] = config.train.seed;
  doc["config_hash"] = result.checkpoint.config_hash;
  doc["steps_requested"] = config.train.steps;
  doc["steps_completed"] = result.steps_completed;
  doc["diverged"] = result.diverged;
  if (!result.message.empty()) doc["message"] = result.message;
  doc["initial"] = to_json(h.front());
  doc["final"] = h.size() > 1 ? to_json(h.back()) : Json(nullptr);
  doc["oracle_loss"] = oracle_loss(config.train, config.gmm);
  doc["noise_energy"] = config.gmm.dim() * config.train.noise_sigma * config.train.noise_sigma;
  if (h.size() > 1) {
    doc["score_rmse_reduction"] = h.front().score_rmse / h.back().score_rmse;
  } else {
    doc["score_rmse_reduction"] = nullptr;
  }

  double worst = 0.0;
  for (const auto& row : h) {
    worst = std::isnan(row.max_symmetry_residual) ? row.max_symmetry_residual
                                                  : std::max(worst, row.max_symmetry_residual);
    if (std::isnan(worst)) break;
  }
  doc["max_symmetry_residual_over_run"] = worst;
  doc["parallelism"] = parallelism_json(result.checkpoint.network);
  doc["plateau_rel_change"] = optional_number(plateau_rel_change(h));

  bool passed = !result.diverged;
  if (conservative_by_construction(config.train)) {
    const double limit = config.diagnostics.conservative_threshold;
    const bool ok = worst < limit;
    doc["conservative_check"] = {{"max_residual", worst}, {"threshold", limit}, {"passed", ok}};
    passed = passed && ok;
  } else {
    doc["conservative_check"] = nullptr;
  }
  if (unconstrained_deep_psi(config.train)) {
    const TheoremSignature sig = theorem_signature(h.back(), config.diagnostics);
    doc["theorem_signature"] = {{"step", h.back().step},
                                {"max_symmetry_residual", h.back().max_symmetry_residual},
                                {"symmetry_threshold", config.diagnostics.symmetry_threshold},
                                {"min_input_cos", h.back().min_input_cos},
                                {"collapse_threshold", config.diagnostics.collapse_threshold},
                                {"asymmetry", sig.asymmetry},
                                {"collapse", sig.collapse},
                                {"horn", sig.horn},
                                {"holds", sig.holds()}};
    passed = passed && sig.holds();
  } else {
    doc["theorem_signature"] = nullptr;
  }
  doc["passed"] = passed;
  return doc;
}

void GridSpec::validate() const {
  auto check_range = [](const char* name, double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo <= hi)) {
      throw ConfigError(std::string(name) + ": need finite bounds with min <= max");
    }
  };
  check_range("xlim", x_min, x_max);
  check_range("ylim", y_min, y_max);
  if (nx < 1 || ny < 1) throw ConfigError("grid: nx and ny must be >= 1");
  if (static_cast<long long>(nx) * ny > 25'000'000) throw ConfigError("grid: too many points");
}

double GridSpec::coord(double lo, double hi, int n, int i) {
  if (n == 1) return 0.5 * (lo + hi);
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

std::string export_field_csv(const Network& net, const GridSpec& grid,
                             const std::optional<FieldOracle>& oracle) {
  grid.validate();
  if (network_dim(net) != 2) {
    throw DimensionError("export-field supports d = 2 only; network has d = " +
                         std::to_string(network_dim(net)));
  }
  if (oracle && oracle->data.dim() != 2) {
    throw DimensionError("export-field: oracle mixture must be two-dimensional");
  }
  Matrix pts(static_cast<Eigen::Index>(grid.nx) * grid.ny, 2);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const Eigen::Index r = static_cast<Eigen::Index>(j) * grid.nx + i;
      pts(r, 0) = GridSpec::coord(grid.x_min, grid.x_max, grid.nx, i);
      pts(r, 1) = GridSpec::coord(grid.y_min, grid.y_max, grid.ny, j);
    }
  }
  const Matrix psi = network_field(net).values(pts);
  const auto* mlp = std::get_if<MlpParams>(&net);
  const bool with_phi = mlp && mlp->mode == NetMode::phi;
  Matrix phi;
  if (with_phi) phi = mlp_forward(*mlp, pts);
  Matrix score;
  if (oracle) score = smoothed_score(oracle->data, oracle->noise_sigma, pts);

  std::ostringstream os;
  os << "x1,x2,psi1,psi2";
  if (with_phi) os << ",phi";
  if (oracle) os << ",score1,score2";
  os << "\n";
  for (Eigen::Index r = 0; r < pts.rows(); ++r) {
    os << format_double(pts(r, 0)) << ',' << format_double(pts(r, 1)) << ','
       << format_double(psi(r, 0)) << ',' << format_double(psi(r, 1));
    if (with_phi) os << ',' << format_double(phi(r, 0));
    if (oracle) os << ',' << format_double(score(r, 0)) << ',' << format_double(score(r, 1));
    os << "\n";
  }
  return os.str();
}

namespace {

std::string brief(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

/// Usage problems detected after parsing.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LoadedNetwork {
  Network network;
  std::optional<FieldOracle> oracle;  // from a checkpoint's config
};

LoadedNetwork load_network_or_checkpoint(const fs::path& path) {
  const Json doc = read_json_file(path);
  if (doc.is_object() && doc.contains("kind") && doc["kind"] == "checkpoint") {
    Checkpoint ckpt = checkpoint_from_json(doc, path.string());
    LoadedNetwork out{std::move(ckpt.network), std::nullopt};
    if (ckpt.config.contains("train") && ckpt.config.contains("gmm")) {
      const TrainConfig tc = train_config_from_json(ckpt.config["train"], "checkpoint.config.train");
      out.oracle = FieldOracle{gmm_from_json(ckpt.config["gmm"], "checkpoint.config.gmm"),
                               tc.noise_sigma};
    }
    return out;
  }
  return {network_from_json(doc, path.string()), std::nullopt};
}

void write_file(const fs::path& path, const std::string& text, std::ostream& out) {
  write_text_file(path, text);
  out << "wrote " << path.generic_string() << "\n";
}

int cmd_verify(const std::string& suite, const fs::path& out_dir, std::ostream& out) {
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    std::string all;
    for (const auto& n : names) all += (all.empty() ? "" : ", ") + n;
    throw UsageError("--suite: unknown suite '" + suite + "' (expected one of " + all + ")");
  }
  const SuiteReport report = run_suite(suite);
  for (const Check& c : report.checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << brief(c.value) << ' '
        << c.comparison << ' ' << brief(c.threshold);
    if (!c.detail.empty()) out << " (" << c.detail << ")";
    out << "\n";
  }
  fs::create_directories(out_dir);
  write_file(out_dir / ("verify_" + suite + ".json"), dump_json(to_json(report)), out);
  out << "suite " << suite << ": " << (report.passed() ? "passed" : "FAILED") << "\n";
  return report.passed() ? kExitOk : kExitViolation;
}

int cmd_train(const fs::path& config_path, const std::optional<fs::path>& out_dir,
              const std::optional<std::uint64_t>& seed, std::ostream& out) {
  RunConfig config = load_run_config(config_path);
  if (seed) config.train.seed = *seed;
  if (out_dir) config.output_dir = *out_dir;
  config.validate();

  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  write_file(dir / "config.json", dump_json(to_json(config)), out);

  const TrainResult result = train(config.train, config.gmm);
  write_file(dir / "metrics.csv", metrics_csv(result.history), out);
  write_file(dir / "checkpoint.json", dump_json(checkpoint_to_json(result.checkpoint)), out);
  const Json summary = run_summary(config, result);
  write_file(dir / "summary.json", dump_json(summary), out);

  const MetricsRow& last = result.history.back();
  out << to_string(config.train.parametrization) << " seed " << config.train.seed << ": step "
      << last.step << " loss " << brief(last.loss) << " score_rmse "
      << brief(last.score_rmse) << " max_symmetry_residual "
      << brief(last.max_symmetry_residual) << "\n";
  if (!summary["theorem_signature"].is_null()) {
    out << "theorem signature horn: " << summary["theorem_signature"]["horn"].get<std::string>()
        << "\n";
  }
  if (result.diverged) {
    out << "diverged: " << result.message << "\n";
    return kExitDivergence;
  }
  return summary["passed"].get<bool>() ? kExitOk : kExitViolation;
}

struct ExportArgs {
  fs::path checkpoint;
  std::optional<fs::path> out_dir;
  std::vector<double> xlim, ylim;
  int nx = 41, ny = 41;
  bool oracle = false;
  std::optional<fs::path> config;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
  GridSpec grid;
  if (!a.xlim.empty()) grid.x_min = a.xlim[0], grid.x_max = a.xlim[1];
  if (!a.ylim.empty()) grid.y_min = a.ylim[0], grid.y_max = a.ylim[1];
  grid.nx = a.nx;
  grid.ny = a.ny;
  grid.validate();

  LoadedNetwork loaded = load_network_or_checkpoint(a.checkpoint);
  std::optional<FieldOracle> oracle;
  if (a.oracle) {
    if (a.config) {
      const RunConfig rc = load_run_config(*a.config);
      oracle = FieldOracle{rc.gmm, rc.train.noise_sigma};
    } else if (loaded.oracle) {
      oracle = loaded.oracle;
    } else {
      throw UsageError("--oracle: a bare network carries no mixture; pass --config");
    }
  }
  const std::string csv = export_field_csv(loaded.network, grid, oracle);
  const fs::path dir = a.out_dir ? *a.out_dir : a.checkpoint.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  write_file(dir / "field.csv", csv, out);
  return kExitOk;
}

struct ReportArgs {
  fs::path network;
  std::optional<fs::path> out_dir;
  int points = 20;
  std::uint64_t seed = 0;
  std::string method = "autodiff";
  double fd_step = kDefaultFdStep;
  bool rank = false;
  double threshold = kAsymmetryThreshold;
};

int cmd_symmetry_report(const ReportArgs& a, std::ostream& out) {
  if (a.points < 1) throw UsageError("--points: must be >= 1");
  if (!(a.fd_step > 0.0) || !std::isfinite(a.fd_step)) throw UsageError("--fd-step: must be > 0");
  if (!(a.threshold > 0.0)) throw UsageError("--threshold: must be > 0");
  JacobianOptions options;
  try {
    options.method = jacobian_method_from_string(a.method);
  } catch (const std::exception&) {
    throw UsageError("--method: expected autodiff, central_fd or central_fd4");
  }
  options.h = a.fd_step;

  const Network net = load_network_or_checkpoint(a.network).network;
  const int dim = network_dim(net);
  const Matrix pts = standard_normal_points(a.points, dim, a.seed);
  const SymmetryReport report = symmetry_report(network_field(net), pts, options, a.rank);

  const std::string kind = network_to_json(net)["kind"].get<std::string>();
  const bool expected_conservative = kind != "mlp_psi";
  int above = 0;
  for (double r : report.residuals) above += r > a.threshold ? 1 : 0;
  // Finite-difference Jacobians carry truncation error, so only autodiff is held to the bound.
  const bool violation = expected_conservative && options.method == JacobianMethod::autodiff &&
                         !(report.max_residual < kConservativeThreshold);

  const Json base = to_json(report);
  Json doc;
  for (const auto& [key, value] : base.items()) {
    if (key == "points") {
      doc["network_kind"] = kind;
      doc["seed"] = a.seed;
      doc["threshold"] = a.threshold;
      doc["points_above_threshold"] = above;
      doc["expected_conservative"] = expected_conservative;
      doc["conservative_threshold"] = kConservativeThreshold;
      doc["violation"] = violation;
      doc["parallelism"] = parallelism_json(net);
    }
    doc[key] = value;
  }

  const fs::path dir = a.out_dir ? *a.out_dir : a.network.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  write_file(dir / "symmetry_report.json", dump_json(doc), out);
  write_file(dir / "symmetry_report.csv", to_csv(report), out);
  out << kind << " d=" << dim << ": max residual " << brief(report.max_residual) << ", "
      << above << "/" << a.points << " points above " << brief(a.threshold) << "\n";
  return violation ? kExitViolation : kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradient-field networks: verification, training and export"};
  app.name("gradfield");
  app.require_subcommand(1);

  std::string suite;
  std::string verify_out = ".";
  auto* verify = app.add_subcommand("verify", "Run a property suite and write verify_<suite>.json");
  verify->add_option("--suite", suite, "autodiff, symmetry, closed_form or oracle")->required();
  verify->add_option("--out", verify_out, "Report directory");

  std::string train_config;
  std::string train_out;
  std::uint64_t train_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Train a score model from a run config");
  train_cmd->add_option("--config", train_config, "Run config (JSON)")->required();
  auto* train_out_opt = train_cmd->add_option("--out", train_out, "Run directory (overrides output_dir)");
  auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "Overrides train.seed");

  ExportArgs ex;
  std::string ex_checkpoint, ex_out, ex_config;
  auto* export_cmd = app.add_subcommand("export-field", "Evaluate a d=2 field on a grid");
  export_cmd->add_option("--checkpoint", ex_checkpoint, "Checkpoint or network document")->required();
  auto* ex_out_opt = export_cmd->add_option("--out", ex_out, "Output directory (default: next to the checkpoint)");
  export_cmd->add_option("--xlim", ex.xlim, "x range: min max")->expected(2);
  export_cmd->add_option("--ylim", ex.ylim, "y range: min max")->expected(2);
  export_cmd->add_option("--nx", ex.nx, "Grid points along x");
  export_cmd->add_option("--ny", ex.ny, "Grid points along y");
  export_cmd->add_flag("--oracle", ex.oracle, "Add the analytic smoothed score");
  auto* ex_config_opt = export_cmd->add_option("--config", ex_config, "Run config supplying the oracle mixture");

  ReportArgs rep;
  std::string rep_network, rep_out;
  auto* report_cmd = app.add_subcommand("symmetry-report", "Jacobian symmetry of a serialized network");
  report_cmd->add_option("--network", rep_network, "Network or checkpoint document")->required();
  auto* rep_out_opt = report_cmd->add_option("--out", rep_out, "Output directory (default: next to the network)");
  report_cmd->add_option("--points", rep.points, "Standard-normal probe points");
  report_cmd->add_option("--seed", rep.seed, "Probe seed");
  report_cmd->add_option("--method", rep.method, "autodiff, central_fd or central_fd4");
  report_cmd->add_option("--fd-step", rep.fd_step, "Finite-difference step");
  report_cmd->add_flag("--rank", rep.rank, "Record the numerical rank of each Jacobian");
  report_cmd->add_option("--threshold", rep.threshold, "Asymmetry threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (verify->parsed()) return cmd_verify(suite, verify_out, out);
    if (train_cmd->parsed()) {
      std::optional<fs::path> dir;
      if (*train_out_opt) dir = train_out;
      std::optional<std::uint64_t> seed;
      if (*train_seed_opt) seed = train_seed;
      return cmd_train(train_config, dir, seed, out);
    }
    if (export_cmd->parsed()) {
      ex.checkpoint = ex_checkpoint;
      if (*ex_out_opt) ex.out_dir = ex_out;
      if (*ex_config_opt) ex.config = ex_config;
      return cmd_export(ex, out);
    }
    if (report_cmd->parsed()) {
      rep.network = rep_network;
      if (*rep_out_opt) rep.out_dir = rep_out;
      return cmd_symmetry_report(rep, out);
    }
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "unsupported input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace gradfield
