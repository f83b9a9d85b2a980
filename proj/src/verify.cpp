#include "gradfield/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "gradfield/calibration.hpp"
#include "gradfield/diagnostics.hpp"
#include "gradfield/networks.hpp"
#include "gradfield/objectives.hpp"
#include "gradfield/toy_data.hpp"

namespace gradfield {

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

Json to_json(const Check& c) {
  Json doc;
  doc["name"] = c.name;
  doc["passed"] = c.passed;
  doc["value"] = c.value;
  doc["comparison"] = c.comparison;
  doc["threshold"] = c.threshold;
  if (!c.detail.empty()) doc["detail"] = c.detail;
  return doc;
}

Json to_json(const SuiteReport& r) {
  Json doc;
  doc["schema_version"] = kVerifySchemaVersion;
  doc["kind"] = "verify_report";
  doc["suite"] = r.suite;
  doc["passed"] = r.passed();
  doc["checks"] = Json::array();
  for (const auto& c : r.checks) doc["checks"].push_back(to_json(c));
  return doc;
}

namespace {

Check make_check(std::string name, double value, const std::string& cmp, double threshold,
                 std::string detail = {}) {
  bool ok = false;
  if (std::isfinite(value)) {
    if (cmp == "<") ok = value < threshold;
    else if (cmp == "<=") ok = value <= threshold;
    else if (cmp == ">") ok = value > threshold;
    else if (cmp == ">=") ok = value >= threshold;
  }
  return {std::move(name), ok, value, threshold, cmp, std::move(detail)};
}

std::string widths_tag(const std::vector<int>& widths) {
  std::ostringstream os;
  for (std::size_t i = 0; i < widths.size(); ++i) os << (i ? "x" : "") << widths[i];
  return os.str();
}

std::string brief(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(b.norm(), kResidualFloor);
}

Activation suite_activation() { return Activation::silu(4.0); }

}  // namespace

Check check_closed_form(int dim, const std::vector<int>& hidden, int points, std::uint64_t seed,
                        double tol) {
  if (hidden.size() != 1 && hidden.size() != 2) {
    throw std::invalid_argument("closed forms exist for one or two hidden layers");
  }
  const MlpParams phi = MlpParams::random(mlp_widths(dim, hidden, NetMode::phi),
                                          NetMode::phi, suite_activation(), seed);
  const GraphField grad = phi_gradient_field(phi);
  const Matrix xs = standard_normal_points(points, dim, derive_seed(seed, 2));
  const Matrix ad_values = grad.values(xs);
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const Vector x = xs.row(i).transpose();
    const Vector cf = hidden.size() == 1 ? explicit_grad_l2(phi, x) : explicit_grad_l3(phi, x);
    worst = std::max(worst, rel_err(cf, ad_values.row(i).transpose()));
  }
  const std::string fn = hidden.size() == 1 ? "explicit_grad_l2" : "explicit_grad_l3";
  return make_check(fn + "_" + widths_tag(phi.widths), worst, "<=", tol,
                    std::to_string(points) + " points");
}

Check check_phi_symmetry(int dim, int depth, int width, int points, std::uint64_t seed, double tol) {
  const std::vector<int> hidden(depth - 1, width);
  const MlpParams phi = MlpParams::random(mlp_widths(dim, hidden, NetMode::phi),
                                          NetMode::phi, suite_activation(), seed);
  const Matrix xs = standard_normal_points(points, dim, derive_seed(seed, 2));
  const auto report = symmetry_report(phi_gradient_field(phi), xs);
  return make_check("grad_phi_" + widths_tag(phi.widths), report.max_residual, "<", tol,
                    "depth " + std::to_string(depth) + ", " + std::to_string(points) + " points");
}

Check check_tied_symmetry(int dim, int hidden, int points, std::uint64_t seed, double tol) {
  const Matrix theta0 = standard_normal_points(hidden, dim, derive_seed(seed, 1));
  const Vector s = standard_normal_points(hidden, 1, derive_seed(seed, 3)).col(0);
  const TiedPsiNet net = tie_weights(theta0, s, suite_activation());
  const Matrix xs = standard_normal_points(points, dim, derive_seed(seed, 2));
  const auto report = symmetry_report(tied_field(net), xs);
  return make_check("tied_psi_" + std::to_string(dim) + "x" + std::to_string(hidden),
                    report.max_residual, "<", tol);
}

Check check_parallel_symmetry(int dim, int depth, int width, int points, std::uint64_t seed,
                              double tol) {
  const Vector u = standard_normal_points(dim, 1, derive_seed(seed, 1)).col(0);
  const Vector a = standard_normal_points(width, 1, derive_seed(seed, 3)).col(0);
  const Vector b = standard_normal_points(width, 1, derive_seed(seed, 4)).col(0);
  std::vector<Matrix> inner;
  for (int l = 0; l + 2 < depth; ++l) {
    inner.push_back(standard_normal_points(width, width, derive_seed(seed, 5, l)) /
                    std::sqrt(static_cast<double>(width)));
  }
  const ParallelPsiNet net = build_parallel_psi(u, a, inner, b, suite_activation());
  const Matrix xs = standard_normal_points(points, dim, derive_seed(seed, 2));
  const auto report = symmetry_report(psi_field(net.to_mlp()), xs);
  return make_check("parallel_psi_d" + std::to_string(dim) + "_depth" + std::to_string(depth),
                    report.max_residual, "<", tol, std::to_string(points) + " points");
}

Check check_random_psi_asymmetry(int seeds, int required, double threshold) {
  int above = 0;
  double smallest = INFINITY;
  for (int s = 0; s < seeds; ++s) {
    const double r = random_psi_sample(static_cast<std::uint64_t>(s)).residual;
    smallest = std::min(smallest, r);
    if (r > threshold) ++above;
  }
  return make_check("random_deep_psi_asymmetric_count", above, ">=", required,
                    "seeds " + std::to_string(seeds) + ", residual threshold " +
                        brief(threshold) + ", smallest residual " + brief(smallest));
}

Check check_double_backprop(const std::vector<int>& hidden, double h, std::uint64_t seed,
                            double tol) {
  const double sigma = 0.5;
  const MlpParams phi = MlpParams::random(mlp_widths(2, hidden, NetMode::phi), NetMode::phi,
                                          suite_activation(), seed);
  const ad::Graph loss = neb_loss_graph(ad::grad_input_graph(mlp_graph(phi)), sigma);
  const Batch b = make_batch(GmmSpec::benchmark(), 32, sigma, derive_seed(seed, 2));
  const Matrix in[] = {b.y_noisy, b.x_clean};
  const ad::ParamVector theta = mlp_param_vector(phi);
  const auto pg = ad::grad_params(loss, in, theta);

  std::vector<double> th = theta.values();
  Vector analytic(th.size()), fd(th.size());
  for (std::size_t i = 0; i < th.size(); ++i) {
    const double keep = th[i];
    th[i] = keep + h;
    const double up = ad::eval(loss, in, ad::ParamVector(theta.layout(), th))(0, 0);
    th[i] = keep - h;
    const double down = ad::eval(loss, in, ad::ParamVector(theta.layout(), th))(0, 0);
    th[i] = keep;
    fd[i] = (up - down) / (2 * h);
    analytic[i] = pg.gradient[i];
  }
  return make_check("neb_double_backprop_" + widths_tag(phi.widths), rel_err(analytic, fd), "<",
                    tol, std::to_string(th.size()) + " parameters, h " + brief(h));
}

Check check_score_vs_logpdf(int points, std::uint64_t seed, double tol) {
  GmmSpec skewed;
  skewed.weights = {0.5, 0.3, 0.2};
  skewed.means.resize(3, 2);
  skewed.means << -1.5, 0.5, 2.0, -1.0, 0.0, 2.5;
  skewed.variances.resize(3, 2);
  skewed.variances << 0.5, 1.5, 1.0, 0.25, 2.0, 0.75;
  const double sigma = 0.5;
  const Matrix ys = 2.0 * standard_normal_points(points, 2, seed);
  double worst = 0.0;
  for (const GmmSpec& g : {GmmSpec::benchmark(), skewed}) {
    for (int i = 0; i < points; ++i) {
      const Vector y = ys.row(i).transpose();
      const Vector fd = fd_gradient([&](const Vector& v) { return smoothed_logpdf(g, sigma, v); }, y);
      worst = std::max(worst, (smoothed_score(g, sigma, y) - fd).cwiseAbs().maxCoeff());
    }
  }
  return make_check("smoothed_score_vs_fd_logpdf", worst, "<=", tol,
                    std::to_string(points) + " points on two mixtures");
}

Check check_gaussian_score(int dim, int points, std::uint64_t seed, double tol) {
  const Matrix ys = standard_normal_points(points, dim, seed);
  double worst = 0.0;
  for (double sigma : {0.1, 0.5, 2.0}) {
    const Matrix s = smoothed_score(GmmSpec::standard_normal(dim), sigma, ys);
    worst = std::max(worst, (s + ys / (1 + sigma * sigma)).cwiseAbs().maxCoeff());
  }
  return make_check("gaussian_score_closed_form", worst, "<=", tol);
}

Check check_oracle_neb(int samples, double noise_sigma, std::uint64_t seed) {
  const GmmSpec g = GmmSpec::benchmark();
  const Batch b = make_batch(g, samples, noise_sigma, seed);
  const double loss = neb_loss(b.x_clean, b.y_noisy, smoothed_score(g, noise_sigma, b.y_noisy),
                               noise_sigma);
  return make_check("oracle_neb_loss_below_noise_energy", loss, "<",
                    g.dim() * noise_sigma * noise_sigma, std::to_string(samples) + " samples");
}

namespace {

SuiteReport autodiff_suite() {
  SuiteReport r{"autodiff", {}};
  r.checks.push_back(check_double_backprop({4, 4}, 1e-5, 5, 1e-3));
  r.checks.push_back(check_double_backprop({8}, 1e-5, 6, 1e-3));

  const MlpParams phi = MlpParams::random({3, 8, 8, 1}, NetMode::phi, Activation::tanh(), 7);
  const GraphField grad = phi_gradient_field(phi);
  const Matrix xs = standard_normal_points(20, 3, 8);
  double worst = 0.0;
  for (int i = 0; i < xs.rows(); ++i) {
    const Vector x = xs.row(i).transpose();
    const Vector fd = fd_gradient([&](const Vector& v) { return phi_forward(phi, v); }, x);
    worst = std::max(worst, rel_err(grad.value(x), fd));
  }
  r.checks.push_back(make_check("input_gradient_vs_fd", worst, "<", 1e-7));

  const MlpParams psi = MlpParams::random({3, 8, 8, 3}, NetMode::psi, suite_activation(), 9);
  const GraphField field = psi_field(psi);
  worst = 0.0;
  for (int i = 0; i < xs.rows(); ++i) {
    const Vector x = xs.row(i).transpose();
    const Matrix ad = jacobian(field, x);
    const Matrix fd = jacobian(field, x, {JacobianMethod::central_fd4, 1e-3});
    worst = std::max(worst, (ad - fd).norm() / std::max(fd.norm(), kResidualFloor));
  }
  r.checks.push_back(make_check("psi_jacobian_vs_fd4", worst, "<", 1e-8));

  const TiedPsiNet tied = tie_weights(standard_normal_points(6, 3, 10),
                                      standard_normal_points(6, 1, 11).col(0), suite_activation());
  const GraphField tf = tied_field(tied);
  worst = 0.0;
  for (int i = 0; i < xs.rows(); ++i) {
    const Vector x = xs.row(i).transpose();
    const Matrix closed = tied.jacobian(x);
    worst = std::max(worst, (tf.autodiff_jacobian(x) - closed).norm() /
                                std::max(closed.norm(), kResidualFloor));
  }
  r.checks.push_back(make_check("tied_jacobian_vs_closed_form", worst, "<=", 1e-12));
  return r;
}

SuiteReport symmetry_suite() {
  SuiteReport r{"symmetry", {}};
  for (int depth = 2; depth <= 5; ++depth) {
    r.checks.push_back(check_phi_symmetry(4, depth, 16, 20, 100 + depth, kConservativeThreshold));
  }
  r.checks.push_back(check_tied_symmetry(4, 16, 20, 110, 1e-10));
  for (int depth = 3; depth <= 5; ++depth) {
    r.checks.push_back(check_parallel_symmetry(4, depth, 16, 20, 120 + depth, 1e-10));
  }
  // The injected unconstrained deep psi must be flagged as non-conservative.
  const RandomPsiSample fixture = random_psi_sample(0);
  r.checks.push_back(make_check("random_deep_psi_fixture", fixture.residual, ">",
                                kAsymmetryThreshold, "calibration seed 0"));
  r.checks.push_back(check_random_psi_asymmetry(100, 99, kAsymmetryThreshold));
  return r;
}

SuiteReport closed_form_suite() {
  SuiteReport r{"closed_form", {}};
  std::uint64_t seed = 200;
  for (int dim : {2, 4, 8}) {
    for (const std::vector<int>& hidden :
         {std::vector<int>{16}, std::vector<int>{32}, std::vector<int>{16, 16},
          std::vector<int>{32, 32}}) {
      r.checks.push_back(check_closed_form(dim, hidden, 100, seed++, 1e-12));
    }
  }
  return r;
}

SuiteReport oracle_suite() {
  SuiteReport r{"oracle", {}};
  r.checks.push_back(check_score_vs_logpdf(50, 300, 1e-6));
  r.checks.push_back(check_gaussian_score(3, 50, 301, 1e-12));
  r.checks.push_back(check_oracle_neb(100000, 0.5, 2024));
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"autodiff", "symmetry", "closed_form", "oracle"};
  return names;
}

SuiteReport run_suite(const std::string& name) {
  if (name == "autodiff") return autodiff_suite();
  if (name == "symmetry") return symmetry_suite();
  if (name == "closed_form") return closed_form_suite();
  if (name == "oracle") return oracle_suite();
  throw std::invalid_argument("unknown suite '" + name + "'");
}

}  // namespace gradfield
