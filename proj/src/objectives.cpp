#include "gradfield/objectives.hpp"

#include <cmath>
#include <sstream>

namespace gradfield {

namespace {

void check_pair(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shapes " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + " differ");
  }
  if (a.rows() == 0) throw DimensionError(std::string(what) + ": empty batch");
}

ad::Graph loss_scaffold(const ad::Graph& inner, ad::NodeId* y, ad::NodeId* x, ad::NodeId* out) {
  if (inner.num_inputs() != 1) throw DimensionError("loss: inner graph must have one input slot");
  const int d = inner.input_cols(0);
  if (inner.node(inner.output(0)).cols != d) {
    throw DimensionError("loss: inner graph output " + inner.describe(inner.output(0)) +
                         " is not " + std::to_string(d) + "-dimensional");
  }
  ad::Graph g(inner.layout());
  *y = g.input(d);
  *x = g.input(d);
  const ad::NodeId map[] = {*y};
  *out = g.import(inner, map)[inner.output(0)];
  return g;
}

}  // namespace

ad::Graph neb_loss_graph(const ad::Graph& score_graph, double noise_sigma) {
  if (!(noise_sigma > 0.0)) throw std::invalid_argument("neb_loss: noise_sigma must be > 0");
  ad::NodeId y, x, score;
  ad::Graph g = loss_scaffold(score_graph, &y, &x, &score);
  const ad::NodeId residual =
      g.sub(g.sub(x, y), g.scale(score, noise_sigma * noise_sigma));
  g.set_outputs({g.sum_of_squares(residual, /*row_mean=*/true)});
  return g;
}

ad::Graph dae_loss_graph(const ad::Graph& psi_graph) {
  ad::NodeId y, x, psi;
  ad::Graph g = loss_scaffold(psi_graph, &y, &x, &psi);
  g.set_outputs({g.sum_of_squares(g.sub(x, psi), /*row_mean=*/true)});
  return g;
}

double neb_loss(const Matrix& x, const Matrix& y, const Matrix& score, double noise_sigma) {
  check_pair(x, y, "neb_loss");
  check_pair(y, score, "neb_loss");
  const double s2 = noise_sigma * noise_sigma;
  return (x - y - s2 * score).squaredNorm() / static_cast<double>(x.rows());
}

double dae_loss(const Matrix& x, const Matrix& psi_of_y) {
  check_pair(x, psi_of_y, "dae_loss");
  return (x - psi_of_y).squaredNorm() / static_cast<double>(x.rows());
}

ad::ParamVector sgd_step(const ad::ParamVector& params, std::span<const double> grad, double lr) {
  if (grad.size() != params.size()) {
    throw DimensionError("sgd_step: gradient has " + std::to_string(grad.size()) +
                         " entries, parameters " + std::to_string(params.size()));
  }
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) bad.push_back(i);
  }
  if (!bad.empty()) {
    std::ostringstream os;
    os << "sgd_step: non-finite gradient at indices";
    for (std::size_t i = 0; i < bad.size() && i < 16; ++i) os << " " << bad[i];
    if (bad.size() > 16) os << " ... (" << bad.size() << " total)";
    throw NumericalError(os.str());
  }
  ad::ParamVector out = params;
  for (std::size_t i = 0; i < grad.size(); ++i) out[i] -= lr * grad[i];
  return out;
}

SgdOptimizer::SgdOptimizer(double lr, double momentum) : lr_(lr), momentum_(momentum) {
  if (!(lr >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
}

ad::ParamVector SgdOptimizer::step(const ad::ParamVector& params, std::span<const double> grad) {
  if (momentum_ == 0.0) return sgd_step(params, grad, lr_);
  if (grad.size() != params.size()) return sgd_step(params, grad, lr_);  // throws
  if (velocity_.empty()) velocity_.assign(params.size(), 0.0);
  // v ← μv + g;  θ ← θ − ε·v
  std::vector<double> v(velocity_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = momentum_ * v[i] + grad[i];
  ad::ParamVector out = sgd_step(params, v, lr_);
  velocity_ = std::move(v);
  return out;
}

}  // namespace gradfield
