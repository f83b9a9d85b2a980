#include "gradfield/networks.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace gradfield {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Vector apply_activation(const Activation& act, const Vector& z, int order) {
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = act.derivative(z[i], order);
  return out;
}

void require_mode(const MlpParams& net, NetMode mode, const char* what) {
  net.validate();
  if (net.mode != mode) {
    throw DimensionError(std::string(what) + ": network is in " +
                         (net.mode == NetMode::phi ? "phi" : "psi") + " mode");
  }
}

void require_input(const MlpParams& net, const Vector& x) {
  if (x.size() != net.input_dim()) {
    throw DimensionError("point has " + std::to_string(x.size()) + " coordinates, network expects " +
                         std::to_string(net.input_dim()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// MlpParams

void MlpParams::validate() const {
  if (widths.size() < 3) {
    throw DimensionError("a network needs at least one hidden layer (depth L >= 2)");
  }
  for (int w : widths) {
    if (w <= 0) throw DimensionError("layer widths must be positive");
  }
  if (weights.size() + 1 != widths.size()) {
    throw DimensionError("expected " + std::to_string(widths.size() - 1) + " weight matrices, got " +
                         std::to_string(weights.size()));
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != widths[l + 1] || weights[l].cols() != widths[l]) {
      throw DimensionError("θ(" + std::to_string(l) + ") is " + shape(weights[l]) + ", expected " +
                           std::to_string(widths[l + 1]) + "x" + std::to_string(widths[l]));
    }
  }
  const int expected_out = mode == NetMode::phi ? 1 : widths.front();
  if (widths.back() != expected_out) {
    throw DimensionError(std::string(mode == NetMode::phi ? "phi" : "psi") +
                         " network must have output width " + std::to_string(expected_out));
  }
}

std::vector<int> mlp_widths(int dim, const std::vector<int>& hidden, NetMode mode) {
  std::vector<int> widths{dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(mode == NetMode::phi ? 1 : dim);
  return widths;
}

MlpParams MlpParams::zeros(std::vector<int> widths, NetMode mode, Activation activation) {
  MlpParams p;
  p.widths = std::move(widths);
  p.activation = activation;
  p.mode = mode;
  for (std::size_t l = 0; l + 1 < p.widths.size(); ++l) {
    p.weights.push_back(Matrix::Zero(p.widths[l + 1], p.widths[l]));
  }
  p.validate();
  return p;
}

MlpParams MlpParams::random(std::vector<int> widths, NetMode mode, Activation activation,
                            std::uint64_t seed) {
  MlpParams p = zeros(std::move(widths), mode, activation);
  std::mt19937_64 rng(seed);
  for (auto& w : p.weights) {
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(w.cols())));
    // Row-major fill so the draw order matches the serialized layout.
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = normal(rng);
    }
  }
  return p;
}

Matrix mlp_forward(const MlpParams& net, const Matrix& points) {
  net.validate();
  if (points.cols() != net.input_dim()) {
    throw DimensionError("points have " + std::to_string(points.cols()) +
                         " columns, network expects " + std::to_string(net.input_dim()));
  }
  Matrix h = points;
  for (int l = 0; l < net.depth(); ++l) {
    Matrix z = h * net.weights[l].transpose();
    if (l + 1 == net.depth()) return z;
    h = z.unaryExpr([&](double v) { return net.activation.value(v); });
  }
  return h;
}

double phi_forward(const MlpParams& phi, const Vector& x) {
  require_mode(phi, NetMode::phi, "phi_forward");
  require_input(phi, x);
  return mlp_forward(phi, x.transpose())(0, 0);
}

Vector psi_forward(const MlpParams& psi, const Vector& x) {
  require_mode(psi, NetMode::psi, "psi_forward");
  require_input(psi, x);
  return mlp_forward(psi, x.transpose()).row(0).transpose();
}

ad::ParamLayout mlp_layout(const std::vector<int>& widths) {
  ad::ParamLayout layout;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    layout.add_block("theta" + std::to_string(l), widths[l + 1], widths[l]);
  }
  return layout;
}

ad::ParamVector mlp_param_vector(const MlpParams& net) {
  net.validate();
  return ad::ParamVector::from_blocks(mlp_layout(net.widths), net.weights);
}

MlpParams mlp_from_param_vector(const MlpParams& shape, const ad::ParamVector& params) {
  if (!(params.layout() == mlp_layout(shape.widths))) {
    throw DimensionError("parameter layout does not match the network widths");
  }
  MlpParams out = shape;
  out.weights = params.to_blocks();
  return out;
}

ad::Graph mlp_graph(const MlpParams& shape) {
  shape.validate();
  ad::Graph g(mlp_layout(shape.widths));
  const ad::FnPtr sigma = shape.activation.function();
  ad::NodeId h = g.input(shape.input_dim());
  for (int l = 0; l < shape.depth(); ++l) {
    h = g.linear(h, g.param(l));
    if (l + 1 < shape.depth()) h = g.apply(sigma, h);
  }
  g.set_outputs({h});
  return g;
}

// ---------------------------------------------------------------------------
// Tied one-hidden-layer psi

Matrix TiedPsiNet::output_weights() const { return (s.asDiagonal() * theta0).transpose(); }

Vector TiedPsiNet::forward(const Vector& x) const {
  if (x.size() != dim()) throw DimensionError("point dimension does not match the tied network");
  const Vector z = theta0 * x;
  return output_weights() * apply_activation(activation, z, 0);
}

Matrix TiedPsiNet::jacobian(const Vector& x) const {
  if (x.size() != dim()) throw DimensionError("point dimension does not match the tied network");
  const Vector z = theta0 * x;
  const Vector w = s.cwiseProduct(apply_activation(activation, z, 1));
  return theta0.transpose() * w.asDiagonal() * theta0;
}

MlpParams TiedPsiNet::to_mlp() const {
  MlpParams p;
  p.widths = {dim(), hidden(), dim()};
  p.weights = {theta0, output_weights()};
  p.activation = activation;
  p.mode = NetMode::psi;
  p.validate();
  return p;
}

TiedPsiNet tie_weights(Matrix theta0, Vector s, Activation activation) {
  if (theta0.rows() != s.size()) {
    throw DimensionError("theta0 has " + std::to_string(theta0.rows()) + " rows but S has " +
                         std::to_string(s.size()) + " entries");
  }
  if (theta0.rows() == 0 || theta0.cols() == 0) {
    throw DimensionError("tied network needs at least one hidden unit and one input");
  }
  return {std::move(theta0), std::move(s), activation};
}

ad::ParamLayout tied_layout(int hidden, int dim) {
  ad::ParamLayout layout;
  layout.add_block("theta0", hidden, dim);
  layout.add_block("s", hidden, 1);
  return layout;
}

ad::ParamVector tied_param_vector(const TiedPsiNet& net) {
  return ad::ParamVector::from_blocks(tied_layout(net.hidden(), net.dim()),
                                      {net.theta0, Matrix(net.s)});
}

TiedPsiNet tied_from_param_vector(const TiedPsiNet& shape, const ad::ParamVector& params) {
  if (!(params.layout() == tied_layout(shape.hidden(), shape.dim()))) {
    throw DimensionError("parameter layout does not match the tied network");
  }
  TiedPsiNet out = shape;
  out.theta0 = params.block(0);
  out.s = params.block(1).col(0);
  return out;
}

ad::Graph tied_graph(const TiedPsiNet& shape) {
  ad::Graph g(tied_layout(shape.hidden(), shape.dim()));
  const ad::NodeId x = g.input(shape.dim());
  const ad::NodeId theta0 = g.param(0);
  const ad::NodeId s = g.param(1);
  const ad::NodeId h = g.apply(shape.activation.function(), g.linear(x, theta0));
  // Rows of row_scale(θ⁽⁰⁾, S) are the readout vectors Sₘ·θ⁽⁰⁾ₘ.
  g.set_outputs({g.linear_t(h, g.row_scale(theta0, s))});
  return g;
}

// ---------------------------------------------------------------------------
// Parallel-weight deep psi

Matrix ParallelPsiNet::tying_matrix() const {
  Matrix S(b.size(), a.size());
  for (Eigen::Index n = 0; n < b.size(); ++n) {
    for (Eigen::Index m = 0; m < a.size(); ++m) {
      S(n, m) = a[m] != 0.0 ? b[n] / a[m] : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return S;
}

MlpParams ParallelPsiNet::to_mlp() const {
  MlpParams p;
  const int d = static_cast<int>(u.size());
  p.widths.push_back(d);
  p.widths.push_back(static_cast<int>(a.size()));
  for (const auto& w : inner) p.widths.push_back(static_cast<int>(w.rows()));
  p.widths.push_back(d);
  p.weights.push_back(a * u.transpose());
  for (const auto& w : inner) p.weights.push_back(w);
  p.weights.push_back(u * b.transpose());
  p.activation = activation;
  p.mode = NetMode::psi;
  p.validate();
  return p;
}

ParallelPsiNet build_parallel_psi(const Vector& u, Vector a, std::vector<Matrix> inner, Vector b,
                                  Activation activation) {
  const double norm = u.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DimensionError("parallel psi needs a nonzero finite direction u");
  }
  if (a.size() == 0 || b.size() == 0) {
    throw DimensionError("parallel psi needs nonempty input and output scales");
  }
  Eigen::Index width = a.size();
  for (std::size_t k = 0; k < inner.size(); ++k) {
    if (inner[k].cols() != width) {
      throw DimensionError("inner weight " + std::to_string(k) + " is " + shape(inner[k]) +
                           ", expected " + std::to_string(width) + " columns");
    }
    width = inner[k].rows();
  }
  if (width != b.size()) {
    throw DimensionError("last hidden layer has width " + std::to_string(width) + " but b has " +
                         std::to_string(b.size()) + " entries");
  }
  // ‖u‖ folds into a: the input rows stay exactly aₘ·u.
  ParallelPsiNet net{u / norm, Vector(a * norm), std::move(inner), std::move(b), activation};
  net.to_mlp();
  return net;
}

// ---------------------------------------------------------------------------
// Closed-form input gradients of phi

Vector explicit_grad_l2(const MlpParams& phi, const Vector& x) {
  require_mode(phi, NetMode::phi, "explicit_grad_l2");
  if (phi.depth() != 2) {
    throw DimensionError("explicit_grad_l2 needs exactly one hidden layer, network has depth " +
                         std::to_string(phi.depth()));
  }
  require_input(phi, x);
  const Matrix& theta0 = phi.weights[0];
  const Vector readout = phi.weights[1].row(0).transpose();
  // Readout θ⁽¹⁾ᵢₘ ← θ⁽¹⁾ₘ θ⁽⁰⁾ₘᵢ with σ ← σ'.
  const Vector hidden = apply_activation(phi.activation, theta0 * x, 1);
  return theta0.transpose() * readout.cwiseProduct(hidden);
}

Vector explicit_grad_l3(const MlpParams& phi, const Vector& x) {
  require_mode(phi, NetMode::phi, "explicit_grad_l3");
  if (phi.depth() != 3) {
    throw DimensionError("explicit_grad_l3 needs exactly two hidden layers, network has depth " +
                         std::to_string(phi.depth()));
  }
  require_input(phi, x);
  const Matrix& theta0 = phi.weights[0];
  const Matrix& theta1 = phi.weights[1];
  const Vector theta2 = phi.weights[2].row(0).transpose();

  const Vector z = theta0 * x;
  // First factor network: x -> z -> σ -> θ⁽¹⁾ -> σ', weighted by θ⁽²⁾.
  const Vector outer_factor =
      theta2.cwiseProduct(apply_activation(phi.activation, theta1 * apply_activation(phi.activation, z, 0), 1));
  // Second factor network: x -> z -> σ'.
  const Vector inner_factor = apply_activation(phi.activation, z, 1);
  // The two share z and are multiplied unit by unit in the first hidden layer.
  const Vector product = inner_factor.cwiseProduct(theta1.transpose() * outer_factor);
  return theta0.transpose() * product;
}

// ---------------------------------------------------------------------------
// Fields

GraphField psi_field(const MlpParams& psi) {
  require_mode(psi, NetMode::psi, "psi_field");
  return GraphField(mlp_graph(psi), mlp_param_vector(psi));
}

GraphField phi_gradient_field(const MlpParams& phi) {
  require_mode(phi, NetMode::phi, "phi_gradient_field");
  return GraphField(ad::grad_input_graph(mlp_graph(phi)), mlp_param_vector(phi));
}

GraphField tied_field(const TiedPsiNet& net) {
  return GraphField(tied_graph(net), tied_param_vector(net));
}

}  // namespace gradfield
