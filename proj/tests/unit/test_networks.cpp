#include <cmath>

#include "doctest.h"
#include "gradfield/diagnostics.hpp"
#include "gradfield/networks.hpp"
#include "oracles.hpp"

using namespace gradfield;

namespace {

std::function<double(double)> as_fn(const Activation& act) {
  return [act](double t) { return act.value(t); };
}

}  // namespace

TEST_CASE("forward passes match a direct loop") {
  const Activation act = Activation::silu(4.0);
  const MlpParams phi = MlpParams::random({3, 5, 4, 1}, NetMode::phi, act, 11);
  const MlpParams psi = MlpParams::random({3, 6, 6, 3}, NetMode::psi, act, 12);
  const Matrix pts = standard_normal_points(5, 3, 13);
  const Matrix phi_batch = mlp_forward(phi, pts);
  const Matrix psi_batch = mlp_forward(psi, pts);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vector x = pts.row(i).transpose();
    const double ref = oracle::mlp(phi.weights, as_fn(act), x)(0);
    CHECK(phi_forward(phi, x) == doctest::Approx(ref).epsilon(1e-14));
    CHECK(phi_batch(i, 0) == doctest::Approx(ref).epsilon(1e-14));
    const Vector ref_psi = oracle::mlp(psi.weights, as_fn(act), x);
    CHECK(oracle::rel_err(psi_forward(psi, x), ref_psi) < 1e-14);
    CHECK(oracle::rel_err(psi_batch.row(i).transpose(), ref_psi) < 1e-14);
    CHECK(oracle::rel_err(ad::eval(mlp_graph(psi), x, mlp_param_vector(psi)).row(0).transpose(),
                          ref_psi) < 1e-14);
  }
}

TEST_CASE("widths and validation") {
  CHECK(mlp_widths(4, {8, 8}, NetMode::phi) == std::vector<int>{4, 8, 8, 1});
  CHECK(mlp_widths(4, {8}, NetMode::psi) == std::vector<int>{4, 8, 4});
  CHECK_THROWS_AS(MlpParams::zeros({2, 1}, NetMode::phi), DimensionError);  // L = 1
  CHECK_THROWS_AS(MlpParams::zeros({2, 3, 2}, NetMode::phi), DimensionError);
  CHECK_THROWS_AS(MlpParams::zeros({2, 3, 3}, NetMode::psi), DimensionError);
  CHECK_THROWS_AS(MlpParams::zeros({2, 0, 1}, NetMode::phi), DimensionError);
  MlpParams bad = MlpParams::zeros({2, 3, 1}, NetMode::phi);
  bad.weights[0] = Matrix::Zero(2, 3);
  CHECK_THROWS_AS(bad.validate(), DimensionError);
  const MlpParams ok = MlpParams::zeros({2, 3, 1}, NetMode::phi);
  CHECK_THROWS_AS(phi_forward(ok, Vector::Zero(3)), DimensionError);
  CHECK_THROWS_AS(psi_forward(ok, Vector::Zero(2)), DimensionError);
}

TEST_CASE("random initialization is seed-deterministic with 1/sqrt(fan-in) scale") {
  const auto a = MlpParams::random({50, 400, 1}, NetMode::phi, {}, 5);
  const auto b = MlpParams::random({50, 400, 1}, NetMode::phi, {}, 5);
  const auto c = MlpParams::random({50, 400, 1}, NetMode::phi, {}, 6);
  CHECK(a.weights[0] == b.weights[0]);
  CHECK(a.weights[0] != c.weights[0]);
  const double var = a.weights[0].squaredNorm() / a.weights[0].size();
  CHECK(var == doctest::Approx(1.0 / 50).epsilon(0.03));
}

TEST_CASE("parameter vector round trip") {
  const auto net = MlpParams::random({2, 3, 4, 2}, NetMode::psi, Activation::tanh(), 1);
  const auto theta = mlp_param_vector(net);
  CHECK(theta.size() == 6 + 12 + 8);
  CHECK(theta.at(1, 3, 2) == net.weights[1](3, 2));
  const auto back = mlp_from_param_vector(net, theta);
  for (int l = 0; l < 3; ++l) CHECK(back.weights[l] == net.weights[l]);
  const auto other = MlpParams::zeros({2, 4, 2}, NetMode::psi);
  CHECK_THROWS_AS(mlp_from_param_vector(other, theta), DimensionError);
}

TEST_CASE("closed forms of the potential gradient match finite differences") {
  const Activation act = Activation::silu(4.0);
  for (int d : {1, 2, 5}) {
    CAPTURE(d);
    const auto l2 = MlpParams::random({d, 7, 1}, NetMode::phi, act, 100 + d);
    const auto l3 = MlpParams::random({d, 6, 5, 1}, NetMode::phi, act, 200 + d);
    const Matrix pts = standard_normal_points(4, d, 300 + d);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const Vector x = pts.row(i).transpose();
      const Vector fd2 = oracle::grad(
          [&](const Vector& p) { return oracle::mlp(l2.weights, as_fn(act), p)(0); }, x);
      const Vector fd3 = oracle::grad(
          [&](const Vector& p) { return oracle::mlp(l3.weights, as_fn(act), p)(0); }, x);
      CHECK(oracle::rel_err(explicit_grad_l2(l2, x), fd2) < 1e-9);
      CHECK(oracle::rel_err(explicit_grad_l3(l3, x), fd3) < 1e-9);
    }
  }
}

TEST_CASE("one-hidden-layer gradient is a tied network with activation derivative") {
  const Activation act = Activation::softplus();
  const auto phi = MlpParams::random({3, 8, 1}, NetMode::phi, act, 9);
  const Vector x = standard_normal_points(1, 3, 4).row(0).transpose();
  Vector expect = Vector::Zero(3);
  for (int m = 0; m < 8; ++m) {
    const double z = phi.weights[0].row(m).dot(x);
    expect += phi.weights[1](0, m) * act.derivative(z, 1) * phi.weights[0].row(m).transpose();
  }
  CHECK(oracle::rel_err(explicit_grad_l2(phi, x), expect) < 1e-15);
  CHECK_THROWS_AS(explicit_grad_l2(MlpParams::zeros({3, 2, 2, 1}, NetMode::phi), x), DimensionError);
  CHECK_THROWS_AS(explicit_grad_l3(phi, x), DimensionError);
}

TEST_CASE("tied network: readout, forward, Jacobian") {
  const Activation act = Activation::silu(2.0);
  Matrix theta0 = standard_normal_points(6, 3, 21);
  Vector s = standard_normal_points(1, 6, 22).row(0).transpose();
  const TiedPsiNet net = tie_weights(theta0, s, act);

  const Matrix readout = net.output_weights();
  for (int m = 0; m < 6; ++m) {
    CHECK((readout.col(m) - s(m) * theta0.row(m).transpose()).norm() == 0.0);
  }
  const MlpParams as_mlp = net.to_mlp();
  const Matrix pts = standard_normal_points(5, 3, 23);
  const auto theta = tied_param_vector(net);
  CHECK(tied_from_param_vector(net, theta).theta0 == net.theta0);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vector x = pts.row(i).transpose();
    const Vector ref = oracle::mlp(as_mlp.weights, as_fn(act), x);
    CHECK(oracle::rel_err(net.forward(x), ref) < 1e-14);
    CHECK(oracle::rel_err(ad::eval(tied_graph(net), x, theta).row(0).transpose(), ref) < 1e-14);
    const Matrix J = net.jacobian(x);
    CHECK((J - J.transpose()).norm() <= 1e-15 * J.norm());
    const Matrix fd = oracle::jac([&](const Vector& p) { return oracle::mlp(as_mlp.weights, as_fn(act), p); }, x);
    CHECK(oracle::rel_err(J, fd) < 1e-9);
  }
  CHECK_THROWS_AS(tie_weights(theta0, Vector::Zero(5)), DimensionError);
}

TEST_CASE("parallel construction keeps every input row and output column on u") {
  Vector u(3);
  u << 3.0, 0.0, 4.0;  // normalized to (0.6, 0, 0.8)
  Vector a(4), b(2);
  a << 1.0, -2.0, 0.5, 3.0;
  b << 0.7, -1.3;
  std::vector<Matrix> inner{standard_normal_points(5, 4, 1), standard_normal_points(2, 5, 2)};
  const ParallelPsiNet net = build_parallel_psi(u, a, inner, b, Activation::tanh());
  CHECK(net.depth() == 4);
  CHECK(net.u.norm() == doctest::Approx(1.0).epsilon(1e-15));
  const MlpParams mlp = net.to_mlp();
  CHECK(mlp.widths == std::vector<int>{3, 4, 5, 2, 3});
  CHECK((net.a - 5.0 * a).norm() < 1e-15);
  for (int m = 0; m < 4; ++m) {
    CHECK((mlp.weights[0].row(m).transpose() - a(m) * u).norm() < 1e-14);
  }
  for (int n = 0; n < 2; ++n) {
    CHECK((mlp.weights[3].col(n) - b(n) * net.u).norm() < 1e-15);
  }
  const Matrix S = net.tying_matrix();
  for (int n = 0; n < 2; ++n) {
    for (int m = 0; m < 4; ++m) {
      CHECK((mlp.weights[3].col(n) - S(n, m) * mlp.weights[0].row(m).transpose()).norm() < 1e-14);
    }
  }

  CHECK_THROWS_AS(build_parallel_psi(Vector::Zero(3), a, inner, b), DimensionError);
  CHECK_THROWS_AS(build_parallel_psi(u, a, {standard_normal_points(5, 3, 1)}, Vector::Ones(5)),
                  DimensionError);
  CHECK_THROWS_AS(build_parallel_psi(u, a, {}, b), DimensionError);
  CHECK_NOTHROW(build_parallel_psi(u, a, {}, a));
}

TEST_CASE("graph fields agree with the closed forms") {
  const auto phi = MlpParams::random({4, 9, 7, 1}, NetMode::phi, Activation::silu(4.0), 31);
  const GraphField field = phi_gradient_field(phi);
  const Matrix pts = standard_normal_points(6, 4, 32);
  const Matrix batch = field.values(pts);
  const auto jacs = field.jacobians(pts);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vector x = pts.row(i).transpose();
    CHECK(oracle::rel_err(field.value(x), explicit_grad_l3(phi, x)) < 1e-13);
    CHECK(oracle::rel_err(batch.row(i).transpose(), field.value(x)) < 1e-15);
    CHECK(oracle::rel_err(jacs[i], field.autodiff_jacobian(x)) < 1e-15);
    const Matrix fd = oracle::jac([&](const Vector& p) { return explicit_grad_l3(phi, p); }, x);
    CHECK(oracle::rel_err(jacs[i], fd) < 1e-8);
  }
}

TEST_CASE("trivial networks") {
  const Vector x = Vector::LinSpaced(3, -1.0, 1.5);
  CHECK(phi_forward(MlpParams::zeros({3, 4, 4, 1}, NetMode::phi, Activation::tanh()), x) == 0.0);

  auto psi = MlpParams::random({3, 5, 5, 3}, NetMode::psi, Activation::silu(4.0), 1);
  psi.weights.back().setZero();
  CHECK(psi_forward(psi, x).isZero(0.0));

  const TiedPsiNet dead = tie_weights(standard_normal_points(4, 3, 1), Vector::Zero(4));
  CHECK(dead.forward(x).isZero(0.0));

  Vector u(3);
  u << 0, 1, 0;
  const auto flat = build_parallel_psi(u, Vector::Ones(4), {standard_normal_points(2, 4, 3)},
                                       Vector::Zero(2));
  CHECK(flat.forward(x).isZero(0.0));

  auto l2 = MlpParams::random({3, 4, 1}, NetMode::phi, {}, 2);
  l2.weights[1].setZero();
  CHECK(explicit_grad_l2(l2, x).isZero(0.0));
  auto l3 = MlpParams::random({3, 4, 4, 1}, NetMode::phi, {}, 2);
  l3.weights[2].setZero();
  CHECK(explicit_grad_l3(l3, x).isZero(0.0));
}

TEST_CASE("hidden units can be permuted without changing the output") {
  const Activation act = Activation::silu(4.0);
  const auto phi = MlpParams::random({3, 6, 1}, NetMode::phi, act, 40);
  const auto psi = MlpParams::random({3, 6, 5, 3}, NetMode::psi, act, 41);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
  perm.indices() << 3, 0, 5, 1, 4, 2;
  auto phi_p = phi;
  phi_p.weights[0] = perm * phi.weights[0];
  phi_p.weights[1] = phi.weights[1] * perm.transpose();
  auto psi_p = psi;
  psi_p.weights[0] = perm * psi.weights[0];
  psi_p.weights[1] = psi.weights[1] * perm.transpose();
  const Matrix pts = standard_normal_points(5, 3, 42);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vector x = pts.row(i).transpose();
    CHECK(phi_forward(phi_p, x) == doctest::Approx(phi_forward(phi, x)).epsilon(1e-14));
    CHECK(oracle::rel_err(psi_forward(psi_p, x), psi_forward(psi, x)) < 1e-14);
  }
}

TEST_CASE("2-2-1 network at (1, 1) by hand") {
  // φ(x) = 0.5·σ(x₁ − x₂ + 0.5·x₁) + 2·σ(2x₂), σ = silu_4
  MlpParams phi = MlpParams::zeros({2, 2, 1}, NetMode::phi, Activation::silu(4.0));
  phi.weights[0] << 1.5, -1.0, 0.0, 2.0;
  phi.weights[1] << 0.5, 2.0;
  Vector x(2);
  x << 1.0, 1.0;
  const double expect = 0.5 * oracle::silu(4.0, 0.5) + 2.0 * oracle::silu(4.0, 2.0);
  CHECK(phi_forward(phi, x) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("single-unit tied example and softplus readout") {
  Matrix theta0(1, 2);
  theta0 << 1.0, 0.0;
  const Activation act = Activation::silu(4.0);
  const TiedPsiNet net = tie_weights(theta0, Vector::Constant(1, 2.0), act);
  Matrix readout(2, 1);
  readout << 2.0, 0.0;
  CHECK(net.output_weights() == readout);
  for (double x1 : {-1.0, 0.0, 0.7}) {
    Vector x(2);
    x << x1, 3.0;
    Matrix J = Matrix::Zero(2, 2);
    J(0, 0) = 2.0 * act.derivative(x1, 1);
    CHECK((net.jacobian(x) - J).norm() <= 1e-15);
  }

  Vector w(3);
  w << 0.5, -1.0, 2.0;
  MlpParams sp = MlpParams::zeros({3, 1, 1}, NetMode::phi, Activation::softplus());
  sp.weights[0] = w.transpose();
  sp.weights[1](0, 0) = 1.0;
  const Vector x = Vector::LinSpaced(3, -0.5, 0.5);
  CHECK(oracle::rel_err(explicit_grad_l2(sp, x), logistic(w.dot(x)) * w) < 1e-15);
}

TEST_CASE("constructive families are symmetric under a finite-difference Jacobian") {
  const JacobianOptions fd{JacobianMethod::central_fd4, 1e-3};
  const TiedPsiNet tied = tie_weights(standard_normal_points(8, 4, 50) / 2.0,
                                      standard_normal_points(1, 8, 51).row(0).transpose() / std::sqrt(8.0));
  const auto tied_rep = symmetry_report(FunctionField(4, [&](const Vector& x) { return tied.forward(x); }),
                                        standard_normal_points(20, 4, 52), fd);
  CHECK(tied_rep.max_residual < 1e-10);

  Vector e2 = Vector::Zero(3);
  e2(1) = 1.0;
  const auto par = build_parallel_psi(e2, standard_normal_points(1, 6, 53).row(0).transpose(),
                                      {standard_normal_points(5, 6, 54) / std::sqrt(6.0)},
                                      standard_normal_points(1, 5, 55).row(0).transpose());
  const auto par_rep = symmetry_report(FunctionField(3, [&](const Vector& x) { return par.forward(x); }),
                                       standard_normal_points(20, 3, 56), fd, true);
  CHECK(par_rep.max_residual < 1e-10);
  for (int r : par_rep.ranks) CHECK(r == 1);

  const auto l3 = MlpParams::random({3, 7, 6, 1}, NetMode::phi, Activation::silu(4.0), 57);
  const auto hess = symmetry_report(FunctionField(3, [&](const Vector& x) { return explicit_grad_l3(l3, x); }),
                                    standard_normal_points(20, 3, 58), fd);
  CHECK(hess.max_residual < 1e-8);
}

TEST_CASE("d = 1 is trivially symmetric for any network") {
  const auto psi = MlpParams::random({1, 5, 5, 1}, NetMode::psi, {}, 60);
  const auto rep = symmetry_report(psi_field(psi), standard_normal_points(4, 1, 61));
  CHECK(rep.trivially_symmetric);
}
