#include <cmath>
#include <sstream>

#include "doctest.h"
#include "gradfield/diagnostics.hpp"
#include "oracles.hpp"

using namespace gradfield;

TEST_CASE("symmetry residual of known matrices") {
  Matrix sym(2, 2);
  sym << 1, 2, 2, 5;
  CHECK(symmetry_residual(sym) == 0.0);

  Matrix skew(2, 2);
  skew << 0, 1, -1, 0;
  // ‖J − Jᵀ‖ = 2√2, ‖J‖ = √2
  CHECK(symmetry_residual(skew) == doctest::Approx(2.0).epsilon(1e-15));

  Matrix general(2, 2);
  general << 1, 3, 0, 2;
  CHECK(symmetry_residual(general) == doctest::Approx(std::sqrt(18.0) / std::sqrt(14.0)));

  CHECK(symmetry_residual(Matrix::Zero(3, 3)) == 0.0);
  Matrix tiny = Matrix::Zero(2, 2);
  tiny(0, 1) = 1e-14;
  CHECK(symmetry_residual(tiny) == doctest::Approx(std::sqrt(2.0) * 1e-14 / 1e-12));
  CHECK_THROWS_AS(symmetry_residual(Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("numerical rank") {
  Vector u(3);
  u << 1, 2, 3;
  CHECK(numerical_rank(u * u.transpose()) == 1);
  CHECK(numerical_rank(Matrix::Identity(4, 4)) == 4);
  CHECK(numerical_rank(Matrix::Zero(3, 3)) == 0);
}

TEST_CASE("Jacobian methods on a field with a known Jacobian") {
  // ψ(x) = A x + (sin x₁, x₁ x₂)
  Matrix A(2, 2);
  A << 1.0, -0.5, 2.0, 0.25;
  const FunctionField field(2, [&](const Vector& x) {
    Vector v = A * x;
    v(0) += std::sin(x(0));
    v(1) += x(0) * x(1);
    return v;
  });
  Vector x(2);
  x << 0.3, -1.2;
  Matrix J = A;
  J(0, 0) += std::cos(0.3);
  J(1, 0) += -1.2;
  J(1, 1) += 0.3;
  CHECK(oracle::rel_err(jacobian(field, x, {JacobianMethod::central_fd, 1e-5}), J) < 1e-9);
  CHECK(oracle::rel_err(jacobian(field, x, {JacobianMethod::central_fd4, 1e-3}), J) < 1e-11);
  CHECK_THROWS_AS(jacobian(field, x), GraphError);  // no autodiff for plain callables
}

TEST_CASE("finite-difference Jacobian reports the coordinate that blew up") {
  const FunctionField field(2, [](const Vector& x) {
    Vector v = x;
    if (x(1) > 0.5) v(0) = std::nan("");
    return v;
  });
  Vector x(2);
  x << 0.0, 0.5;
  try {
    jacobian(field, x, {JacobianMethod::central_fd});
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("coordinate 1") != std::string::npos);
  }
}

TEST_CASE("fd_gradient") {
  Vector x(3);
  x << 0.5, -1.0, 2.0;
  const Vector g = fd_gradient([](const Vector& p) { return p.squaredNorm() + p(0) * p(2); }, x);
  Vector expect(3);
  expect << 2 * 0.5 + 2.0, -2.0, 2 * 2.0 + 0.5;
  CHECK(oracle::rel_err(g, expect) < 1e-9);
}

TEST_CASE("min |cos| over pairs") {
  Matrix rows(3, 2);
  rows << 1, 0, 0, 2, 1, 1;
  CHECK(min_abs_cosine(rows) == doctest::Approx(0.0).scale(1.0));
  Matrix aligned(3, 2);
  aligned << 1, 1, -2, -2, 0, 0;
  int zeros = -1;
  CHECK(min_abs_cosine(aligned, &zeros) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(zeros == 1);
  CHECK(min_abs_cosine(Matrix::Ones(1, 4)) == 1.0);
  CHECK_THROWS_AS(min_abs_cosine(Matrix::Zero(2, 2)), NumericalError);
}

TEST_CASE("weight parallelism statistics") {
  Vector u(2);
  u << 1, 1;
  Vector a(3), b(2);
  a << 1, -2, 0.5;
  b << 3, -1;
  const auto par = build_parallel_psi(u, a, {standard_normal_points(2, 3, 8)}, b);
  const auto stats = weight_parallelism(par);
  CHECK(stats.min_input_cos == doctest::Approx(1.0).epsilon(1e-14));
  REQUIRE(stats.min_output_cos.has_value());
  CHECK(*stats.min_output_cos == doctest::Approx(1.0).epsilon(1e-14));

  const auto random = MlpParams::random({4, 16, 16, 4}, NetMode::psi, {}, 3);
  const auto rs = weight_parallelism(random);
  CHECK(rs.min_input_cos < 0.5);
  CHECK(rs.min_output_cos.has_value());

  auto zero_out = MlpParams::random({2, 3, 2}, NetMode::psi, {}, 3);
  zero_out.weights[1].setZero();
  const auto zs = weight_parallelism(zero_out);
  CHECK_FALSE(zs.min_output_cos.has_value());
  CHECK(zs.zero_output_cols == 3);  // one column per last hidden unit

  CHECK_FALSE(weight_parallelism(MlpParams::random({2, 3, 1}, NetMode::phi, {}, 1)).min_output_cos);
}

TEST_CASE("symmetry report: autodiff and FD agree, d = 1 is trivial") {
  const auto psi = MlpParams::random({3, 8, 8, 3}, NetMode::psi, Activation::silu(4.0), 4);
  const GraphField field = psi_field(psi);
  const Matrix pts = standard_normal_points(5, 3, 9);
  const auto ad_rep = symmetry_report(field, pts, {}, true);
  const auto fd_rep = symmetry_report(field, pts, {JacobianMethod::central_fd4, 1e-3});
  REQUIRE(ad_rep.residuals.size() == 5);
  REQUIRE(ad_rep.ranks.size() == 5);
  CHECK(fd_rep.ranks.empty());
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(ad_rep.residuals[i] == doctest::Approx(fd_rep.residuals[i]).epsilon(1e-7));
    CHECK(ad_rep.residuals[i] <= ad_rep.max_residual);
    CHECK(ad_rep.ranks[i] == 3);
  }
  CHECK_FALSE(ad_rep.trivially_symmetric);

  const auto one = psi_field(MlpParams::random({1, 4, 1}, NetMode::psi, {}, 2));
  const auto rep1 = symmetry_report(one, standard_normal_points(3, 1, 1));
  CHECK(rep1.trivially_symmetric);
  CHECK(rep1.max_residual == 0.0);
}

TEST_CASE("report serialization") {
  const auto psi = MlpParams::random({2, 4, 2}, NetMode::psi, {}, 4);
  const auto rep = symmetry_report(psi_field(psi), standard_normal_points(3, 2, 1), {}, true);
  const Json doc = to_json(rep);
  CHECK(doc["kind"] == "symmetry_report");
  CHECK(doc["points"].size() == 3);
  CHECK(doc["points"][1]["residual"].get<double>() == rep.residuals[1]);
  CHECK(doc["max_residual"].get<double>() == rep.max_residual);

  const std::string csv = to_csv(rep);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "index,x1,x2,residual,rank");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 3);
}

TEST_CASE("standard normal points are seed-deterministic") {
  CHECK(standard_normal_points(4, 3, 1) == standard_normal_points(4, 3, 1));
  CHECK(standard_normal_points(4, 3, 1) != standard_normal_points(4, 3, 2));
  const Matrix big = standard_normal_points(20000, 1, 3);
  CHECK(std::abs(big.mean()) < 0.03);
  CHECK(big.squaredNorm() / big.size() == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("residual properties: transpose and scale invariance") {
  Matrix nil(2, 2);
  nil << 0, 1, 0, 0;
  CHECK(symmetry_residual(nil) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(symmetry_residual(Matrix::Identity(3, 3)) == 0.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix J = standard_normal_points(4, 4, seed);
    const double r = symmetry_residual(J);
    CHECK(r >= 0.0);
    CHECK(symmetry_residual(J.transpose()) == doctest::Approx(r).epsilon(1e-15));
    for (double c : {-3.0, 1e-4, 250.0}) {
      CHECK(symmetry_residual(c * J) == doctest::Approx(r).epsilon(1e-14));
    }
    CHECK(symmetry_residual(J + J.transpose()) <= 1e-16);
  }
}

TEST_CASE("fd_gradient exactness and failure") {
  Vector w(3), x(3);
  w << 0.5, -2.0, 4.0;
  x << 1.0, 1.0, -3.0;
  CHECK((fd_gradient([&](const Vector& p) { return w.dot(p); }, x) - w).cwiseAbs().maxCoeff() < 1e-10);
  Vector x2(2);
  x2 << 1.0, 2.0;
  Vector g2(2);
  g2 << 2.0, 4.0;
  CHECK((fd_gradient([](const Vector& p) { return p.squaredNorm(); }, x2) - g2).norm() < 1e-9);
  CHECK_THROWS_AS(fd_gradient([](const Vector& p) { return std::log(p(0)); }, Vector::Zero(1)),
                  NumericalError);
  CHECK_THROWS_AS(fd_gradient([](const Vector& p) { return p(0); }, x, 0.0), std::invalid_argument);
}

TEST_CASE("fd_gradient agrees with autodiff on a random potential") {
  const auto phi = MlpParams::random({3, 6, 5, 1}, NetMode::phi, Activation::silu(4.0), 17);
  const Matrix pts = standard_normal_points(5, 3, 18);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vector x = pts.row(i).transpose();
    const Vector ad_grad = ad::grad_input(mlp_graph(phi), x, mlp_param_vector(phi)).gradient.row(0).transpose();
    const Vector fd = fd_gradient([&](const Vector& p) { return phi_forward(phi, p); }, x);
    CHECK(oracle::rel_err(fd, ad_grad) < 1e-4);
  }
}

TEST_CASE("autodiff and central differences agree on a random tied network") {
  const TiedPsiNet net =
      tie_weights(standard_normal_points(7, 3, 1), standard_normal_points(1, 7, 2).row(0).transpose(),
                  Activation::silu(4.0));
  const GraphField field = tied_field(net);
  const Matrix pts = standard_normal_points(10, 3, 3);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vector x = pts.row(i).transpose();
    const Matrix A = jacobian(field, x);
    const Matrix F = jacobian(field, x, {JacobianMethod::central_fd, 1e-5});
    CHECK(((A - F).cwiseAbs().array() / A.cwiseAbs().array().max(1e-8)).maxCoeff() < 1e-4);
    CHECK(oracle::rel_err(A, net.jacobian(x)) < 1e-14);
  }
}

TEST_CASE("random Gaussian rows are far from parallel") {
  // M = 16 rows in d = 8: min pairwise |cos| stays below 0.9.
  int below = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    if (min_abs_cosine(standard_normal_points(16, 8, 1000 + seed)) < 0.9) ++below;
  }
  CHECK(below >= 99);
}

TEST_CASE("identity field has identity Jacobian") {
  const FunctionField id(3, [](const Vector& x) { return x; });
  const Vector x = Vector::LinSpaced(3, -1.0, 2.0);
  CHECK((jacobian(id, x, {JacobianMethod::central_fd}) - Matrix::Identity(3, 3)).norm() < 1e-10);
}
