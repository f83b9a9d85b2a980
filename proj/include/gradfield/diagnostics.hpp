#pragma once

// Numerical checks of ∂ⱼψᵢ = ∂ᵢψⱼ: Jacobians, symmetry residuals,
// weight-parallelism statistics and finite-difference oracles.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gradfield/field.hpp"
#include "gradfield/json_io.hpp"
#include "gradfield/networks.hpp"

namespace gradfield {

/// Denominator floor of the relative symmetry residual.
inline constexpr double kResidualFloor = 1e-12;
inline constexpr double kDefaultFdStep = 1e-5;

enum class JacobianMethod {
  autodiff,
  central_fd,   // (ψ(x+h·eⱼ) − ψ(x−h·eⱼ)) / 2h
  central_fd4,  // five-point stencil, O(h⁴)
};

struct JacobianOptions {
  JacobianMethod method = JacobianMethod::autodiff;
  double h = kDefaultFdStep;
};

std::string to_string(JacobianMethod m);
JacobianMethod jacobian_method_from_string(const std::string& s);

/// Jᵢⱼ = ∂ψᵢ/∂xⱼ. Finite-difference methods throw NumericalError naming the
/// coordinate whose stencil produced a non-finite value.
Matrix jacobian(const VectorField& field, const Vector& x, JacobianOptions options = {});

/// ‖J − Jᵀ‖_F / max(‖J‖_F, 1e-12). Throws DimensionError for non-square J.
double symmetry_residual(const Matrix& J);

/// Number of singular values above rel_tol times the largest.
int numerical_rank(const Matrix& J, double rel_tol = 1e-8);

/// Central differences (f(x+h·eⱼ) − f(x−h·eⱼ)) / 2h.
Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                   double h = kDefaultFdStep);

/// Smallest |cos| over all pairs of nonzero vectors (rows of `vectors`).
/// Vectors with norm ≤ 1e-12 are skipped and counted in `zero_count`. A single
/// nonzero vector gives 1. Throws when every vector is zero.
double min_abs_cosine(const Matrix& vectors, int* zero_count = nullptr);

struct ParallelismStats {
  double min_input_cos = 1.0;
  /// Empty when every output column is zero (the trivial ψ ≡ 0 case).
  std::optional<double> min_output_cos;
  int zero_input_rows = 0;
  int zero_output_cols = 0;
};

/// Pairwise |cos| among input rows θ⁽⁰⁾ₘ and among output columns θ⁽ᴸ⁻¹⁾ₙ.
/// For a phi network the output "columns" are scalars and are not reported.
ParallelismStats weight_parallelism(const MlpParams& net);
ParallelismStats weight_parallelism(const ParallelPsiNet& net);
ParallelismStats weight_parallelism(const TiedPsiNet& net);

struct SymmetryReport {
  Matrix points;  // one point per row
  std::vector<double> residuals;
  double max_residual = 0.0;
  std::vector<int> ranks;  // empty unless requested
  JacobianMethod method = JacobianMethod::autodiff;
  /// d = 1: there are no off-diagonal pairs to compare.
  bool trivially_symmetric = false;
};

SymmetryReport symmetry_report(const VectorField& field, const Matrix& points,
                               JacobianOptions options = {}, bool with_rank = false);

/// count x dim standard-normal draws, row by row.
Matrix standard_normal_points(int count, int dim, std::uint64_t seed);

Json to_json(const SymmetryReport& report);
/// Header `index,x1..xd,residual[,rank]`, one row per point.
std::string to_csv(const SymmetryReport& report);

}  // namespace gradfield
