#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "gradfield/autodiff.hpp"

namespace gradfield {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A map ψ: ℝᵈ → ℝᵈ.
class VectorField {
 public:
  virtual ~VectorField() = default;
  virtual int dim() const = 0;
  virtual Vector value(const Vector& x) const = 0;

  virtual bool has_autodiff() const { return false; }
  /// Jᵢⱼ = ∂ψᵢ/∂xⱼ by reverse mode; throws GraphError for plain callables.
  virtual Matrix autodiff_jacobian(const Vector& x) const;
};

/// Wraps an arbitrary callable; only finite-difference Jacobians are available.
class FunctionField final : public VectorField {
 public:
  FunctionField(int dim, std::function<Vector(const Vector&)> fn)
      : dim_(dim), fn_(std::move(fn)) {}
  int dim() const override { return dim_; }
  Vector value(const Vector& x) const override { return fn_(x); }

 private:
  int dim_;
  std::function<Vector(const Vector&)> fn_;
};

/// Field computed by a graph with one n x d input and an n x d output.
///
/// Row i of the Jacobian is the input-gradient of the i-th output column; the
/// d gradient graphs are built once and shared between copies.
class GraphField final : public VectorField {
 public:
  GraphField(ad::Graph graph, ad::ParamVector params);

  int dim() const override { return dim_; }
  Vector value(const Vector& x) const override;
  /// Row-wise batch evaluation.
  Matrix values(const Matrix& points) const;

  bool has_autodiff() const override { return true; }
  Matrix autodiff_jacobian(const Vector& x) const override;
  /// Jacobians at every row of `points`.
  std::vector<Matrix> jacobians(const Matrix& points) const;

  /// Same graphs, different parameters.
  GraphField with_params(ad::ParamVector params) const;

  const ad::Graph& graph() const { return shared_->graph; }
  const ad::ParamVector& params() const { return params_; }

 private:
  struct Shared {
    ad::Graph graph;
    std::vector<ad::Graph> row_gradients;
  };

  GraphField(std::shared_ptr<const Shared> shared, ad::ParamVector params, int dim)
      : shared_(std::move(shared)), params_(std::move(params)), dim_(dim) {}

  std::shared_ptr<const Shared> shared_;
  ad::ParamVector params_;
  int dim_ = 0;
};

}  // namespace gradfield
