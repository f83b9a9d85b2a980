#include "gradfield/field.hpp"

namespace gradfield {

Matrix VectorField::autodiff_jacobian(const Vector&) const {
  throw GraphError("this field has no autodiff Jacobian; use a finite-difference method");
}

GraphField::GraphField(ad::Graph graph, ad::ParamVector params) : params_(std::move(params)) {
  if (graph.num_inputs() != 1) {
    throw DimensionError("GraphField needs exactly one input slot");
  }
  dim_ = graph.input_cols(0);
  const ad::NodeId out = graph.output(0);
  if (graph.node(out).cols != dim_) {
    throw DimensionError("GraphField output " + graph.describe(out) + " is not " +
                         std::to_string(dim_) + "-dimensional");
  }

  auto shared = std::make_shared<Shared>();
  shared->graph = graph;
  for (int i = 0; i < dim_; ++i) {
    ad::Graph component = graph;
    ad::Matrix selector = ad::Matrix::Zero(1, dim_);
    selector(0, i) = 1.0;
    component.set_outputs({component.linear(out, component.constant(selector))});
    // Second derivatives of the activations are the deepest we evaluate here.
    shared->row_gradients.push_back(ad::grad_input_graph(component, 0, false));
  }
  shared_ = std::move(shared);
}

Vector GraphField::value(const Vector& x) const {
  if (x.size() != dim_) {
    throw DimensionError("field is " + std::to_string(dim_) + "-dimensional, point has " +
                         std::to_string(x.size()) + " coordinates");
  }
  return ad::eval(shared_->graph, x, params_).row(0).transpose();
}

Matrix GraphField::values(const Matrix& points) const {
  return ad::eval(shared_->graph, std::span<const Matrix>(&points, 1), params_);
}

Matrix GraphField::autodiff_jacobian(const Vector& x) const {
  Matrix p = x.transpose();
  return jacobians(p).front();
}

std::vector<Matrix> GraphField::jacobians(const Matrix& points) const {
  if (points.cols() != dim_) {
    throw DimensionError("points have " + std::to_string(points.cols()) + " columns, field is " +
                         std::to_string(dim_) + "-dimensional");
  }
  std::vector<Matrix> out(points.rows(), Matrix(dim_, dim_));
  for (int i = 0; i < dim_; ++i) {
    Matrix rows = ad::eval(shared_->row_gradients[i], std::span<const Matrix>(&points, 1), params_);
    for (Eigen::Index p = 0; p < points.rows(); ++p) out[p].row(i) = rows.row(p);
  }
  return out;
}

GraphField GraphField::with_params(ad::ParamVector params) const {
  if (!(params.layout() == params_.layout())) {
    throw DimensionError("parameter layout does not match the field's graph");
  }
  return GraphField(shared_, std::move(params), dim_);
}

}  // namespace gradfield
