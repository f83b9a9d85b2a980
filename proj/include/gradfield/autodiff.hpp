#pragma once

// Expression graphs over matrix-valued nodes with reverse-mode differentiation.
//
// Every node holds a matrix. Batch data flows through the rows: an input slot
// of width d receives an n x d matrix, and the primitives below never mix rows
// except for the explicit reductions (sum, sum_of_squares). Parameters are
// fixed-shape blocks of a ParamVector.
//
// The input-gradient of a graph is not computed by a separate tape. Instead
// grad_input_graph() writes the reverse sweep out as ordinary forward nodes,
// so the gradient is itself a graph that eval() runs and grad_params() can
// differentiate once more.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gradfield/errors.hpp"
#include "gradfield/param_vector.hpp"

namespace gradfield::ad {

using NodeId = std::int32_t;

/// Rows of a node whose value depends on the batch size.
inline constexpr int kBatchRows = -1;

/// Scalar function applied elementwise, together with its derivatives.
class ElementwiseFn {
 public:
  virtual ~ElementwiseFn() = default;
  virtual std::string name() const = 0;
  /// Highest derivative order that apply() supports (0 = value only).
  virtual int max_order() const = 0;
  virtual void apply(int order, const double* in, double* out, std::size_t n) const = 0;
};

using FnPtr = std::shared_ptr<const ElementwiseFn>;

FnPtr exp_fn();
FnPtr log_fn();

enum class Op : std::uint8_t {
  Input,
  Param,
  Constant,
  Ones,
  Add,
  Sub,
  Mul,
  Scale,
  Linear,
  LinearT,
  Outer,
  Apply,
  Dot,
  RowScale,
  Sum,
  SumOfSquares,
  Broadcast,
};

const char* op_name(Op op);

struct Node {
  Op op = Op::Input;
  NodeId lhs = -1;
  NodeId rhs = -1;
  int index = -1;  // input slot, param block, constant id or fn id
  int order = 0;   // derivative order for Apply
  double scalar = 0.0;
  bool row_mean = false;  // Sum, SumOfSquares, Broadcast divide by the row count
  int rows = 0;           // static shape, kBatchRows when batch-dependent
  int cols = 0;
};

class Graph {
 public:
  Graph() = default;
  explicit Graph(ParamLayout layout) : layout_(std::move(layout)) {}

  // Leaves.
  NodeId input(int cols);
  NodeId param(int block);
  NodeId constant(Matrix value);
  /// Column of ones with as many rows as `ref`.
  NodeId ones(NodeId ref);

  // Elementwise, shapes must agree.
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  /// fn^(order) applied to every entry of `a`.
  NodeId apply(const FnPtr& fn, NodeId a, int order = 0);

  /// x * Wᵀ: (n x c)(r x c)ᵀ -> n x r. Bias-free affine map.
  NodeId linear(NodeId x, NodeId w);
  /// g * W: (n x r)(r x c) -> n x c.
  NodeId linear_t(NodeId g, NodeId w);
  /// aᵀ b: (n x r)ᵀ(n x c) -> r x c.
  NodeId outer(NodeId a, NodeId b);

  /// Row-wise inner product -> n x 1.
  NodeId dot(NodeId a, NodeId b);
  /// Row i of `a` scaled by s(i, 0).
  NodeId row_scale(NodeId a, NodeId s);

  /// Sum of all entries -> 1 x 1; divided by the row count when row_mean.
  NodeId sum(NodeId a, bool row_mean = false);
  NodeId sum_of_squares(NodeId a, bool row_mean = false);
  /// 1 x 1 node `s` spread over the shape of `ref` (divided by rows(ref) when row_mean).
  NodeId broadcast(NodeId s, NodeId ref, bool row_mean = false);

  /// Copies `other` into this graph. Input slot k of `other` is replaced by
  /// `input_map[k]`; parameter layouts must be identical. Returns the new id of
  /// every node of `other`.
  std::vector<NodeId> import(const Graph& other, std::span<const NodeId> input_map);

  void set_outputs(std::vector<NodeId> outputs);
  const std::vector<NodeId>& outputs() const { return outputs_; }
  NodeId output(int i = 0) const;

  const ParamLayout& layout() const { return layout_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(NodeId id) const;
  int size() const { return static_cast<int>(nodes_.size()); }
  int num_inputs() const { return static_cast<int>(input_cols_.size()); }
  int input_cols(int slot) const { return input_cols_.at(slot); }
  NodeId input_node(int slot) const { return input_nodes_.at(slot); }
  const ElementwiseFn& fn(int id) const { return *fns_.at(id); }

  /// Forward values of every node.
  std::vector<Matrix> forward(std::span<const Matrix> inputs, const ParamVector& params) const;

  /// Human-readable node description used in error messages.
  std::string describe(NodeId id) const;

 private:
  friend Graph grad_input_graph(const Graph&, int, bool);

  NodeId push(Node n);
  void check_operand(NodeId id) const;
  int intern_fn(const FnPtr& fn);

  ParamLayout layout_;
  std::vector<Node> nodes_;
  std::vector<Matrix> constants_;
  std::vector<FnPtr> fns_;
  std::vector<int> input_cols_;
  std::vector<NodeId> input_nodes_;
  std::vector<NodeId> outputs_;
};

/// Value of output `output` of the graph.
Matrix eval(const Graph& graph, std::span<const Matrix> inputs, const ParamVector& params,
            int output = 0);
/// Single-point convenience: x becomes a 1 x d batch.
Matrix eval(const Graph& graph, const Vector& x, const ParamVector& params, int output = 0);

/// Builds the graph of ∇ₓ(Σ output entries) with respect to input slot `slot`.
/// The result contains a copy of `graph` followed by the reverse sweep written
/// as forward nodes; its single output is the n x d gradient. The output of
/// `graph` must have one column; rows are independent samples, so each row of
/// the result is that sample's gradient.
///
/// With `differentiable` set, every emitted elementwise derivative must itself
/// have a registered derivative, so that grad_params() can be applied to a
/// loss built on the result. Missing derivatives raise GraphError here rather
/// than at evaluation time.
Graph grad_input_graph(const Graph& graph, int slot = 0, bool differentiable = true);

struct InputGradient {
  Matrix gradient;
  Graph graph;
};

/// Gradient values together with the graph that computes them.
InputGradient grad_input(const Graph& graph, std::span<const Matrix> inputs,
                         const ParamVector& params, int slot = 0);
InputGradient grad_input(const Graph& graph, const Vector& x, const ParamVector& params);

struct ParamGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

/// ∇_θ of the first output, which must be 1 x 1 (e.g. a loss).
ParamGradient grad_params(const Graph& graph, std::span<const Matrix> inputs,
                          const ParamVector& params);

}  // namespace gradfield::ad
