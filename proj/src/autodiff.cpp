#include "gradfield/autodiff.hpp"

#include <cmath>
#include <sstream>

namespace gradfield::ad {

namespace {

bool compatible(int a, int b) { return a == b || a == kBatchRows || b == kBatchRows; }

int unify(int a, int b) { return a == kBatchRows ? b : a; }

std::string shape_str(int rows, int cols) {
  auto dim = [](int v) { return v == kBatchRows ? std::string("n") : std::to_string(v); };
  return dim(rows) + "x" + dim(cols);
}

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

class ExpFn final : public ElementwiseFn {
 public:
  std::string name() const override { return "exp"; }
  int max_order() const override { return 8; }
  void apply(int, const double* in, double* out, std::size_t n) const override {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(in[i]);
  }
};

class LogFn final : public ElementwiseFn {
 public:
  std::string name() const override { return "log"; }
  int max_order() const override { return 8; }
  void apply(int order, const double* in, double* out, std::size_t n) const override {
    if (order == 0) {
      for (std::size_t i = 0; i < n; ++i) out[i] = std::log(in[i]);
      return;
    }
    // d^k/dx^k log x = (-1)^(k-1) (k-1)! / x^k
    double c = 1.0;
    for (int k = 1; k < order; ++k) c *= -static_cast<double>(k);
    for (std::size_t i = 0; i < n; ++i) out[i] = c / std::pow(in[i], order);
  }
};

}  // namespace

FnPtr exp_fn() {
  static const FnPtr fn = std::make_shared<ExpFn>();
  return fn;
}

FnPtr log_fn() {
  static const FnPtr fn = std::make_shared<LogFn>();
  return fn;
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Input: return "input";
    case Op::Param: return "param";
    case Op::Constant: return "constant";
    case Op::Ones: return "ones";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::Linear: return "linear";
    case Op::LinearT: return "linear_t";
    case Op::Outer: return "outer";
    case Op::Apply: return "apply";
    case Op::Dot: return "dot";
    case Op::RowScale: return "row_scale";
    case Op::Sum: return "sum";
    case Op::SumOfSquares: return "sum_of_squares";
    case Op::Broadcast: return "broadcast";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Construction

const Node& Graph::node(NodeId id) const {
  if (id < 0 || id >= size()) {
    throw GraphError("node id " + std::to_string(id) + " out of range");
  }
  return nodes_[id];
}

std::string Graph::describe(NodeId id) const {
  std::ostringstream os;
  os << "node " << id;
  if (id >= 0 && id < size()) {
    const Node& n = nodes_[id];
    os << " (" << op_name(n.op);
    if (n.op == Op::Apply) os << " " << fns_[n.index]->name() << "^(" << n.order << ")";
    if (n.op == Op::Param) os << " '" << layout_.block(n.index).name << "'";
    if (n.op == Op::Input) os << " slot " << n.index;
    os << ", " << shape_str(n.rows, n.cols) << ")";
  }
  return os.str();
}

NodeId Graph::push(Node n) {
  nodes_.push_back(n);
  return static_cast<NodeId>(nodes_.size()) - 1;
}

void Graph::check_operand(NodeId id) const {
  if (id < 0 || id >= size()) {
    throw GraphError("operand id " + std::to_string(id) + " does not precede the new node");
  }
}

int Graph::intern_fn(const FnPtr& fn) {
  if (!fn) throw GraphError("null elementwise function");
  for (std::size_t i = 0; i < fns_.size(); ++i) {
    if (fns_[i] == fn) return static_cast<int>(i);
  }
  fns_.push_back(fn);
  return static_cast<int>(fns_.size()) - 1;
}

NodeId Graph::input(int cols) {
  if (cols <= 0) throw DimensionError("input slot needs a positive width");
  Node n{.op = Op::Input, .index = num_inputs(), .rows = kBatchRows, .cols = cols};
  input_cols_.push_back(cols);
  NodeId id = push(n);
  input_nodes_.push_back(id);
  return id;
}

NodeId Graph::param(int block) {
  const ParamBlock& blk = layout_.block(block);
  return push({.op = Op::Param, .index = block, .rows = blk.rows, .cols = blk.cols});
}

NodeId Graph::constant(Matrix value) {
  Node n{.op = Op::Constant,
         .index = static_cast<int>(constants_.size()),
         .rows = static_cast<int>(value.rows()),
         .cols = static_cast<int>(value.cols())};
  constants_.push_back(std::move(value));
  return push(n);
}

NodeId Graph::ones(NodeId ref) {
  check_operand(ref);
  return push({.op = Op::Ones, .lhs = ref, .rows = nodes_[ref].rows, .cols = 1});
}

namespace {

Node elementwise(Op op, const Graph& g, NodeId a, NodeId b) {
  const Node& na = g.node(a);
  const Node& nb = g.node(b);
  if (!compatible(na.rows, nb.rows) || !compatible(na.cols, nb.cols)) {
    throw DimensionError(std::string(op_name(op)) + ": " + g.describe(a) + " vs " +
                         g.describe(b));
  }
  return {.op = op,
          .lhs = a,
          .rhs = b,
          .rows = unify(na.rows, nb.rows),
          .cols = unify(na.cols, nb.cols)};
}

}  // namespace

NodeId Graph::add(NodeId a, NodeId b) { return push(elementwise(Op::Add, *this, a, b)); }
NodeId Graph::sub(NodeId a, NodeId b) { return push(elementwise(Op::Sub, *this, a, b)); }
NodeId Graph::mul(NodeId a, NodeId b) { return push(elementwise(Op::Mul, *this, a, b)); }

NodeId Graph::scale(NodeId a, double c) {
  check_operand(a);
  const Node& na = nodes_[a];
  return push({.op = Op::Scale, .lhs = a, .scalar = c, .rows = na.rows, .cols = na.cols});
}

NodeId Graph::apply(const FnPtr& fn, NodeId a, int order) {
  check_operand(a);
  int id = intern_fn(fn);
  if (order < 0 || order > fns_[id]->max_order()) {
    throw GraphError("function '" + fns_[id]->name() + "' has no derivative of order " +
                     std::to_string(order));
  }
  const Node& na = nodes_[a];
  return push(
      {.op = Op::Apply, .lhs = a, .index = id, .order = order, .rows = na.rows, .cols = na.cols});
}

NodeId Graph::linear(NodeId x, NodeId w) {
  check_operand(x);
  check_operand(w);
  const Node& nx = nodes_[x];
  const Node& nw = nodes_[w];
  if (!compatible(nx.cols, nw.cols)) {
    throw DimensionError("linear: " + describe(x) + " does not chain with " + describe(w));
  }
  return push({.op = Op::Linear, .lhs = x, .rhs = w, .rows = nx.rows, .cols = nw.rows});
}

NodeId Graph::linear_t(NodeId g, NodeId w) {
  check_operand(g);
  check_operand(w);
  const Node& ng = nodes_[g];
  const Node& nw = nodes_[w];
  if (!compatible(ng.cols, nw.rows)) {
    throw DimensionError("linear_t: " + describe(g) + " does not chain with " + describe(w));
  }
  return push({.op = Op::LinearT, .lhs = g, .rhs = w, .rows = ng.rows, .cols = nw.cols});
}

NodeId Graph::outer(NodeId a, NodeId b) {
  check_operand(a);
  check_operand(b);
  const Node& na = nodes_[a];
  const Node& nb = nodes_[b];
  if (!compatible(na.rows, nb.rows)) {
    throw DimensionError("outer: " + describe(a) + " vs " + describe(b));
  }
  return push({.op = Op::Outer, .lhs = a, .rhs = b, .rows = na.cols, .cols = nb.cols});
}

NodeId Graph::dot(NodeId a, NodeId b) {
  Node n = elementwise(Op::Dot, *this, a, b);
  n.cols = 1;
  return push(n);
}

NodeId Graph::row_scale(NodeId a, NodeId s) {
  check_operand(a);
  check_operand(s);
  const Node& na = nodes_[a];
  const Node& ns = nodes_[s];
  if (!compatible(ns.cols, 1) || !compatible(na.rows, ns.rows)) {
    throw DimensionError("row_scale: " + describe(a) + " by " + describe(s));
  }
  return push({.op = Op::RowScale,
               .lhs = a,
               .rhs = s,
               .rows = unify(na.rows, ns.rows),
               .cols = na.cols});
}

NodeId Graph::sum(NodeId a, bool row_mean) {
  check_operand(a);
  return push({.op = Op::Sum, .lhs = a, .row_mean = row_mean, .rows = 1, .cols = 1});
}

NodeId Graph::sum_of_squares(NodeId a, bool row_mean) {
  check_operand(a);
  return push({.op = Op::SumOfSquares, .lhs = a, .row_mean = row_mean, .rows = 1, .cols = 1});
}

NodeId Graph::broadcast(NodeId s, NodeId ref, bool row_mean) {
  check_operand(s);
  check_operand(ref);
  const Node& ns = nodes_[s];
  if (!compatible(ns.rows, 1) || !compatible(ns.cols, 1)) {
    throw DimensionError("broadcast: " + describe(s) + " is not 1x1");
  }
  const Node& nr = nodes_[ref];
  return push({.op = Op::Broadcast,
               .lhs = s,
               .rhs = ref,
               .row_mean = row_mean,
               .rows = nr.rows,
               .cols = nr.cols});
}

std::vector<NodeId> Graph::import(const Graph& other, std::span<const NodeId> input_map) {
  if (!(other.layout_ == layout_)) {
    throw DimensionError("import: parameter layouts differ");
  }
  if (static_cast<int>(input_map.size()) != other.num_inputs()) {
    throw DimensionError("import: expected " + std::to_string(other.num_inputs()) +
                         " input mappings, got " + std::to_string(input_map.size()));
  }
  std::vector<NodeId> map(other.nodes_.size(), -1);
  for (std::size_t i = 0; i < other.nodes_.size(); ++i) {
    const Node& n = other.nodes_[i];
    NodeId a = n.lhs >= 0 ? map[n.lhs] : -1;
    NodeId b = n.rhs >= 0 ? map[n.rhs] : -1;
    NodeId id = -1;
    switch (n.op) {
      case Op::Input: {
        id = input_map[n.index];
        check_operand(id);
        if (!compatible(nodes_[id].cols, n.cols)) {
          throw DimensionError("import: input slot " + std::to_string(n.index) +
                               " mapped to incompatible " + describe(id));
        }
        break;
      }
      case Op::Param: id = param(n.index); break;
      case Op::Constant: id = constant(other.constants_[n.index]); break;
      case Op::Ones: id = ones(a); break;
      case Op::Add: id = add(a, b); break;
      case Op::Sub: id = sub(a, b); break;
      case Op::Mul: id = mul(a, b); break;
      case Op::Scale: id = scale(a, n.scalar); break;
      case Op::Linear: id = linear(a, b); break;
      case Op::LinearT: id = linear_t(a, b); break;
      case Op::Outer: id = outer(a, b); break;
      case Op::Apply: id = apply(other.fns_[n.index], a, n.order); break;
      case Op::Dot: id = dot(a, b); break;
      case Op::RowScale: id = row_scale(a, b); break;
      case Op::Sum: id = sum(a, n.row_mean); break;
      case Op::SumOfSquares: id = sum_of_squares(a, n.row_mean); break;
      case Op::Broadcast: id = broadcast(a, b, n.row_mean); break;
    }
    map[i] = id;
  }
  return map;
}

void Graph::set_outputs(std::vector<NodeId> outputs) {
  for (NodeId id : outputs) check_operand(id);
  outputs_ = std::move(outputs);
}

NodeId Graph::output(int i) const {
  if (i < 0 || i >= static_cast<int>(outputs_.size())) {
    throw GraphError("graph has no output " + std::to_string(i));
  }
  return outputs_[i];
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<Matrix> Graph::forward(std::span<const Matrix> inputs, const ParamVector& params) const {
  if (static_cast<int>(inputs.size()) != num_inputs()) {
    throw DimensionError("graph expects " + std::to_string(num_inputs()) + " inputs, got " +
                         std::to_string(inputs.size()));
  }
  if (!(params.layout() == layout_)) {
    throw DimensionError("parameter layout does not match the graph");
  }

  std::vector<Matrix> v(nodes_.size());
  auto mismatch = [&](NodeId id, const std::string& detail) {
    return DimensionError(describe(id) + ": " + detail);
  };
  auto rows_for_mean = [&](NodeId id, Eigen::Index rows) {
    if (rows == 0) throw mismatch(id, "row mean over an empty batch");
    return static_cast<double>(rows);
  };

  for (NodeId id = 0; id < size(); ++id) {
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::Input: {
        const Matrix& x = inputs[n.index];
        if (x.cols() != n.cols) {
          throw mismatch(id, "input has " + std::to_string(x.cols()) + " columns, expected " +
                                 std::to_string(n.cols));
        }
        v[id] = x;
        break;
      }
      case Op::Param: v[id] = params.block(n.index); break;
      case Op::Constant: v[id] = constants_[n.index]; break;
      case Op::Ones: v[id] = Matrix::Ones(v[n.lhs].rows(), 1); break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Dot: {
        const Matrix& a = v[n.lhs];
        const Matrix& b = v[n.rhs];
        if (a.rows() != b.rows() || a.cols() != b.cols()) {
          throw mismatch(id, "operands " + shape_str(a) + " and " + shape_str(b));
        }
        if (n.op == Op::Add) v[id] = a + b;
        else if (n.op == Op::Sub) v[id] = a - b;
        else if (n.op == Op::Mul) v[id] = a.cwiseProduct(b);
        else v[id] = a.cwiseProduct(b).rowwise().sum();
        break;
      }
      case Op::Scale: v[id] = n.scalar * v[n.lhs]; break;
      case Op::Apply: {
        const Matrix& a = v[n.lhs];
        v[id].resize(a.rows(), a.cols());
        fns_[n.index]->apply(n.order, a.data(), v[id].data(), static_cast<std::size_t>(a.size()));
        break;
      }
      case Op::Linear: {
        const Matrix& x = v[n.lhs];
        const Matrix& w = v[n.rhs];
        if (x.cols() != w.cols()) throw mismatch(id, shape_str(x) + " times (" + shape_str(w) + ")ᵀ");
        v[id].noalias() = x * w.transpose();
        break;
      }
      case Op::LinearT: {
        const Matrix& g = v[n.lhs];
        const Matrix& w = v[n.rhs];
        if (g.cols() != w.rows()) throw mismatch(id, shape_str(g) + " times " + shape_str(w));
        v[id].noalias() = g * w;
        break;
      }
      case Op::Outer: {
        const Matrix& a = v[n.lhs];
        const Matrix& b = v[n.rhs];
        if (a.rows() != b.rows()) throw mismatch(id, "(" + shape_str(a) + ")ᵀ times " + shape_str(b));
        v[id].noalias() = a.transpose() * b;
        break;
      }
      case Op::RowScale: {
        const Matrix& a = v[n.lhs];
        const Matrix& s = v[n.rhs];
        if (s.cols() != 1 || s.rows() != a.rows()) {
          throw mismatch(id, shape_str(a) + " scaled by " + shape_str(s));
        }
        v[id] = s.col(0).asDiagonal() * a;
        break;
      }
      case Op::Sum: {
        const Matrix& a = v[n.lhs];
        double d = n.row_mean ? rows_for_mean(id, a.rows()) : 1.0;
        v[id] = Matrix::Constant(1, 1, a.sum() / d);
        break;
      }
      case Op::SumOfSquares: {
        const Matrix& a = v[n.lhs];
        double d = n.row_mean ? rows_for_mean(id, a.rows()) : 1.0;
        v[id] = Matrix::Constant(1, 1, a.squaredNorm() / d);
        break;
      }
      case Op::Broadcast: {
        const Matrix& s = v[n.lhs];
        const Matrix& ref = v[n.rhs];
        if (s.rows() != 1 || s.cols() != 1) throw mismatch(id, "source is " + shape_str(s));
        double d = n.row_mean ? rows_for_mean(id, ref.rows()) : 1.0;
        v[id] = Matrix::Constant(ref.rows(), ref.cols(), s(0, 0) / d);
        break;
      }
    }
  }
  return v;
}

Matrix eval(const Graph& graph, std::span<const Matrix> inputs, const ParamVector& params,
            int output) {
  NodeId out = graph.output(output);
  std::vector<Matrix> v = graph.forward(inputs, params);
  return std::move(v[out]);
}

Matrix eval(const Graph& graph, const Vector& x, const ParamVector& params, int output) {
  Matrix in = x.transpose();
  return eval(graph, std::span<const Matrix>(&in, 1), params, output);
}

// ---------------------------------------------------------------------------
// Reverse mode

Graph grad_input_graph(const Graph& graph, int slot, bool differentiable) {
  if (slot < 0 || slot >= graph.num_inputs()) {
    throw GraphError("grad_input: graph has no input slot " + std::to_string(slot));
  }
  NodeId output = graph.output(0);
  const Node& out_node = graph.node(output);
  if (out_node.cols != 1) {
    throw GraphError("grad_input: output " + graph.describe(output) +
                     " is not scalar per sample");
  }

  const int n = graph.size();
  std::vector<char> dep(n, 0);
  for (NodeId i = 0; i < n; ++i) {
    const Node& nd = graph.nodes()[i];
    if (nd.op == Op::Input) {
      dep[i] = nd.index == slot;
    } else {
      dep[i] = (nd.lhs >= 0 && dep[nd.lhs]) || (nd.rhs >= 0 && dep[nd.rhs]);
    }
  }

  Graph g = graph;
  std::vector<NodeId> adj(n, -1);
  auto accumulate = [&](NodeId target, NodeId contribution) {
    if (!dep[target]) return;
    adj[target] = adj[target] < 0 ? contribution : g.add(adj[target], contribution);
  };

  adj[output] = g.ones(output);
  for (NodeId i = output; i >= 0; --i) {
    if (adj[i] < 0 || !dep[i]) continue;
    const Node nd = g.nodes_[i];
    const NodeId a = nd.lhs;
    const NodeId b = nd.rhs;
    const NodeId dy = adj[i];
    switch (nd.op) {
      case Op::Input:
      case Op::Param:
      case Op::Constant:
      case Op::Ones:
        break;
      case Op::Add:
        accumulate(a, dy);
        accumulate(b, dy);
        break;
      case Op::Sub:
        accumulate(a, dy);
        if (dep[b]) accumulate(b, g.scale(dy, -1.0));
        break;
      case Op::Mul:
        if (dep[a]) accumulate(a, g.mul(dy, b));
        if (dep[b]) accumulate(b, g.mul(dy, a));
        break;
      case Op::Scale:
        accumulate(a, g.scale(dy, nd.scalar));
        break;
      case Op::Apply: {
        const ElementwiseFn& fn = *g.fns_[nd.index];
        const int next = nd.order + 1;
        if (next > fn.max_order()) {
          throw GraphError("grad_input: '" + fn.name() + "' has no registered derivative of order " +
                           std::to_string(next) + " (needed by " + graph.describe(i) + ")");
        }
        if (differentiable && next + 1 > fn.max_order()) {
          throw GraphError("grad_input: '" + fn.name() + "' has no registered derivative of order " +
                           std::to_string(next + 1) +
                           "; the gradient graph would not be differentiable in θ");
        }
        accumulate(a, g.mul(dy, g.apply(g.fns_[nd.index], a, next)));
        break;
      }
      case Op::Linear:
        if (dep[a]) accumulate(a, g.linear_t(dy, b));
        if (dep[b]) accumulate(b, g.outer(dy, a));
        break;
      case Op::LinearT:
        if (dep[a]) accumulate(a, g.linear(dy, b));
        if (dep[b]) accumulate(b, g.outer(a, dy));
        break;
      case Op::Outer:
        if (dep[a]) accumulate(a, g.linear(b, dy));
        if (dep[b]) accumulate(b, g.linear_t(a, dy));
        break;
      case Op::Dot:
        if (dep[a]) accumulate(a, g.row_scale(b, dy));
        if (dep[b]) accumulate(b, g.row_scale(a, dy));
        break;
      case Op::RowScale:
        if (dep[a]) accumulate(a, g.row_scale(dy, b));
        if (dep[b]) accumulate(b, g.dot(dy, a));
        break;
      case Op::Sum:
        accumulate(a, g.broadcast(dy, a, nd.row_mean));
        break;
      case Op::SumOfSquares:
        accumulate(a, g.scale(g.mul(a, g.broadcast(dy, a, nd.row_mean)), 2.0));
        break;
      case Op::Broadcast:
        accumulate(a, g.sum(dy, nd.row_mean));
        break;
    }
  }

  NodeId in = graph.input_node(slot);
  NodeId result = adj[in] >= 0 ? adj[in] : g.scale(in, 0.0);
  g.set_outputs({result});
  return g;
}

InputGradient grad_input(const Graph& graph, std::span<const Matrix> inputs,
                         const ParamVector& params, int slot) {
  Graph g = grad_input_graph(graph, slot);
  Matrix grad = eval(g, inputs, params);
  return {std::move(grad), std::move(g)};
}

InputGradient grad_input(const Graph& graph, const Vector& x, const ParamVector& params) {
  Matrix in = x.transpose();
  return grad_input(graph, std::span<const Matrix>(&in, 1), params, 0);
}

ParamGradient grad_params(const Graph& graph, std::span<const Matrix> inputs,
                          const ParamVector& params) {
  const NodeId output = graph.output(0);
  std::vector<Matrix> v = graph.forward(inputs, params);
  if (v[output].rows() != 1 || v[output].cols() != 1) {
    throw GraphError("grad_params: output " + graph.describe(output) + " evaluated to " +
                     shape_str(v[output]) + ", expected a scalar loss");
  }

  const int n = graph.size();
  const auto& nodes = graph.nodes();
  std::vector<char> dep(n, 0);
  for (NodeId i = 0; i < n; ++i) {
    const Node& nd = nodes[i];
    dep[i] = nd.op == Op::Param || (nd.lhs >= 0 && dep[nd.lhs]) || (nd.rhs >= 0 && dep[nd.rhs]);
  }

  ParamGradient result;
  result.value = v[output](0, 0);
  result.gradient.assign(params.size(), 0.0);

  std::vector<Matrix> adj(n);
  std::vector<char> has(n, 0);
  auto accumulate = [&](NodeId target, auto&& contribution) {
    if (!dep[target]) return;
    if (has[target]) {
      adj[target] += contribution;
    } else {
      adj[target] = contribution;
      has[target] = 1;
    }
  };

  adj[output] = Matrix::Ones(1, 1);
  has[output] = 1;
  for (NodeId i = output; i >= 0; --i) {
    if (!has[i] || !dep[i]) continue;
    const Node& nd = nodes[i];
    const Matrix& dy = adj[i];
    const NodeId a = nd.lhs;
    const NodeId b = nd.rhs;
    switch (nd.op) {
      case Op::Param: {
        const ParamBlock& blk = params.layout().block(nd.index);
        for (int r = 0; r < blk.rows; ++r) {
          for (int c = 0; c < blk.cols; ++c) {
            result.gradient[blk.offset + static_cast<std::size_t>(r) * blk.cols + c] += dy(r, c);
          }
        }
        break;
      }
      case Op::Input:
      case Op::Constant:
      case Op::Ones:
        break;
      case Op::Add:
        accumulate(a, dy);
        accumulate(b, dy);
        break;
      case Op::Sub:
        accumulate(a, dy);
        accumulate(b, -dy);
        break;
      case Op::Mul:
        accumulate(a, dy.cwiseProduct(v[b]));
        accumulate(b, dy.cwiseProduct(v[a]));
        break;
      case Op::Scale:
        accumulate(a, nd.scalar * dy);
        break;
      case Op::Apply: {
        if (!dep[a]) break;
        const ElementwiseFn& fn = graph.fn(nd.index);
        if (nd.order + 1 > fn.max_order()) {
          throw GraphError("grad_params: '" + fn.name() + "' has no registered derivative of order " +
                           std::to_string(nd.order + 1) + " (needed by " + graph.describe(i) + ")");
        }
        const Matrix& x = v[a];
        Matrix d(x.rows(), x.cols());
        fn.apply(nd.order + 1, x.data(), d.data(), static_cast<std::size_t>(x.size()));
        accumulate(a, dy.cwiseProduct(d));
        break;
      }
      case Op::Linear:
        if (dep[a]) accumulate(a, dy * v[b]);
        if (dep[b]) accumulate(b, dy.transpose() * v[a]);
        break;
      case Op::LinearT:
        if (dep[a]) accumulate(a, dy * v[b].transpose());
        if (dep[b]) accumulate(b, v[a].transpose() * dy);
        break;
      case Op::Outer:
        if (dep[a]) accumulate(a, v[b] * dy.transpose());
        if (dep[b]) accumulate(b, v[a] * dy);
        break;
      case Op::Dot:
        if (dep[a]) accumulate(a, dy.col(0).asDiagonal() * v[b]);
        if (dep[b]) accumulate(b, dy.col(0).asDiagonal() * v[a]);
        break;
      case Op::RowScale:
        if (dep[a]) accumulate(a, v[b].col(0).asDiagonal() * dy);
        if (dep[b]) accumulate(b, Matrix(dy.cwiseProduct(v[a]).rowwise().sum()));
        break;
      case Op::Sum: {
        const Matrix& x = v[a];
        double d = nd.row_mean ? static_cast<double>(x.rows()) : 1.0;
        accumulate(a, Matrix::Constant(x.rows(), x.cols(), dy(0, 0) / d));
        break;
      }
      case Op::SumOfSquares: {
        const Matrix& x = v[a];
        double d = nd.row_mean ? static_cast<double>(x.rows()) : 1.0;
        accumulate(a, (2.0 * dy(0, 0) / d) * x);
        break;
      }
      case Op::Broadcast: {
        double d = nd.row_mean ? static_cast<double>(v[b].rows()) : 1.0;
        accumulate(a, Matrix::Constant(1, 1, dy.sum() / d));
        break;
      }
    }
  }
  return result;
}

}  // namespace gradfield::ad
