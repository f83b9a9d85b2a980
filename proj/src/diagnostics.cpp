#include "gradfield/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/SVD>

namespace gradfield {

std::string to_string(JacobianMethod m) {
  switch (m) {
    case JacobianMethod::autodiff: return "autodiff";
    case JacobianMethod::central_fd: return "central_fd";
    case JacobianMethod::central_fd4: return "central_fd4";
  }
  return "?";
}

JacobianMethod jacobian_method_from_string(const std::string& s) {
  if (s == "autodiff") return JacobianMethod::autodiff;
  if (s == "central_fd") return JacobianMethod::central_fd;
  if (s == "central_fd4") return JacobianMethod::central_fd4;
  throw std::invalid_argument("unknown Jacobian method '" + s + "'");
}

namespace {

Vector checked_value(const VectorField& field, const Vector& x, int coord, double offset) {
  Vector v = field.value(x);
  if (!v.allFinite()) {
    std::ostringstream os;
    os << "field is not finite at x";
    if (offset >= 0) os << " + ";
    else os << " - ";
    os << std::abs(offset) << "·e" << coord << " (coordinate " << coord << ")";
    throw NumericalError(os.str());
  }
  return v;
}

}  // namespace

Matrix jacobian(const VectorField& field, const Vector& x, JacobianOptions options) {
  const int d = field.dim();
  if (x.size() != d) {
    throw DimensionError("point has " + std::to_string(x.size()) + " coordinates, field is " +
                         std::to_string(d) + "-dimensional");
  }
  if (options.method == JacobianMethod::autodiff) return field.autodiff_jacobian(x);
  if (!(options.h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");

  const double h = options.h;
  Matrix J(d, d);
  for (int j = 0; j < d; ++j) {
    auto shifted = [&](double t) {
      Vector p = x;
      p[j] += t;
      return checked_value(field, p, j, t);
    };
    if (options.method == JacobianMethod::central_fd) {
      J.col(j) = (shifted(h) - shifted(-h)) / (2.0 * h);
    } else {
      J.col(j) = (-shifted(2 * h) + 8.0 * shifted(h) - 8.0 * shifted(-h) + shifted(-2 * h)) /
                 (12.0 * h);
    }
  }
  return J;
}

double symmetry_residual(const Matrix& J) {
  if (J.rows() != J.cols()) {
    throw DimensionError("symmetry residual needs a square matrix, got " +
                         std::to_string(J.rows()) + "x" + std::to_string(J.cols()));
  }
  const double asym = (J - J.transpose()).norm();
  return asym / std::max(J.norm(), kResidualFloor);
}

int numerical_rank(const Matrix& J, double rel_tol) {
  if (J.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(J);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > rel_tol * sv[0]) ++rank;
  }
  return rank;
}

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vector p = x;
    p[j] = x[j] + h;
    const double fp = f(p);
    p[j] = x[j] - h;
    const double fm = f(p);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericalError("function is not finite on the stencil of coordinate " +
                           std::to_string(j));
    }
    g[j] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double min_abs_cosine(const Matrix& vectors, int* zero_count) {
  std::vector<Vector> units;
  int zeros = 0;
  for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
    const double n = vectors.row(r).norm();
    if (n <= 1e-12) {
      ++zeros;
    } else {
      units.emplace_back(vectors.row(r).transpose() / n);
    }
  }
  if (zero_count) *zero_count = zeros;
  if (units.empty()) throw NumericalError("all weight vectors are zero");
  double best = 1.0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    for (std::size_t j = i + 1; j < units.size(); ++j) {
      best = std::min(best, std::min(1.0, std::abs(units[i].dot(units[j]))));
    }
  }
  return best;
}

ParallelismStats weight_parallelism(const MlpParams& net) {
  net.validate();
  ParallelismStats stats;
  stats.min_input_cos = min_abs_cosine(net.weights.front(), &stats.zero_input_rows);
  if (net.mode == NetMode::psi) {
    const Matrix cols = net.weights.back().transpose();
    try {
      stats.min_output_cos = min_abs_cosine(cols, &stats.zero_output_cols);
    } catch (const NumericalError&) {
      stats.zero_output_cols = static_cast<int>(cols.rows());
    }
  }
  return stats;
}

ParallelismStats weight_parallelism(const ParallelPsiNet& net) {
  return weight_parallelism(net.to_mlp());
}

ParallelismStats weight_parallelism(const TiedPsiNet& net) {
  return weight_parallelism(net.to_mlp());
}

SymmetryReport symmetry_report(const VectorField& field, const Matrix& points,
                               JacobianOptions options, bool with_rank) {
  if (points.cols() != field.dim()) {
    throw DimensionError("points have " + std::to_string(points.cols()) +
                         " columns, field is " + std::to_string(field.dim()) + "-dimensional");
  }
  SymmetryReport report;
  report.points = points;
  report.method = options.method;
  report.trivially_symmetric = field.dim() == 1;

  std::vector<Matrix> jacobians;
  const auto* graph_field = dynamic_cast<const GraphField*>(&field);
  if (graph_field && options.method == JacobianMethod::autodiff) {
    jacobians = graph_field->jacobians(points);
  } else {
    for (Eigen::Index p = 0; p < points.rows(); ++p) {
      jacobians.push_back(jacobian(field, points.row(p).transpose(), options));
    }
  }
  for (const Matrix& J : jacobians) {
    const double r = symmetry_residual(J);
    report.residuals.push_back(r);
    report.max_residual = std::max(report.max_residual, r);
    if (with_rank) report.ranks.push_back(numerical_rank(J));
  }
  return report;
}

Matrix standard_normal_points(int count, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix pts(count, dim);
  for (int r = 0; r < count; ++r) {
    for (int c = 0; c < dim; ++c) pts(r, c) = normal(rng);
  }
  return pts;
}

Json to_json(const SymmetryReport& report) {
  Json doc;
  doc["schema_version"] = 1;
  doc["kind"] = "symmetry_report";
  doc["dimension"] = report.points.cols();
  doc["method"] = to_string(report.method);
  doc["trivially_symmetric"] = report.trivially_symmetric;
  doc["max_residual"] = report.max_residual;
  Json pts = Json::array();
  for (Eigen::Index p = 0; p < report.points.rows(); ++p) {
    Json entry;
    Json coords = Json::array();
    for (Eigen::Index c = 0; c < report.points.cols(); ++c) coords.push_back(report.points(p, c));
    entry["x"] = coords;
    entry["residual"] = report.residuals[p];
    if (!report.ranks.empty()) entry["rank"] = report.ranks[p];
    pts.push_back(entry);
  }
  doc["points"] = pts;
  return doc;
}

std::string to_csv(const SymmetryReport& report) {
  std::ostringstream os;
  os << "index";
  for (Eigen::Index c = 0; c < report.points.cols(); ++c) os << ",x" << (c + 1);
  os << ",residual";
  if (!report.ranks.empty()) os << ",rank";
  os << "\n";
  for (Eigen::Index p = 0; p < report.points.rows(); ++p) {
    os << p;
    for (Eigen::Index c = 0; c < report.points.cols(); ++c) os << "," << format_double(report.points(p, c));
    os << "," << format_double(report.residuals[p]);
    if (!report.ranks.empty()) os << "," << report.ranks[p];
    os << "\n";
  }
  return os.str();
}

}  // namespace gradfield
