#include "gradfield/toy_data.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "gradfield/errors.hpp"

namespace gradfield {

void GmmSpec::validate() const {
  const auto k = static_cast<Eigen::Index>(weights.size());
  if (k == 0) throw ConfigError("gmm.weights: at least one component is required");
  if (means.rows() != k || variances.rows() != k) {
    throw ConfigError("gmm: weights, means and variances must list the same components");
  }
  if (means.cols() == 0 || variances.cols() != means.cols()) {
    throw ConfigError("gmm: means and variances must share a positive dimension");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw ConfigError("gmm.weights[" + std::to_string(i) + "]: must be finite and >= 0");
    }
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("gmm.weights: must sum to 1 (sum is " + format_double(total) + ")");
  }
  if (!means.allFinite()) throw ConfigError("gmm.means: entries must be finite");
  for (Eigen::Index r = 0; r < variances.rows(); ++r) {
    for (Eigen::Index c = 0; c < variances.cols(); ++c) {
      if (!(variances(r, c) > 0.0) || !std::isfinite(variances(r, c))) {
        throw ConfigError("gmm.variances[" + std::to_string(r) + "][" + std::to_string(c) +
                          "]: must be finite and > 0");
      }
    }
  }
}

GmmSpec GmmSpec::benchmark(int dim) {
  GmmSpec s;
  s.weights = {0.5, 0.5};
  s.means = Matrix::Zero(2, dim);
  s.means(0, 0) = 2.0;
  s.means(1, 0) = -2.0;
  s.variances = Matrix::Ones(2, dim);
  return s;
}

GmmSpec GmmSpec::standard_normal(int dim) {
  GmmSpec s;
  s.weights = {1.0};
  s.means = Matrix::Zero(1, dim);
  s.variances = Matrix::Ones(1, dim);
  return s;
}

GmmSpec smooth(const GmmSpec& spec, double noise_sigma) {
  GmmSpec out = spec;
  out.variances.array() += noise_sigma * noise_sigma;
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t counter) {
  // splitmix64 over the combined words
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ stream) ^ counter);
}

Matrix sample_gmm(const GmmSpec& spec, int n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("sample_gmm: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(spec.weights.begin(), spec.weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(n, spec.dim());
  for (int i = 0; i < n; ++i) {
    const int k = pick(rng);
    for (int j = 0; j < spec.dim(); ++j) {
      out(i, j) = spec.means(k, j) + std::sqrt(spec.variances(k, j)) * normal(rng);
    }
  }
  return out;
}

Matrix corrupt(const Matrix& x, double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma > 0.0)) throw std::invalid_argument("corrupt: noise_sigma must be > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix y = x;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) y(i, j) += noise_sigma * normal(rng);
  }
  return y;
}

Batch make_batch(const GmmSpec& spec, int n, double noise_sigma, std::uint64_t sample_seed) {
  Batch b;
  b.x_clean = sample_gmm(spec, n, sample_seed);
  b.y_noisy = corrupt(b.x_clean, noise_sigma, derive_seed(sample_seed, 0x6e6f697365ULL));
  b.noise_sigma = noise_sigma;
  b.seed = sample_seed;
  return b;
}

namespace {

/// Per-component log wₖ + log N(y; μₖ, vₖ + σ²), -inf for zero weights.
Vector component_log_terms(const GmmSpec& spec, double noise_sigma, const Vector& y) {
  const double s2 = noise_sigma * noise_sigma;
  Vector terms(spec.components());
  for (int k = 0; k < spec.components(); ++k) {
    if (spec.weights[k] == 0.0) {
      terms[k] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double acc = std::log(spec.weights[k]);
    for (int j = 0; j < spec.dim(); ++j) {
      const double v = spec.variances(k, j) + s2;
      const double r = y[j] - spec.means(k, j);
      acc -= 0.5 * (std::log(2.0 * std::numbers::pi * v) + r * r / v);
    }
    terms[k] = acc;
  }
  return terms;
}

void check_point(const GmmSpec& spec, const Vector& y) {
  if (y.size() != spec.dim()) {
    throw DimensionError("point has " + std::to_string(y.size()) + " coordinates, mixture is " +
                         std::to_string(spec.dim()) + "-dimensional");
  }
}

}  // namespace

double smoothed_logpdf(const GmmSpec& spec, double noise_sigma, const Vector& y) {
  check_point(spec, y);
  const Vector terms = component_log_terms(spec, noise_sigma, y);
  const double top = terms.maxCoeff();
  return top + std::log((terms.array() - top).exp().sum());
}

Vector smoothed_score(const GmmSpec& spec, double noise_sigma, const Vector& y) {
  check_point(spec, y);
  const double s2 = noise_sigma * noise_sigma;
  const Vector terms = component_log_terms(spec, noise_sigma, y);
  const double top = terms.maxCoeff();
  const Vector resp = (terms.array() - top).exp();
  const double norm = resp.sum();
  Vector score = Vector::Zero(spec.dim());
  for (int k = 0; k < spec.components(); ++k) {
    if (resp[k] == 0.0) continue;
    for (int j = 0; j < spec.dim(); ++j) {
      score[j] -= resp[k] * (y[j] - spec.means(k, j)) / (spec.variances(k, j) + s2);
    }
  }
  return score / norm;
}

Matrix smoothed_score(const GmmSpec& spec, double noise_sigma, const Matrix& ys) {
  Matrix out(ys.rows(), ys.cols());
  for (Eigen::Index i = 0; i < ys.rows(); ++i) {
    out.row(i) = smoothed_score(spec, noise_sigma, Vector(ys.row(i).transpose())).transpose();
  }
  return out;
}

FunctionField smoothed_score_field(const GmmSpec& spec, double noise_sigma) {
  spec.validate();
  return FunctionField(spec.dim(), [spec, noise_sigma](const Vector& y) {
    return smoothed_score(spec, noise_sigma, y);
  });
}

Json to_json(const GmmSpec& spec) {
  Json doc;
  doc["weights"] = spec.weights;
  auto rows = [](const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      Json row = Json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      out.push_back(row);
    }
    return out;
  };
  doc["means"] = rows(spec.means);
  doc["variances"] = rows(spec.variances);
  return doc;
}

GmmSpec gmm_from_json(const Json& doc, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + ": must be an object");
  static const std::set<std::string> known{"weights", "means", "variances"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError(where + "." + it.key() + ": unknown key");
  }
  for (const auto& key : known) {
    if (!doc.contains(key)) throw ConfigError(where + "." + key + ": missing");
  }
  auto number = [&](const Json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path + ": must be a number");
    return v.get<double>();
  };
  GmmSpec spec;
  const Json& w = doc["weights"];
  if (!w.is_array()) throw ConfigError(where + ".weights: must be an array");
  for (std::size_t i = 0; i < w.size(); ++i) {
    spec.weights.push_back(number(w[i], where + ".weights[" + std::to_string(i) + "]"));
  }
  auto matrix = [&](const std::string& key) {
    const Json& m = doc[key];
    const std::string path = where + "." + key;
    if (!m.is_array() || m.empty()) throw ConfigError(path + ": must be a nonempty array of rows");
    if (!m[0].is_array()) throw ConfigError(path + "[0]: must be an array");
    const auto cols = m[0].size();
    Matrix out(m.size(), cols);
    for (std::size_t r = 0; r < m.size(); ++r) {
      const std::string rp = path + "[" + std::to_string(r) + "]";
      if (!m[r].is_array() || m[r].size() != cols) {
        throw ConfigError(rp + ": every row must have " + std::to_string(cols) + " entries");
      }
      for (std::size_t c = 0; c < cols; ++c) {
        out(r, c) = number(m[r][c], rp + "[" + std::to_string(c) + "]");
      }
    }
    return out;
  };
  spec.means = matrix("means");
  spec.variances = matrix("variances");
  spec.validate();
  return spec;
}

std::string samples_to_csv(const Matrix& samples, const std::string& prefix) {
  std::ostringstream os;
  for (Eigen::Index c = 0; c < samples.cols(); ++c) os << (c ? "," : "") << prefix << (c + 1);
  os << "\n";
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    for (Eigen::Index c = 0; c < samples.cols(); ++c) {
      os << (c ? "," : "") << format_double(samples(r, c));
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace gradfield
