#include "gradfield/serialization.hpp"

#include <set>

#include "gradfield/errors.hpp"

namespace gradfield {

namespace {

Json matrix_entry(const std::string& name, const Matrix& m) {
  Json e;
  e["name"] = name;
  e["rows"] = m.rows();
  e["cols"] = m.cols();
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  e["data"] = data;
  return e;
}

Json activation_json(const Activation& act) {
  Json a;
  a["kind"] = to_string(act.kind());
  a["beta"] = act.beta();
  return a;
}

void reject_unknown(const Json& doc, const std::set<std::string>& known, const std::string& where) {
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError(where + "." + it.key() + ": unknown key");
  }
}

const Json& field(const Json& doc, const std::string& key, const std::string& where) {
  if (!doc.contains(key)) throw ConfigError(where + "." + key + ": missing");
  return doc.at(key);
}

int as_int(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path + ": must be an integer");
  return v.get<int>();
}

Matrix read_matrix(const Json& e, const std::string& path, const std::string& expected_name,
                   int rows, int cols) {
  if (!e.is_object()) throw ConfigError(path + ": must be an object");
  reject_unknown(e, {"name", "rows", "cols", "data"}, path);
  const Json& name = field(e, "name", path);
  if (!name.is_string() || name.get<std::string>() != expected_name) {
    throw ConfigError(path + ".name: expected '" + expected_name + "'");
  }
  if (as_int(field(e, "rows", path), path + ".rows") != rows ||
      as_int(field(e, "cols", path), path + ".cols") != cols) {
    throw ConfigError(path + ": expected shape " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  const Json& data = field(e, "data", path);
  if (!data.is_array() || data.size() != static_cast<std::size_t>(rows) * cols) {
    throw ConfigError(path + ".data: expected " + std::to_string(rows * cols) + " numbers");
  }
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Json& v = data[static_cast<std::size_t>(r) * cols + c];
      if (!v.is_number()) {
        throw ConfigError(path + ".data[" + std::to_string(r * cols + c) + "]: must be a number");
      }
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

}  // namespace

Activation activation_from_json(const Json& doc, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + ": must be an object");
  reject_unknown(doc, {"kind", "beta"}, where);
  const Json& kind = field(doc, "kind", where);
  if (!kind.is_string()) throw ConfigError(where + ".kind: must be a string");
  ActivationKind k;
  try {
    k = activation_kind_from_string(kind.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ".kind: " + e.what());
  }
  double beta = 1.0;
  if (doc.contains("beta")) {
    if (!doc["beta"].is_number()) throw ConfigError(where + ".beta: must be a number");
    beta = doc["beta"].get<double>();
  } else if (k == ActivationKind::silu_beta) {
    throw ConfigError(where + ".beta: required for silu_beta");
  }
  try {
    return Activation(k, beta);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ".beta: " + e.what());
  }
}

Json network_to_json(const Network& net) {
  Json doc;
  doc["schema_version"] = kNetworkSchemaVersion;
  if (const auto* mlp = std::get_if<MlpParams>(&net)) {
    mlp->validate();
    doc["kind"] = mlp->mode == NetMode::phi ? "mlp_phi" : "mlp_psi";
    doc["widths"] = mlp->widths;
    doc["activation"] = activation_json(mlp->activation);
    Json weights = Json::array();
    for (int l = 0; l < mlp->depth(); ++l) {
      weights.push_back(matrix_entry("theta" + std::to_string(l), mlp->weights[l]));
    }
    doc["weights"] = weights;
  } else {
    const auto& tied = std::get<TiedPsiNet>(net);
    doc["kind"] = "tied_psi";
    doc["widths"] = std::vector<int>{tied.dim(), tied.hidden(), tied.dim()};
    doc["activation"] = activation_json(tied.activation);
    doc["weights"] = Json::array({matrix_entry("theta0", tied.theta0), matrix_entry("s", tied.s)});
  }
  return doc;
}

Network network_from_json(const Json& doc, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + ": must be an object");
  reject_unknown(doc, {"schema_version", "kind", "widths", "activation", "weights"}, where);
  if (as_int(field(doc, "schema_version", where), where + ".schema_version") !=
      kNetworkSchemaVersion) {
    throw ConfigError(where + ".schema_version: unsupported version");
  }
  const Json& kind_json = field(doc, "kind", where);
  if (!kind_json.is_string()) throw ConfigError(where + ".kind: must be a string");
  const std::string kind = kind_json.get<std::string>();

  const Json& widths_json = field(doc, "widths", where);
  if (!widths_json.is_array()) throw ConfigError(where + ".widths: must be an array");
  std::vector<int> widths;
  for (std::size_t i = 0; i < widths_json.size(); ++i) {
    const int w = as_int(widths_json[i], where + ".widths[" + std::to_string(i) + "]");
    if (w <= 0) throw ConfigError(where + ".widths[" + std::to_string(i) + "]: must be > 0");
    widths.push_back(w);
  }
  const Activation act = activation_from_json(field(doc, "activation", where), where + ".activation");
  const Json& weights = field(doc, "weights", where);
  if (!weights.is_array()) throw ConfigError(where + ".weights: must be an array");

  if (kind == "mlp_phi" || kind == "mlp_psi") {
    if (widths.size() < 3) throw ConfigError(where + ".widths: need at least one hidden layer");
    if (weights.size() + 1 != widths.size()) {
      throw ConfigError(where + ".weights: expected " + std::to_string(widths.size() - 1) + " entries");
    }
    MlpParams p;
    p.widths = widths;
    p.activation = act;
    p.mode = kind == "mlp_phi" ? NetMode::phi : NetMode::psi;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      p.weights.push_back(read_matrix(weights[l], where + ".weights[" + std::to_string(l) + "]",
                                      "theta" + std::to_string(l), widths[l + 1], widths[l]));
    }
    try {
      p.validate();
    } catch (const DimensionError& e) {
      throw ConfigError(where + ": " + e.what());
    }
    return p;
  }
  if (kind == "tied_psi") {
    if (widths.size() != 3 || widths[0] != widths[2]) {
      throw ConfigError(where + ".widths: tied_psi expects [d, M, d]");
    }
    if (weights.size() != 2) throw ConfigError(where + ".weights: tied_psi expects theta0 and s");
    Matrix theta0 = read_matrix(weights[0], where + ".weights[0]", "theta0", widths[1], widths[0]);
    Matrix s = read_matrix(weights[1], where + ".weights[1]", "s", widths[1], 1);
    return tie_weights(std::move(theta0), s.col(0), act);
  }
  throw ConfigError(where + ".kind: unknown network kind '" + kind + "'");
}

void save_network(const std::filesystem::path& path, const Network& net) {
  write_text_file(path, dump_json(network_to_json(net)));
}

Network load_network(const std::filesystem::path& path) {
  return network_from_json(read_json_file(path), path.string());
}

int network_dim(const Network& net) {
  if (const auto* mlp = std::get_if<MlpParams>(&net)) return mlp->input_dim();
  return std::get<TiedPsiNet>(net).dim();
}

GraphField network_field(const Network& net) {
  if (const auto* mlp = std::get_if<MlpParams>(&net)) {
    return mlp->mode == NetMode::phi ? phi_gradient_field(*mlp) : psi_field(*mlp);
  }
  return tied_field(std::get<TiedPsiNet>(net));
}

}  // namespace gradfield
