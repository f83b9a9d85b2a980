#include "gradfield/run_config.hpp"

#include <cmath>
#include <set>

#include "gradfield/errors.hpp"

namespace gradfield {

void DiagnosticsConfig::validate() const {
  if (probe_count < 1) throw ConfigError("diagnostics.probe_count: must be >= 1");
  if (!(fd_step > 0.0) || !std::isfinite(fd_step)) {
    throw ConfigError("diagnostics.fd_step: must be finite and > 0");
  }
  if (!(symmetry_threshold > 0.0)) throw ConfigError("diagnostics.symmetry_threshold: must be > 0");
  if (!(collapse_threshold > 0.0 && collapse_threshold <= 1.0)) {
    throw ConfigError("diagnostics.collapse_threshold: must lie in (0, 1]");
  }
  if (!(conservative_threshold > 0.0)) {
    throw ConfigError("diagnostics.conservative_threshold: must be > 0");
  }
}

void RunConfig::validate() const {
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
  train.validate();
  gmm.validate();
  diagnostics.validate();
}

Json to_json(const DiagnosticsConfig& c) {
  Json doc;
  doc["probe_count"] = c.probe_count;
  doc["fd_step"] = c.fd_step;
  doc["symmetry_threshold"] = c.symmetry_threshold;
  doc["collapse_threshold"] = c.collapse_threshold;
  doc["conservative_threshold"] = c.conservative_threshold;
  return doc;
}

Json to_json(const RunConfig& c) {
  Json doc;
  doc["schema_version"] = kRunConfigSchemaVersion;
  doc["output_dir"] = c.output_dir.generic_string();
  doc["train"] = to_json(c.train);
  doc["gmm"] = to_json(c.gmm);
  doc["diagnostics"] = to_json(c.diagnostics);
  return doc;
}

namespace {

void reject_unknown(const Json& doc, const std::set<std::string>& known, const std::string& where) {
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError(where + it.key() + ": unknown key");
  }
}

DiagnosticsConfig diagnostics_from_json(const Json& doc, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + ": must be an object");
  reject_unknown(doc, {"probe_count", "fd_step", "symmetry_threshold", "collapse_threshold",
                       "conservative_threshold"},
                 where + ".");
  DiagnosticsConfig c;
  auto number = [&](const char* key, double& dst) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_number()) throw ConfigError(where + "." + key + ": must be a number");
    dst = doc[key].get<double>();
  };
  if (doc.contains("probe_count")) {
    if (!doc["probe_count"].is_number_integer()) {
      throw ConfigError(where + ".probe_count: must be an integer");
    }
    c.probe_count = doc["probe_count"].get<int>();
  }
  number("fd_step", c.fd_step);
  number("symmetry_threshold", c.symmetry_threshold);
  number("collapse_threshold", c.collapse_threshold);
  number("conservative_threshold", c.conservative_threshold);
  return c;
}

}  // namespace

RunConfig run_config_from_json(const Json& doc, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + ": must be a JSON object");
  reject_unknown(doc, {"schema_version", "output_dir", "train", "gmm", "diagnostics"}, "");
  if (doc.contains("schema_version")) {
    const Json& v = doc["schema_version"];
    if (!v.is_number_integer() || v.get<int>() != kRunConfigSchemaVersion) {
      throw ConfigError("schema_version: expected " + std::to_string(kRunConfigSchemaVersion));
    }
  }
  RunConfig c;
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) throw ConfigError("output_dir: must be a string");
    c.output_dir = doc["output_dir"].get<std::string>();
  }
  if (doc.contains("train")) c.train = train_config_from_json(doc["train"], "train");
  if (doc.contains("gmm")) c.gmm = gmm_from_json(doc["gmm"], "gmm");
  if (doc.contains("diagnostics")) c.diagnostics = diagnostics_from_json(doc["diagnostics"], "diagnostics");
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(read_json_file(path), path.string());
}

}  // namespace gradfield
