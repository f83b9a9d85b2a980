#pragma once

// Network documents:
//
//   {
//     "schema_version": 1,
//     "kind": "mlp_phi" | "mlp_psi" | "tied_psi",
//     "widths": [d, h1, ..., out],          // tied_psi: [d, M, d]
//     "activation": {"kind": "silu_beta" | "softplus" | "tanh", "beta": 4.0},
//     "weights": [
//       {"name": "theta0", "rows": r, "cols": c, "data": [row-major values]},
//       ...
//     ]
//   }
//
// mlp_* networks list theta0 … theta{L-1}; tied_psi lists theta0 (M x d) and
// s (M x 1). Numbers are written with 17 significant digits, so a load
// reproduces every weight bit for bit.

#include <filesystem>
#include <variant>

#include "gradfield/json_io.hpp"
#include "gradfield/networks.hpp"

namespace gradfield {

using Network = std::variant<MlpParams, TiedPsiNet>;

inline constexpr int kNetworkSchemaVersion = 1;

Activation activation_from_json(const Json& doc, const std::string& where = "activation");

Json network_to_json(const Network& net);
/// Throws ConfigError naming the offending field.
Network network_from_json(const Json& doc, const std::string& where = "network");

void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

/// Input dimension of either network family.
int network_dim(const Network& net);
/// ∇φ for phi networks, ψ otherwise.
GraphField network_field(const Network& net);

}  // namespace gradfield
