#include "gradfield/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gradfield/diagnostics.hpp"
#include "gradfield/toy_data.hpp"

namespace gradfield {

MlpParams random_psi(std::uint64_t seed, const RandomPsiProtocol& protocol) {
  const std::vector<int> hidden(static_cast<std::size_t>(protocol.hidden_layers), protocol.width);
  return MlpParams::random(mlp_widths(protocol.dim, hidden, NetMode::psi), NetMode::psi,
                           protocol.activation, derive_seed(seed, 1));
}

RandomPsiSample random_psi_sample(std::uint64_t seed, const RandomPsiProtocol& protocol) {
  const MlpParams psi = random_psi(seed, protocol);
  const Vector probe = standard_normal_points(1, protocol.dim, derive_seed(seed, 2)).row(0).transpose();
  RandomPsiSample s;
  s.seed = seed;
  s.residual = symmetry_residual(psi_field(psi).autodiff_jacobian(probe));
  s.min_input_cos = weight_parallelism(psi).min_input_cos;
  return s;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const auto k = static_cast<std::size_t>(std::llround(p * static_cast<double>(values.size() - 1)));
  return values[k];
}

}  // namespace gradfield
