// Reruns the random deep-psi protocol behind the frozen asymmetry threshold.

#include <algorithm>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "gradfield/calibration.hpp"
#include "gradfield/json_io.hpp"

int main(int argc, char** argv) {
  using namespace gradfield;
  CLI::App app{"Residual quantiles of randomly initialized deep psi networks"};
  int seeds = 1000;
  RandomPsiProtocol protocol;
  app.add_option("--seeds", seeds, "Seeds 0..N-1")->check(CLI::PositiveNumber);
  app.add_option("--dim", protocol.dim, "Input dimension")->check(CLI::PositiveNumber);
  app.add_option("--width", protocol.width, "Hidden width")->check(CLI::PositiveNumber);
  app.add_option("--hidden-layers", protocol.hidden_layers, "Hidden layers")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  std::vector<double> residuals, cosines;
  int above = 0;
  for (int s = 0; s < seeds; ++s) {
    const RandomPsiSample sample = random_psi_sample(static_cast<std::uint64_t>(s), protocol);
    residuals.push_back(sample.residual);
    cosines.push_back(sample.min_input_cos);
    above += sample.residual > kAsymmetryThreshold ? 1 : 0;
  }
  std::cout << "protocol: d=" << protocol.dim << " width=" << protocol.width
            << " hidden_layers=" << protocol.hidden_layers << " seeds=" << seeds << "\n";
  for (double p : {0.0, 0.01, 0.05, 0.5, 1.0}) {
    std::cout << "residual q" << p << " = " << format_double(quantile(residuals, p)) << "\n";
  }
  std::cout << "largest first-layer min|cos| = "
            << format_double(*std::max_element(cosines.begin(), cosines.end())) << "\n";
  std::cout << "above frozen threshold " << format_double(kAsymmetryThreshold) << ": " << above
            << "/" << seeds << "\n";
  return 0;
}
