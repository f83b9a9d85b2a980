#pragma once

#include <span>

#include "gradfield/autodiff.hpp"
#include "gradfield/field.hpp"

namespace gradfield {

/// Loss graph for the empirical-Bayes objective mean ‖x − y − σ²·s(y)‖².
///
/// `score_graph` maps y (slot 0, n x d) to a score estimate (n x d); it may be
/// an input-gradient graph from grad_input_graph(). The loss graph keeps y in
/// slot 0 and adds x in slot 1; its output is 1 x 1.
ad::Graph neb_loss_graph(const ad::Graph& score_graph, double noise_sigma);

/// Loss graph for the denoising-autoencoder objective mean ‖x − ψ(y)‖².
/// Same slot convention as neb_loss_graph().
ad::Graph dae_loss_graph(const ad::Graph& psi_graph);

/// Direct evaluation of the two objectives from precomputed rows.
double neb_loss(const Matrix& x, const Matrix& y, const Matrix& score, double noise_sigma);
double dae_loss(const Matrix& x, const Matrix& psi_of_y);

/// θ − lr·grad. Throws NumericalError listing the non-finite gradient entries.
ad::ParamVector sgd_step(const ad::ParamVector& params, std::span<const double> grad, double lr);

/// Plain SGD, or heavy-ball momentum when momentum > 0.
class SgdOptimizer {
 public:
  SgdOptimizer(double lr, double momentum = 0.0);
  ad::ParamVector step(const ad::ParamVector& params, std::span<const double> grad);

 private:
  double lr_;
  double momentum_;
  std::vector<double> velocity_;
};

}  // namespace gradfield
