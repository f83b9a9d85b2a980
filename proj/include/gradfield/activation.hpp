#pragma once

#include <string>

#include "gradfield/autodiff.hpp"

namespace gradfield {

enum class ActivationKind { silu_beta, softplus, tanh };

/// Smooth activation σ with σ' and σ'' available everywhere on ℝ.
///
/// silu_beta is σ_β(x) = x / (1 + exp(-βx)); it tends to ReLU uniformly as
/// β grows while every σ_β' takes infinitely many distinct values.
class Activation {
 public:
  Activation() = default;
  Activation(ActivationKind kind, double beta = 1.0);

  static Activation silu(double beta) { return {ActivationKind::silu_beta, beta}; }
  static Activation softplus() { return {ActivationKind::softplus}; }
  static Activation tanh() { return {ActivationKind::tanh}; }

  ActivationKind kind() const { return kind_; }
  double beta() const { return beta_; }

  double value(double x) const { return derivative(x, 0); }
  /// σ^(order)(x) for order in {0, 1, 2}.
  double derivative(double x, int order) const;

  /// The activation as an autodiff elementwise function (orders 0..2).
  ad::FnPtr function() const;

  std::string name() const;

  bool operator==(const Activation& other) const;

 private:
  ActivationKind kind_ = ActivationKind::silu_beta;
  double beta_ = 4.0;
};

std::string to_string(ActivationKind kind);
ActivationKind activation_kind_from_string(const std::string& s);

/// Logistic function, evaluated without overflow for large |x|.
double logistic(double x);

}  // namespace gradfield
