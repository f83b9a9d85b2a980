#pragma once

// Bias-free fully connected networks in the two roles used throughout:
//   phi: ℝᵈ → ℝ   (a potential; its input-gradient is the field)
//   psi: ℝᵈ → ℝᵈ  (the field itself)
// plus the two weight-tied psi families whose Jacobians are symmetric by
// construction, and closed forms of ∇φ for one and two hidden layers.

#include <cstdint>
#include <vector>

#include "gradfield/activation.hpp"
#include "gradfield/field.hpp"

namespace gradfield {

enum class NetMode { phi, psi };

/// Layered weights θ⁽⁰⁾ … θ⁽ᴸ⁻¹⁾ with θ⁽ˡ⁾ of shape widths[l+1] x widths[l].
struct MlpParams {
  std::vector<int> widths;
  std::vector<Matrix> weights;
  Activation activation;
  NetMode mode = NetMode::phi;

  int depth() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }

  /// Throws DimensionError when the widths or weight shapes do not chain.
  void validate() const;

  static MlpParams zeros(std::vector<int> widths, NetMode mode, Activation activation = {});
  /// Gaussian entries with standard deviation 1/√fan-in.
  static MlpParams random(std::vector<int> widths, NetMode mode, Activation activation,
                          std::uint64_t seed);
};

/// Widths [d, hidden..., out] with out = 1 for phi and d for psi.
std::vector<int> mlp_widths(int dim, const std::vector<int>& hidden, NetMode mode);

double phi_forward(const MlpParams& phi, const Vector& x);
Vector psi_forward(const MlpParams& psi, const Vector& x);
/// Row-wise forward pass for any mode; returns n x out.
Matrix mlp_forward(const MlpParams& net, const Matrix& points);

ad::ParamLayout mlp_layout(const std::vector<int>& widths);
ad::ParamVector mlp_param_vector(const MlpParams& net);
/// Weights from `params`, everything else from `shape`.
MlpParams mlp_from_param_vector(const MlpParams& shape, const ad::ParamVector& params);
/// Graph with input slot 0 (n x d) and output n x out.
ad::Graph mlp_graph(const MlpParams& shape);

/// One-hidden-layer psi whose readout θ⁽¹⁾ₘ = Sₘ·θ⁽⁰⁾ₘ is derived, never stored.
struct TiedPsiNet {
  Matrix theta0;  // M x d, row m is the input weight of hidden unit m
  Vector s;       // M tying factors
  Activation activation;

  int dim() const { return static_cast<int>(theta0.cols()); }
  int hidden() const { return static_cast<int>(theta0.rows()); }

  /// d x M readout; column m is Sₘ·θ⁽⁰⁾ₘ.
  Matrix output_weights() const;
  Vector forward(const Vector& x) const;
  /// Σₘ Sₘ σ'(⟨θ⁽⁰⁾ₘ, x⟩) θ⁽⁰⁾ₘ θ⁽⁰⁾ₘᵀ.
  Matrix jacobian(const Vector& x) const;
  MlpParams to_mlp() const;
};

TiedPsiNet tie_weights(Matrix theta0, Vector s, Activation activation = {});

ad::ParamLayout tied_layout(int hidden, int dim);
ad::ParamVector tied_param_vector(const TiedPsiNet& net);
TiedPsiNet tied_from_param_vector(const TiedPsiNet& shape, const ad::ParamVector& params);
ad::Graph tied_graph(const TiedPsiNet& shape);

/// Deep psi whose input rows and output columns all lie along one unit vector u.
struct ParallelPsiNet {
  Vector u;                   // unit direction
  Vector a;                   // input scales: θ⁽⁰⁾ₘ = aₘ·u
  std::vector<Matrix> inner;  // θ⁽¹⁾ … θ⁽ᴸ⁻²⁾
  Vector b;                   // output scales: θ⁽ᴸ⁻¹⁾ₙ = bₙ·u
  Activation activation;

  int depth() const { return static_cast<int>(inner.size()) + 2; }
  /// S with S(n, m) = bₙ / aₘ (NaN where aₘ = 0).
  Matrix tying_matrix() const;
  MlpParams to_mlp() const;
  Vector forward(const Vector& x) const { return psi_forward(to_mlp(), x); }
};

/// `u` is normalized and its length folds into `a`, so input rows are aₘ·u as
/// given and output columns are bₙ·u/‖u‖. Throws on a zero u or on
/// shapes that do not chain (first inner matrix has a.size() columns, last has
/// b.size() rows; without inner layers a and b must have equal length).
ParallelPsiNet build_parallel_psi(const Vector& u, Vector a, std::vector<Matrix> inner, Vector b,
                                  Activation activation = {});

/// ∇φ for one hidden layer: ψᵢ = Σₘ θ⁽¹⁾ₘ θ⁽⁰⁾ₘᵢ σ'(⟨θ⁽⁰⁾ₘ, x⟩), i.e. a tied psi
/// network with Sₘ = θ⁽¹⁾ₘ and activation σ'.
Vector explicit_grad_l2(const MlpParams& phi, const Vector& x);

/// ∇φ for two hidden layers as the product of two σ'-factor networks sharing
/// the first-layer pre-activations zₘ = ⟨θ⁽⁰⁾ₘ, x⟩:
///   ψᵢ = Σₙₘ θ⁽²⁾ₙ θ⁽¹⁾ₙₘ θ⁽⁰⁾ₘᵢ σ'(Σₖ θ⁽¹⁾ₙₖ σ(zₖ)) σ'(zₘ).
Vector explicit_grad_l3(const MlpParams& phi, const Vector& x);

/// ψ = net as a field (psi mode).
GraphField psi_field(const MlpParams& psi);
/// ψ = ∇φ as a field, via the materialized input-gradient graph.
GraphField phi_gradient_field(const MlpParams& phi);
GraphField tied_field(const TiedPsiNet& net);

}  // namespace gradfield
