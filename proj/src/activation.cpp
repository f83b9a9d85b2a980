#include "gradfield/activation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace gradfield {

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Activation::Activation(ActivationKind kind, double beta) : kind_(kind), beta_(beta) {
  if (kind_ == ActivationKind::silu_beta && !(beta_ > 0.0 && std::isfinite(beta_))) {
    throw std::invalid_argument("silu_beta needs a finite positive beta");
  }
  if (kind_ != ActivationKind::silu_beta) beta_ = 1.0;
}

double Activation::derivative(double x, int order) const {
  switch (kind_) {
    case ActivationKind::silu_beta: {
      const double bx = beta_ * x;
      const double s = logistic(bx);
      const double ds = s * (1.0 - s);
      switch (order) {
        case 0: return x * s;
        case 1: return s + bx * ds;
        case 2: return beta_ * ds * (2.0 + bx * (1.0 - 2.0 * s));
      }
      break;
    }
    case ActivationKind::softplus: {
      switch (order) {
        case 0: return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
        case 1: return logistic(x);
        case 2: {
          const double s = logistic(x);
          return s * (1.0 - s);
        }
      }
      break;
    }
    case ActivationKind::tanh: {
      const double t = std::tanh(x);
      switch (order) {
        case 0: return t;
        case 1: return 1.0 - t * t;
        case 2: return -2.0 * t * (1.0 - t * t);
      }
      break;
    }
  }
  throw std::out_of_range("activation derivative of order " + std::to_string(order) +
                          " is not available");
}

namespace {

class ActivationFn final : public ad::ElementwiseFn {
 public:
  explicit ActivationFn(Activation act) : act_(act) {}
  std::string name() const override { return act_.name(); }
  int max_order() const override { return 2; }
  void apply(int order, const double* in, double* out, std::size_t n) const override {
    for (std::size_t i = 0; i < n; ++i) out[i] = act_.derivative(in[i], order);
  }

 private:
  Activation act_;
};

}  // namespace

ad::FnPtr Activation::function() const { return std::make_shared<ActivationFn>(*this); }

std::string Activation::name() const {
  if (kind_ == ActivationKind::silu_beta) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "silu_beta(%g)", beta_);
    return buf;
  }
  return to_string(kind_);
}

bool Activation::operator==(const Activation& other) const {
  return kind_ == other.kind_ && beta_ == other.beta_;
}

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::silu_beta: return "silu_beta";
    case ActivationKind::softplus: return "softplus";
    case ActivationKind::tanh: return "tanh";
  }
  return "?";
}

ActivationKind activation_kind_from_string(const std::string& s) {
  if (s == "silu_beta") return ActivationKind::silu_beta;
  if (s == "softplus") return ActivationKind::softplus;
  if (s == "tanh") return ActivationKind::tanh;
  throw std::invalid_argument("unknown activation kind '" + s + "'");
}

}  // namespace gradfield
