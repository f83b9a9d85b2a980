#pragma once

#include <stdexcept>
#include <string>

namespace gradfield {

/// Operand or input shapes that do not chain.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Structural problem with a graph (non-scalar output, missing derivative, ...).
class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A computation produced or received a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration or document; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace gradfield
