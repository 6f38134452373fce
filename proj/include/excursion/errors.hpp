#pragma once

#include <stdexcept>
#include <string>

namespace excursion {

// Invalid user configuration (bad spacing, malformed JSON, unknown keys).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A lattice that would not fit the memory budget.
class ResourceError : public std::runtime_error {
 public:
  ResourceError(const std::string& what, double required_bytes)
      : std::runtime_error(what), required_bytes_(required_bytes) {}
  double required_bytes() const noexcept { return required_bytes_; }

 private:
  double required_bytes_;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Operation not defined for this kernel family or dimension.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace excursion
