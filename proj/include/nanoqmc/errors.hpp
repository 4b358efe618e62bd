#pragma once

#include <stdexcept>
#include <string>

namespace nanoqmc {

// Invalid user-supplied input: bad parameters, malformed config, unphysical values.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical invariant broke during a computation (step size too coarse,
// density matrix lost positivity, steady state did not converge, ...).
class InvariantError : public std::runtime_error {
 public:
  explicit InvariantError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nanoqmc
