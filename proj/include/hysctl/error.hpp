#pragma once

#include <stdexcept>
#include <string>

namespace hysctl {

/// Raised when an operation is called outside its admissible domain
/// (bad grid, inadmissible play seed, inconsistent relay state, ...).
class DomainError : public std::domain_error {
public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Raised by the integrators when the state norm exceeds the configured cap.
class DivergenceError : public std::runtime_error {
public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hysctl
