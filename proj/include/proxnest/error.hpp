#pragma once

#include <stdexcept>
#include <string>

namespace proxnest {

/// Invalid argument values (negative thresholds, bad dimensions, ...).
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// A structural precondition of an operation does not hold, e.g. a dictionary
/// that is required to be orthonormal is not.
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

namespace detail {

inline void require(bool ok, const char* msg) {
  if (!ok) throw DomainError(msg);
}

inline void require_contract(bool ok, const char* msg) {
  if (!ok) throw ContractError(msg);
}

}  // namespace detail
}  // namespace proxnest
