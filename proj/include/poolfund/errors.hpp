#pragma once

#include <stdexcept>
#include <string>

namespace poolfund {

// Malformed or out-of-range user input (files, flags, savings rosters).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// A request that is well-formed but falls outside the numerical domain of
// the model, e.g. an annuity price at or beyond the limiting age.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

}  // namespace poolfund
