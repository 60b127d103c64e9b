#pragma once

#include <stdexcept>
#include <string>

namespace padiff {

// Violated precondition on model or call parameters (bad prime, r >= 0 where
// an annulus is required, mismatched primes, ...).
class parameter_error : public std::invalid_argument {
 public:
  explicit parameter_error(const std::string& what) : std::invalid_argument(what) {}
};

// Argument outside the mathematical domain of a function (t <= 0 for the heat
// kernel, y = 0 for the kernel K, s <= 0 for Laplace transforms).
class domain_error : public std::domain_error {
 public:
  explicit domain_error(const std::string& what) : std::domain_error(what) {}
};

}  // namespace padiff
