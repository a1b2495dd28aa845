#pragma once

#include <stdexcept>
#include <string>

namespace chebydyn {

// Input outside the mathematical domain of an operation (bad N, |x| > 1, ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// A size or iteration guard was exceeded.
class GuardError : public std::runtime_error {
 public:
  explicit GuardError(const std::string& what) : std::runtime_error(what) {}
};

// Exact construction hit an inconsistent structure ("not Markov", "degenerate kernel").
class StructureError : public std::runtime_error {
 public:
  explicit StructureError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace chebydyn
