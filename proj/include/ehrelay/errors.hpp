#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ehrelay {

/// Argument outside the mathematical domain of a rate formula.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The relay-assisted branch of the capacity formula is undefined for a <= 1.
class BranchUndefinedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input file (bad JSON, missing or mistyped field).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structurally valid input that violates a model invariant.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// An allocation spends energy before it is harvested (or is negative).
class FeasibilityError : public std::runtime_error {
 public:
  explicit FeasibilityError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// A solver was called outside the instance class it handles.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Brute-force grid would exceed the configured evaluation budget.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(double required, double budget);
  double required() const noexcept { return required_; }
  double budget() const noexcept { return budget_; }

 private:
  double required_;
  double budget_;
};

}  // namespace ehrelay
