#include "ehrelay/errors.hpp"

#include <sstream>

namespace ehrelay {

namespace {

std::string join(const std::vector<std::string>& items, const char* prefix) {
  std::ostringstream os;
  os << prefix;
  for (std::size_t i = 0; i < items.size(); ++i) {
    os << (i == 0 ? ": " : "; ") << items[i];
  }
  return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> issues)
    : std::invalid_argument(join(issues, "invalid input")), issues_(std::move(issues)) {}

FeasibilityError::FeasibilityError(std::vector<std::string> violations)
    : std::runtime_error(join(violations, "infeasible allocation")),
      violations_(std::move(violations)) {}

BudgetError::BudgetError(double required, double budget)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "grid requires " << required << " evaluations, budget is " << budget;
        return os.str();
      }()),
      required_(required),
      budget_(budget) {}

}  // namespace ehrelay
