#pragma once

#include <stdexcept>
#include <string>

namespace manifail {

// Error categories surfaced by the library. The CLI maps these onto exit codes.

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CatalogError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A target lies outside the workspace or the plan is degenerate.
struct PlanInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The requested failure taxonomy has no compatible substage in the plan.
struct NotApplicable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WrongOperation : std::logic_error {
  using std::logic_error::logic_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyReport : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace manifail
