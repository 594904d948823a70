#ifndef PIEZOHOM_ERRORS_HPP
#define PIEZOHOM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace piezohom {

/// Bad argument to a library call (index out of range, non-positive length).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Material data violating the constitutive assumptions.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Degenerate or inconsistent geometry.
class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent problem setup, e.g. an element referring to an unregistered phase.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation applied to data produced by the wrong route.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Linear solver breakdown, stagnation, or a residual above tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Requested problem exceeds the configured degree-of-freedom budget.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, double estimated_dofs)
      : std::runtime_error(what), estimated_dofs_(estimated_dofs) {}
  double estimated_dofs() const noexcept { return estimated_dofs_; }

 private:
  double estimated_dofs_;
};

}  // namespace piezohom

#endif  // PIEZOHOM_ERRORS_HPP
