#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

/// Parameters violate the constraints of an algorithm or process.
class InvalidSpec : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Exact enumeration or state propagation would exceed its size bound.
class InfeasibleSize : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// The hitting-time linear system has no unique solution.
class SingularSystem : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InsufficientData : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Every replica of an experiment ran out of iteration budget.
class ExperimentFailed : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace driftlab
