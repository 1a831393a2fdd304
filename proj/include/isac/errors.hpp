#pragma once

#include <stdexcept>
#include <string>

namespace isac {

/// Violated precondition on an argument (bad dimensions, non-Hermitian input, invalid weights).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (e.g. an angle beyond +-pi/2).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical procedure could not produce a result meeting its guarantees.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rank-one reconstruction was handed a covariance that cannot come from a feasible point.
class ReconstructionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Spectral factorization failed (indefinite input or unpaired roots).
class FactorizationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace isac
