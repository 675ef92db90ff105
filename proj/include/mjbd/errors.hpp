#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mjbd {

/// Base class of all errors thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid inputs: dimension mismatches, malformed files, bad parameters.
class InputError : public Error {
public:
    using Error::Error;
};

class DimensionError : public InputError {
public:
    using InputError::InputError;
};

class PreconditionError : public InputError {
public:
    using InputError::InputError;
};

/// Numerical failures during a computation that received valid inputs.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Input is numerically degenerate for the requested operation
/// (rank-deficient diagonalizer, singular conjugation, ...).
class DegenerateInputError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// An iteration failed to converge within its cap. Carries the best
/// objective value reached so the caller can decide what to salvage.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double best_objective)
        : NumericalError(what), best_objective_(best_objective) {}
    double best_objective() const { return best_objective_; }

private:
    double best_objective_;
};

/// A null-space threshold landed on a singular value; the caller must
/// perturb the threshold and retry.
class AmbiguousThresholdError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The spectrum of X* does not separate into two clusters.
class NoReliableSplitError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The block factorization of X* is too ill-conditioned to trust.
class SplitUnstableError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The singular-value gap test identified no rank. Carries the full
/// spectrum for reporting.
class RankUndetectableError : public Error {
public:
    RankUndetectableError(const std::string& what, std::vector<double> spectrum)
        : Error(what), spectrum_(std::move(spectrum)) {}
    const std::vector<double>& spectrum() const { return spectrum_; }

private:
    std::vector<double> spectrum_;
};

}  // namespace mjbd
